#!/usr/bin/env python3
"""Build a small MNIST sample in IDX format from the `mnist` npm package.

The package ships about 1000 digits per class as JSON arrays of 784
intensities in [0, 1]. After a seeded shuffle the first 801 of each class go to
the training file and the rest to the test file (8010 / 1990 images).

    tools/fetch_mnist_sample.py --out data/mnist
    tools/fetch_mnist_sample.py --source /path/to/package/src/digits --out data/mnist
"""

import argparse
import json
import pathlib
import random
import struct
import subprocess
import tarfile
import tempfile

PACKAGE = "mnist@1.1.0"
TRAIN_PER_CLASS = 801


def fetch_package(workdir: pathlib.Path) -> pathlib.Path:
    out = subprocess.run(["npm", "pack", PACKAGE, "--silent"], cwd=workdir, check=True,
                         capture_output=True, text=True).stdout.strip().splitlines()[-1]
    with tarfile.open(workdir / out) as tar:
        tar.extractall(workdir, filter="data")
    return workdir / "package" / "src" / "digits"


def load_digits(source: pathlib.Path):
    digits = {}
    for label in range(10):
        with open(source / f"{label}.json") as f:
            data = json.load(f)["data"]
        if len(data) % 784:
            raise SystemExit(f"{label}.json: {len(data)} values is not a multiple of 784")
        images = []
        for i in range(0, len(data), 784):
            images.append(bytes(min(255, max(0, round(v * 255))) for v in data[i:i + 784]))
        digits[label] = images
    return digits


def write_idx(prefix: pathlib.Path, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--source", type=pathlib.Path, help="directory holding 0.json .. 9.json")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/mnist"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        source = args.source or fetch_package(pathlib.Path(tmp))
        digits = load_digits(source)

    rng = random.Random(args.seed)
    train, test = [], []
    for label, images in digits.items():
        order = list(range(len(images)))
        rng.shuffle(order)
        for rank, i in enumerate(order):
            (train if rank < TRAIN_PER_CLASS else test).append((images[i], label))
    rng.shuffle(train)
    rng.shuffle(test)

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train", [x for x, _ in train], [y for _, y in train])
    write_idx(args.out / "t10k", [x for x, _ in test], [y for _, y in test])
    print(f"wrote {len(train)} training and {len(test)} test images to {args.out}")


if __name__ == "__main__":
    main()
