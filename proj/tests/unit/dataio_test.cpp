#include "ahl/dataio.hpp"
#include "ahl/errors.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace ahl;
using namespace ahl::io;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("ahl_dataio_" + std::string(info->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

FormatError::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no FormatError thrown";
  return FormatError::Kind::Io;
}

ImageSet tiny_images() {
  ImageSet s;
  s.count = 3;
  s.height = 2;
  s.width = 2;
  for (int i = 0; i < 12; ++i) s.pixels.push_back(static_cast<double>(i * 20) / 255.0);
  s.labels = {4, 0, 9};
  return s;
}

Matrix awkward_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m = test::gaussian(rows, cols, rng);
  if (m.size() >= 4) {
    m.data()[0] = -0.0;
    m.data()[1] = std::numeric_limits<double>::denorm_min();
    m.data()[2] = std::numeric_limits<double>::infinity();
    m.data()[3] = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

}  // namespace

TEST(Idx, ParsesHandWrittenFile) {
  const Bytes img = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 255, 51, 102};
  const ImageSet s = parse_idx_images(img);
  EXPECT_EQ(s.count, 2);
  EXPECT_EQ(s.height, 1);
  EXPECT_EQ(s.width, 2);
  EXPECT_EQ(s.pixels, (std::vector<double>{0.0, 1.0, 0.2, 0.4}));
  const Bytes lab = {0, 0, 8, 1, 0, 0, 0, 2, 7, 3};
  EXPECT_EQ(parse_idx_labels(lab), (std::vector<int>{7, 3}));
}

TEST(Idx, MalformedInputsGiveTypedErrors) {
  Bytes img = encode_idx_images(tiny_images());
  Bytes bad_magic = img;
  bad_magic[3] = 1;
  EXPECT_EQ(kind_of([&] { parse_idx_images(bad_magic); }), FormatError::Kind::BadMagic);
  Bytes truncated(img.begin(), img.end() - 1);
  EXPECT_EQ(kind_of([&] { parse_idx_images(truncated); }), FormatError::Kind::Truncated);
  Bytes header_only(img.begin(), img.begin() + 10);
  EXPECT_EQ(kind_of([&] { parse_idx_images(header_only); }), FormatError::Kind::Truncated);
  Bytes zero_dim = img;
  zero_dim[11] = 0;
  EXPECT_EQ(kind_of([&] { parse_idx_images(zero_dim); }), FormatError::Kind::CorruptHeader);
  Bytes huge = img;
  huge[4] = 0xff;  // count ≈ 4e9 images
  EXPECT_EQ(kind_of([&] { parse_idx_images(huge); }), FormatError::Kind::Truncated);

  const Bytes lab = encode_idx_labels(std::vector<int>{1, 2, 3});
  EXPECT_EQ(kind_of([&] { parse_idx_labels(Bytes(lab.begin(), lab.end() - 1)); }), FormatError::Kind::Truncated);
  EXPECT_EQ(kind_of([&] { parse_idx_labels(img); }), FormatError::Kind::BadMagic);
}

TEST(Idx, LabelCountMismatchIsReported) {
  TempDir dir;
  ImageSet s = tiny_images();
  write_file(dir.path() / "img", encode_idx_images(s));
  write_file(dir.path() / "lab", encode_idx_labels(std::vector<int>{1, 2}));
  EXPECT_EQ(kind_of([&] { load_idx(dir.path() / "img", dir.path() / "lab"); }), FormatError::Kind::CountMismatch);
  EXPECT_EQ(load_idx(dir.path() / "img", {}).count, 3);
  EXPECT_EQ(kind_of([&] { read_file(dir.path() / "missing"); }), FormatError::Kind::Io);
}

TEST(Idx, HeadAndSubset) {
  const ImageSet s = tiny_images();
  const ImageSet h = s.head(2);
  EXPECT_EQ(h.count, 2);
  EXPECT_EQ(h.labels, (std::vector<int>{4, 0}));
  const std::vector<Index> pick = {2, 0};
  const ImageSet sub = s.subset(pick);
  EXPECT_EQ(sub.labels, (std::vector<int>{9, 4}));
  EXPECT_EQ(sub.image(0)[0], s.image(2)[0]);
}

TEST(MatrixContainer, MalformedInputsGiveTypedErrors) {
  const Bytes good = encode_matrix(Matrix::Ones(2, 3));
  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { parse_matrix(bad_magic); }), FormatError::Kind::BadMagic);
  Bytes version = good;
  version[8] = 9;
  EXPECT_EQ(kind_of([&] { parse_matrix(version); }), FormatError::Kind::VersionMismatch);
  EXPECT_EQ(kind_of([&] { parse_matrix(Bytes(good.begin(), good.end() - 3)); }), FormatError::Kind::Truncated);
  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(kind_of([&] { parse_matrix(trailing); }), FormatError::Kind::CorruptHeader);
  Bytes huge = good;
  for (int i = 12; i < 20; ++i) huge[static_cast<std::size_t>(i)] = 0xff;  // rows = 2^64 − 1
  EXPECT_EQ(kind_of([&] { parse_matrix(huge); }), FormatError::Kind::Truncated);
}

TEST(Labels, TextRoundTripAndErrors) {
  TempDir dir;
  const std::vector<int> labels = {0, 9, 3, -1};
  save_labels(dir.path() / "l.txt", labels);
  EXPECT_EQ(load_labels(dir.path() / "l.txt"), labels);
  const std::string junk = "1\nx\n";
  write_file(dir.path() / "bad.txt", ByteSpan(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size()));
  EXPECT_EQ(kind_of([&] { load_labels(dir.path() / "bad.txt"); }), FormatError::Kind::CorruptHeader);
}

TEST(Checkpoint, LookupsAndErrors) {
  Checkpoint c;
  c.kind = "spkm";
  c.set_meta("a", "1");
  c.set_meta("a", "2");
  EXPECT_EQ(c.meta.size(), 1u);
  EXPECT_EQ(c.meta_value("a"), "2");
  EXPECT_FALSE(c.has_meta("b"));
  EXPECT_THROW(c.meta_value("b"), FormatError);
  EXPECT_THROW(c.section("w"), FormatError);

  const Bytes bytes = encode_checkpoint(c);
  Bytes version = bytes;
  version[8] = 2;
  EXPECT_EQ(kind_of([&] { parse_checkpoint(version); }), FormatError::Kind::VersionMismatch);
  Bytes bad_len = bytes;
  bad_len[12] = 0xff;  // kind string length
  EXPECT_EQ(kind_of([&] { parse_checkpoint(bad_len); }), FormatError::Kind::Truncated);
}

TEST(Csv, EncodesAndParses) {
  const std::string text = encode_csv({"name", "x", "n"}, {{std::string("a,\"b\""), 0.1, std::int64_t{3}}});
  EXPECT_EQ(text, "name,x,n\n\"a,\"\"b\"\"\",0.10000000000000001,3\n");
  const CsvTable t = parse_csv(text);
  EXPECT_EQ(t.header, (std::vector<std::string>{"name", "x", "n"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "a,\"b\"");
  EXPECT_EQ(std::stod(t.rows[0][1]), 0.1);
  EXPECT_EQ(kind_of([] { parse_csv("a,b\n1\n"); }), FormatError::Kind::CorruptHeader);
  EXPECT_EQ(kind_of([] { parse_csv("a\n\"open\n"); }), FormatError::Kind::CorruptHeader);
  EXPECT_THROW(encode_csv({"a"}, {{1.0, 2.0}}), InvalidInput);
}

// ---- properties -------------------------------------------------------------

TEST(DataioProperty, MatrixRoundTripIsBitwise) {
  TempDir dir;
  Rng rng(1);
  for (Index rows : {0, 1, 3, 17}) {
    for (Index cols : {0, 1, 5}) {
      const Matrix m = awkward_matrix(rng, rows, cols);
      const Matrix back = parse_matrix(encode_matrix(m));
      EXPECT_TRUE(test::bitwise_equal(m, back)) << rows << "x" << cols;
      save_matrix(dir.path() / "m.bin", m);
      EXPECT_TRUE(test::bitwise_equal(m, load_matrix(dir.path() / "m.bin")));
    }
  }
}

TEST(DataioProperty, CheckpointRoundTripIsBitwise) {
  Rng rng(2);
  Checkpoint c;
  c.kind = "ahl-learner";
  c.d = 7;
  c.k = 3;
  c.set_meta("eta", "0.10000000000000001");
  c.set_meta("empty", "");
  c.set_meta(std::string("nul\0key", 7), "v");
  c.add_section("w", awkward_matrix(rng, 3, 7));
  c.add_section("empty", Matrix(0, 4));
  const Bytes bytes = encode_checkpoint(c);
  const Checkpoint back = parse_checkpoint(bytes);
  EXPECT_EQ(back.kind, c.kind);
  EXPECT_EQ(back.d, c.d);
  EXPECT_EQ(back.k, c.k);
  EXPECT_EQ(back.meta, c.meta);
  ASSERT_EQ(back.sections.size(), 2u);
  EXPECT_TRUE(test::bitwise_equal(back.section("w"), c.section("w")));
  EXPECT_EQ(back.section("empty").cols(), 4);
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(DataioProperty, IdxRoundTripIsBitwise) {
  TempDir dir;
  Rng rng(3);
  ImageSet s;
  s.count = 5;
  s.height = 4;
  s.width = 3;
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 60; ++i) s.pixels.push_back(static_cast<double>(byte(rng)) / 255.0);
  for (int i = 0; i < 5; ++i) s.labels.push_back(byte(rng) % 10);
  write_idx(dir.path() / "i", dir.path() / "l", s);
  const ImageSet back = load_idx(dir.path() / "i", dir.path() / "l");
  EXPECT_EQ(back.count, 5);
  EXPECT_EQ(back.labels, s.labels);
  for (std::size_t i = 0; i < s.pixels.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.pixels[i]), std::bit_cast<std::uint64_t>(s.pixels[i]));
  }
  EXPECT_EQ(encode_idx_images(back), encode_idx_images(s));
}

TEST(DataioProperty, CsvDoublesRoundTripExactly) {
  Rng rng(4);
  std::vector<CsvRow> rows;
  std::vector<double> values;
  for (int i = 0; i < 200; ++i) {
    const double v = test::gaussian(1, 1, rng)(0, 0) * std::pow(10.0, i % 40 - 20);
    values.push_back(v);
    rows.push_back({v});
  }
  const CsvTable t = parse_csv(encode_csv({"v"}, rows));
  ASSERT_EQ(t.rows.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(std::stod(t.rows[i][0]), values[i]);
}

TEST(DataioProperty, CorruptedBytesNeverEscapeAsOtherErrors) {
  Rng rng(5);
  Checkpoint c;
  c.kind = "svm";
  c.set_meta("k", "v");
  c.add_section("w", test::gaussian(2, 3, rng));
  const Bytes ckpt = encode_checkpoint(c);
  const Bytes mat = encode_matrix(test::gaussian(3, 2, rng));
  const Bytes idx = encode_idx_images(tiny_images());
  std::uniform_int_distribution<int> byte(0, 255);
  for (int t = 0; t < 3000; ++t) {
    const Bytes& base = t % 3 == 0 ? ckpt : t % 3 == 1 ? mat : idx;
    Bytes b = base;
    std::uniform_int_distribution<std::size_t> pos(0, b.size() - 1);
    if (t % 2 == 0) {
      b.resize(pos(rng));
    } else {
      for (int k = 0; k < 3; ++k) b[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
    }
    try {
      if (t % 3 == 0) parse_checkpoint(b);
      if (t % 3 == 1) parse_matrix(b);
      if (t % 3 == 2) parse_idx_images(b);
    } catch (const FormatError&) {
    }
  }
}
