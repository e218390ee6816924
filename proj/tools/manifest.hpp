#pragma once

// Run manifest written beside every command's outputs: the effective config,
// the command line that reproduces the run, and git-style blob hashes
// (SHA-1 of "blob <size>\0" + content) of every input and output file.

#include "ahl/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ahl::cli {

std::string blob_hash(io::ByteSpan bytes);
std::string blob_hash_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_text;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;  // relative to the output directory
  std::string reproduce;  // defaults to "ahl <command> --config config.ini --seed <seed>"
};

// Writes config.ini and manifest.txt into `out_dir`.
void write_manifest(const std::filesystem::path& out_dir, const Manifest& manifest);

}  // namespace ahl::cli
