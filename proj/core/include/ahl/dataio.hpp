#pragma once

// On-disk formats.
//
//  * IDX (MNIST): big-endian, magic 0x00000803 for images and 0x00000801 for
//    labels, pixels stored as unsigned bytes and scaled by 1/255 on load.
//  * Matrix container: "AHLMATRX", u32 version, u64 rows, u64 cols, then
//    rows·cols little-endian float64 in row-major order.
//  * Checkpoint container: "AHLCKPT\0", u32 version, kind string, u64 d,
//    u64 k, string key/value metadata (the config echo), then named float64
//    sections. Strings are u32 length + bytes; all integers little-endian.
//  * CSV: comma separated, header row, floats printed with 17 significant digits.
//
// Parsers accept arbitrary bytes and fail with FormatError, never by reading
// past the buffer or allocating more than the input can describe.

#include "ahl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ahl::io {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteSpan bytes);

// ---- images -------------------------------------------------------------

struct ImageSet {
  Index count = 0;
  Index height = 0;
  Index width = 0;
  Index channels = 1;
  std::vector<double> pixels;  // count × height × width × channels, values in [0, 1]
  std::vector<int> labels;     // empty or `count` entries

  Index pixels_per_image() const { return height * width * channels; }
  std::span<const double> image(Index i) const {
    return {pixels.data() + i * pixels_per_image(), static_cast<std::size_t>(pixels_per_image())};
  }
  bool has_labels() const { return !labels.empty(); }

  // First `n` images (and labels).
  ImageSet head(Index n) const;
  // Images at the given indices, in order.
  ImageSet subset(std::span<const Index> indices) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

ImageSet parse_idx_images(ByteSpan bytes);
std::vector<int> parse_idx_labels(ByteSpan bytes);
Bytes encode_idx_images(const ImageSet& images);  // pixels rounded to bytes
Bytes encode_idx_labels(std::span<const int> labels);

// Labels are optional: pass an empty label_path to skip them.
ImageSet load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path);
void write_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path,
               const ImageSet& images);

// ---- matrix container ---------------------------------------------------

inline constexpr std::uint32_t kMatrixVersion = 1;

Bytes encode_matrix(const Matrix& m);
Matrix parse_matrix(ByteSpan bytes);
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

// One integer label per line.
void save_labels(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> load_labels(const std::filesystem::path& path);

// ---- checkpoint container -----------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;  // "ahl-learner", "spkm", "svm", "feature-stack"
  std::uint64_t d = 0;
  std::uint64_t k = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Matrix>> sections;

  void set_meta(const std::string& key, const std::string& value);
  const std::string& meta_value(const std::string& key) const;  // throws FormatError if absent
  bool has_meta(const std::string& key) const;
  void add_section(const std::string& name, Matrix m);
  const Matrix& section(const std::string& name) const;  // throws FormatError if absent
  bool has_section(const std::string& name) const;
};

Bytes encode_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(ByteSpan bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---- CSV ----------------------------------------------------------------

using CsvCell = std::variant<std::string, double, std::int64_t>;
using CsvRow = std::vector<CsvCell>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);  // shortest-safe 17 significant digits
std::string encode_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace ahl::io
