#include "ahl/dataio.hpp"

#include "ahl/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ahl::io {

namespace {

using Kind = FormatError::Kind;

constexpr char kMatrixMagic[8] = {'A', 'H', 'L', 'M', 'A', 'T', 'R', 'X'};
constexpr char kCheckpointMagic[8] = {'A', 'H', 'L', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32_be(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void matrix_body(const Matrix& m) {
    out_.reserve(out_.size() + static_cast<std::size_t>(m.size()) * 8);
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  Reader(ByteSpan bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(Kind::Truncated, what_ + ": truncated, expected " + std::to_string(pos_ + n) +
                                             " bytes but file has " + std::to_string(bytes_.size()));
    }
  }
  void expect_magic(const char (&magic)[8]) {
    need(8);
    if (std::memcmp(bytes_.data() + pos_, magic, 8) != 0) throw FormatError(Kind::BadMagic, what_ + ": bad magic");
    pos_ += 8;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint32_t u32_be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Matrix matrix_body(std::uint64_t rows, std::uint64_t cols) {
    // guard the product before allocating anything
    if (cols != 0 && rows > remaining() / 8 / cols) {
      throw FormatError(Kind::Truncated, what_ + ": truncated, header declares " + std::to_string(rows) + "x" +
                                             std::to_string(cols) + " doubles but only " +
                                             std::to_string(remaining()) + " bytes remain");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    }
    return m;
  }
  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError(Kind::CorruptHeader, what_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }
  }

 private:
  ByteSpan bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(Kind::Io, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::filesystem::path& path, ByteSpan bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(Kind::Io, "short write to " + path.string());
}

// ---- images -------------------------------------------------------------

ImageSet ImageSet::head(Index n) const {
  n = std::min(n, count);
  ImageSet out = *this;
  out.count = n;
  out.pixels.resize(static_cast<std::size_t>(n * pixels_per_image()));
  if (!labels.empty()) out.labels.resize(static_cast<std::size_t>(n));
  return out;
}

ImageSet ImageSet::subset(std::span<const Index> indices) const {
  ImageSet out;
  out.height = height;
  out.width = width;
  out.channels = channels;
  out.count = static_cast<Index>(indices.size());
  out.pixels.reserve(indices.size() * static_cast<std::size_t>(pixels_per_image()));
  for (Index i : indices) {
    if (i < 0 || i >= count) throw InvalidInput("image index out of range");
    const auto img = image(i);
    out.pixels.insert(out.pixels.end(), img.begin(), img.end());
    if (has_labels()) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

ImageSet parse_idx_images(ByteSpan bytes) {
  Reader r(bytes, "IDX images");
  const std::uint32_t magic = r.u32_be();
  if (magic != kIdxImageMagic) {
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw FormatError(Kind::BadMagic, std::string("IDX images: bad magic ") + buf + ", expected 0x00000803");
  }
  const std::uint64_t n = r.u32_be();
  const std::uint64_t h = r.u32_be();
  const std::uint64_t w = r.u32_be();
  if (h == 0 || w == 0) throw FormatError(Kind::CorruptHeader, "IDX images: zero image dimension");
  const std::uint64_t per = h * w;  // both < 2^32, cannot overflow
  // n and per are below 2^32 and 2^64; saturate instead of wrapping
  const std::uint64_t expected = n > (UINT64_MAX - 16) / per ? UINT64_MAX : n * per + 16;
  if (bytes.size() < expected) {
    throw FormatError(Kind::Truncated, "IDX images: truncated, expected " + std::to_string(expected) +
                                           " bytes but file has " + std::to_string(bytes.size()));
  }
  ImageSet set;
  set.count = static_cast<Index>(n);
  set.height = static_cast<Index>(h);
  set.width = static_cast<Index>(w);
  set.channels = 1;
  set.pixels.resize(static_cast<std::size_t>(n * per));
  for (auto& p : set.pixels) p = static_cast<double>(r.u8()) / 255.0;
  return set;
}

std::vector<int> parse_idx_labels(ByteSpan bytes) {
  Reader r(bytes, "IDX labels");
  const std::uint32_t magic = r.u32_be();
  if (magic != kIdxLabelMagic) {
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw FormatError(Kind::BadMagic, std::string("IDX labels: bad magic ") + buf + ", expected 0x00000801");
  }
  const std::uint64_t n = r.u32_be();
  const std::uint64_t expected = 8 + n;
  if (bytes.size() < expected) {
    throw FormatError(Kind::Truncated, "IDX labels: truncated, expected " + std::to_string(expected) +
                                           " bytes but file has " + std::to_string(bytes.size()));
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = r.u8();
  return labels;
}

Bytes encode_idx_images(const ImageSet& images) {
  if (images.channels != 1) throw InvalidInput("IDX images must be single-channel");
  Writer w;
  w.u32_be(kIdxImageMagic);
  w.u32_be(static_cast<std::uint32_t>(images.count));
  w.u32_be(static_cast<std::uint32_t>(images.height));
  w.u32_be(static_cast<std::uint32_t>(images.width));
  Bytes out = w.take();
  out.reserve(out.size() + images.pixels.size());
  for (double p : images.pixels) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
  }
  return out;
}

Bytes encode_idx_labels(std::span<const int> labels) {
  Writer w;
  w.u32_be(kIdxLabelMagic);
  w.u32_be(static_cast<std::uint32_t>(labels.size()));
  Bytes out = w.take();
  for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

ImageSet load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  ImageSet set = parse_idx_images(read_file(image_path));
  if (!label_path.empty()) {
    set.labels = parse_idx_labels(read_file(label_path));
    if (static_cast<Index>(set.labels.size()) != set.count) {
      throw FormatError(Kind::CountMismatch, "IDX: " + std::to_string(set.count) + " images but " +
                                                 std::to_string(set.labels.size()) + " labels");
    }
  }
  return set;
}

void write_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path,
               const ImageSet& images) {
  write_file(image_path, encode_idx_images(images));
  if (!label_path.empty()) write_file(label_path, encode_idx_labels(images.labels));
}

// ---- matrix container ---------------------------------------------------

Bytes encode_matrix(const Matrix& m) {
  Writer w;
  w.raw(kMatrixMagic, 8);
  w.u32(kMatrixVersion);
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  w.matrix_body(m);
  return w.take();
}

Matrix parse_matrix(ByteSpan bytes) {
  Reader r(bytes, "matrix container");
  r.expect_magic(kMatrixMagic);
  const std::uint32_t version = r.u32();
  if (version != kMatrixVersion) {
    throw FormatError(Kind::VersionMismatch, "matrix container: version " + std::to_string(version) +
                                                 ", this build reads " + std::to_string(kMatrixVersion));
  }
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  Matrix m = r.matrix_body(rows, cols);
  r.expect_end();
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) { write_file(path, encode_matrix(m)); }

Matrix load_matrix(const std::filesystem::path& path) { return parse_matrix(read_file(path)); }

void save_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::string text;
  for (int l : labels) text += std::to_string(l) + '\n';
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(line, &used));
      if (used != line.size()) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw FormatError(Kind::CorruptHeader, "labels: not an integer: '" + line + "'");
    }
  }
  return labels;
}

// ---- checkpoint container -----------------------------------------------

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw FormatError(Kind::CorruptHeader, "checkpoint: missing metadata '" + key + "'");
}

bool Checkpoint::has_meta(const std::string& key) const {
  return std::any_of(meta.begin(), meta.end(), [&](const auto& kv) { return kv.first == key; });
}

void Checkpoint::add_section(const std::string& name, Matrix m) { sections.emplace_back(name, std::move(m)); }

const Matrix& Checkpoint::section(const std::string& name) const {
  for (const auto& [n, m] : sections) {
    if (n == name) return m;
  }
  throw FormatError(Kind::CorruptHeader, "checkpoint: missing section '" + name + "'");
}

bool Checkpoint::has_section(const std::string& name) const {
  return std::any_of(sections.begin(), sections.end(), [&](const auto& s) { return s.first == name; });
}

Bytes encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kCheckpointMagic, 8);
  w.u32(kCheckpointVersion);
  w.str(ckpt.kind);
  w.u64(ckpt.d);
  w.u64(ckpt.k);
  w.u32(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.sections.size()));
  for (const auto& [name, m] : ckpt.sections) {
    w.str(name);
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    w.matrix_body(m);
  }
  return w.take();
}

Checkpoint parse_checkpoint(ByteSpan bytes) {
  Reader r(bytes, "checkpoint");
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(Kind::VersionMismatch, "checkpoint: version " + std::to_string(version) +
                                                 ", this build reads " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ckpt;
  ckpt.kind = r.str();
  ckpt.d = r.u64();
  ckpt.k = r.u64();
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.str();
    std::string value = r.str();
    ckpt.meta.emplace_back(std::move(key), std::move(value));
  }
  const std::uint32_t n_sections = r.u32();
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    std::string name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    ckpt.sections.emplace_back(std::move(name), r.matrix_body(rows, cols));
  }
  r.expect_end();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

// ---- CSV ----------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const CsvCell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return csv_escape(*s);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(cell));
}

}  // namespace

std::string encode_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + csv_escape(header[i]);
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw InvalidInput("CSV row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows) {
  const std::string text = encode_csv(header, rows);
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError(Kind::CorruptHeader, "CSV: unterminated quoted field");
  if (any) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size()) {
      throw FormatError(Kind::CorruptHeader, "CSV: row " + std::to_string(i) + " has " +
                                                 std::to_string(records[i].size()) + " fields, header has " +
                                                 std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_csv(std::string(bytes.begin(), bytes.end()));
}

}  // namespace ahl::io
