#include "manifest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <sstream>
#include <stdexcept>

namespace ahl::cli {

std::string blob_hash(io::ByteSpan bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-1 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string blob_hash_file(const std::filesystem::path& path) { return blob_hash(io::read_file(path)); }

void write_manifest(const std::filesystem::path& out_dir, const Manifest& m) {
  const auto config_bytes = io::ByteSpan(reinterpret_cast<const std::uint8_t*>(m.config_text.data()),
                                         m.config_text.size());
  io::write_file(out_dir / "config.ini", config_bytes);

  std::ostringstream out;
  out << "command = " << m.command << '\n';
  out << "seed = " << m.seed << '\n';
  out << "reproduce = "
      << (m.reproduce.empty() ? "ahl " + m.command + " --config config.ini --seed " + std::to_string(m.seed) : m.reproduce)
      << '\n';
  out << "config.ini = " << blob_hash(config_bytes) << '\n';
  out << "\n[inputs]\n";
  for (const auto& p : m.inputs) {
    out << std::filesystem::absolute(p).lexically_normal().string() << " = " << blob_hash_file(p) << '\n';
  }
  out << "\n[outputs]\n";
  for (const auto& p : m.outputs) out << p.generic_string() << " = " << blob_hash_file(out_dir / p) << '\n';
  const std::string text = out.str();
  io::write_file(out_dir / "manifest.txt",
                 io::ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ahl::cli
