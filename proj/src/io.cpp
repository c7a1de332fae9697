#include "shnse/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace shnse {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: init failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t bytes) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, bytes) != 1)
    throw std::runtime_error("sha256: update failed");
}

void Sha256::update(const Eigen::VectorXd& v) {
  update(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

void Sha256::update(const Eigen::MatrixXd& m) {
  update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

Digest Sha256::finish() {
  Digest d{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), d.data(), &len) != 1 || len != d.size())
    throw std::runtime_error("sha256: final failed");
  return d;
}

std::string to_hex(const Digest& d) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (unsigned char c : d) {
    s.push_back(hex[c >> 4]);
    s.push_back(hex[c & 15]);
  }
  return s;
}

Digest sha256_of(const Eigen::VectorXd& v) {
  Sha256 h;
  h.update(v);
  return h.finish();
}

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw std::runtime_error("write failed");
}

void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n)) throw std::runtime_error("unexpected end of file");
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      os << csv_field(r[i]);
    }
    os << "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace shnse
