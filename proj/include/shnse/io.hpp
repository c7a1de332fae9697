// Hashing, binary container primitives and CSV formatting.
#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shnse {

using Digest = std::array<unsigned char, 32>;

class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* data, std::size_t bytes);
  void update(const Eigen::VectorXd& v);
  void update(const Eigen::MatrixXd& m);
  Digest finish();

 private:
  void* ctx_;
};

std::string to_hex(const Digest& d);
Digest sha256_of(const Eigen::VectorXd& v);

// Little-endian raw writes; the build refuses big-endian hosts.
void write_bytes(std::ostream& os, const void* p, std::size_t n);
void read_bytes(std::istream& is, void* p, std::size_t n);
template <class T>
void write_pod(std::ostream& os, const T& v) { write_bytes(os, &v, sizeof(T)); }
template <class T>
T read_pod(std::istream& is) {
  T v{};
  read_bytes(is, &v, sizeof(T));
  return v;
}

// Shortest round-trip-safe text: 17 significant digits.
std::string fmt_double(double x);
// RFC-4180 field quoting.
std::string csv_field(const std::string& s);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace shnse
