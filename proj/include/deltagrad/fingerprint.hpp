#ifndef DELTAGRAD_FINGERPRINT_HPP
#define DELTAGRAD_FINGERPRINT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>

#include <openssl/evp.h>

#include "deltagrad/error.hpp"
#include "deltagrad/models.hpp"

namespace deltagrad {

using Fingerprint = std::array<std::uint8_t, 32>;

namespace detail {

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorKind::io, "cannot initialise SHA-256");
    }
  }

  void update(const void* bytes, std::size_t size) {
    EVP_DigestUpdate(ctx_.get(), bytes, size);
  }

  void update_u64(std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<unsigned char>(v >> (8 * k));
    update(b.data(), b.size());
  }

  void update_f64(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }

  Fingerprint finish() {
    Fingerprint out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
    return out;
  }

private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace detail

/// SHA-256 of the canonical little-endian serialization (n, p, row-major
/// features, labels). Row order matters.
inline Fingerprint fingerprint(const Dataset& data) {
  detail::Sha256 h;
  h.update_u64(data.n());
  h.update_u64(data.p());
  const RowMatrix& x = data.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) h.update_f64(x(i, j));
  }
  for (Eigen::Index i = 0; i < data.labels().size(); ++i) h.update_f64(data.labels()[i]);
  return h.finish();
}

inline std::string to_hex(const Fingerprint& fp) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (const auto b : fp) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

}  // namespace deltagrad

#endif  // DELTAGRAD_FINGERPRINT_HPP
