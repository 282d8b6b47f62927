#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mvmi {

// Violated precondition or shape mismatch. Maps to exit code 1 in the CLI.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or parse failure. Maps to exit code 2 in the CLI.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void contract(bool ok, const std::string& msg) {
  if (!ok) throw ContractError(msg);
}

// FNV-1a, used for dataset fingerprints.
struct Fnv1a {
  std::uint64_t h = 14695981039346656037ull;
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  }
  template <typename T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return h; }
};

}  // namespace mvmi
