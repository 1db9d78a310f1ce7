// Copyright 2026 The BEBM Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEBM_BITSTRING_HPP
#define BEBM_BITSTRING_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bebm {

// Measurement outcome on up to 64 sites. Character k of the text form is site k.
class Bitstring {
 public:
  static constexpr std::size_t kMaxSites = 64;

  Bitstring() = default;
  explicit Bitstring(std::size_t n, std::uint64_t bits = 0) : bits_(bits), size_(n) {
    if (n > kMaxSites) throw std::invalid_argument("Bitstring: at most 64 sites supported");
    if (n < kMaxSites) bits_ &= (std::uint64_t{1} << n) - 1;
  }

  // Throws std::invalid_argument on any character other than '0'/'1'.
  static Bitstring parse(std::string_view text) {
    Bitstring b(text.size());
    for (std::size_t k = 0; k < text.size(); ++k) {
      if (text[k] == '1') {
        b.set(k, true);
      } else if (text[k] != '0') {
        throw std::invalid_argument("illegal character '" + std::string(1, text[k]) + "' at column " +
                                    std::to_string(k + 1));
      }
    }
    return b;
  }

  std::size_t size() const { return size_; }
  std::uint64_t bits() const { return bits_; }

  int operator[](std::size_t site) const { return static_cast<int>((bits_ >> site) & 1U); }

  void set(std::size_t site, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << site;
    bits_ = value ? (bits_ | mask) : (bits_ & ~mask);
  }

  std::size_t popcount() const { return static_cast<std::size_t>(__builtin_popcountll(bits_)); }

  // Statevector index with site 0 as the most significant bit (kron order).
  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (std::size_t k = 0; k < size_; ++k) idx = (idx << 1) | static_cast<std::uint64_t>((*this)[k]);
    return idx;
  }

  static Bitstring from_index(std::size_t n, std::uint64_t idx) {
    Bitstring b(n);
    for (std::size_t k = 0; k < n; ++k) b.set(n - 1 - k, ((idx >> k) & 1U) != 0);
    return b;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t k = 0; k < size_; ++k) s[k] = (*this)[k] ? '1' : '0';
    return s;
  }

  friend bool operator==(const Bitstring&, const Bitstring&) = default;
  friend std::strong_ordering operator<=>(const Bitstring& a, const Bitstring& b) {
    if (auto c = a.size_ <=> b.size_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  std::uint64_t bits_ = 0;
  std::size_t size_ = 0;
};

}  // namespace bebm

template <>
struct std::hash<bebm::Bitstring> {
  std::size_t operator()(const bebm::Bitstring& b) const noexcept {
    return std::hash<std::uint64_t>{}(b.bits() * 0x9e3779b97f4a7c15ULL + b.size());
  }
};

#endif  // BEBM_BITSTRING_HPP
