#pragma once

#include "fosae/common.hpp"

#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fosae {

// Fixed-width bit vector packed into 64-bit words. Bits past size() are kept
// zero so equality and hashing work directly on the words.
class DynBitset {
 public:
  DynBitset() = default;
  explicit DynBitset(int nbits)
      : nbits_(nbits), words_((nbits + 63) / 64, 0ull) {}

  static DynBitset from_string(const std::string& s) {
    DynBitset b(static_cast<int>(s.size()));
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        b.set(static_cast<int>(i), true);
      } else if (s[i] != '0') {
        throw io_error("bit string must contain only 0/1, got '" +
                       std::string(1, s[i]) + "'");
      }
    }
    return b;
  }

  int size() const { return nbits_; }

  bool get(int i) const { return (words_[i >> 6] >> (i & 63)) & 1ull; }

  void set(int i, bool v) {
    if (v)
      words_[i >> 6] |= 1ull << (i & 63);
    else
      words_[i >> 6] &= ~(1ull << (i & 63));
  }

  int count() const {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  bool is_subset_of(const DynBitset& o) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }

  bool intersects(const DynBitset& o) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }

  DynBitset operator|(const DynBitset& o) const {
    DynBitset r = *this;
    for (size_t i = 0; i < words_.size(); ++i) r.words_[i] |= o.words_[i];
    return r;
  }

  DynBitset operator&(const DynBitset& o) const {
    DynBitset r = *this;
    for (size_t i = 0; i < words_.size(); ++i) r.words_[i] &= o.words_[i];
    return r;
  }

  // this & ~o
  DynBitset and_not(const DynBitset& o) const {
    DynBitset r = *this;
    for (size_t i = 0; i < words_.size(); ++i) r.words_[i] &= ~o.words_[i];
    return r;
  }

  // complement within the declared width
  DynBitset complement() const {
    DynBitset r = *this;
    for (auto& w : r.words_) w = ~w;
    r.mask_tail();
    return r;
  }

  void apply(const DynBitset& add, const DynBitset& del) {
    for (size_t i = 0; i < words_.size(); ++i)
      words_[i] = (words_[i] & ~del.words_[i]) | add.words_[i];
  }

  bool operator==(const DynBitset& o) const {
    return nbits_ == o.nbits_ && words_ == o.words_;
  }
  bool operator!=(const DynBitset& o) const { return !(*this == o); }

  bool operator<(const DynBitset& o) const {
    if (nbits_ != o.nbits_) return nbits_ < o.nbits_;
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] != o.words_[i]) return words_[i] < o.words_[i];
    return false;
  }

  std::size_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto w : words_) {
      h ^= w;
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h ^ static_cast<std::uint64_t>(nbits_));
  }

  std::string to_string() const {
    std::string s(nbits_, '0');
    for (int i = 0; i < nbits_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  std::size_t word_count() const { return words_.size(); }

 private:
  void mask_tail() {
    int tail = nbits_ & 63;
    if (tail != 0 && !words_.empty())
      words_.back() &= (1ull << tail) - 1ull;
  }

  int nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

struct BitsetHash {
  std::size_t operator()(const DynBitset& b) const { return b.hash(); }
};

// The planner's search state and the autoencoder's boolean bottleneck share
// this representation: bit[u*P + p] is predicate p's value in unit u.
using PropositionalState = DynBitset;

}  // namespace fosae
