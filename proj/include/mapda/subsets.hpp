#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "mapda/common.hpp"

namespace mapda {

inline constexpr int kMaxGround = 64;

// A subset of the 1-based ground set [n], n <= 64, stored as a bit mask
// (member i lives at bit i-1). Comparison is lexicographic on the ascending
// member list, which is the canonical order for all row/column labels.
class Subset {
 public:
  constexpr Subset() = default;

  static Subset of(std::initializer_list<int> members) {
    Subset s;
    for (int m : members) s = s.with(m);
    return s;
  }

  static Subset from_members(const std::vector<int>& members) {
    Subset s;
    for (int m : members) s = s.with(m);
    return s;
  }

  // The full ground set [n] = {1, ..., n}.
  static Subset full(int n) {
    if (n < 0 || n > kMaxGround) throw InvalidParameter("ground size out of range");
    if (n == 0) return Subset();
    Subset s;
    s.bits_ = (n == kMaxGround) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    return s;
  }

  Subset with(int member) const {
    if (member < 1 || member > kMaxGround) throw InvalidParameter("subset member out of range");
    Subset s = *this;
    s.bits_ |= std::uint64_t{1} << (member - 1);
    return s;
  }

  bool contains(int member) const {
    if (member < 1 || member > kMaxGround) return false;
    return (bits_ >> (member - 1)) & 1u;
  }

  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  std::uint64_t bits() const { return bits_; }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    std::uint64_t b = bits_;
    while (b) {
      out.push_back(std::countr_zero(b) + 1);
      b &= b - 1;
    }
    return out;
  }

  bool intersects(const Subset& o) const { return (bits_ & o.bits_) != 0; }
  bool subset_of(const Subset& o) const { return (bits_ & ~o.bits_) == 0; }

  friend Subset operator|(Subset a, Subset b) { return Subset(a.bits_ | b.bits_); }
  friend Subset operator&(Subset a, Subset b) { return Subset(a.bits_ & b.bits_); }
  // Set difference a \ b.
  friend Subset operator-(Subset a, Subset b) { return Subset(a.bits_ & ~b.bits_); }

  friend bool operator==(const Subset& a, const Subset& b) = default;

  // Lexicographic order of member lists ({1,2,5} < {1,3,4}); a proper prefix
  // precedes its extensions ({1,2} < {1,2,3}). Members below the lowest
  // differing one are shared, so the comparison happens there: the set
  // holding it wins unless the other set has nothing left.
  friend bool operator<(const Subset& a, const Subset& b) {
    const std::uint64_t d = a.bits_ ^ b.bits_;
    if (d == 0) return false;
    const std::uint64_t lowest = d & (~d + 1);
    const std::uint64_t above = ~((lowest << 1) - 1);
    if (lowest & a.bits_) return (b.bits_ & above) != 0;
    return (a.bits_ & above) == 0;
  }

  // Concatenated digits when the ground set fits a single digit per member,
  // comma-joined otherwise; the empty set prints as "{}".
  std::string str(int ground_size = 9) const {
    if (empty()) return "{}";
    std::string out;
    bool first = true;
    for (int m : members()) {
      if (!first && ground_size > 9) out += ',';
      out += std::to_string(m);
      first = false;
    }
    return out;
  }

  static Subset parse(const std::string& text, int ground_size = 9) {
    Subset s;
    if (text == "{}" || text.empty()) return s;
    if (ground_size > 9) {
      std::size_t pos = 0;
      while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        s = s.with(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
      }
    } else {
      for (char c : text) {
        if (c < '1' || c > '9') throw InvalidParameter("bad subset string: " + text);
        s = s.with(c - '0');
      }
    }
    return s;
  }

 private:
  explicit constexpr Subset(std::uint64_t bits) : bits_(bits) {}
  std::uint64_t bits_ = 0;
};

namespace detail {
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw ArithmeticOverflow("integer multiply overflow");
  return r;
}
}  // namespace detail

// C(n, k) with the convention C(n,k) = 0 for k < 0 or k > n and C(n,0) = 1.
// Overflow raises instead of wrapping.
inline std::uint64_t binom(std::int64_t n, std::int64_t k) {
  if (n < 0) throw InvalidParameter("binom: n must be nonnegative");
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    // r * (n-k+i) is divisible by i: it is C(n-k+i, i) * i!/(i-1)! in disguise.
    r = detail::checked_mul(r, static_cast<std::uint64_t>(n - k + i));
    r /= static_cast<std::uint64_t>(i);
  }
  return r;
}

// Arbitrary-precision binomial for baseline formulas, whose values outgrow
// 64 bits long before the constructions do.
inline BigInt binom_big(std::int64_t n, std::int64_t k) {
  if (n < 0) throw InvalidParameter("binom: n must be nonnegative");
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

inline std::uint64_t lcm2(std::uint64_t a, std::uint64_t b) {
  return detail::checked_mul(a / std::gcd(a, b), b);
}

inline std::uint64_t lcm_list(const std::vector<std::uint64_t>& values) {
  if (values.empty()) throw InvalidParameter("lcm_list: empty input");
  std::uint64_t r = 1;
  for (std::uint64_t v : values) {
    if (v == 0) throw InvalidParameter("lcm_list: values must be positive");
    r = lcm2(r, v);
  }
  return r;
}

// All k-subsets of `ground` in lexicographic order of their member lists.
// Empty for k > |ground|, the single empty set for k = 0.
inline std::vector<Subset> enumerate_subsets(const Subset& ground, int k) {
  if (k < 0) throw InvalidParameter("enumerate_subsets: k must be nonnegative");
  const std::vector<int> g = ground.members();
  const int n = static_cast<int>(g.size());
  std::vector<Subset> out;
  if (k > n) return out;
  out.reserve(static_cast<std::size_t>(binom(n, k)));
  if (k == 0) {
    out.push_back(Subset());
    return out;
  }
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    Subset s;
    for (int i : idx) s = s.with(g[static_cast<std::size_t>(i)]);
    out.push_back(s);
    int j = k - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - k + j) --j;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
    for (int l = j + 1; l < k; ++l)
      idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
  }
  return out;
}

// Lex rank of `s` among the k-subsets of `ground` (0-based); s must be one.
inline std::int64_t subset_rank(const std::vector<Subset>& lex_sorted, const Subset& s) {
  auto it = std::lower_bound(lex_sorted.begin(), lex_sorted.end(), s);
  if (it == lex_sorted.end() || !(*it == s)) throw InvalidParameter("subset not in list");
  return it - lex_sorted.begin();
}

// A block system on points [v] with constant block size and constant point
// replication LCM(v,k)/v.
struct RegularDesign {
  int point_count = 0;
  int block_size = 0;
  std::vector<Subset> blocks;
  int replication = 0;
};

// Blocks of k cyclically consecutive points: block i covers points
// (i-1)k ... ik-1 (mod v), for i in [LCM(v,k)/k].
inline RegularDesign cyclic_regular_design(int v, int k) {
  if (v < 1 || k < 1 || k > v) throw InvalidParameter("cyclic_regular_design: need 1 <= k <= v");
  const std::uint64_t z = lcm2(static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(k));
  RegularDesign d;
  d.point_count = v;
  d.block_size = k;
  d.replication = static_cast<int>(z / static_cast<std::uint64_t>(v));
  const int num_blocks = static_cast<int>(z / static_cast<std::uint64_t>(k));
  d.blocks.reserve(static_cast<std::size_t>(num_blocks));
  for (int i = 0; i < num_blocks; ++i) {
    Subset block;
    for (int j = 0; j < k; ++j) {
      block = block.with(static_cast<int>((static_cast<std::int64_t>(i) * k + j) % v) + 1);
    }
    d.blocks.push_back(block);
  }
  return d;
}

}  // namespace mapda
