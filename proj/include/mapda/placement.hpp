#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mapda/common.hpp"
#include "mapda/subsets.hpp"

#include "json.hpp"

namespace mapda {

// Parameters of a multi-access MISO system with combinatorial topology:
// lambda cache nodes, each user reaches a distinct r-subset of them, MN node
// placement at ratio t/lambda, L transmit antennas, anchor shift b.
struct SystemParams {
  int lambda = 0;
  int r = 0;
  int t = 0;
  int antennas = 0;   // L
  int b = 0;
  int num_files = 0;  // N; only the delivery simulation cares

  std::uint64_t num_users() const { return binom(lambda, r); }  // K
  Rat node_memory_ratio() const { return Rat(t, lambda); }      // M/N per node
  Rat retrieval_ratio() const {                                 // Z/F of the scheme
    return Rat(1) - Rat(BigInt(binom(lambda - r, t)), BigInt(binom(lambda, t)));
  }

  void validate() const {
    if (lambda < 2 || lambda > kMaxGround) throw InvalidParameter("need 2 <= lambda <= 64");
    if (r < 1 || r >= lambda) throw InvalidParameter("need 1 <= r < lambda");
    if (t < 1 || t > lambda - r) throw InvalidParameter("need 1 <= t <= lambda - r");
    if (antennas < 1) throw InvalidParameter("need L >= 1");
    if (b < 0 || b >= r) throw InvalidParameter("need b in [0, r-1]");
  }
};

// Row-major grid of bits; rows indexed by row rank, columns by column rank.
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(int rows, int cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(words_per_row_)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool test(int r, int c) const {
    return (word(r, c) >> (c & 63)) & 1u;
  }
  void set(int r, int c) { word(r, c) |= std::uint64_t{1} << (c & 63); }

 private:
  std::uint64_t& word(int r, int c) {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(words_per_row_) +
                 static_cast<std::size_t>(c >> 6)];
  }
  const std::uint64_t& word(int r, int c) const {
    return const_cast<BitGrid*>(this)->word(r, c);
  }

  int rows_ = 0;
  int cols_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> data_;
};

// A {star, null} array with subset-labelled rows and columns (the
// node-placement array C and the user-retrieve array U).
struct StarArray {
  int ground = 0;  // lambda, used for label formatting
  std::vector<Subset> row_labels;
  std::vector<Subset> col_labels;
  BitGrid stars;

  bool star_at(int row, int col) const { return stars.test(row, col); }
  int rows() const { return stars.rows(); }
  int cols() const { return stars.cols(); }

  int row_rank(const Subset& s) const {
    return static_cast<int>(subset_rank(row_labels, s));
  }
  int col_rank(const Subset& s) const {
    return static_cast<int>(subset_rank(col_labels, s));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    auto labels = [&](const std::vector<Subset>& ls) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : ls) arr.push_back(s.str(ground));
      return arr;
    };
    j["rows"] = labels(row_labels);
    j["cols"] = labels(col_labels);
    nlohmann::json cells = nlohmann::json::array();
    for (int r = 0; r < rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < cols(); ++c) {
        if (star_at(r, c)) {
          row.push_back("*");
        } else {
          row.push_back(nullptr);
        }
      }
      cells.push_back(std::move(row));
    }
    j["cells"] = std::move(cells);
    return j;
  }

  static StarArray from_json(const nlohmann::json& j, int ground) {
    StarArray a;
    a.ground = ground;
    for (const auto& s : j.at("rows")) a.row_labels.push_back(Subset::parse(s, ground));
    for (const auto& s : j.at("cols")) a.col_labels.push_back(Subset::parse(s, ground));
    a.stars = BitGrid(static_cast<int>(a.row_labels.size()), static_cast<int>(a.col_labels.size()));
    const auto& cells = j.at("cells");
    for (int r = 0; r < a.rows(); ++r) {
      for (int c = 0; c < a.cols(); ++c) {
        if (!cells.at(r).at(c).is_null()) a.stars.set(r, c);
      }
    }
    return a;
  }
};

// MN placement: node lambda caches the packets indexed by t-subsets that
// contain it. C(lambda,t) x lambda, exactly C(lambda-1,t-1) stars per column.
inline StarArray node_placement_array(const SystemParams& p) {
  if (p.lambda < 1 || p.lambda > kMaxGround) throw InvalidParameter("lambda out of range");
  if (p.t < 1 || p.t > p.lambda) throw InvalidParameter("need 1 <= t <= lambda");
  StarArray a;
  a.ground = p.lambda;
  a.row_labels = enumerate_subsets(Subset::full(p.lambda), p.t);
  for (int node = 1; node <= p.lambda; ++node) a.col_labels.push_back(Subset::of({node}));
  a.stars = BitGrid(static_cast<int>(a.row_labels.size()), p.lambda);
  for (int row = 0; row < a.rows(); ++row) {
    for (int node = 1; node <= p.lambda; ++node) {
      if (a.row_labels[static_cast<std::size_t>(row)].contains(node)) a.stars.set(row, node - 1);
    }
  }
  return a;
}

// User R retrieves packet T iff T meets R. C(lambda,t) x C(lambda,r) with
// C(lambda,t) - C(lambda-r,t) stars per column.
inline StarArray user_retrieve_array(const SystemParams& p) {
  if (p.lambda < 1 || p.lambda > kMaxGround) throw InvalidParameter("lambda out of range");
  if (p.t < 1 || p.t > p.lambda) throw InvalidParameter("need 1 <= t <= lambda");
  if (p.r < 1 || p.r > p.lambda) throw InvalidParameter("need 1 <= r <= lambda");
  StarArray a;
  a.ground = p.lambda;
  a.row_labels = enumerate_subsets(Subset::full(p.lambda), p.t);
  a.col_labels = enumerate_subsets(Subset::full(p.lambda), p.r);
  a.stars = BitGrid(static_cast<int>(a.row_labels.size()), static_cast<int>(a.col_labels.size()));
  for (int row = 0; row < a.rows(); ++row) {
    for (int col = 0; col < a.cols(); ++col) {
      if (a.row_labels[static_cast<std::size_t>(row)].intersects(
              a.col_labels[static_cast<std::size_t>(col)])) {
        a.stars.set(row, col);
      }
    }
  }
  return a;
}

// Level range of the column partition under an anchor A of size t+r-b:
// |D \ A| spans [max(b-t,0), min(r, lambda-t-r+b)] over D in C([lambda], r).
inline int partition_level_min(const SystemParams& p) { return std::max(p.b - p.t, 0); }
inline int partition_level_max(const SystemParams& p) {
  return std::min(p.r, p.lambda - p.t - p.r + p.b);
}

// The blocks B_G = { D in C([lambda],r) : D \ A = G }, keyed by the groups
// G in C([lambda]\A, i) over all levels i; a partition of the column set.
inline std::map<Subset, std::vector<Subset>> partition_columns(const SystemParams& p,
                                                               const Subset& anchor) {
  if (anchor.size() != p.t + p.r - p.b) {
    throw InvalidParameter("partition_columns: |A| must be t+r-b");
  }
  if (!anchor.subset_of(Subset::full(p.lambda))) {
    throw InvalidParameter("partition_columns: A must lie in [lambda]");
  }
  const Subset rest = Subset::full(p.lambda) - anchor;
  std::map<Subset, std::vector<Subset>> blocks;
  for (int i = partition_level_min(p); i <= partition_level_max(p); ++i) {
    for (const Subset& group : enumerate_subsets(rest, i)) {
      std::vector<Subset> block;
      for (const Subset& inner : enumerate_subsets(anchor, p.r - i)) {
        block.push_back(inner | group);
      }
      std::sort(block.begin(), block.end());
      blocks.emplace(group, std::move(block));
    }
  }
  return blocks;
}

// Closed-form shape of the subarray U(C(A,t), B_G) from the block structure:
// v columns, z nulls per row, u nulls per column.
struct GroupStats {
  Subset group;
  int level = 0;          // i = |G|
  std::int64_t cols = 0;  // v = C(t+r-b, r-i)
  std::int64_t nulls_per_row = 0;  // z = C(r-b, r-i)
  std::int64_t nulls_per_col = 0;  // u = C(t+i-b, t)
};

inline GroupStats group_stats(const SystemParams& p, const Subset& anchor, const Subset& group) {
  if (anchor.size() != p.t + p.r - p.b) throw InvalidParameter("group_stats: |A| must be t+r-b");
  if (group.intersects(anchor)) throw InvalidParameter("group_stats: G must avoid A");
  GroupStats s;
  s.group = group;
  s.level = group.size();
  s.cols = static_cast<std::int64_t>(binom(p.t + p.r - p.b, p.r - s.level));
  s.nulls_per_row = static_cast<std::int64_t>(binom(p.r - p.b, p.r - s.level));
  s.nulls_per_col = static_cast<std::int64_t>(binom(p.t + s.level - p.b, p.t));
  return s;
}

}  // namespace mapda
