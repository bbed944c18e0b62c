#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "mapda/array.hpp"
#include "mapda/common.hpp"
#include "mapda/knapsack.hpp"
#include "mapda/placement.hpp"
#include "mapda/subsets.hpp"

#include "json.hpp"

namespace mapda {

// One multicast block identity: the sub-index within [mu] (or [C(lambda'-r,t)]
// for the single-subarray construction), the anchor subset, and the rotation.
struct FillVector {
  int sub = 0;  // 1-based
  Subset anchor;
  int rot = 1;  // 1-based rotation index

  friend bool operator==(const FillVector& a, const FillVector& b) = default;
  // Canonical order: anchor lex rank, then rotation, then sub-index. The
  // c-th vector of a cell lands in replica copy c.
  friend bool operator<(const FillVector& a, const FillVector& b) {
    if (!(a.anchor == b.anchor)) return a.anchor < b.anchor;
    if (a.rot != b.rot) return a.rot < b.rot;
    return a.sub < b.sub;
  }
};

// The user-retrieve array with an ordered list of vectors accumulated in
// every null cell; replicate() turns it into a concrete MAPDA.
struct FilledArray {
  StarArray base;
  std::vector<std::vector<FillVector>> cells;  // rows*cols, row-major

  explicit FilledArray(StarArray u) : base(std::move(u)) {
    cells.resize(static_cast<std::size_t>(base.rows()) * static_cast<std::size_t>(base.cols()));
  }

  std::vector<FillVector>& cell(int row, int col) {
    return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(base.cols()) +
                 static_cast<std::size_t>(col)];
  }
  const std::vector<FillVector>& cell(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(base.cols()) +
                 static_cast<std::size_t>(col)];
  }
};

// Writes one anchor's share of vectors: for every rotation h and every
// selected block B_G, the n-th null of each column (rows in lex order)
// receives the mu/u sub-indices (n-1)mu/u+1 .. n*mu/u tagged (A, h). The
// label_anchor override lets the complementary-pair merge file both halves
// under one name.
inline void fill_subarray(FilledArray& filled, const SystemParams& p, const Subset& anchor,
                          const SolutionFamily& family,
                          std::optional<Subset> label_anchor = std::nullopt) {
  const Subset label = label_anchor.value_or(anchor);
  const auto blocks = partition_columns(p, anchor);
  const std::vector<Subset> anchor_rows = enumerate_subsets(anchor, p.t);
  std::vector<int> row_ranks;
  row_ranks.reserve(anchor_rows.size());
  for (const Subset& t_set : anchor_rows) row_ranks.push_back(filled.base.row_rank(t_set));

  std::unordered_set<std::uint64_t> touched;  // cells hit within one rotation
  for (int h = 1; h <= static_cast<int>(family.rotations.size()); ++h) {
    touched.clear();
    const KnapsackSolution& rot = family.rotations[static_cast<std::size_t>(h - 1)];
    for (int idx = 0; idx < family.instance.n(); ++idx) {
      if (!rot.selected[static_cast<std::size_t>(idx)]) continue;
      const KnapsackItem& item = family.instance.items[static_cast<std::size_t>(idx)];
      const auto u = static_cast<std::int64_t>(binom(p.t + item.level - p.b, p.t));
      if (u <= 0 || family.mu % u != 0) {
        throw ConsistencyError("fill_subarray: mu is not a multiple of the column null count");
      }
      const std::int64_t per_null = family.mu / u;
      for (const Subset& col_label : blocks.at(item.group)) {
        const int col = filled.base.col_rank(col_label);
        std::int64_t order = 0;  // n: order of the null among the anchor's rows
        for (std::size_t ri = 0; ri < anchor_rows.size(); ++ri) {
          if (anchor_rows[ri].intersects(col_label)) continue;
          ++order;
          const int row = row_ranks[ri];
          const std::uint64_t key =
              (static_cast<std::uint64_t>(row) << 32) | static_cast<std::uint64_t>(col);
          if (!touched.insert(key).second) {
            throw ConsistencyError("fill_subarray: cell filled twice in one rotation");
          }
          auto& cell = filled.cell(row, col);
          for (std::int64_t c = (order - 1) * per_null + 1; c <= order * per_null; ++c) {
            cell.push_back({static_cast<int>(c), label, h});
          }
        }
        if (order != u) throw ConsistencyError("fill_subarray: column null count mismatch");
      }
    }
  }
}

// Intermediate form of the final array: base star pattern plus per-cell
// vector lists, expanded on demand. Mirrors the compact JSON schema.
struct CompactMapda {
  int antennas = 0;
  int ground = 0;
  int pi = 0;
  int symbols = 0;
  std::vector<std::string> base_rows;
  std::vector<std::string> cols;
  // Vector lists keyed by cell, canonical order inside each list. Cells not
  // present are stars.
  std::map<std::pair<int, int>, std::vector<FillVector>> vectors;
  std::map<FillVector, int> symbol_of;  // assigned on expansion scan

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["L"] = antennas;
    j["K"] = static_cast<int>(cols.size());
    j["F"] = pi * static_cast<int>(base_rows.size());
    int nulls_col0 = 0;
    for (const auto& [cell, list] : vectors) nulls_col0 += cell.second == 0;
    j["Z"] = pi * (static_cast<int>(base_rows.size()) - nulls_col0);
    j["S"] = symbols;
    j["pi"] = pi;
    j["base_rows"] = base_rows;
    j["cols"] = cols;
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [cell, list] : vectors) {
      nlohmann::json arr = nlohmann::json::array();
      for (const FillVector& fv : list) {
        arr.push_back({fv.sub, fv.anchor.str(ground), fv.rot});
      }
      v[base_rows[static_cast<std::size_t>(cell.first)] + "|" +
        cols[static_cast<std::size_t>(cell.second)]] = std::move(arr);
    }
    j["vectors"] = std::move(v);
    return j;
  }

  static CompactMapda from_json(const nlohmann::json& j, int ground) {
    CompactMapda c;
    c.antennas = j.at("L").get<int>();
    c.ground = ground;
    c.pi = j.at("pi").get<int>();
    c.symbols = j.at("S").get<int>();
    c.base_rows = j.at("base_rows").get<std::vector<std::string>>();
    c.cols = j.at("cols").get<std::vector<std::string>>();
    std::map<std::string, int> row_index, col_index;
    for (std::size_t i = 0; i < c.base_rows.size(); ++i) row_index[c.base_rows[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < c.cols.size(); ++i) col_index[c.cols[i]] = static_cast<int>(i);
    for (const auto& [key, arr] : j.at("vectors").items()) {
      const auto bar = key.find('|');
      if (bar == std::string::npos) throw InvalidParameter("compact vectors key must be 'T|R'");
      const int row = row_index.at(key.substr(0, bar));
      const int col = col_index.at(key.substr(bar + 1));
      std::vector<FillVector> list;
      for (const auto& triple : arr) {
        list.push_back({triple.at(0).get<int>(),
                        Subset::parse(triple.at(1).get<std::string>(), ground),
                        triple.at(2).get<int>()});
      }
      c.vectors[{row, col}] = std::move(list);
    }
    return c;
  }
};

namespace detail {

inline CompactMapda compact_from_filled(const FilledArray& filled, int antennas) {
  CompactMapda c;
  c.antennas = antennas;
  c.ground = filled.base.ground;
  for (const Subset& s : filled.base.row_labels) c.base_rows.push_back(s.str(filled.base.ground));
  for (const Subset& s : filled.base.col_labels) c.cols.push_back(s.str(filled.base.ground));
  int pi = -1;
  for (int row = 0; row < filled.base.rows(); ++row) {
    for (int col = 0; col < filled.base.cols(); ++col) {
      const auto& list = filled.cell(row, col);
      if (filled.base.star_at(row, col)) {
        if (!list.empty()) throw ConsistencyError("replicate: vectors in a star cell");
        continue;
      }
      if (pi < 0) pi = static_cast<int>(list.size());
      if (static_cast<int>(list.size()) != pi || list.empty()) {
        throw ConsistencyError("replicate: non-uniform vector count across null cells");
      }
      auto sorted = list;
      std::sort(sorted.begin(), sorted.end());
      c.vectors[{row, col}] = std::move(sorted);
    }
  }
  if (pi <= 0) throw ConsistencyError("replicate: array has no filled cells");
  c.pi = pi;
  std::set<FillVector> distinct;
  for (const auto& [cell, list] : c.vectors) distinct.insert(list.begin(), list.end());
  c.symbols = static_cast<int>(distinct.size());
  return c;
}

}  // namespace detail

// Expansion: copy c of the base array takes each null cell's c-th vector as
// its integer. Symbols are numbered by first appearance in row-major order.
inline Mapda expand(CompactMapda& compact) {
  const int base_rows = static_cast<int>(compact.base_rows.size());
  const int cols = static_cast<int>(compact.cols.size());
  Mapda q;
  q.antennas = compact.antennas;
  q.init(compact.pi * base_rows, cols);
  compact.symbol_of.clear();
  int next = 0;
  for (int copy = 0; copy < compact.pi; ++copy) {
    for (int row = 0; row < base_rows; ++row) {
      for (int col = 0; col < cols; ++col) {
        auto it = compact.vectors.find({row, col});
        if (it == compact.vectors.end()) continue;
        const FillVector& fv = it->second[static_cast<std::size_t>(copy)];
        auto [pos, inserted] = compact.symbol_of.try_emplace(fv, next + 1);
        if (inserted) ++next;
        q.at(copy * base_rows + row, col) = pos->second;
      }
    }
  }
  q.symbols = next;
  if (compact.symbols == 0) {
    compact.symbols = next;
  } else if (compact.symbols != next) {
    throw ConsistencyError("expand: distinct vector count disagrees with S");
  }
  for (int copy = 1; copy <= compact.pi; ++copy) {
    for (const std::string& label : compact.base_rows) {
      q.row_labels.push_back(label + "#" + std::to_string(copy));
    }
  }
  q.col_labels = compact.cols;
  return q;
}

// Replication: checks the uniform per-cell vector count pi and stacks pi
// copies of the base array.
inline Mapda replicate(const FilledArray& filled, int antennas) {
  CompactMapda compact = detail::compact_from_filled(filled, antennas);
  return expand(compact);
}

// Verifies a compact array against C1-C4 without expanding it.
inline VerificationReport verify_compact(const CompactMapda& c) {
  VerificationReport rep;
  const int base_rows = static_cast<int>(c.base_rows.size());
  const int cols = static_cast<int>(c.cols.size());

  // C1: per-column star count is pi * (base stars); uniform iff the null
  // count per column is uniform.
  std::vector<int> nulls_per_col(static_cast<std::size_t>(cols), 0);
  for (const auto& [cell, list] : c.vectors) ++nulls_per_col[static_cast<std::size_t>(cell.second)];
  std::map<int, int> tally;
  for (int n : nulls_per_col) ++tally[n];
  int modal = 0, modal_count = -1;
  for (auto [n, count] : tally) {
    if (count > modal_count) {
      modal = n;
      modal_count = count;
    }
  }
  rep.z = c.pi * (base_rows - modal);
  for (int k = 0; k < cols; ++k) {
    if (nulls_per_col[static_cast<std::size_t>(k)] != modal) rep.c1_deviating_cols.push_back(k);
  }
  rep.c1 = rep.c1_deviating_cols.empty();

  // C2: S distinct vectors, each with at least one occurrence.
  std::map<FillVector, std::vector<std::pair<int, int>>> occurrences;
  bool uniform_pi = true;
  for (const auto& [cell, list] : c.vectors) {
    uniform_pi = uniform_pi && static_cast<int>(list.size()) == c.pi;
    for (const FillVector& fv : list) occurrences[fv].push_back(cell);
  }
  rep.c2 = uniform_pi && static_cast<int>(occurrences.size()) == c.symbols && c.symbols > 0;

  // C3: no vector twice in one column (copies of a cell share the column).
  rep.c3 = true;
  int sym = 0;
  for (auto& [fv, cells] : occurrences) {
    ++sym;
    std::vector<int> seen;
    for (auto [row, col] : cells) seen.push_back(col);
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 1; i < seen.size(); ++i) {
      if (seen[i] == seen[i - 1]) {
        rep.c3 = false;
        rep.c3_violations.push_back({sym, seen[i]});
      }
    }
  }

  // C4: for vector s in base row T, the integer entries of the fragment row
  // are the null cells of T among the columns carrying s.
  rep.c4 = true;
  sym = 0;
  for (auto& [fv, cells] : occurrences) {
    ++sym;
    std::vector<int> frag_cols, frag_rows;
    for (auto [row, col] : cells) {
      frag_cols.push_back(col);
      frag_rows.push_back(row);
    }
    std::sort(frag_rows.begin(), frag_rows.end());
    frag_rows.erase(std::unique(frag_rows.begin(), frag_rows.end()), frag_rows.end());
    for (int row : frag_rows) {
      int count = 0;
      for (int col : frag_cols) {
        if (c.vectors.count({row, col})) ++count;
      }
      if (count > c.antennas) {
        rep.c4 = false;
        rep.c4_violations.push_back({sym, row, count});
      }
    }
  }

  rep.valid = rep.c1 && rep.c2 && rep.c3 && rep.c4;
  return rep;
}

enum class Solver { kDp, kGreedy };

namespace detail {

// The canonical solution pattern is shared by every anchor: the same number
// of groups selected per level, lex-first within the level.
inline std::vector<std::pair<int, std::int64_t>> level_counts(const KnapsackInstance& inst,
                                                              const KnapsackSolution& sol) {
  std::vector<std::pair<int, std::int64_t>> counts;
  for (int i = 0; i < inst.n(); ++i) {
    if (!sol.selected[static_cast<std::size_t>(i)]) continue;
    const int level = inst.items[static_cast<std::size_t>(i)].level;
    if (counts.empty() || counts.back().first != level) {
      counts.push_back({level, 0});
    }
    ++counts.back().second;
  }
  return counts;
}

inline KnapsackSolution lex_first_selection(const KnapsackInstance& inst,
                                            const std::vector<std::pair<int, std::int64_t>>& counts) {
  std::vector<char> selected(static_cast<std::size_t>(inst.n()), 0);
  std::map<int, std::int64_t> want;
  for (auto [level, count] : counts) want[level] = count;
  std::map<int, std::int64_t> taken;
  for (int i = 0; i < inst.n(); ++i) {
    const int level = inst.items[static_cast<std::size_t>(i)].level;
    auto it = want.find(level);
    if (it != want.end() && taken[level] < it->second) {
      selected[static_cast<std::size_t>(i)] = 1;
      ++taken[level];
    }
  }
  return finalize(inst, std::move(selected));
}

}  // namespace detail

// General construction (method thm1): solve the knapsack once (every anchor
// shares the instance shape), rotate the solution family under each anchor,
// fill, and replicate. The result is a phi-regular (L, K, F, Z, S) MAPDA
// with S = ell * mu * C(lambda, t+r-b).
inline CompactMapda construct_theorem1_compact(const SystemParams& p, Solver solver = Solver::kDp) {
  p.validate();
  FilledArray filled(user_retrieve_array(p));
  const Subset first_anchor = Subset::full(p.t + p.r - p.b);
  const KnapsackInstance shape = build_instance(p, first_anchor);
  KnapsackSolution solved;
  if (solver == Solver::kDp) {
    solved = solve_dp(shape);
  } else {
    solved = greedy_solution(p).second;
  }
  if (solved.phi <= 0) throw ConsistencyError("construct_theorem1: empty knapsack solution");
  const auto counts = detail::level_counts(shape, solved);
  for (const Subset& anchor : enumerate_subsets(Subset::full(p.lambda), p.t + p.r - p.b)) {
    const KnapsackInstance inst = build_instance(p, anchor);
    const KnapsackSolution base = detail::lex_first_selection(inst, counts);
    const SolutionFamily family = rotate_family(p, anchor, base);
    fill_subarray(filled, p, anchor, family);
  }
  return detail::compact_from_filled(filled, p.antennas);
}

inline Mapda construct_theorem1(const SystemParams& p, Solver solver = Solver::kDp) {
  CompactMapda compact = construct_theorem1_compact(p, solver);
  return expand(compact);
}

// Paired-anchor construction (method thm4): complementary anchors A and
// [lambda]\A fill under one label. The all-star level r-b under one anchor
// hosts the other's selected level-b blocks, so the merged blocks stay legal
// and S halves.
inline CompactMapda construct_theorem4_compact(const SystemParams& p) {
  p.validate();
  if (!(p.b < p.r)) throw ConstraintError("b < r");
  if (!(p.r < 2 * p.b)) throw ConstraintError("r < 2b");
  if (!(p.t + p.r > 2 * p.b)) throw ConstraintError("t + r > 2b");
  if (p.lambda != 2 * (p.t + p.r - p.b)) throw ConstraintError("lambda = 2(t + r - b)");
  const std::int64_t level_b_groups =
      static_cast<std::int64_t>(binom(p.lambda - p.t - p.r + p.b, p.b));
  if (p.antennas > level_b_groups) throw ConstraintError("L <= C(t+r-b, b)");

  FilledArray filled(user_retrieve_array(p));
  const Subset ground = Subset::full(p.lambda);

  auto level_b_family = [&](const Subset& anchor) {
    const KnapsackInstance inst = build_instance(p, anchor);
    std::vector<char> selected(static_cast<std::size_t>(inst.n()), 0);
    std::int64_t taken = 0;
    for (int i = 0; i < inst.n(); ++i) {
      if (inst.items[static_cast<std::size_t>(i)].level == p.b && taken < p.antennas) {
        selected[static_cast<std::size_t>(i)] = 1;
        ++taken;
      }
    }
    KnapsackSolution base = detail::finalize(inst, std::move(selected));
    return rotate_family(p, anchor, base);
  };

  auto assert_all_star = [&](const Subset& row_anchor, const SolutionFamily& family,
                             const Subset& col_anchor) {
    const auto blocks = partition_columns(p, col_anchor);
    for (const Subset& t_set : enumerate_subsets(row_anchor, p.t)) {
      const int row = filled.base.row_rank(t_set);
      for (const auto& rot : family.rotations) {
        for (int i = 0; i < family.instance.n(); ++i) {
          if (!rot.selected[static_cast<std::size_t>(i)]) continue;
          for (const Subset& col_label : blocks.at(family.instance.items[static_cast<std::size_t>(i)].group)) {
            if (!filled.base.star_at(row, filled.base.col_rank(col_label))) {
              throw ConsistencyError("construct_theorem4: merge rows are not all-star");
            }
          }
        }
      }
    }
  };

  for (const Subset& anchor : enumerate_subsets(ground, p.t + p.r - p.b)) {
    const Subset partner = ground - anchor;
    if (partner < anchor) continue;  // one pass per complementary pair
    const SolutionFamily fam_a = level_b_family(anchor);
    const SolutionFamily fam_b = level_b_family(partner);
    if (fam_a.ell != fam_b.ell) {
      throw ConsistencyError("construct_theorem4: rotation counts differ across the pair");
    }
    assert_all_star(anchor, fam_b, partner);
    assert_all_star(partner, fam_a, anchor);
    fill_subarray(filled, p, anchor, fam_a);
    fill_subarray(filled, p, partner, fam_b, anchor);  // relabel to the pair representative
  }
  return detail::compact_from_filled(filled, p.antennas);
}

inline Mapda construct_theorem4(const SystemParams& p) {
  CompactMapda compact = construct_theorem4_compact(p);
  return expand(compact);
}

// Single-subarray construction (method thm5): one subarray per
// lambda'-subset H, every null of U(C(H,t), C(H,r)) filled with the single
// vector (n, H). Gives sum-DoF C(lambda', r) whenever each row's
// C(lambda'-t, r) nulls fit within L.
inline CompactMapda construct_theorem5_compact(const SystemParams& p, int lambda_prime) {
  p.validate();
  if (lambda_prime < p.t + p.r) throw ConstraintError("lambda' >= t + r");
  if (lambda_prime > p.lambda) throw ConstraintError("lambda' <= lambda");
  if (static_cast<std::int64_t>(binom(lambda_prime - p.t, p.r)) > p.antennas) {
    throw ConstraintError("C(lambda'-t, r) <= L");
  }
  FilledArray filled(user_retrieve_array(p));
  for (const Subset& h_set : enumerate_subsets(Subset::full(p.lambda), lambda_prime)) {
    for (const Subset& col_label : enumerate_subsets(h_set, p.r)) {
      const int col = filled.base.col_rank(col_label);
      int order = 0;
      for (const Subset& t_set : enumerate_subsets(h_set, p.t)) {
        if (t_set.intersects(col_label)) continue;
        ++order;
        filled.cell(filled.base.row_rank(t_set), col).push_back({order, h_set, 1});
      }
    }
  }
  return detail::compact_from_filled(filled, p.antennas);
}

inline Mapda construct_theorem5(const SystemParams& p, int lambda_prime) {
  CompactMapda compact = construct_theorem5_compact(p, lambda_prime);
  return expand(compact);
}

enum class Predictor { kThm2, kThm3, kThm4, kThm5, kCo1, kCo2, kCo3, kCo4 };

// Closed-form (F, Z, S, g) of the schemes, exact rational evaluation.
// kThm2/kCo1 and kThm3/kCo2 and kThm4/kCo3 and kThm5/kCo4 share formulas:
// the corollaries restate the theorems in MAPDA parameters.
inline SchemeMetrics predict_metrics(const SystemParams& p, Predictor which,
                                     std::optional<int> lambda_prime = std::nullopt) {
  p.validate();
  SchemeMetrics out;
  out.num_users = binom_big(p.lambda, p.r);
  out.memory_ratio = p.retrieval_ratio();
  const BigInt rows_t = binom_big(p.lambda, p.t);
  const BigInt rows_minus = binom_big(p.lambda, p.t) - binom_big(p.lambda - p.r, p.t);

  switch (which) {
    case Predictor::kThm2:
    case Predictor::kCo1: {
      const auto [gp, sol] = greedy_solution(p);
      const std::int64_t rest = p.lambda - p.t - p.r + p.b;
      const BigInt delta1 = BigInt(lcm2(binom(rest, gp.delta), static_cast<std::uint64_t>(gp.zeta)));
      std::vector<std::uint64_t> mus;
      for (int j = 1; j <= gp.delta - p.b + 1; ++j) mus.push_back(binom(p.t + j - 1, p.t));
      const BigInt delta2 = BigInt(lcm_list(mus));
      Rat pi = 0;
      for (int i = p.b; i <= gp.delta - 1; ++i) {
        pi += Rat(BigInt(binom(p.r, p.r - i)) * BigInt(binom(p.lambda - p.t - p.r, i - p.b)),
                  BigInt(gp.zeta) * BigInt(binom(p.t + i - p.b, p.t)));
      }
      pi += Rat(BigInt(binom(p.r, p.r - gp.delta)) *
                    BigInt(binom(p.lambda - p.t - p.r, gp.delta - p.b)),
                BigInt(binom(rest, gp.delta)) * BigInt(binom(p.t + gp.delta - p.b, p.t)));
      pi *= Rat(delta1 * delta2);
      if (boost::multiprecision::denominator(pi) != 1) {
        throw ConsistencyError("predict_metrics: pi is not an integer");
      }
      const BigInt pi_int = boost::multiprecision::numerator(pi);
      out.rows = pi_int * rows_t;
      out.stars = pi_int * rows_minus;
      out.symbols = delta1 * delta2 * binom_big(p.lambda, p.t + p.r - p.b) / gp.zeta;
      out.gain = sol.phi;
      break;
    }
    case Predictor::kThm3:
    case Predictor::kCo2: {
      if (p.b != 0) throw ConstraintError("b = 0");
      if (p.lambda < 2 * p.r + p.t) throw ConstraintError("lambda >= 2r + t");
      const std::int64_t full_row = static_cast<std::int64_t>(binom(p.lambda - p.t, p.r));
      const std::int64_t level_r = static_cast<std::int64_t>(binom(p.lambda - p.t - p.r, p.r));
      if (p.antennas < full_row - level_r) {
        throw ConstraintError("L >= C(lambda-t,r) - C(lambda-t-r,r)");
      }
      if (p.antennas > full_row) throw ConstraintError("L <= C(lambda-t,r)");
      const std::int64_t q_top = p.antennas - full_row + level_r;
      Rat pi = 0;
      BigInt s_val;
      if (q_top == 0) {
        std::vector<std::uint64_t> mus;
        for (int j = 1; j <= p.r; ++j) mus.push_back(binom(p.t + j - 1, p.t));
        const BigInt delta3 = BigInt(lcm_list(mus));
        for (int i = 0; i <= p.r - 1; ++i) {
          pi += Rat(BigInt(binom(p.r, p.r - i)) * BigInt(binom(p.lambda - p.t - p.r, i)),
                    BigInt(binom(p.t + i, p.t)));
        }
        pi *= Rat(delta3);
        s_val = delta3 * binom_big(p.lambda, p.t + p.r);
      } else {
        std::vector<std::uint64_t> mus;
        for (int j = 1; j <= p.r + 1; ++j) mus.push_back(binom(p.t + j - 1, p.t));
        const BigInt delta4 = BigInt(lcm_list(mus));
        const BigInt delta5 =
            BigInt(lcm2(static_cast<std::uint64_t>(level_r), static_cast<std::uint64_t>(q_top)));
        for (int i = 0; i <= p.r - 1; ++i) {
          pi += Rat(BigInt(binom(p.r, p.r - i)) * BigInt(binom(p.lambda - p.t - p.r, i)),
                    BigInt(q_top) * BigInt(binom(p.t + i, p.t)));
        }
        pi += Rat(BigInt(1), BigInt(binom(p.t + p.r, p.t)));
        pi *= Rat(delta4 * delta5);
        // S = ell * mu * C(lambda, t+r) with ell = Delta5 / q_top and
        // mu = Delta4; dropping Delta4 here would break K(F-Z)/S = g.
        s_val = delta4 * delta5 * binom_big(p.lambda, p.t + p.r) / q_top;
      }
      if (boost::multiprecision::denominator(pi) != 1) {
        throw ConsistencyError("predict_metrics: pi is not an integer");
      }
      const BigInt pi_int = boost::multiprecision::numerator(pi);
      out.rows = pi_int * rows_t;
      out.stars = pi_int * rows_minus;
      out.symbols = s_val;
      // K M/N + L; the identity K M/N = C(lambda,r) - C(lambda-t,r) keeps it integral.
      out.gain = binom_big(p.lambda, p.r) - binom_big(p.lambda - p.t, p.r) + p.antennas;
      break;
    }
    case Predictor::kThm4:
    case Predictor::kCo3: {
      if (!(p.b < p.r)) throw ConstraintError("b < r");
      if (!(p.r < 2 * p.b)) throw ConstraintError("r < 2b");
      if (!(p.t + p.r > 2 * p.b)) throw ConstraintError("t + r > 2b");
      if (p.lambda != 2 * (p.t + p.r - p.b)) throw ConstraintError("lambda = 2(t + r - b)");
      const std::uint64_t level_b = binom(p.lambda - p.t - p.r + p.b, p.b);
      if (p.antennas > static_cast<std::int64_t>(level_b)) throw ConstraintError("L <= C(t+r-b, b)");
      const std::uint64_t beta = std::gcd(level_b, static_cast<std::uint64_t>(p.antennas));
      const BigInt pi_int = BigInt(binom(p.r, p.b)) * p.antennas / beta;
      out.rows = pi_int * rows_t;
      out.stars = pi_int * rows_minus;
      out.symbols = binom_big(p.lambda, p.t + p.r - p.b) * level_b / (2 * beta);
      out.gain = BigInt(2) * p.antennas * binom_big(p.t + p.r - p.b, p.t);
      break;
    }
    case Predictor::kThm5:
    case Predictor::kCo4: {
      if (!lambda_prime) throw InvalidParameter("predict_metrics: lambda' required");
      const int lp = *lambda_prime;
      if (lp < p.t + p.r) throw ConstraintError("lambda' >= t + r");
      if (lp > p.lambda) throw ConstraintError("lambda' <= lambda");
      if (static_cast<std::int64_t>(binom(lp - p.t, p.r)) > p.antennas) {
        throw ConstraintError("C(lambda'-t, r) <= L");
      }
      const BigInt pi_int = binom_big(p.lambda - p.t - p.r, lp - p.t - p.r);
      out.rows = pi_int * rows_t;
      out.stars = pi_int * rows_minus;
      out.symbols = binom_big(lp - p.r, p.t) * binom_big(p.lambda, lp);
      out.gain = binom_big(lp, p.r);
      break;
    }
  }
  out.sum_dof = Rat(out.gain);
  return out;
}

// Closed form of the uniform per-cell fill count pi of a family fill,
// exposed for structural cross-checks in tests.
inline BigInt predicted_fill_count(const SystemParams& p, const SolutionFamily& family) {
  Rat pi = 0;
  for (const auto& info : family.per_level) {
    pi += Rat(BigInt(binom(p.r, p.r - info.level)) *
                  BigInt(binom(p.lambda - p.t - p.r, info.level - p.b)) * family.ell * info.picked *
                  family.mu,
              BigInt(info.avail) * info.nulls_per_col);
  }
  if (boost::multiprecision::denominator(pi) != 1) {
    throw ConsistencyError("predicted_fill_count is not an integer");
  }
  return boost::multiprecision::numerator(pi);
}

}  // namespace mapda
