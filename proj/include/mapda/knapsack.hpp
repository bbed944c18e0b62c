#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapda/common.hpp"
#include "mapda/placement.hpp"
#include "mapda/subsets.hpp"

#include "json.hpp"

namespace mapda {

struct KnapsackItem {
  Subset group;
  int level = 0;           // i = |group|
  std::int64_t weight = 0; // z: nulls per row contributed by the block
  std::int64_t value = 0;  // v: columns (users served) in the block
};

// The (n, L, z, v) selection problem over the column blocks of one anchor.
// Items are canonically ordered: level ascending, group lex within a level.
struct KnapsackInstance {
  std::vector<KnapsackItem> items;
  std::int64_t capacity = 0;  // L

  int n() const { return static_cast<int>(items.size()); }
};

struct KnapsackSolution {
  std::vector<char> selected;  // aligned with instance items
  std::int64_t phi = 0;        // total value
  std::int64_t psi = 0;        // total weight

  std::map<Subset, int> selection_map(const KnapsackInstance& inst) const {
    std::map<Subset, int> m;
    for (int i = 0; i < inst.n(); ++i) m[inst.items[static_cast<std::size_t>(i)].group] = selected[static_cast<std::size_t>(i)];
    return m;
  }
};

// One item per group at the levels whose blocks still contain nulls,
// i in [b, min(r, lambda-t-r+b)]; all-star levels below b carry no item.
inline KnapsackInstance build_instance(const SystemParams& p, const Subset& anchor) {
  if (anchor.size() != p.t + p.r - p.b) throw InvalidParameter("build_instance: |A| must be t+r-b");
  const Subset rest = Subset::full(p.lambda) - anchor;
  KnapsackInstance inst;
  inst.capacity = p.antennas;
  for (int i = p.b; i <= partition_level_max(p); ++i) {
    const auto weight = static_cast<std::int64_t>(binom(p.r - p.b, p.r - i));
    const auto value = static_cast<std::int64_t>(binom(p.t + p.r - p.b, p.r - i));
    for (const Subset& g : enumerate_subsets(rest, i)) {
      inst.items.push_back({g, i, weight, value});
    }
  }
  return inst;
}

namespace detail {

inline KnapsackSolution finalize(const KnapsackInstance& inst, std::vector<char> selected) {
  KnapsackSolution sol;
  sol.selected = std::move(selected);
  for (int i = 0; i < inst.n(); ++i) {
    if (sol.selected[static_cast<std::size_t>(i)]) {
      sol.phi += inst.items[static_cast<std::size_t>(i)].value;
      sol.psi += inst.items[static_cast<std::size_t>(i)].weight;
    }
  }
  return sol;
}

// true when a beats b under the canonical tie-break: select items as early
// as possible in canonical order (lower level first, then lex-smaller group).
inline bool tiebreak_less(const std::vector<char>& b, const std::vector<char>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

}  // namespace detail

// Exact 0/1 knapsack by dynamic programming over item suffixes. Among all
// maximizing selections, returns the canonical one (prefer selecting earlier
// items), making every construction downstream deterministic.
inline KnapsackSolution solve_dp(const KnapsackInstance& inst) {
  if (inst.capacity < 0) throw InvalidParameter("solve_dp: capacity must be nonnegative");
  const int n = inst.n();
  std::int64_t total_weight = 0;
  for (const auto& it : inst.items) total_weight += it.weight;
  const std::int64_t cap = std::min<std::int64_t>(inst.capacity, total_weight);
  // best[i][c]: max value attainable with items i.. and capacity c.
  std::vector<std::vector<std::int64_t>> best(static_cast<std::size_t>(n) + 1,
                                              std::vector<std::int64_t>(static_cast<std::size_t>(cap) + 1, 0));
  for (int i = n - 1; i >= 0; --i) {
    const auto& item = inst.items[static_cast<std::size_t>(i)];
    for (std::int64_t c = 0; c <= cap; ++c) {
      std::int64_t v = best[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(c)];
      if (item.weight <= c) {
        v = std::max(v, item.value + best[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(c - item.weight)]);
      }
      best[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = v;
    }
  }
  std::vector<char> selected(static_cast<std::size_t>(n), 0);
  std::int64_t c = cap;
  for (int i = 0; i < n; ++i) {
    const auto& item = inst.items[static_cast<std::size_t>(i)];
    if (item.weight <= c &&
        item.value + best[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(c - item.weight)] ==
            best[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]) {
      selected[static_cast<std::size_t>(i)] = 1;
      c -= item.weight;
    }
  }
  return detail::finalize(inst, std::move(selected));
}

// Exhaustive oracle over all 2^n selections; same tie-break as solve_dp.
inline KnapsackSolution solve_brute(const KnapsackInstance& inst) {
  const int n = inst.n();
  if (n > 24) throw OracleLimit("solve_brute: n > 24");
  std::vector<char> best_sel(static_cast<std::size_t>(n), 0);
  std::int64_t best_phi = 0;
  std::vector<char> sel(static_cast<std::size_t>(n), 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::int64_t phi = 0, psi = 0;
    for (int i = 0; i < n; ++i) {
      sel[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
      if (sel[static_cast<std::size_t>(i)]) {
        phi += inst.items[static_cast<std::size_t>(i)].value;
        psi += inst.items[static_cast<std::size_t>(i)].weight;
      }
    }
    if (psi > inst.capacity) continue;
    if (phi > best_phi || (phi == best_phi && detail::tiebreak_less(best_sel, sel))) {
      best_phi = phi;
      best_sel = sel;
    }
  }
  return detail::finalize(inst, std::move(best_sel));
}

// Exact oracle exploiting that items at one level are interchangeable:
// enumerate per-level selection counts instead of individual items. Used by
// tests when n exceeds the bitmask oracle's reach.
inline std::int64_t solve_by_level_counts(const KnapsackInstance& inst) {
  struct Level {
    int level = 0;
    std::int64_t count = 0, weight = 0, value = 0;
  };
  std::vector<Level> levels;
  for (const auto& item : inst.items) {
    if (levels.empty() || levels.back().level != item.level) {
      levels.push_back({item.level, 1, item.weight, item.value});
    } else {
      levels.back().count += 1;
    }
  }
  std::int64_t best = 0;
  std::vector<std::int64_t> take(levels.size(), 0);
  // Odometer over per-level counts.
  while (true) {
    std::int64_t phi = 0, psi = 0;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      phi += take[j] * levels[j].value;
      psi += take[j] * levels[j].weight;
    }
    if (psi <= inst.capacity) best = std::max(best, phi);
    std::size_t j = 0;
    while (j < levels.size() && take[j] == levels[j].count) {
      take[j] = 0;
      ++j;
    }
    if (j == levels.size()) break;
    ++take[j];
  }
  return best;
}

// Parameters of the greedy selection: fill whole levels b..delta-1, then
// zeta groups at level delta.
struct GreedyParams {
  int delta = 0;
  std::int64_t eta = 0;
  std::int64_t zeta = 0;
};

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

// Greedy feasible solution: by the monotone value/weight ratio, taking levels
// bottom-up is optimal level-wise. delta is the smallest level where the
// remaining budget drops below one next-level group; when no level satisfies
// that (capacity covers everything), the top level is used.
inline std::pair<GreedyParams, KnapsackSolution> greedy_solution(const SystemParams& p) {
  p.validate();
  const int top = partition_level_max(p);
  const std::int64_t rest = p.lambda - p.t - p.r + p.b;
  GreedyParams gp;
  gp.delta = top;
  std::int64_t prefix = 0;  // sum of p_i * z_i over i in [b, k]
  for (int k = p.b; k <= top; ++k) {
    prefix += static_cast<std::int64_t>(binom(rest, k)) *
              static_cast<std::int64_t>(binom(p.r - p.b, p.r - k));
    if (p.antennas - prefix < static_cast<std::int64_t>(binom(p.r - p.b, p.r - k - 1))) {
      gp.delta = k;
      break;
    }
  }
  std::int64_t through_delta = 0;
  for (int i = p.b; i <= gp.delta; ++i) {
    through_delta += static_cast<std::int64_t>(binom(rest, i)) *
                     static_cast<std::int64_t>(binom(p.r - p.b, p.r - i));
  }
  gp.eta = p.antennas - through_delta;
  const std::int64_t p_delta = static_cast<std::int64_t>(binom(rest, gp.delta));
  const std::int64_t z_delta = static_cast<std::int64_t>(binom(p.r - p.b, p.r - gp.delta));
  gp.zeta = std::min(p_delta + detail::floor_div(gp.eta, z_delta), p_delta);

  const Subset anchor = Subset::full(p.t + p.r - p.b);
  const KnapsackInstance inst = build_instance(p, anchor);
  std::vector<char> selected(static_cast<std::size_t>(inst.n()), 0);
  std::int64_t at_delta = 0;
  for (int i = 0; i < inst.n(); ++i) {
    const auto& item = inst.items[static_cast<std::size_t>(i)];
    if (item.level < gp.delta) {
      selected[static_cast<std::size_t>(i)] = 1;
    } else if (item.level == gp.delta && at_delta < gp.zeta) {
      selected[static_cast<std::size_t>(i)] = 1;
      ++at_delta;
    }
  }
  KnapsackSolution sol = detail::finalize(inst, std::move(selected));
  if (sol.psi > p.antennas) throw ConsistencyError("greedy selection exceeds capacity");
  return {gp, sol};
}

// Structural optimum for b = 0 under lambda >= 2r+t and
// L >= C(lambda-t,r) - C(lambda-t-r,r): everything below level r plus
// L - C(lambda-t,r) + C(lambda-t-r,r) groups at level r. Attains the
// sum-DoF upper bound KM/N + L.
inline KnapsackSolution theorem3_solution(const SystemParams& p) {
  p.validate();
  if (p.b != 0) throw ConstraintError("b = 0");
  if (p.lambda < 2 * p.r + p.t) throw ConstraintError("lambda >= 2r + t");
  const std::int64_t full_row = static_cast<std::int64_t>(binom(p.lambda - p.t, p.r));
  const std::int64_t level_r = static_cast<std::int64_t>(binom(p.lambda - p.t - p.r, p.r));
  if (p.antennas < full_row - level_r) {
    throw ConstraintError("L >= C(lambda-t,r) - C(lambda-t-r,r)");
  }
  // Beyond L = C(lambda-t,r) every block is already selected and the stated
  // sum-DoF K M/N + L would exceed the converse bound K.
  if (p.antennas > full_row) throw ConstraintError("L <= C(lambda-t,r)");
  const Subset anchor = Subset::full(p.t + p.r);
  const KnapsackInstance inst = build_instance(p, anchor);
  const std::int64_t at_top = p.antennas - full_row + level_r;
  std::vector<char> selected(static_cast<std::size_t>(inst.n()), 0);
  std::int64_t taken = 0;
  for (int i = 0; i < inst.n(); ++i) {
    const auto& item = inst.items[static_cast<std::size_t>(i)];
    if (item.level < p.r) {
      selected[static_cast<std::size_t>(i)] = 1;
    } else if (taken < at_top) {
      selected[static_cast<std::size_t>(i)] = 1;
      ++taken;
    }
  }
  return detail::finalize(inst, std::move(selected));
}

// The family of rotated solutions generated from one base solution by the
// per-level cyclic designs; all rotations share phi and psi, and every group
// at a touched level is selected in exactly ell * q_j / p_j rotations.
struct SolutionFamily {
  struct LevelInfo {
    int level = 0;           // i_j
    std::int64_t avail = 0;  // p_j: groups at the level
    std::int64_t picked = 0; // q_j: groups the base selects
    std::int64_t ell_j = 0;  // LCM(p_j, q_j)
    std::int64_t nulls_per_col = 0;  // u at the level
  };
  KnapsackInstance instance;
  KnapsackSolution base;
  std::vector<KnapsackSolution> rotations;
  std::vector<LevelInfo> per_level;
  std::int64_t ell = 1;
  std::int64_t mu = 1;
};

// Builds the rotation family for a feasible base solution. The base must
// select a lex prefix of the groups at every touched level (the canonical
// form every solver here produces); anything else cannot be symmetrized by
// the cyclic set system and is rejected rather than silently accepted.
inline SolutionFamily rotate_family(const SystemParams& p, const Subset& anchor,
                                    const KnapsackSolution& base) {
  const KnapsackInstance inst = build_instance(p, anchor);
  if (static_cast<int>(base.selected.size()) != inst.n()) {
    throw InvalidParameter("rotate_family: base does not match the instance");
  }
  std::int64_t psi = 0;
  for (int i = 0; i < inst.n(); ++i) {
    if (base.selected[static_cast<std::size_t>(i)]) psi += inst.items[static_cast<std::size_t>(i)].weight;
  }
  if (psi > inst.capacity) throw InvalidParameter("rotate_family: base solution infeasible");

  SolutionFamily fam;
  fam.instance = inst;
  fam.base = base;

  // Group items by level; check the lex-prefix structure.
  struct LevelSpan {
    int level;
    int first;  // item index range [first, first+avail)
    std::int64_t avail;
    std::int64_t picked;
  };
  std::vector<LevelSpan> spans;
  for (int i = 0; i < inst.n(); ++i) {
    const auto& item = inst.items[static_cast<std::size_t>(i)];
    if (spans.empty() || spans.back().level != item.level) {
      spans.push_back({item.level, i, 0, 0});
    }
    ++spans.back().avail;
    if (base.selected[static_cast<std::size_t>(i)]) ++spans.back().picked;
  }
  for (const auto& span : spans) {
    for (std::int64_t j = 0; j < span.avail; ++j) {
      const bool sel = base.selected[static_cast<std::size_t>(span.first + j)];
      if (sel != (j < span.picked)) {
        throw ConsistencyError("rotate_family: base is not a per-level lex prefix");
      }
    }
  }

  std::vector<std::uint64_t> block_counts;  // ell_j / q_j per touched level
  std::vector<std::uint64_t> null_counts;
  std::vector<RegularDesign> designs;
  std::vector<const LevelSpan*> touched;
  for (const auto& span : spans) {
    if (span.picked == 0) continue;
    const RegularDesign d = cyclic_regular_design(static_cast<int>(span.avail),
                                                  static_cast<int>(span.picked));
    SolutionFamily::LevelInfo info;
    info.level = span.level;
    info.avail = span.avail;
    info.picked = span.picked;
    info.ell_j = static_cast<std::int64_t>(lcm2(static_cast<std::uint64_t>(span.avail),
                                                static_cast<std::uint64_t>(span.picked)));
    info.nulls_per_col = static_cast<std::int64_t>(binom(p.t + span.level - p.b, p.t));
    fam.per_level.push_back(info);
    block_counts.push_back(static_cast<std::uint64_t>(info.ell_j / info.picked));
    null_counts.push_back(static_cast<std::uint64_t>(info.nulls_per_col));
    designs.push_back(d);
    touched.push_back(&span);
  }
  fam.ell = block_counts.empty() ? 1 : static_cast<std::int64_t>(lcm_list(block_counts));
  fam.mu = null_counts.empty() ? 1 : static_cast<std::int64_t>(lcm_list(null_counts));

  for (std::int64_t h = 1; h <= fam.ell; ++h) {
    std::vector<char> selected(static_cast<std::size_t>(inst.n()), 0);
    for (std::size_t j = 0; j < designs.size(); ++j) {
      const std::int64_t idx = (h - 1) % static_cast<std::int64_t>(block_counts[j]);
      const Subset block = designs[j].blocks[static_cast<std::size_t>(idx)];
      for (int point : block.members()) {
        selected[static_cast<std::size_t>(touched[j]->first + point - 1)] = 1;
      }
    }
    KnapsackSolution rot = detail::finalize(inst, std::move(selected));
    if (rot.phi != base.phi || rot.psi != base.psi) {
      throw ConsistencyError("rotate_family: rotation changed phi or psi");
    }
    fam.rotations.push_back(std::move(rot));
  }
  if (!(fam.rotations.front().selected == base.selected)) {
    throw ConsistencyError("rotate_family: first rotation is not the base");
  }
  return fam;
}

inline nlohmann::json knapsack_to_json(const SystemParams& p, const KnapsackInstance& inst,
                                       const KnapsackSolution& sol) {
  nlohmann::json j;
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : inst.items) {
    items.push_back({{"group", item.group.str(p.lambda)},
                     {"level", item.level},
                     {"z", item.weight},
                     {"v", item.value}});
  }
  j["items"] = std::move(items);
  j["L"] = inst.capacity;
  j["n"] = inst.n();
  nlohmann::json x = nlohmann::json::object();
  for (int i = 0; i < inst.n(); ++i) {
    x[inst.items[static_cast<std::size_t>(i)].group.str(p.lambda)] =
        static_cast<int>(sol.selected[static_cast<std::size_t>(i)]);
  }
  j["x"] = std::move(x);
  j["phi"] = sol.phi;
  j["psi"] = sol.psi;
  return j;
}

}  // namespace mapda
