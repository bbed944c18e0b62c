#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapda/common.hpp"
#include "mapda/subsets.hpp"

#include "json.hpp"

namespace mapda {

inline constexpr std::int32_t kStar = -1;

// An F x K user-delivery array over {*, 1..S}. Valid instances satisfy the
// four conditions checked by verify(): uniform per-column star count (C1),
// every symbol used (C2), symbols column-unique (C3), and at most L integer
// entries per row of every per-symbol subarray (C4).
struct Mapda {
  int antennas = 0;  // L
  int rows = 0;      // F
  int cols = 0;      // K
  int symbols = 0;   // S
  std::vector<std::int32_t> entries;  // row-major; kStar or s in [1, S]
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  std::int32_t at(int f, int k) const {
    return entries[static_cast<std::size_t>(f) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(k)];
  }
  std::int32_t& at(int f, int k) {
    return entries[static_cast<std::size_t>(f) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(k)];
  }

  void init(int f, int k) {
    rows = f;
    cols = k;
    entries.assign(static_cast<std::size_t>(f) * static_cast<std::size_t>(k), kStar);
  }

  void default_labels() {
    row_labels.clear();
    col_labels.clear();
    for (int f = 1; f <= rows; ++f) row_labels.push_back(std::to_string(f));
    for (int k = 1; k <= cols; ++k) col_labels.push_back(std::to_string(k));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["L"] = antennas;
    j["K"] = cols;
    j["F"] = rows;
    j["Z"] = rows > 0 ? star_count_in_col(0) : 0;
    j["S"] = symbols;
    j["rows"] = row_labels;
    j["cols"] = col_labels;
    nlohmann::json grid = nlohmann::json::array();
    for (int f = 0; f < rows; ++f) {
      nlohmann::json row = nlohmann::json::array();
      for (int k = 0; k < cols; ++k) {
        const std::int32_t e = at(f, k);
        if (e == kStar) {
          row.push_back("*");
        } else {
          row.push_back(e);
        }
      }
      grid.push_back(std::move(row));
    }
    j["entries"] = std::move(grid);
    return j;
  }

  static Mapda from_json(const nlohmann::json& j) {
    Mapda m;
    m.antennas = j.at("L").get<int>();
    m.symbols = j.at("S").get<int>();
    const auto& grid = j.at("entries");
    const int f_count = static_cast<int>(grid.size());
    const int k_count = f_count > 0 ? static_cast<int>(grid.at(0).size()) : j.at("K").get<int>();
    m.init(f_count, k_count);
    for (int f = 0; f < f_count; ++f) {
      for (int k = 0; k < k_count; ++k) {
        const auto& cell = grid.at(f).at(k);
        m.at(f, k) = cell.is_string() ? kStar : cell.get<std::int32_t>();
      }
    }
    if (j.contains("rows")) {
      m.row_labels = j.at("rows").get<std::vector<std::string>>();
      m.col_labels = j.at("cols").get<std::vector<std::string>>();
    } else {
      m.default_labels();
    }
    return m;
  }

  int star_count_in_col(int k) const {
    int z = 0;
    for (int f = 0; f < rows; ++f) z += at(f, k) == kStar;
    return z;
  }
};

struct VerificationReport {
  bool c1 = false, c2 = false, c3 = false, c4 = false;
  int z = 0;                          // modal per-column star count
  std::vector<int> c1_deviating_cols; // 0-based columns whose count differs
  std::vector<int> c2_missing;        // unused symbols
  std::vector<std::pair<int, int>> c3_violations;       // (s, col)
  std::vector<std::array<int, 3>> c4_violations;        // (s, row, count)
  bool valid = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["valid"] = valid;
    j["c1"] = {{"pass", c1}, {"Z", z}, {"deviating_cols", c1_deviating_cols}};
    j["c2"] = {{"pass", c2}, {"missing", c2_missing}};
    nlohmann::json c3v = nlohmann::json::array();
    for (auto [s, col] : c3_violations) c3v.push_back({{"s", s}, {"col", col}});
    j["c3"] = {{"pass", c3}, {"violations", std::move(c3v)}};
    nlohmann::json c4v = nlohmann::json::array();
    for (auto [s, row, count] : c4_violations)
      c4v.push_back({{"s", s}, {"row", row}, {"count", count}});
    j["c4"] = {{"pass", c4}, {"violations", std::move(c4v)}};
    return j;
  }
};

// Full validity check against C1-C4. Failures are report content, never
// exceptions.
inline VerificationReport verify(const Mapda& m) {
  VerificationReport rep;
  const int s_count = m.symbols;

  // C1: uniform star count per column; report the modal count and deviations.
  std::vector<int> col_stars(static_cast<std::size_t>(m.cols), 0);
  for (int k = 0; k < m.cols; ++k) col_stars[static_cast<std::size_t>(k)] = m.star_count_in_col(k);
  std::map<int, int> tally;
  for (int z : col_stars) ++tally[z];
  int modal = 0, modal_count = -1;
  for (auto [z, count] : tally) {
    if (count > modal_count) {
      modal = z;
      modal_count = count;
    }
  }
  rep.z = modal;
  for (int k = 0; k < m.cols; ++k) {
    if (col_stars[static_cast<std::size_t>(k)] != modal) rep.c1_deviating_cols.push_back(k);
  }
  rep.c1 = rep.c1_deviating_cols.empty();

  // One pass collecting per-symbol occurrences; feeds C2, C3, C4.
  std::vector<std::int64_t> occurrences(static_cast<std::size_t>(s_count) + 1, 0);
  std::vector<std::vector<std::pair<int, int>>> cells(static_cast<std::size_t>(s_count) + 1);
  bool in_range = true;
  for (int f = 0; f < m.rows; ++f) {
    for (int k = 0; k < m.cols; ++k) {
      const std::int32_t e = m.at(f, k);
      if (e == kStar) continue;
      if (e < 1 || e > s_count) {
        in_range = false;
        continue;
      }
      ++occurrences[static_cast<std::size_t>(e)];
      cells[static_cast<std::size_t>(e)].push_back({f, k});
    }
  }

  for (int s = 1; s <= s_count; ++s) {
    if (occurrences[static_cast<std::size_t>(s)] == 0) rep.c2_missing.push_back(s);
  }
  rep.c2 = rep.c2_missing.empty() && in_range && s_count > 0;

  // C3: a symbol may not repeat within a column.
  rep.c3 = true;
  for (int s = 1; s <= s_count; ++s) {
    std::vector<int> cols_seen;
    for (auto [f, k] : cells[static_cast<std::size_t>(s)]) cols_seen.push_back(k);
    std::sort(cols_seen.begin(), cols_seen.end());
    for (std::size_t i = 1; i < cols_seen.size(); ++i) {
      if (cols_seen[i] == cols_seen[i - 1]) {
        rep.c3_violations.push_back({s, cols_seen[i]});
        rep.c3 = false;
      }
    }
  }

  // C4: in the subarray of rows/cols containing s, every row holds at most L
  // integer entries. Row masks over columns make the per-row count a
  // popcount against the symbol's column mask.
  const int words = (m.cols + 63) / 64;
  std::vector<std::uint64_t> row_int_mask(static_cast<std::size_t>(m.rows) *
                                          static_cast<std::size_t>(words));
  for (int f = 0; f < m.rows; ++f) {
    for (int k = 0; k < m.cols; ++k) {
      if (m.at(f, k) != kStar) {
        row_int_mask[static_cast<std::size_t>(f) * static_cast<std::size_t>(words) +
                     static_cast<std::size_t>(k >> 6)] |= std::uint64_t{1} << (k & 63);
      }
    }
  }
  rep.c4 = true;
  std::vector<std::uint64_t> col_mask(static_cast<std::size_t>(words));
  for (int s = 1; s <= s_count; ++s) {
    std::fill(col_mask.begin(), col_mask.end(), 0);
    std::vector<int> rows_of_s;
    for (auto [f, k] : cells[static_cast<std::size_t>(s)]) {
      col_mask[static_cast<std::size_t>(k >> 6)] |= std::uint64_t{1} << (k & 63);
      rows_of_s.push_back(f);
    }
    std::sort(rows_of_s.begin(), rows_of_s.end());
    rows_of_s.erase(std::unique(rows_of_s.begin(), rows_of_s.end()), rows_of_s.end());
    for (int f : rows_of_s) {
      int count = 0;
      for (int w = 0; w < words; ++w) {
        count += std::popcount(row_int_mask[static_cast<std::size_t>(f) *
                                            static_cast<std::size_t>(words) +
                                            static_cast<std::size_t>(w)] &
                               col_mask[static_cast<std::size_t>(w)]);
      }
      if (count > m.antennas) {
        rep.c4_violations.push_back({s, f, count});
        rep.c4 = false;
      }
    }
  }

  rep.valid = rep.c1 && rep.c2 && rep.c3 && rep.c4;
  return rep;
}

// The subarray P^(s): rows and columns of m that contain s.
inline Mapda symbol_subarray(const Mapda& m, int s) {
  if (s < 1 || s > m.symbols) throw InvalidParameter("symbol_subarray: unknown symbol");
  std::vector<int> rows, cols;
  for (int f = 0; f < m.rows; ++f) {
    for (int k = 0; k < m.cols; ++k) {
      if (m.at(f, k) == s) {
        rows.push_back(f);
        cols.push_back(k);
      }
    }
  }
  if (rows.empty()) throw InvalidParameter("symbol_subarray: unknown symbol");
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  Mapda frag;
  frag.antennas = m.antennas;
  frag.symbols = m.symbols;
  frag.init(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    frag.row_labels.push_back(m.row_labels.empty() ? std::to_string(rows[i] + 1)
                                                   : m.row_labels[static_cast<std::size_t>(rows[i])]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      frag.at(static_cast<int>(i), static_cast<int>(j)) = m.at(rows[i], cols[j]);
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    frag.col_labels.push_back(m.col_labels.empty() ? std::to_string(cols[j] + 1)
                                                   : m.col_labels[static_cast<std::size_t>(cols[j])]);
  }
  return frag;
}

struct SchemeMetrics {
  BigInt num_users = 0;  // K
  BigInt rows = 0;       // F
  BigInt stars = 0;      // Z
  BigInt symbols = 0;    // S
  BigInt gain = 0;       // g when the array is regular, else 0
  std::vector<std::int64_t> per_symbol;  // r_s
  Rat sum_dof = 0;
  Rat memory_ratio = 0;

  nlohmann::json to_json() const {
    auto put = [](const BigInt& v) -> nlohmann::json {
      if (v <= std::numeric_limits<std::int64_t>::max()) {
        return static_cast<std::int64_t>(v);
      }
      return v.str();
    };
    nlohmann::json j;
    j["K"] = put(num_users);
    j["F"] = put(rows);
    j["Z"] = put(stars);
    j["S"] = put(symbols);
    if (gain != 0) j["g"] = put(gain);
    j["sum_dof"] = rat_str(sum_dof);
    j["memory_ratio"] = rat_str(memory_ratio);
    return j;
  }
};

// Metrics of a concrete array: Z from the uniform column count, per-symbol
// occurrence tallies, exact rational sum-DoF.
inline SchemeMetrics metrics(const Mapda& m) {
  const VerificationReport rep = verify(m);
  if (!rep.c1) throw InvalidArray("metrics: C1 violated (non-uniform star counts)");
  if (!rep.c2) throw InvalidArray("metrics: C2 violated (unused symbol)");
  if (!rep.c3) throw InvalidArray("metrics: C3 violated (repeated symbol in a column)");
  SchemeMetrics out;
  out.num_users = m.cols;
  out.rows = m.rows;
  out.stars = rep.z;
  out.symbols = m.symbols;
  out.per_symbol.assign(static_cast<std::size_t>(m.symbols), 0);
  for (int f = 0; f < m.rows; ++f) {
    for (int k = 0; k < m.cols; ++k) {
      const std::int32_t e = m.at(f, k);
      if (e != kStar) ++out.per_symbol[static_cast<std::size_t>(e - 1)];
    }
  }
  std::int64_t total = 0;
  bool regular = true;
  for (std::int64_t r_s : out.per_symbol) {
    total += r_s;
    regular = regular && r_s == out.per_symbol.front();
  }
  out.sum_dof = Rat(total, m.symbols);
  if (regular) out.gain = out.per_symbol.front();
  out.memory_ratio = Rat(rep.z, m.rows);
  return out;
}

// Converse bound min{K Z/F + L, K} on the sum-DoF of any scheme the array
// can realize.
inline Rat dof_upper_bound(const Mapda& m) {
  const int z = m.rows > 0 ? m.star_count_in_col(0) : 0;
  const Rat cached = Rat(static_cast<std::int64_t>(m.cols) * z, m.rows) + m.antennas;
  return std::min(cached, Rat(m.cols));
}

}  // namespace mapda
