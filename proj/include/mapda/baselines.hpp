#pragma once

#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mapda/array.hpp"
#include "mapda/assembly.hpp"
#include "mapda/common.hpp"
#include "mapda/subsets.hpp"

#include "json.hpp"

namespace mapda {

enum class BaselineScheme { kYwcc, kNpr, kWcc, kPr };

// Parameters of the prior MAPDA constructions used for comparison. YWCC, NPR
// and WCC are dedicated-MISO schemes over K users with memory ratio t/K; PR
// is the combinatorial multi-access scheme over C(lambda, r) users.
struct BaselineSpec {
  BaselineScheme scheme = BaselineScheme::kYwcc;
  std::int64_t num_users = 0;  // K (dedicated schemes)
  std::int64_t t = 0;          // K M/N for dedicated schemes, node ratio for PR
  std::int64_t antennas = 0;   // L
  std::int64_t m = 1;          // YWCC grouping parameter
  std::int64_t lambda = 0;     // PR: cache-node count
  std::int64_t r = 0;          // PR: access degree

  static BaselineSpec ywcc(std::int64_t k, std::int64_t t, std::int64_t l, std::int64_t m) {
    BaselineSpec s;
    s.scheme = BaselineScheme::kYwcc;
    s.num_users = k;
    s.t = t;
    s.antennas = l;
    s.m = m;
    return s;
  }
  static BaselineSpec npr(std::int64_t k, std::int64_t t, std::int64_t l) {
    BaselineSpec s;
    s.scheme = BaselineScheme::kNpr;
    s.num_users = k;
    s.t = t;
    s.antennas = l;
    return s;
  }
  static BaselineSpec wcc(std::int64_t k, std::int64_t t, std::int64_t l) {
    BaselineSpec s;
    s.scheme = BaselineScheme::kWcc;
    s.num_users = k;
    s.t = t;
    s.antennas = l;
    return s;
  }
  static BaselineSpec pr(std::int64_t lambda, std::int64_t r, std::int64_t t, std::int64_t l) {
    BaselineSpec s;
    s.scheme = BaselineScheme::kPr;
    s.lambda = lambda;
    s.r = r;
    s.t = t;
    s.antennas = l;
    return s;
  }
};

// Closed-form (F, Z, S, g) of the baseline scheme, arbitrary precision.
inline SchemeMetrics baseline_metrics(const BaselineSpec& spec) {
  SchemeMetrics out;
  switch (spec.scheme) {
    case BaselineScheme::kYwcc: {
      const auto [k, t, l, m] = std::tuple(spec.num_users, spec.t, spec.antennas, spec.m);
      if (k < 1 || t < 1 || l < 1 || m < 1) throw ConstraintError("K, t, L, m >= 1");
      if (t + l > k) throw ConstraintError("t + L <= K");
      if (k % m != 0) throw ConstraintError("m | K");
      if (t % m != 0) throw ConstraintError("m | t");
      out.num_users = k;
      out.gain = t + l;
      out.memory_ratio = Rat(t, k);
      if (m == l) {
        out.rows = binom_big(k / l, t / l);
        out.stars = binom_big(k / l - 1, t / l - 1);
        out.symbols = binom_big(k / l, t / l + 1);
      } else {
        const std::int64_t d = std::gcd(m, std::abs(l - m));
        out.rows = BigInt(t + l) / d * binom_big(k / m, t / m);
        out.stars = BigInt(t + l) / d * binom_big(k / m - 1, t / m - 1);
        out.symbols = BigInt(t + m) / d * binom_big(k / m, t / m + 1);
      }
      break;
    }
    case BaselineScheme::kNpr: {
      const auto [k, t, l] = std::tuple(spec.num_users, spec.t, spec.antennas);
      if (k < 1 || t < 1 || l < 1) throw ConstraintError("K, t, L >= 1");
      if (t + l > k) throw ConstraintError("t + L <= K");
      const std::int64_t beta = std::gcd(std::gcd(k, t), l);
      out.num_users = k;
      out.gain = t + l;
      out.memory_ratio = Rat(t, k);
      out.rows = BigInt((t + l) / beta) * binom_big(k / beta, (t + l) / beta);
      out.stars = BigInt(t / beta) * binom_big(k / beta, (t + l) / beta - 1);
      out.symbols = BigInt((k - t) / beta) * binom_big(k / beta, (t + l) / beta);
      break;
    }
    case BaselineScheme::kWcc: {
      const auto [k, t, l] = std::tuple(spec.num_users, spec.t, spec.antennas);
      if (k < 1 || t < 1 || l < 1) throw ConstraintError("K, t, L >= 1");
      if (t >= k) throw ConstraintError("t < K");
      out.num_users = k;
      out.gain = 2 * l;
      out.memory_ratio = Rat(t, k);
      if ((k - t) % 2 != 0) {
        out.rows = BigInt(2) * l * k;
        out.stars = BigInt(2) * l * t;
        out.symbols = BigInt(k) * (k - t);
      } else if (k % l != 0) {
        out.rows = BigInt(l) * k;
        out.stars = BigInt(l) * t;
        out.symbols = BigInt(k) * (k - t) / 2;
      } else {
        out.rows = k;
        out.stars = t;
        out.symbols = BigInt(k) * (k - t) / (2 * l);
      }
      break;
    }
    case BaselineScheme::kPr: {
      const auto [lambda, r, t, l] = std::tuple(spec.lambda, spec.r, spec.t, spec.antennas);
      if (lambda < 1 || r < 1 || t < 1 || l < 1) throw ConstraintError("lambda, r, t, L >= 1");
      if (l != r + 1) throw ConstraintError("L = r + 1");
      if (t + r >= lambda) throw ConstraintError("t + r < lambda");
      out.num_users = binom_big(lambda, r);
      out.gain = binom_big(t + l, r);
      out.rows = BigInt(lambda - t - r) * binom_big(lambda, t);
      out.stars = BigInt(lambda - t - r) * (binom_big(lambda, t) - binom_big(lambda - r, t));
      out.symbols = BigInt(t + 1) * binom_big(lambda, t + r + 1);
      out.memory_ratio = Rat(out.stars, out.rows);
      break;
    }
  }
  out.sum_dof = Rat(out.gain);
  return out;
}

inline std::string baseline_name(BaselineScheme s) {
  switch (s) {
    case BaselineScheme::kYwcc: return "ywcc";
    case BaselineScheme::kNpr: return "npr";
    case BaselineScheme::kWcc: return "wcc";
    case BaselineScheme::kPr: return "pr";
  }
  return "?";
}

// One row of the comparison table; dedicated-MISO baselines quote M/N = t/K,
// the combinatorial schemes quote the multi-access retrieval ratio, and the
// convention column says which.
struct ComparisonRow {
  std::string scheme;
  std::string parameters;
  BigInt num_users = 0;
  Rat memory_ratio = 0;
  std::string ratio_convention;  // "dedicated" or "multi-access"
  std::int64_t antennas = 0;
  BigInt rows = 0;     // F
  BigInt sum_dof = 0;  // g
};

inline ComparisonRow comparison_row(const BaselineSpec& spec) {
  const SchemeMetrics m = baseline_metrics(spec);
  ComparisonRow row;
  row.scheme = baseline_name(spec.scheme);
  row.num_users = m.num_users;
  row.memory_ratio = m.memory_ratio;
  row.ratio_convention = spec.scheme == BaselineScheme::kPr ? "multi-access" : "dedicated";
  row.antennas = spec.antennas;
  row.rows = m.rows;
  row.sum_dof = m.gain;
  switch (spec.scheme) {
    case BaselineScheme::kYwcc:
      row.parameters = "m=" + std::to_string(spec.m);
      break;
    case BaselineScheme::kNpr:
      row.parameters = "beta=" + std::to_string(std::gcd(std::gcd(spec.num_users, spec.t), spec.antennas));
      break;
    case BaselineScheme::kWcc:
      row.parameters = "t=" + std::to_string(spec.t);
      break;
    case BaselineScheme::kPr:
      row.parameters = "lambda=" + std::to_string(spec.lambda) + ",r=" + std::to_string(spec.r);
      break;
  }
  return row;
}

inline ComparisonRow comparison_row(const SystemParams& p, Predictor which,
                                    std::optional<int> lambda_prime = std::nullopt) {
  const SchemeMetrics m = predict_metrics(p, which, lambda_prime);
  ComparisonRow row;
  switch (which) {
    case Predictor::kThm2:
    case Predictor::kCo1: row.scheme = "co1"; break;
    case Predictor::kThm3:
    case Predictor::kCo2: row.scheme = "co2"; break;
    case Predictor::kThm4:
    case Predictor::kCo3: row.scheme = "co3"; break;
    case Predictor::kThm5:
    case Predictor::kCo4: row.scheme = "co4"; break;
  }
  row.parameters = "lambda=" + std::to_string(p.lambda) + ",r=" + std::to_string(p.r) + ",t=" +
                   std::to_string(p.t) + ",b=" + std::to_string(p.b) +
                   (lambda_prime ? ",lambda'=" + std::to_string(*lambda_prime) : "");
  row.num_users = m.num_users;
  row.memory_ratio = m.memory_ratio;
  row.ratio_convention = "multi-access";
  row.antennas = p.antennas;
  row.rows = m.rows;
  row.sum_dof = m.gain;
  return row;
}

inline nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    arr.push_back({{"scheme", row.scheme},
                   {"parameters", row.parameters},
                   {"K", row.num_users.str()},
                   {"M_N", rat_str(row.memory_ratio)},
                   {"ratio_convention", row.ratio_convention},
                   {"L", row.antennas},
                   {"F", row.rows.str()},
                   {"sum_dof", row.sum_dof.str()}});
  }
  return arr;
}

inline std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "scheme,parameters,K,M_N,ratio_convention,L,F,sum_dof\n";
  for (const auto& row : rows) {
    out += row.scheme + ",\"" + row.parameters + "\"," + row.num_users.str() + "," +
           rat_str(row.memory_ratio) + "," + row.ratio_convention + "," +
           std::to_string(row.antennas) + "," + row.rows.str() + "," + row.sum_dof.str() + "\n";
  }
  return out;
}

// Memory-grid sweep data behind the comparison figures: for each requested
// scheme, every placement ratio t where its constraints hold.
inline std::vector<ComparisonRow> sweep_series(const std::vector<std::string>& schemes, int lambda,
                                               int r, int antennas, std::optional<int> b_flag) {
  std::vector<ComparisonRow> rows;
  const auto big_users = binom_big(lambda, r);
  for (const std::string& scheme : schemes) {
    for (int t = 1; t + r <= lambda; ++t) {
      SystemParams p{lambda, r, t, antennas, 0, 0};
      try {
        if (scheme == "co1") {
          // Best b per the max-gain rule, ties to smaller F then smaller b.
          std::optional<ComparisonRow> best;
          for (int b = 0; b < r; ++b) {
            p.b = b;
            ComparisonRow row = comparison_row(p, Predictor::kCo1);
            if (!best || row.sum_dof > best->sum_dof ||
                (row.sum_dof == best->sum_dof && row.rows < best->rows)) {
              best = row;
            }
          }
          if (best) rows.push_back(*best);
        } else if (scheme == "co2") {
          p.b = 0;
          rows.push_back(comparison_row(p, Predictor::kCo2));
        } else if (scheme == "co3") {
          p.b = b_flag.value_or(r - 1);
          rows.push_back(comparison_row(p, Predictor::kCo3));
        } else if (scheme == "co4") {
          for (int lp = p.t + p.r; lp <= lambda; ++lp) {
            if (static_cast<std::int64_t>(binom(lp - p.t, p.r)) <= antennas) {
              p.b = 0;
              rows.push_back(comparison_row(p, Predictor::kCo4, lp));
            }
          }
        } else if (scheme == "ywcc" || scheme == "npr" || scheme == "wcc" || scheme == "pr") {
          // Dedicated baselines live on the multi-access memory grid: K users,
          // t_users = K M/N must be integral to evaluate the row.
          if (big_users > std::numeric_limits<std::int64_t>::max()) continue;
          const auto k_users = static_cast<std::int64_t>(big_users);
          const Rat ratio = SystemParams{lambda, r, t, antennas, 0, 0}.retrieval_ratio();
          const Rat t_users_rat = ratio * k_users;
          if (boost::multiprecision::denominator(t_users_rat) != 1) continue;
          const auto t_users = static_cast<std::int64_t>(boost::multiprecision::numerator(t_users_rat));
          if (scheme == "wcc") {
            rows.push_back(comparison_row(BaselineSpec::wcc(k_users, t_users, antennas)));
          } else if (scheme == "npr") {
            rows.push_back(comparison_row(BaselineSpec::npr(k_users, t_users, antennas)));
          } else if (scheme == "ywcc") {
            rows.push_back(comparison_row(BaselineSpec::ywcc(k_users, t_users, antennas, 1)));
          } else {
            rows.push_back(comparison_row(BaselineSpec::pr(lambda, r, t, antennas)));
          }
        } else {
          throw InvalidParameter("sweep: unknown scheme " + scheme);
        }
      } catch (const ConstraintError&) {
        // Constraint does not hold at this memory point; not part of the series.
      }
    }
  }
  return rows;
}

}  // namespace mapda
