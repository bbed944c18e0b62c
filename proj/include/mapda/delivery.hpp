#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mapda/array.hpp"
#include "mapda/common.hpp"

#include "json.hpp"

namespace mapda {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t& state) {
  state = splitmix64(state);
  return static_cast<double>(state >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Box-Muller on an explicit splitmix stream. std::normal_distribution's
// sequence is implementation-defined, which would break the byte-identical
// output contract of the CLI.
inline double standard_normal(std::uint64_t& state) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline int env_thread_cap() {
  if (const char* env = std::getenv("MAPDA_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

// Work-stealing loop over [0, count); the first exception wins and is
// rethrown on the calling thread. Nested calls run sequentially.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int threads = std::min(env_thread_cap(), count);
  if (threads <= 1 || in_parallel_region()) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      in_parallel_region() = true;
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Gaussian elimination with partial pivoting; solves M x = rhs in place and
// returns the condition estimate ||M||_inf * ||x||_inf. That product scales
// the achievable residual (leak) of the solve, which is what corrupts the
// zero-forcing cancellation downstream.
inline double solve_in_place(std::vector<double>& m, std::vector<double>& rhs, int n) {
  double norm_m = 0.0;
  for (int row = 0; row < n; ++row) {
    double acc = 0.0;
    for (int col = 0; col < n; ++col) acc += std::abs(m[static_cast<std::size_t>(row * n + col)]);
    norm_m = std::max(norm_m, acc);
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::abs(m[static_cast<std::size_t>(row * n + col)]) >
          std::abs(m[static_cast<std::size_t>(pivot * n + col)])) {
        pivot = row;
      }
    }
    if (pivot != col) {
      for (int c = col; c < n; ++c) {
        std::swap(m[static_cast<std::size_t>(col * n + c)], m[static_cast<std::size_t>(pivot * n + c)]);
      }
      std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
    }
    const double p = m[static_cast<std::size_t>(col * n + col)];
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    for (int row = col + 1; row < n; ++row) {
      const double f = m[static_cast<std::size_t>(row * n + col)] / p;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) {
        m[static_cast<std::size_t>(row * n + c)] -= f * m[static_cast<std::size_t>(col * n + c)];
      }
      rhs[static_cast<std::size_t>(row)] -= f * rhs[static_cast<std::size_t>(col)];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double acc = rhs[static_cast<std::size_t>(col)];
    for (int c = col + 1; c < n; ++c) {
      acc -= m[static_cast<std::size_t>(col * n + c)] * rhs[static_cast<std::size_t>(c)];
    }
    rhs[static_cast<std::size_t>(col)] = acc / m[static_cast<std::size_t>(col * n + col)];
  }
  double norm_x = 0.0;
  for (int col = 0; col < n; ++col) norm_x = std::max(norm_x, std::abs(rhs[static_cast<std::size_t>(col)]));
  return norm_m * norm_x;
}

// Deterministic unit-scale stand-in for the coded packet (file d, row f).
inline double packet_payload(int file, int row) {
  const std::uint64_t h = splitmix64((static_cast<std::uint64_t>(file) << 32) ^
                                     static_cast<std::uint64_t>(row) ^ 0x517cc1b727220a95ULL);
  return 1.0 + static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::uint64_t block_seed(std::uint64_t seed, int symbol, int attempt) {
  return splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(symbol) * 0x100000001b3ULL +
                                       static_cast<std::uint64_t>(attempt));
}

}  // namespace detail

// Real-valued fading gains for the users active in one block, rows indexed
// by served order.
struct Channel {
  int users = 0;
  int antennas = 0;
  std::uint64_t seed = 0;
  std::vector<double> gains;  // users x antennas, row-major

  double at(int k, int l) const {
    return gains[static_cast<std::size_t>(k) * static_cast<std::size_t>(antennas) +
                 static_cast<std::size_t>(l)];
  }
};

inline Channel gen_channel(int k_active, int antennas, std::uint64_t seed) {
  if (k_active < 1 || antennas < 1) throw InvalidParameter("gen_channel: need positive sizes");
  Channel ch;
  ch.users = k_active;
  ch.antennas = antennas;
  ch.seed = seed;
  ch.gains.resize(static_cast<std::size_t>(k_active) * static_cast<std::size_t>(antennas));
  std::uint64_t state = detail::splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  for (double& g : ch.gains) g = detail::standard_normal(state);
  return ch;
}

// Zero-forcing plan for one block: per served user, a beamformer with unit
// gain at the user and nulls at every served user holding an integer at the
// packet row (those cannot cancel it from cache).
struct BlockPlan {
  int symbol = 0;
  struct Served {
    int user = 0;  // 0-based column
    int file = 0;  // requested file, 1-based
    int row = 0;   // 0-based packet row f_k
  };
  std::vector<Served> served;
  std::vector<double> precoders;  // antennas x served, column per served user
  double condition = 0.0;         // worst condition proxy across the solves
};

namespace detail {

inline BlockPlan plan_block(const Mapda& q, int s, const std::vector<BlockPlan::Served>& served,
                            const Channel& ch, double cond_threshold) {
  const int r_s = static_cast<int>(served.size());
  if (ch.users != r_s || ch.antennas != q.antennas) {
    throw InvalidParameter("build_precoders: channel shape must be r_s x L");
  }
  const int L = q.antennas;
  BlockPlan plan;
  plan.symbol = s;
  plan.served = served;
  plan.precoders.assign(static_cast<std::size_t>(L) * static_cast<std::size_t>(r_s), 0.0);

  std::vector<double> mat, rhs, gram, gram_rhs, v(static_cast<std::size_t>(L));
  std::vector<int> zero_rows;
  for (int j = 0; j < r_s; ++j) {
    zero_rows.clear();
    for (int j2 = 0; j2 < r_s; ++j2) {
      if (j2 == j) continue;
      if (q.at(served[static_cast<std::size_t>(j)].row, served[static_cast<std::size_t>(j2)].user) != kStar) {
        zero_rows.push_back(j2);
      }
    }
    const int c = 1 + static_cast<int>(zero_rows.size());
    if (c > L) throw ConsistencyError("build_precoders: more constraints than antennas (C4?)");
    mat.assign(static_cast<std::size_t>(c) * static_cast<std::size_t>(L), 0.0);
    for (int l = 0; l < L; ++l) mat[static_cast<std::size_t>(l)] = ch.at(j, l);
    for (int i = 0; i + 1 < c; ++i) {
      for (int l = 0; l < L; ++l) {
        mat[static_cast<std::size_t>((i + 1) * L + l)] = ch.at(zero_rows[static_cast<std::size_t>(i)], l);
      }
    }
    double cond;
    if (c == L) {
      rhs.assign(static_cast<std::size_t>(c), 0.0);
      rhs[0] = 1.0;
      cond = solve_in_place(mat, rhs, c);
      v.assign(rhs.begin(), rhs.end());
    } else {
      // Least-norm solution v = A^T y with (A A^T) y = e1; any solution of
      // the underdetermined system works, this one is canonical.
      gram.assign(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0.0);
      for (int a = 0; a < c; ++a) {
        for (int b = 0; b < c; ++b) {
          double acc = 0.0;
          for (int l = 0; l < L; ++l) {
            acc += mat[static_cast<std::size_t>(a * L + l)] * mat[static_cast<std::size_t>(b * L + l)];
          }
          gram[static_cast<std::size_t>(a * c + b)] = acc;
        }
      }
      gram_rhs.assign(static_cast<std::size_t>(c), 0.0);
      gram_rhs[0] = 1.0;
      cond = solve_in_place(gram, gram_rhs, c);
      for (int l = 0; l < L; ++l) {
        double acc = 0.0;
        for (int a = 0; a < c; ++a) acc += mat[static_cast<std::size_t>(a * L + l)] * gram_rhs[static_cast<std::size_t>(a)];
        v[static_cast<std::size_t>(l)] = acc;
      }
    }
    plan.condition = std::max(plan.condition, cond);
    if (!(cond < cond_threshold)) {
      throw DegeneracyError("build_precoders: ill-conditioned constraint system");
    }
    for (int l = 0; l < L; ++l) {
      plan.precoders[static_cast<std::size_t>(l * r_s + j)] = v[static_cast<std::size_t>(l)];
    }
  }
  return plan;
}

}  // namespace detail

inline BlockPlan build_precoders(const Mapda& q, int s, const std::vector<int>& demand,
                                 const Channel& ch, double cond_threshold = 1e8) {
  if (s < 1 || s > q.symbols) throw InvalidParameter("build_precoders: unknown symbol");
  if (static_cast<int>(demand.size()) != q.cols) {
    throw InvalidParameter("build_precoders: demand length must be K");
  }
  std::vector<BlockPlan::Served> served;
  for (int k = 0; k < q.cols; ++k) {
    for (int f = 0; f < q.rows; ++f) {
      if (q.at(f, k) == s) served.push_back({k, demand[static_cast<std::size_t>(k)], f});
    }
  }
  return detail::plan_block(q, s, served, ch, cond_threshold);
}

struct SimulateOptions {
  double tolerance = 1e-8;
  double cond_threshold = 1e8;
  int resample_budget = 3;
  std::optional<Channel> fixed_channel;  // reused for every block when set
};

struct DeliveryReport {
  struct BlockOutcome {
    int symbol = 0;
    int served = 0;
    double residual = 0.0;
    int resamples = 0;
    double condition = 0.0;
  };
  std::vector<BlockOutcome> blocks;
  double max_residual = 0.0;
  double max_condition = 0.0;
  int resamples = 0;
  bool all_decoded = false;
  Rat measured_dof = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["all_decoded"] = all_decoded;
    j["max_residual"] = max_residual;
    j["measured_dof"] = rat_str(measured_dof);
    j["blocks"] = blocks.size();
    j["resamples"] = resamples;
    return j;
  }
};

// Delivery simulator for one array: the per-symbol served lists are scanned
// once, so repeated seeded trials only pay for the numeric work.
class DeliverySim {
 public:
  explicit DeliverySim(const Mapda& q) : q_(&q) {
    served_.resize(static_cast<std::size_t>(q.symbols));
    for (int k = 0; k < q.cols; ++k) {
      for (int f = 0; f < q.rows; ++f) {
        const std::int32_t s = q.at(f, k);
        if (s != kStar) served_[static_cast<std::size_t>(s - 1)].push_back({k, 0, f});
      }
    }
    // Served lists in column order per symbol.
    for (auto& list : served_) {
      std::sort(list.begin(), list.end(),
                [](const BlockPlan::Served& a, const BlockPlan::Served& b) { return a.user < b.user; });
    }
  }

  DeliveryReport run(const std::vector<int>& demand, std::uint64_t seed,
                     const SimulateOptions& opt = {}) const {
    const Mapda& q = *q_;
    if (static_cast<int>(demand.size()) != q.cols) {
      throw InvalidParameter("simulate: demand length must be K");
    }
    for (int d : demand) {
      if (d < 1) throw InvalidParameter("simulate: file indices are 1-based");
    }
    DeliveryReport report;
    report.blocks.resize(static_cast<std::size_t>(q.symbols));
    detail::parallel_for(q.symbols, [&](int idx) {
      report.blocks[static_cast<std::size_t>(idx)] = run_block(idx + 1, demand, seed, opt);
    });
    std::int64_t total_served = 0;
    for (const auto& outcome : report.blocks) {
      report.max_residual = std::max(report.max_residual, outcome.residual);
      report.max_condition = std::max(report.max_condition, outcome.condition);
      report.resamples += outcome.resamples;
      total_served += outcome.served;
    }
    report.all_decoded = report.max_residual < opt.tolerance;
    report.measured_dof = Rat(total_served, q.symbols);
    return report;
  }

 private:
  DeliveryReport::BlockOutcome run_block(int s, const std::vector<int>& demand, std::uint64_t seed,
                                         const SimulateOptions& opt) const {
    const Mapda& q = *q_;
    std::vector<BlockPlan::Served> served = served_[static_cast<std::size_t>(s - 1)];
    for (auto& entry : served) entry.file = demand[static_cast<std::size_t>(entry.user)];
    const int r_s = static_cast<int>(served.size());

    DeliveryReport::BlockOutcome outcome;
    outcome.symbol = s;
    outcome.served = r_s;
    if (r_s == 0) return outcome;  // unused symbol; verify() reports it under C2
    // The leak of an accepted solve is roughly eps * condition; cap the
    // acceptance so that the accumulated decode error stays well inside the
    // tolerance regardless of the configured threshold.
    const double cond_cap = std::min(
        opt.cond_threshold, opt.tolerance / (100.0 * std::numeric_limits<double>::epsilon()));
    BlockPlan plan;
    Channel ch;
    for (int attempt = 0;; ++attempt) {
      ch = opt.fixed_channel ? *opt.fixed_channel
                             : gen_channel(r_s, q.antennas, detail::block_seed(seed, s, attempt));
      try {
        plan = detail::plan_block(q, s, served, ch, cond_cap);
        outcome.resamples = attempt;
        break;
      } catch (const DegeneracyError&) {
        if (opt.fixed_channel || attempt >= opt.resample_budget) throw;
      }
    }
    outcome.condition = plan.condition;

    for (int j = 0; j < r_s; ++j) {
      // y_j = sum_i <h_j, v_i> w_i; subtract every cached packet's term.
      double received = 0.0;
      for (int i = 0; i < r_s; ++i) {
        double gain = 0.0;
        for (int l = 0; l < q.antennas; ++l) {
          gain += ch.at(j, l) *
                  plan.precoders[static_cast<std::size_t>(l * r_s + i)];
        }
        const auto& pkt = served[static_cast<std::size_t>(i)];
        const double payload = detail::packet_payload(pkt.file, pkt.row);
        received += gain * payload;
        if (i != j && q.at(pkt.row, served[static_cast<std::size_t>(j)].user) == kStar) {
          received -= gain * payload;
        }
      }
      const auto& own = served[static_cast<std::size_t>(j)];
      const double want = detail::packet_payload(own.file, own.row);
      outcome.residual = std::max(outcome.residual, std::abs(received - want) / std::abs(want));
    }
    return outcome;
  }

  const Mapda* q_;
  std::vector<std::vector<BlockPlan::Served>> served_;
};

inline DeliveryReport simulate(const Mapda& q, const std::vector<int>& demand, std::uint64_t seed,
                               const SimulateOptions& opt = {}) {
  return DeliverySim(q).run(demand, seed, opt);
}

// Seeded random demand over [1, num_files].
inline std::vector<int> random_demand(int num_users, int num_files, std::uint64_t seed) {
  if (num_files < 1) throw InvalidParameter("random_demand: need at least one file");
  std::vector<int> d(static_cast<std::size_t>(num_users));
  std::uint64_t state = detail::splitmix64(seed ^ 0x2545f4914f6cdd1dULL);
  for (int& v : d) {
    state = detail::splitmix64(state);
    v = 1 + static_cast<int>(state % static_cast<std::uint64_t>(num_files));
  }
  return d;
}

}  // namespace mapda
