// Command-line front end: construct / verify / knapsack / simulate /
// compare / sweep over JSON and CSV files.
//
// Exit codes: 0 ok, 1 invalid array or failed simulation, 2 usage error,
// 3 violated scheme constraint.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mapda/mapda.hpp"

namespace {

using nlohmann::json;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw mapda::InvalidParameter("cannot open output file: " + path);
  f << content;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw mapda::InvalidParameter("cannot open input file: " + path);
  return json::parse(f);
}

int cmd_construct(const mapda::SystemParams& params, const std::string& method,
                  const std::string& solver, const std::string& b_mode, int lambda_prime,
                  const std::string& out_path, const std::string& format) {
  using namespace mapda;
  SystemParams p = params;
  CompactMapda compact;
  if (method == "thm1") {
    const Solver s = solver == "greedy" ? Solver::kGreedy : Solver::kDp;
    if (b_mode == "auto") {
      // Max sum-DoF over b, ties to smaller F then smaller b.
      std::optional<CompactMapda> best;
      std::optional<SchemeMetrics> best_m;
      for (int b = 0; b < p.r; ++b) {
        p.b = b;
        CompactMapda candidate = construct_theorem1_compact(p, s);
        Mapda expanded = expand(candidate);
        SchemeMetrics m = metrics(expanded);
        if (!best_m || m.sum_dof > best_m->sum_dof ||
            (m.sum_dof == best_m->sum_dof && m.rows < best_m->rows)) {
          best = std::move(candidate);
          best_m = std::move(m);
        }
      }
      compact = std::move(*best);
    } else {
      compact = construct_theorem1_compact(p, s);
    }
  } else if (method == "thm4") {
    compact = construct_theorem4_compact(p);
  } else if (method == "thm5") {
    compact = construct_theorem5_compact(p, lambda_prime);
  } else {
    throw InvalidParameter("unknown method: " + method);
  }

  Mapda q = expand(compact);
  if (!out_path.empty()) {
    const json body = format == "compact" ? compact.to_json() : q.to_json();
    write_file(out_path, body.dump(2) + "\n");
  }
  std::cout << metrics(q).to_json().dump() << "\n";
  return 0;
}

int cmd_verify(const std::string& in_path, int ground) {
  using namespace mapda;
  const json j = read_json(in_path);
  VerificationReport rep;
  if (j.contains("vectors")) {
    rep = verify_compact(CompactMapda::from_json(j, ground));
  } else {
    rep = verify(Mapda::from_json(j));
  }
  std::cout << rep.to_json().dump() << "\n";
  return rep.valid ? 0 : 1;
}

int cmd_knapsack(const mapda::SystemParams& p, const std::string& anchor_text,
                 const std::string& solver) {
  using namespace mapda;
  p.validate();
  const Subset anchor = anchor_text.empty() ? Subset::full(p.t + p.r - p.b)
                                            : Subset::from_members(parse_int_list(anchor_text));
  const KnapsackInstance inst = build_instance(p, anchor);
  KnapsackSolution sol;
  if (solver == "greedy") {
    sol = greedy_solution(p).second;
  } else if (solver == "brute") {
    sol = solve_brute(inst);
  } else {
    sol = solve_dp(inst);
  }
  std::cout << knapsack_to_json(p, inst, sol).dump() << "\n";
  return 0;
}

int cmd_simulate(const std::string& in_path, std::uint64_t seed, int trials,
                 const std::string& demand_text, int num_files, double tol) {
  using namespace mapda;
  const json j = read_json(in_path);
  Mapda q;
  if (j.contains("vectors")) {
    CompactMapda c = CompactMapda::from_json(j, 9);
    q = expand(c);
  } else {
    q = Mapda::from_json(j);
  }
  SimulateOptions opt;
  opt.tolerance = tol;
  const int files = num_files > 0 ? num_files : q.cols;
  DeliverySim sim(q);
  bool all = true;
  double max_res = 0.0;
  Rat dof = 0;
  int resamples = 0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<int> demand = demand_text.empty()
                                  ? random_demand(q.cols, files, seed + static_cast<std::uint64_t>(trial))
                                  : parse_int_list(demand_text);
    if (static_cast<int>(demand.size()) != q.cols) {
      throw InvalidParameter("--demand must list K file indices");
    }
    const DeliveryReport rep = sim.run(demand, seed + static_cast<std::uint64_t>(trial), opt);
    all = all && rep.all_decoded;
    max_res = std::max(max_res, rep.max_residual);
    dof = rep.measured_dof;
    resamples += rep.resamples;
  }
  json out;
  out["all_decoded"] = all;
  out["max_residual"] = max_res;
  out["measured_dof"] = rat_str(dof);
  out["trials"] = trials;
  out["resamples"] = resamples;
  std::cout << out.dump() << "\n";
  return all ? 0 : 1;
}

int cmd_compare(const std::string& rows_path, const std::string& format,
                const std::string& out_path) {
  using namespace mapda;
  const json rows_spec = read_json(rows_path);
  std::vector<ComparisonRow> rows;
  for (const auto& row : rows_spec) {
    const std::string scheme = row.at("scheme").get<std::string>();
    if (scheme == "ywcc") {
      rows.push_back(comparison_row(BaselineSpec::ywcc(row.at("K").get<std::int64_t>(),
                                                       row.at("t").get<std::int64_t>(),
                                                       row.at("L").get<std::int64_t>(),
                                                       row.value("m", std::int64_t{1}))));
    } else if (scheme == "npr") {
      rows.push_back(comparison_row(BaselineSpec::npr(row.at("K").get<std::int64_t>(),
                                                      row.at("t").get<std::int64_t>(),
                                                      row.at("L").get<std::int64_t>())));
    } else if (scheme == "wcc") {
      rows.push_back(comparison_row(BaselineSpec::wcc(row.at("K").get<std::int64_t>(),
                                                      row.at("t").get<std::int64_t>(),
                                                      row.at("L").get<std::int64_t>())));
    } else if (scheme == "pr") {
      rows.push_back(comparison_row(BaselineSpec::pr(row.at("lambda").get<std::int64_t>(),
                                                     row.at("r").get<std::int64_t>(),
                                                     row.at("t").get<std::int64_t>(),
                                                     row.at("L").get<std::int64_t>())));
    } else if (scheme == "co1" || scheme == "co2" || scheme == "co3" || scheme == "co4") {
      mapda::SystemParams p;
      p.lambda = row.at("lambda").get<int>();
      p.r = row.at("r").get<int>();
      p.t = row.at("t").get<int>();
      p.antennas = row.at("L").get<int>();
      p.b = row.value("b", 0);
      std::optional<int> lp;
      if (row.contains("lambda_prime")) lp = row.at("lambda_prime").get<int>();
      const Predictor which = scheme == "co1"   ? Predictor::kCo1
                              : scheme == "co2" ? Predictor::kCo2
                              : scheme == "co3" ? Predictor::kCo3
                                                : Predictor::kCo4;
      rows.push_back(comparison_row(p, which, lp));
    } else {
      throw InvalidParameter("unknown scheme in rows file: " + scheme);
    }
  }
  const std::string body =
      format == "csv" ? comparison_to_csv(rows) : comparison_to_json(rows).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << body;
  } else {
    write_file(out_path, body);
  }
  return 0;
}

int cmd_sweep(const std::string& schemes_text, int lambda, int r, int antennas,
              std::optional<int> b, const std::string& out_path) {
  using namespace mapda;
  std::vector<std::string> schemes;
  std::stringstream ss(schemes_text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) schemes.push_back(tok);
  }
  const auto rows = sweep_series(schemes, lambda, r, antennas, b);
  const std::string body = comparison_to_csv(rows);
  if (out_path.empty()) {
    std::cout << body;
  } else {
    write_file(out_path, body);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-antenna placement delivery array toolkit"};
  app.require_subcommand(1);

  mapda::SystemParams params;
  std::string method = "thm1", solver = "dp", b_mode = "fixed", format = "expanded";
  std::string in_path, out_path, demand_text, anchor_text, rows_path, schemes_text;
  int lambda_prime = 0, trials = 1, num_files = 0, ground = 9;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  std::optional<int> sweep_b;

  auto* construct = app.add_subcommand("construct", "Build a user-delivery array");
  construct->add_option("--lambda", params.lambda, "Cache nodes")->required();
  construct->add_option("--r", params.r, "Access degree")->required();
  construct->add_option("--t", params.t, "Placement parameter")->required();
  construct->add_option("--L", params.antennas, "Antennas")->required();
  construct->add_option("--b", params.b, "Anchor shift b");
  construct->add_option("--method", method, "thm1 | thm4 | thm5")
      ->check(CLI::IsMember({"thm1", "thm4", "thm5"}));
  construct->add_option("--solver", solver, "dp | greedy")
      ->check(CLI::IsMember({"dp", "greedy"}));
  construct->add_option("--b-mode", b_mode, "fixed | auto")
      ->check(CLI::IsMember({"fixed", "auto"}));
  construct->add_option("--lambda-prime", lambda_prime, "Subarray ground size (thm5)");
  construct->add_option("--out", out_path, "Write the array as JSON");
  construct->add_option("--format", format, "expanded | compact")
      ->check(CLI::IsMember({"expanded", "compact"}));

  auto* verify_cmd = app.add_subcommand("verify", "Check an array against C1-C4");
  verify_cmd->add_option("--in", in_path, "Array JSON")->required();
  verify_cmd->add_option("--ground", ground, "Ground-set size for compact labels");

  auto* knapsack_cmd = app.add_subcommand("knapsack", "Print instance and solution");
  knapsack_cmd->add_option("--lambda", params.lambda)->required();
  knapsack_cmd->add_option("--r", params.r)->required();
  knapsack_cmd->add_option("--t", params.t)->required();
  knapsack_cmd->add_option("--L", params.antennas)->required();
  knapsack_cmd->add_option("--b", params.b);
  knapsack_cmd->add_option("--a", anchor_text, "Anchor members, comma separated");
  knapsack_cmd->add_option("--solver", solver, "dp | greedy | brute")
      ->check(CLI::IsMember({"dp", "greedy", "brute"}));

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the zero-forcing delivery");
  simulate_cmd->add_option("--in", in_path, "Array JSON")->required();
  simulate_cmd->add_option("--seed", seed, "RNG seed");
  simulate_cmd->add_option("--trials", trials, "Seeded trials");
  simulate_cmd->add_option("--demand", demand_text, "K file indices, comma separated");
  simulate_cmd->add_option("--n-files", num_files, "Library size for random demands");
  simulate_cmd->add_option("--tol", tol, "Decode residual tolerance");

  auto* compare_cmd = app.add_subcommand("compare", "Evaluate baseline and co-scheme rows");
  compare_cmd->add_option("--rows", rows_path, "Rows JSON")->required();
  compare_cmd->add_option("--format", format, "csv | json")
      ->check(CLI::IsMember({"csv", "json", "expanded"}));
  compare_cmd->add_option("--out", out_path, "Output file (stdout otherwise)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Emit figure-ready series over the memory grid");
  sweep_cmd->add_option("--scheme", schemes_text, "Comma-separated schemes")->required();
  sweep_cmd->add_option("--lambda", params.lambda)->required();
  sweep_cmd->add_option("--r", params.r)->required();
  sweep_cmd->add_option("--L", params.antennas)->required();
  sweep_cmd->add_option("--b", sweep_b, "b for co3");
  sweep_cmd->add_option("--out", out_path, "Output CSV (stdout otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (construct->parsed()) {
      if (b_mode == "auto" && method != "thm1") {
        std::cerr << "--b-mode auto is only legal with --method thm1\n";
        return 2;
      }
      return cmd_construct(params, method, solver, b_mode, lambda_prime, out_path, format);
    }
    if (verify_cmd->parsed()) return cmd_verify(in_path, ground);
    if (knapsack_cmd->parsed()) return cmd_knapsack(params, anchor_text, solver);
    if (simulate_cmd->parsed()) return cmd_simulate(in_path, seed, trials, demand_text, num_files, tol);
    if (compare_cmd->parsed()) return cmd_compare(rows_path, format, out_path);
    if (sweep_cmd->parsed()) return cmd_sweep(schemes_text, params.lambda, params.r, params.antennas, sweep_b, out_path);
  } catch (const mapda::ConstraintError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const mapda::InvalidParameter& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}
