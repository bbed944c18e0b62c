#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "mapda/assembly.hpp"
#include "mapda/delivery.hpp"

using namespace mapda;

namespace {

SystemParams params(int lambda, int r, int t, int antennas, int b) {
  return SystemParams{lambda, r, t, antennas, b, 0};
}

}  // namespace

TEST_CASE("fill places one vector per column of the selected blocks") {
  const auto p = params(5, 3, 1, 2, 1);
  FilledArray filled(user_retrieve_array(p));
  const Subset anchor = Subset::of({1, 2, 3});
  const auto fam = rotate_family(p, anchor, solve_dp(build_instance(p, anchor)));
  fill_subarray(filled, p, anchor, fam);

  // Selected blocks B_4 u B_5: each of the six columns holds the single
  // vector (1, A, 1) at its unique null; B_45 and the rest stay empty.
  const std::vector<std::pair<Subset, Subset>> expect = {
      {Subset::of({1, 2, 4}), Subset::of({3})}, {Subset::of({1, 2, 5}), Subset::of({3})},
      {Subset::of({1, 3, 4}), Subset::of({2})}, {Subset::of({1, 3, 5}), Subset::of({2})},
      {Subset::of({2, 3, 4}), Subset::of({1})}, {Subset::of({2, 3, 5}), Subset::of({1})}};
  int filled_cells = 0;
  for (int row = 0; row < filled.base.rows(); ++row) {
    for (int col = 0; col < filled.base.cols(); ++col) {
      filled_cells += !filled.cell(row, col).empty();
    }
  }
  CHECK(filled_cells == 6);
  for (const auto& [col_label, row_label] : expect) {
    const auto& cell = filled.cell(filled.base.row_rank(row_label), filled.base.col_rank(col_label));
    REQUIRE(cell.size() == 1);
    CHECK(cell[0] == FillVector{1, anchor, 1});
  }
}

TEST_CASE("complete fill at (5,3,1,b=1,L=2): pi = 3 and ten distinct vectors") {
  const auto p = params(5, 3, 1, 2, 1);
  FilledArray filled(user_retrieve_array(p));
  for (const Subset& anchor : enumerate_subsets(Subset::full(5), 3)) {
    const auto fam = rotate_family(p, anchor, solve_dp(build_instance(p, anchor)));
    fill_subarray(filled, p, anchor, fam);
  }
  std::set<FillVector> distinct;
  for (int row = 0; row < filled.base.rows(); ++row) {
    for (int col = 0; col < filled.base.cols(); ++col) {
      const auto& cell = filled.cell(row, col);
      if (filled.base.star_at(row, col)) {
        CHECK(cell.empty());
      } else {
        CHECK(cell.size() == 3);
        distinct.insert(cell.begin(), cell.end());
      }
    }
  }
  CHECK(distinct.size() == 10);
}

TEST_CASE("replication checks the uniform vector count") {
  const auto p = params(5, 3, 1, 2, 1);
  FilledArray filled(user_retrieve_array(p));
  for (const Subset& anchor : enumerate_subsets(Subset::full(5), 3)) {
    const auto fam = rotate_family(p, anchor, solve_dp(build_instance(p, anchor)));
    fill_subarray(filled, p, anchor, fam);
  }
  // Drop one vector from one null cell; the replication must refuse.
  for (auto& cell : filled.cells) {
    if (!cell.empty()) {
      cell.pop_back();
      break;
    }
  }
  CHECK_THROWS_AS(replicate(filled, 2), ConsistencyError);
}

TEST_CASE("each symbol of the (5,3,1) array serves six users") {
  const Mapda q = construct_theorem1(params(5, 3, 1, 2, 1), Solver::kDp);
  for (int s = 1; s <= q.symbols; ++s) {
    const Mapda frag = symbol_subarray(q, s);
    int occurrences = 0;
    for (const auto e : frag.entries) occurrences += e == s;
    CHECK(occurrences == 6);
    CHECK(frag.cols == 6);
  }
}

TEST_CASE("replication yields the (2,10,15,9,10) MAPDA") {
  const Mapda q = construct_theorem1(params(5, 3, 1, 2, 1), Solver::kDp);
  CHECK(q.antennas == 2);
  CHECK(q.cols == 10);
  CHECK(q.rows == 15);
  CHECK(q.symbols == 10);
  const auto rep = verify(q);
  CHECK(rep.valid);
  CHECK(rep.z == 9);
  const auto m = metrics(q);
  CHECK(m.sum_dof == Rat(6));
  CHECK(m.gain == 6);
  SECTION("greedy is optimal here, so the arrays agree entry for entry") {
    const Mapda g = construct_theorem1(params(5, 3, 1, 2, 1), Solver::kGreedy);
    CHECK(g.entries == q.entries);
  }
}

TEST_CASE("pi = 1 keeps the base star pattern") {
  // (4,2,2,L=3), b=0: ell = mu = 1, single copy.
  const auto p = params(4, 2, 2, 3, 0);
  const Mapda q = construct_theorem1(p);
  const StarArray u = user_retrieve_array(p);
  REQUIRE(q.rows == u.rows());
  for (int row = 0; row < q.rows; ++row) {
    for (int col = 0; col < q.cols; ++col) {
      CHECK((q.at(row, col) == kStar) == u.star_at(row, col));
    }
  }
}

TEST_CASE("paired-anchor merge: the (3,20,45,36,10) MAPDA") {
  const Mapda q = construct_theorem4(params(6, 3, 2, 3, 2));
  CHECK(q.antennas == 3);
  CHECK(q.cols == 20);
  CHECK(q.rows == 45);
  CHECK(q.symbols == 10);
  const auto rep = verify(q);
  CHECK(rep.valid);
  CHECK(rep.z == 36);
  const auto m = metrics(q);
  CHECK(m.sum_dof == Rat(18));
  CHECK(m.gain == 18);  // 2 L C(t+r-b, t) = 2*3*3

  SECTION("preconditions are named") {
    CHECK_THROWS_AS(construct_theorem4(params(6, 3, 2, 4, 2)), ConstraintError);  // L > C(3,2)
    CHECK_THROWS_AS(construct_theorem4(params(8, 3, 2, 3, 2)), ConstraintError);  // lambda
    CHECK_THROWS_AS(construct_theorem4(params(6, 3, 2, 3, 1)), ConstraintError);  // r >= 2b
  }
}

TEST_CASE("paired-anchor merge with ell > 1 still verifies") {
  // (6,3,2,b=2) with L = 2 < C(3,2): ell = 3/gcd(3,2) = 3 rotations.
  const auto p = params(6, 3, 2, 2, 2);
  const Mapda q = construct_theorem4(p);
  CHECK(verify(q).valid);
  const auto predicted = predict_metrics(p, Predictor::kCo3);
  const auto m = metrics(q);
  CHECK(m.rows == predicted.rows);
  CHECK(m.stars == predicted.stars);
  CHECK(m.symbols == predicted.symbols);
  CHECK(Rat(m.gain) == Rat(predicted.gain));
}

TEST_CASE("single-subarray construction") {
  SECTION("(9,3,2,L=4,lambda'=6): DoF 20, F 144, S 252") {
    const Mapda q = construct_theorem5(params(9, 3, 2, 4, 0), 6);
    CHECK(q.rows == 144);
    CHECK(q.cols == 84);
    CHECK(q.symbols == 252);
    CHECK(verify(q).valid);
    const auto m = metrics(q);
    CHECK(m.gain == 20);
    CHECK(m.stars == 84);
  }
  SECTION("lambda' = lambda gives pi = 1 and the whole array") {
    const auto p = params(5, 2, 2, 3, 0);  // C(5-2,2) = 3 <= L
    const Mapda q = construct_theorem5(p, 5);
    const StarArray u = user_retrieve_array(p);
    REQUIRE(q.rows == u.rows());
    CHECK(verify(q).valid);
    CHECK(metrics(q).gain == static_cast<std::int64_t>(binom(5, 2)));
  }
  SECTION("per-row null count of each subarray stays within L") {
    const auto p = params(9, 3, 2, 4, 0);
    CHECK(binom(6 - 2, 3) <= 4);
    CHECK_THROWS_AS(construct_theorem5(params(9, 3, 2, 3, 0), 6), ConstraintError);
    CHECK_THROWS_AS(construct_theorem5(p, 4), ConstraintError);   // lambda' < t + r
    CHECK_THROWS_AS(construct_theorem5(p, 10), ConstraintError);  // lambda' > lambda
  }
}

TEST_CASE("constructed arrays match the closed-form predictors") {
  SECTION("greedy construction vs its closed forms") {
    for (const auto& p : {params(5, 3, 1, 2, 1), params(6, 3, 2, 3, 2), params(7, 3, 2, 4, 1),
                          params(6, 2, 2, 3, 0), params(8, 2, 3, 5, 1)}) {
      const Mapda q = construct_theorem1(p, Solver::kGreedy);
      const auto m = metrics(q);
      const auto predicted = predict_metrics(p, Predictor::kCo1);
      CAPTURE(p.lambda, p.r, p.t, p.antennas, p.b);
      CHECK(m.rows == predicted.rows);
      CHECK(m.stars == predicted.stars);
      CHECK(m.symbols == predicted.symbols);
      CHECK(Rat(m.gain) == Rat(predicted.gain));
    }
  }
  SECTION("b=0 optimum vs its closed forms") {
    // Boundary L and L above the boundary (partial top level, ell > 1).
    for (const auto& p : {params(6, 2, 2, 5, 0), params(7, 2, 2, 7, 0), params(9, 2, 3, 10, 0)}) {
      const Mapda q = construct_theorem1(p, Solver::kDp);
      const auto m = metrics(q);
      const auto predicted = predict_metrics(p, Predictor::kCo2);
      CAPTURE(p.lambda, p.r, p.t, p.antennas);
      CHECK(m.rows == predicted.rows);
      CHECK(m.stars == predicted.stars);
      CHECK(m.symbols == predicted.symbols);
      CHECK(Rat(m.gain) == Rat(predicted.gain));
      CHECK(m.sum_dof == dof_upper_bound(q));
    }
  }
  SECTION("single-subarray construction vs the co4 forms") {
    const auto p = params(9, 3, 2, 4, 0);
    const auto m = metrics(construct_theorem5(p, 6));
    const auto predicted = predict_metrics(p, Predictor::kCo4, 6);
    CHECK(m.rows == predicted.rows);
    CHECK(m.stars == predicted.stars);
    CHECK(m.symbols == predicted.symbols);
    CHECK(Rat(m.gain) == Rat(predicted.gain));
  }
}

TEST_CASE("memory sweep at (lambda=9, r=2, L=2): DoF equals the solver optimum") {
  for (int t = 1; t + 2 <= 9; ++t) {
    for (int b = 0; b < 2; ++b) {
      const auto p = params(9, 2, t, 2, b);
      const Mapda q = construct_theorem1(p, Solver::kDp);
      CAPTURE(t, b);
      CHECK(verify(q).valid);
      const auto phi = solve_dp(build_instance(p, Subset::full(t + 2 - b))).phi;
      CHECK(metrics(q).sum_dof == Rat(phi));
    }
  }
}

TEST_CASE("corollary predictor spot values") {
  SECTION("co2 at (6,2,2,5): F=105, g=14") {
    const auto m = predict_metrics(params(6, 2, 2, 5, 0), Predictor::kCo2);
    CHECK(m.rows == 105);
    CHECK(m.gain == 14);
  }
  SECTION("co2 at (8,3,2,19): F=924, g=55") {
    const auto m = predict_metrics(params(8, 3, 2, 19, 0), Predictor::kCo2);
    CHECK(m.rows == 924);
    CHECK(m.gain == 55);
  }
  SECTION("co3 at (6,3,2,3,b=2): F=45, S=10, g=18") {
    const auto m = predict_metrics(params(6, 3, 2, 3, 2), Predictor::kCo3);
    CHECK(m.rows == 45);
    CHECK(m.symbols == 10);
    CHECK(m.gain == 18);
  }
  SECTION("co4 at (9,3,2,4,lambda'=6): F=144, S=252, g=20") {
    const auto m = predict_metrics(params(9, 3, 2, 4, 0), Predictor::kCo4, 6);
    CHECK(m.rows == 144);
    CHECK(m.symbols == 252);
    CHECK(m.gain == 20);
  }
}

TEST_CASE("uniform fill count and the S count on a small sweep") {
  for (int lambda = 4; lambda <= 7; ++lambda) {
    for (int r = 2; r <= std::min(3, lambda - 1); ++r) {
      for (int t = 1; t <= std::min(3, lambda - r); ++t) {
        for (int b = 0; b < r; ++b) {
          for (int antennas : {1, 2, 4}) {
            const auto p = params(lambda, r, t, antennas, b);
            const Subset anchor = Subset::full(t + r - b);
            const auto fam = rotate_family(p, anchor, solve_dp(build_instance(p, anchor)));
            const Mapda q = construct_theorem1(p);
            const auto m = metrics(q);
            CAPTURE(lambda, r, t, b, antennas);
            // F = pi C(lambda,t) with the lemma's pi; S = ell mu C(lambda, t+r-b).
            CHECK(m.rows == predicted_fill_count(p, fam) * binom_big(lambda, t));
            CHECK(m.symbols == BigInt(fam.ell) * fam.mu * binom_big(lambda, t + r - b));
            // Regularity: every symbol occurs phi times.
            CHECK(m.gain == fam.base.phi);
          }
        }
      }
    }
  }
}

TEST_CASE("compact form round trips and verifies without expansion") {
  const auto p = params(5, 3, 1, 2, 1);
  CompactMapda compact = construct_theorem1_compact(p);
  const auto rep_compact = verify_compact(compact);
  CHECK(rep_compact.valid);
  CHECK(rep_compact.z == 9);

  Mapda q = expand(compact);
  CHECK(verify(q).valid);

  const auto j = compact.to_json();
  CHECK(j.at("pi") == 3);
  CHECK(j.at("F") == 15);
  CHECK(j.at("Z") == 9);
  CompactMapda back = CompactMapda::from_json(j, 5);
  Mapda q2 = expand(back);
  CHECK(q2.entries == q.entries);

  SECTION("a broken compact array fails verification") {
    CompactMapda bad = compact;
    bad.vectors.erase(bad.vectors.begin());  // one null cell loses its vectors
    const auto rep = verify_compact(bad);
    CHECK_FALSE(rep.valid);
  }
}

TEST_CASE("decode completeness of a merged and a single-subarray scheme") {
  for (const Mapda& q : {construct_theorem4(params(6, 3, 2, 3, 2)),
                         construct_theorem5(params(7, 3, 2, 4, 0), 6)}) {
    DeliverySim sim(q);
    const auto report = sim.run(random_demand(q.cols, 8, 5), 5);
    CHECK(report.all_decoded);
    CHECK(report.max_residual < 1e-8);
    CHECK(report.measured_dof == metrics(q).sum_dof);
  }
}
