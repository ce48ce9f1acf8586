// Copyright 2026 The taxisense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "taxisense/kuhn_munkres.hpp"
#include "taxisense/oracle.hpp"
#include "taxisense/trip_matching.hpp"

namespace taxisense {
namespace {

constexpr double kMissing = WeightMatrix<double>::missing();

TEST(KmSolveTest, TwoByTwo) {
  const WeightMatrix<double> w{{5, 2}, {3, 4}};
  const auto a = km_solve(w);
  EXPECT_DOUBLE_EQ(a.total, 9.0);
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(a.pairs[1], (std::pair<std::size_t, std::size_t>{1, 1}));
}

TEST(KmSolveTest, SinglePairAndMissing) {
  EXPECT_DOUBLE_EQ(km_solve(WeightMatrix<double>{{3.5}}).total, 3.5);
  const auto empty = km_solve(WeightMatrix<double>{{kMissing}});
  EXPECT_TRUE(empty.pairs.empty());
  EXPECT_DOUBLE_EQ(empty.total, 0.0);
  EXPECT_TRUE(km_solve(WeightMatrix<double>{}).pairs.empty());
}

TEST(KmSolveTest, RectangularRow) {
  const auto a = km_solve(WeightMatrix<std::int64_t>{{7, 1, 2}});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].second, 0u);
  EXPECT_EQ(a.total, 7);
}

TEST(KmSolveTest, NegativeEdgesNeverChosen) {
  const auto a = km_solve(WeightMatrix<double>{{-1.0, kMissing}, {kMissing, -2.0}});
  EXPECT_TRUE(a.pairs.empty());
}

TEST(KmSolveTest, RejectsNonFiniteWeights) {
  EXPECT_THROW(km_solve(WeightMatrix<double>{{NAN}}), std::invalid_argument);
  EXPECT_THROW(km_solve(WeightMatrix<double>{{INFINITY}}), std::invalid_argument);
}

TEST(BruteForceMatchingTest, HandValues) {
  EXPECT_DOUBLE_EQ(oracle::brute_force_matching(WeightMatrix<double>{{5, 2}, {3, 4}}).total, 9.0);
  const auto none = oracle::brute_force_matching(
      WeightMatrix<double>{{kMissing, kMissing}, {kMissing, kMissing}});
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_DOUBLE_EQ(none.total, 0.0);
  const auto row = oracle::brute_force_matching(WeightMatrix<std::int64_t>{{7, 1, 2}});
  EXPECT_EQ(row.total, 7);
  EXPECT_EQ(row.pairs.size(), 1u);
  EXPECT_THROW(oracle::brute_force_matching(WeightMatrix<double>(9, 2)), std::length_error);
}

template <typename W>
void check_valid(const WeightMatrix<W>& w, const Assignment<W>& a) {
  std::set<std::size_t> rows, cols;
  W total{};
  for (const auto& [r, c] : a.pairs) {
    ASSERT_TRUE(rows.insert(r).second);
    ASSERT_TRUE(cols.insert(c).second);
    ASSERT_TRUE(w.present(r, c));
    total += w(r, c);
  }
  EXPECT_EQ(total, a.total);
}

TEST(KmSolveTest, MatchesBruteForceOnRandomIntegerInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> side(1, 8);
  std::uniform_int_distribution<std::int64_t> weight(-20, 100);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int trial = 0; trial < 400; ++trial) {
    WeightMatrix<std::int64_t> w(side(rng), side(rng));
    const double density = coin(rng);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (coin(rng) < density) w(r, c) = weight(rng);
      }
    }
    const auto fast = km_solve(w);
    check_valid(w, fast);
    EXPECT_EQ(fast.total, oracle::brute_force_matching(w).total) << "trial " << trial;
  }
}

TEST(KmSolveTest, MatchesBruteForceOnRandomRealInstances) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> side(1, 7);
  std::uniform_real_distribution<double> weight(-5.0, 50.0), coin(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    WeightMatrix<double> w(side(rng), side(rng));
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (coin(rng) < 0.7) w(r, c) = weight(rng);
      }
    }
    const auto fast = km_solve(w);
    check_valid(w, fast);
    EXPECT_NEAR(fast.total, oracle::brute_force_matching(w).total, 1e-9);
  }
}

TEST(KmSolveTest, DeterministicOnTies) {
  const WeightMatrix<std::int64_t> w{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  const auto a = km_solve(w);
  const auto b = km_solve(w);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.total, 3);
}

// ---------------------------------------------------------------------------

struct Fixture {
  Params params;
  ZoneGrid grid{10.0, 10.0, 1, 1};
  std::vector<ZoneStats> stats{{ZoneId{0}, 1e6, 1.0}};  // opportunity cost ~0
  MatchingContext ctx() const { return {params, grid, stats, Metric::kEuclidean}; }
};

TripRequest rider(std::uint32_t id, Location origin, double trip_km, const Params& p) {
  return make_trip(RiderId{id}, 0.0, origin, {5, 5}, trip_km, p, 600.0);
}

TEST(CandidateEdgesTest, PickupRadiusFilter) {
  Fixture f;
  const std::vector<DriverPosition> drivers{{DriverId{1}, {0, 0}}};
  const std::vector<TripRequest> riders{rider(1, {3, 0}, 3.0, f.params)};
  EXPECT_TRUE(build_candidate_edges(drivers, riders, f.ctx()).empty());
}

TEST(CandidateEdgesTest, SavedDistanceAgainstLargestPickup) {
  Fixture f;
  const std::vector<DriverPosition> drivers{{DriverId{2}, {2, 0}}, {DriverId{1}, {1, 0}}};
  const std::vector<TripRequest> riders{rider(1, {0, 0}, 3.0, f.params)};
  const auto edges = build_candidate_edges(drivers, riders, f.ctx());
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0].driver, DriverId{1});
  EXPECT_DOUBLE_EQ(edges[0].saved_km, 1.0);
  EXPECT_DOUBLE_EQ(edges[1].saved_km, 0.0);
}

TEST(CandidateEdgesTest, NegativeRevenueFilter) {
  Fixture f;
  f.stats = {{ZoneId{0}, 0.0, 0.0}};  // destination pays the full cap of 10
  const std::vector<DriverPosition> drivers{{DriverId{1}, {0, 0}}};
  // Fare 12 vs earning 2*2 + 10 = 14: dropped. A 0.1 km trip earns 10.2 and
  // stays; so does a long trip whose metered fare outgrows the earning.
  const std::vector<TripRequest> riders{rider(1, {0.5, 0}, 2.0, f.params),
                                        rider(2, {0.6, 0}, 0.1, f.params),
                                        rider(3, {0.7, 0}, 20.0, f.params)};
  const auto edges = build_candidate_edges(drivers, riders, f.ctx());
  std::set<std::uint32_t> kept;
  for (const auto& e : edges) kept.insert(e.rider.value);
  EXPECT_EQ(kept, (std::set<std::uint32_t>{2, 3}));
}

TEST(CandidateEdgesTest, EmptyInputs) {
  Fixture f;
  EXPECT_TRUE(build_candidate_edges({}, {}, f.ctx()).empty());
  const std::vector<DriverPosition> drivers{{DriverId{1}, {0, 0}}};
  EXPECT_TRUE(match_trips(drivers, {}, f.ctx()).pairs.empty());
}

std::vector<CandidateEdge> edges_from_pickups(const std::vector<std::vector<double>>& pickup) {
  std::vector<CandidateEdge> edges;
  double max_pickup = 0.0;
  for (std::size_t d = 0; d < pickup.size(); ++d) {
    for (std::size_t r = 0; r < pickup[d].size(); ++r) {
      if (std::isnan(pickup[d][r])) continue;
      edges.push_back({DriverId{static_cast<std::uint32_t>(d)},
                       RiderId{static_cast<std::uint32_t>(r)}, pickup[d][r], 0.0});
      max_pickup = std::max(max_pickup, pickup[d][r]);
    }
  }
  for (auto& e : edges) e.saved_km = max_pickup - e.pickup_km;
  return edges;
}

TEST(MatchTripsTest, TwoByTwoHandInstance) {
  const auto m = match_candidate_edges(edges_from_pickups({{1.0, 1.5}, {1.2, 0.4}}));
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].rider, RiderId{0});
  EXPECT_EQ(m.pairs[1].rider, RiderId{1});
  EXPECT_NEAR(m.pairs[0].pickup_km + m.pairs[1].pickup_km, 1.4, 1e-12);
}

TEST(MatchTripsTest, SingleDriverTakesNearestRider) {
  Fixture f;
  const std::vector<DriverPosition> drivers{{DriverId{1}, {0, 0}}};
  const std::vector<TripRequest> riders{rider(1, {1.9, 0}, 3.0, f.params),
                                        rider(2, {0, 0.5}, 3.0, f.params)};
  const auto m = match_trips(drivers, riders, f.ctx());
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].rider, RiderId{2});
}

TEST(MatchTripsTest, PrefersMorePairsAmongEqualSavings) {
  // Driver 0 reaches both riders at the largest pickup (saving 0). Matching
  // it anyway costs nothing and serves one more rider.
  const auto m = match_candidate_edges(edges_from_pickups({{2.0, NAN}, {NAN, 1.0}}));
  EXPECT_EQ(m.pairs.size(), 2u);
}

// Random geometric instances: the solver maximises total saving, and within
// that maximises the number of pairs, so it also minimises the penalty
// objective.
TEST(MatchTripsTest, AgreesWithEnumerationOnRandomInstances) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> side(1, 8);
  std::uniform_real_distribution<double> coord(0.0, 4.0), km(0.5, 12.0);
  Fixture f;
  f.stats = {{ZoneId{0}, 3.0, 2.0}};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<DriverPosition> drivers;
    std::vector<TripRequest> riders;
    const std::size_t nd = side(rng), nr = side(rng);
    for (std::size_t d = 0; d < nd; ++d) {
      drivers.push_back({DriverId{static_cast<std::uint32_t>(d)}, {coord(rng), coord(rng)}});
    }
    for (std::size_t r = 0; r < nr; ++r) {
      riders.push_back(rider(static_cast<std::uint32_t>(r), {coord(rng), coord(rng)}, km(rng),
                             f.params));
    }
    const auto ctx = f.ctx();
    const auto edges = build_candidate_edges(drivers, riders, ctx);
    for (const auto& e : edges) ASSERT_LE(e.pickup_km, f.params.max_pickup_km);
    const auto solved = match_candidate_edges(edges);
    if (edges.empty()) {
      EXPECT_TRUE(solved.pairs.empty());
      continue;
    }
    const auto weights = trip_weight_matrix(edges);
    EXPECT_EQ(km_solve(weights.weights).total,
              oracle::brute_force_matching(weights.weights).total);

    WeightMatrix<double> sigma(weights.row_driver.size(), weights.col_rider.size());
    for (std::size_t i = 0; i < weights.edge_at.size(); ++i) {
      if (weights.edge_at[i] != nullptr) {
        sigma(i / sigma.cols(), i % sigma.cols()) = weights.edge_at[i]->saved_km;
      }
    }
    const auto best = oracle::brute_force_matching(sigma);
    EXPECT_NEAR(solved.total_weight, best.total, 1e-5);

    // Penalty objective minimised by direct enumeration over matchings.
    double max_pickup = 0.0;
    for (const auto& e : edges) max_pickup = std::max(max_pickup, e.pickup_km);
    std::vector<std::vector<double>> pickup(nd, std::vector<double>(nr, NAN));
    for (const auto& e : edges) pickup[e.driver.value][e.rider.value] = e.pickup_km;
    double best_penalty = INFINITY;
    std::vector<char> taken(nr, 0);
    std::function<void(std::size_t, double, std::size_t)> visit =
        [&](std::size_t d, double total, std::size_t matched) {
          if (d == nd) {
            best_penalty = std::min(
                best_penalty, total + max_pickup * static_cast<double>(nr - matched));
            return;
          }
          visit(d + 1, total, matched);
          for (std::size_t r = 0; r < nr; ++r) {
            if (taken[r] || std::isnan(pickup[d][r])) continue;
            taken[r] = 1;
            visit(d + 1, total + pickup[d][r], matched + 1);
            taken[r] = 0;
          }
        };
    visit(0, 0.0, 0);
    EXPECT_NEAR(penalty_objective(solved, edges, nr), best_penalty, 1e-5);

    std::set<std::uint32_t> used_d, used_r;
    for (const auto& t : solved.pairs) {
      EXPECT_TRUE(used_d.insert(t.driver.value).second);
      EXPECT_TRUE(used_r.insert(t.rider.value).second);
    }
  }
}

}  // namespace
}  // namespace taxisense
