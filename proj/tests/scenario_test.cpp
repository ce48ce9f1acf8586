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
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "taxisense/scenario.hpp"

namespace taxisense {
namespace {

ScenarioConfig small_config(std::uint64_t seed = 7) {
  ScenarioConfig c;
  c.n_type_a = 10;
  c.n_type_b = 5;
  c.seed = seed;
  return c;
}

std::size_t in_horizon(const Scenario& s) {
  std::size_t n = 0;
  for (const TripRequest& r : s.requests) n += r.release_s >= 0.0 ? 1 : 0;
  return n;
}

TEST(ScenarioConfigTest, ValidatesFleetAndHorizon) {
  ScenarioConfig c;
  EXPECT_THROW(c.validate(), ConfigError);
  c.n_type_b = 1;
  EXPECT_NO_THROW(c.validate());
  c.horizon_s = 7250;
  EXPECT_THROW(c.validate(), ConfigError);
  c.horizon_s = 7200;
  c.settlement_s = 150;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ScenarioConfigTest, CycleCount) {
  ScenarioConfig c = small_config();
  EXPECT_EQ(c.cycle_count(), 24u);
  EXPECT_DOUBLE_EQ(c.cycle_s(), 300.0);
}

TEST(GenerateSyntheticTest, DeterministicPerSeed) {
  const Scenario a = generate_synthetic(small_config(3));
  const Scenario b = generate_synthetic(small_config(3));
  EXPECT_EQ(scenario_to_json(a), scenario_to_json(b));
  const Scenario c = generate_synthetic(small_config(4));
  EXPECT_NE(scenario_to_json(a), scenario_to_json(c));
}

TEST(GenerateSyntheticTest, EntityCountsAndBounds) {
  const Scenario s = generate_synthetic(small_config());
  const ZoneGrid grid = s.config.grid();
  ASSERT_EQ(s.drivers.size(), 15u);
  EXPECT_EQ(s.drivers[9].kind, DriverKind::kTypeA);
  EXPECT_EQ(s.drivers[10].kind, DriverKind::kTypeB);
  EXPECT_EQ(s.tasks.size(), 80u);
  EXPECT_TRUE(grid.contains(s.depot));
  for (const SensingTask& t : s.tasks) {
    EXPECT_TRUE(grid.contains(t.poi));
    EXPECT_DOUBLE_EQ(t.depot_distance_km, distance(s.depot, t.poi, Metric::kManhattan));
  }
  for (std::size_t i = 0; i < s.requests.size(); ++i) {
    const TripRequest& r = s.requests[i];
    EXPECT_TRUE(grid.contains(r.origin));
    EXPECT_TRUE(grid.contains(r.destination));
    EXPECT_LT(r.release_s, s.config.horizon_s);
    EXPECT_GE(r.release_s, -s.config.warmup_s);
    EXPECT_NEAR(r.distance_km, distance(r.origin, r.destination, Metric::kManhattan), 1e-9);
    EXPECT_DOUBLE_EQ(r.expiry_s, r.release_s + s.config.rider_ttl_s);
    if (i > 0) EXPECT_GE(r.release_s, s.requests[i - 1].release_s);
  }
  EXPECT_EQ(s.zone_stats.size(), 14u);
}

TEST(GenerateSyntheticTest, FleetDoesNotDependOnDemand) {
  ScenarioConfig low = small_config(11), high = small_config(11);
  high.expected_trips = 2000;
  const Scenario a = generate_synthetic(low), b = generate_synthetic(high);
  EXPECT_EQ(a.drivers, b.drivers);
  EXPECT_EQ(a.depot, b.depot);
  ASSERT_EQ(a.tasks.size(), b.tasks.size());
  for (std::size_t k = 0; k < a.tasks.size(); ++k) EXPECT_EQ(a.tasks[k].poi, b.tasks[k].poi);
}

TEST(GenerateSyntheticTest, PoissonCountConcentration) {
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Scenario s = generate_synthetic(small_config(seed));
    const double n = static_cast<double>(in_horizon(s));
    if (std::fabs(n - 1000.0) <= 3.0 * std::sqrt(1000.0)) ++inside;
  }
  EXPECT_GE(inside, 99);
}

TEST(GenerateSyntheticTest, MeanTripLengthNearTarget) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (const TripRequest& r : generate_synthetic(small_config(seed)).requests) {
      total += r.distance_km;
      ++n;
    }
  }
  EXPECT_NEAR(total / static_cast<double>(n), 3.0, 0.3);
}

TEST(GenerateSyntheticTest, OutskirtBiasPushesTasksOutward) {
  auto mean_offset = [](double bias) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ScenarioConfig c = small_config(seed);
      c.outskirt_bias = bias;
      const Scenario s = generate_synthetic(c);
      for (const SensingTask& t : s.tasks) {
        total += distance(t.poi, s.config.grid().center(), Metric::kEuclidean);
      }
    }
    return total;
  };
  EXPECT_GT(mean_offset(1.0), mean_offset(0.0));
}

TEST(GenerateSyntheticTest, ZeroTasksAndZeroDemand) {
  ScenarioConfig c = small_config();
  c.n_tasks = 0;
  c.expected_trips = 0;
  const Scenario s = generate_synthetic(c);
  EXPECT_TRUE(s.tasks.empty());
  EXPECT_TRUE(s.requests.empty());
}

TEST(EstimateZoneStatsTest, MeanPerCycle) {
  const Params p;
  const ZoneGrid grid(4, 14, 2, 7);
  std::vector<TripRequest> history;
  const Location z3 = grid.centroid(ZoneId{3});
  const Location z5 = grid.centroid(ZoneId{5});
  for (int i = 0; i < 120; ++i) {
    history.push_back(make_trip(RiderId{static_cast<std::uint32_t>(i)}, i, z3, z5, 2.0, p, 600));
  }
  const auto stats = estimate_zone_stats(history, grid, 12);
  EXPECT_DOUBLE_EQ(stats[3].expected_requests, 10.0);
  EXPECT_DOUBLE_EQ(stats[5].expected_taxis, 10.0);
  EXPECT_DOUBLE_EQ(stats[0].expected_requests, 0.0);
  EXPECT_EQ(trip_opportunity_cost(stats[0], p), p.opportunity_cost_cap);
  EXPECT_DOUBLE_EQ(estimate_zone_stats(history, grid, 1)[3].expected_requests, 120.0);
}

TEST(EstimateZoneStatsTest, EmptyHistoryFallsBackToOnes) {
  const ZoneGrid grid(4, 14, 2, 7);
  for (const ZoneStats& s : estimate_zone_stats({}, grid, 24)) {
    EXPECT_EQ(s.expected_requests, 1.0);
    EXPECT_EQ(s.expected_taxis, 1.0);
  }
}

TripLoad parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trip_records(in, ZoneGrid(4, 14, 2, 7), Params{}, 600);
}

TEST(TripRecordsTest, HeaderOnlyGivesEmptyList) {
  const TripLoad load = parse("release_s,pu_zone,do_zone,distance_km\n");
  EXPECT_TRUE(load.trips.empty());
  EXPECT_TRUE(load.errors.empty());
}

TEST(TripRecordsTest, FieldMapping) {
  const TripLoad load = parse("release_s,pu_zone,do_zone,distance_km\n60,2,5,3.1\n");
  ASSERT_EQ(load.trips.size(), 1u);
  const TripRequest& r = load.trips[0];
  const ZoneGrid grid(4, 14, 2, 7);
  EXPECT_DOUBLE_EQ(r.release_s, 60.0);
  EXPECT_DOUBLE_EQ(r.distance_km, 3.1);
  EXPECT_EQ(r.origin, grid.centroid(ZoneId{2}));
  EXPECT_EQ(r.destination, grid.centroid(ZoneId{5}));
  EXPECT_DOUBLE_EQ(r.expiry_s, 660.0);
}

TEST(TripRecordsTest, SortsByReleaseAndRenumbers) {
  const TripLoad load =
      parse("release_s,pu_zone,do_zone,distance_km\r\n90,1,1,1.0\r\n30,0,1,2.0\r\n");
  ASSERT_EQ(load.trips.size(), 2u);
  EXPECT_DOUBLE_EQ(load.trips[0].release_s, 30.0);
  EXPECT_EQ(load.trips[0].id, RiderId{0});
  EXPECT_EQ(load.trips[1].id, RiderId{1});
}

TEST(TripRecordsTest, BadRowsReportedWithLineNumbers) {
  std::string text = "release_s,pu_zone,do_zone,distance_km\n";
  for (int i = 0; i < 19; ++i) text += std::to_string(i) + ",1,2,1.5\n";
  text += "20,1,2,-1\n";
  const TripLoad load = parse(text);
  EXPECT_EQ(load.trips.size(), 19u);
  ASSERT_EQ(load.errors.size(), 1u);
  EXPECT_EQ(load.errors[0].line, 21u);
}

TEST(TripRecordsTest, AbortsPastTenPercentMalformed) {
  std::string text = "release_s,pu_zone,do_zone,distance_km\n";
  for (int i = 0; i < 8; ++i) text += std::to_string(i) + ",1,2,1.5\n";
  text += "x,1,2,1\n";
  text += "5,99,2,1\n";
  EXPECT_THROW(parse(text), ConfigError);
}

TEST(TripRecordsTest, RejectsMissingOrWrongHeader) {
  EXPECT_THROW(parse(""), ConfigError);
  EXPECT_THROW(parse("a,b,c,d\n1,1,1,1\n"), ConfigError);
}

TEST(TripRecordsTest, UnreadableFile) {
  EXPECT_THROW(load_trip_records("/nonexistent/trips.csv", ZoneGrid(), Params{}, 600),
               std::ios_base::failure);
}

TEST(ScenarioJsonTest, RoundTripIsExact) {
  const Scenario s = generate_synthetic(small_config(21));
  const Json j = scenario_to_json(s);
  const Scenario back = scenario_from_json(Json::parse(j.dump()));
  EXPECT_EQ(scenario_to_json(back), j);
  ASSERT_EQ(back.requests.size(), s.requests.size());
  for (std::size_t i = 0; i < s.requests.size(); ++i) {
    EXPECT_EQ(back.requests[i].release_s, s.requests[i].release_s);
    EXPECT_EQ(back.requests[i].origin, s.requests[i].origin);
    EXPECT_EQ(back.requests[i].distance_km, s.requests[i].distance_km);
  }
  EXPECT_EQ(back.drivers, s.drivers);
  EXPECT_EQ(config_digest(back.config), config_digest(s.config));
}

TEST(ConfigJsonTest, RequiresFleetFields) {
  try {
    config_from_json(Json{{"n_type_a", 3}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_type_b"), std::string::npos);
  }
}

TEST(ConfigJsonTest, ParsesParamsAndDemandLevel) {
  const Json j = Json::parse(R"({"n_type_a": 120, "n_type_b": 20, "demand_level": "high",
                                 "params": {"b_lb": 3, "b_ub": 5, "omega": 1500.5,
                                            "compensation": "published_closed_form"}})");
  const ScenarioConfig c = config_from_json(j);
  EXPECT_EQ(c.expected_trips, 2000.0);
  EXPECT_EQ(c.params.bid_lower, 3.0);
  EXPECT_EQ(c.params.bid_upper, 5.0);
  EXPECT_EQ(c.params.total_budget, Money::from_double(1500.5));
  EXPECT_EQ(c.params.compensation_form, CompensationForm::kPublishedClosedForm);
  EXPECT_EQ(config_from_json(config_to_json(c)).params.total_budget, c.params.total_budget);
}

TEST(ConfigJsonTest, RejectsBadValues) {
  EXPECT_THROW(config_from_json(Json{{"n_type_a", "x"}, {"n_type_b", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"n_type_a", 1}, {"n_type_b", 1}, {"params", {{"zz", 1}}}}),
               ConfigError);
  EXPECT_THROW(config_from_json(Json{{"n_type_a", 1}, {"n_type_b", 1}, {"demand_level", "mid"}}),
               ConfigError);
  EXPECT_THROW(
      config_from_json(Json{{"n_type_a", 1}, {"n_type_b", 1}, {"params", {{"b_lb", 5}}}}),
      ConfigError);
  EXPECT_THROW(config_from_json(Json::array()), ConfigError);
}

TEST(ConfigDigestTest, StableAndSensitive) {
  ScenarioConfig a = small_config(), b = small_config();
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
  b.params.bid_upper = 5.0;
  EXPECT_NE(config_digest(a), config_digest(b));
}

}  // namespace
}  // namespace taxisense
