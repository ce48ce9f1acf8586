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

// Scenario construction: configuration, the synthetic city, trip-record
// ingestion, and the JSON form of a fully materialised scenario.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taxisense/domain.hpp"
#include "taxisense/pricing.hpp"

namespace taxisense {

using Json = nlohmann::json;

struct ScenarioConfig {
  double horizon_s = 7200.0;
  double warmup_s = 900.0;  // trip-only lead-in before the measured horizon
  std::size_t n_type_a = 0;
  std::size_t n_type_b = 0;
  std::size_t n_tasks = 80;
  double expected_trips = 1000.0;  // over the horizon; "low" = 1000, "high" = 2000
  Params params;

  // Synthetic city: a long narrow box split into square-ish zones.
  double city_width_km = 4.0;
  double city_height_km = 14.0;
  std::size_t zone_cols = 2;
  std::size_t zone_rows = 7;
  Metric metric = Metric::kManhattan;
  std::optional<Location> depot;  // drawn uniformly when absent

  double demand_spread_km = 4.0;  // std-dev of the zone popularity kernel
  double trip_shape = 2.0;        // gamma shape of trip length; mean is l0
  double min_trip_km = 0.3;
  double outskirt_bias = 0.5;     // 0: uniform tasks; 1: density grows linearly outwards

  double trip_interval_s = 30.0;
  double bidding_start_s = 180.0;  // offset of the bidding phase in a cycle
  double settlement_s = 270.0;     // offset of the settlement phase
  double rider_ttl_s = 600.0;
  double task_dwell_s = 120.0;
  std::size_t max_bids_per_driver = 5;
  double bid_radius_km = 0.0;      // 0 means unlimited

  std::uint64_t seed = 1;
  std::string trip_file;           // optional CSV of trip records

  double cycle_s() const { return params.cycle_minutes * 60.0; }
  std::size_t cycle_count() const {
    return static_cast<std::size_t>(std::llround(horizon_s / cycle_s()));
  }
  ZoneGrid grid() const {
    return ZoneGrid(city_width_km, city_height_km, zone_cols, zone_rows);
  }

  void validate() const {
    params.validate();
    if (n_type_a + n_type_b == 0) throw ConfigError("n_type_a + n_type_b must be positive");
    if (!(horizon_s > 0.0)) throw ConfigError("horizon_s must be positive");
    if (!(warmup_s >= 0.0) || std::fabs(warmup_s / trip_interval_s -
                                        std::round(warmup_s / trip_interval_s)) > 1e-9) {
      throw ConfigError("warmup_s must be a non-negative multiple of trip_interval_s");
    }
    const double cycles = horizon_s / cycle_s();
    if (std::fabs(cycles - std::round(cycles)) > 1e-9) {
      throw ConfigError("horizon_s must be a multiple of the plan-cycle length");
    }
    if (!(expected_trips >= 0.0)) throw ConfigError("expected_trips must be non-negative");
    if (!(trip_interval_s > 0.0)) throw ConfigError("trip_interval_s must be positive");
    auto on_tick = [&](double offset, const char* name) {
      const double ticks = offset / trip_interval_s;
      if (offset <= 0.0 || offset >= cycle_s() || std::fabs(ticks - std::round(ticks)) > 1e-9) {
        throw ConfigError(std::string(name) + " must be a tick inside the cycle");
      }
    };
    on_tick(bidding_start_s, "bidding_start_s");
    on_tick(settlement_s, "settlement_s");
    if (settlement_s <= bidding_start_s) {
      throw ConfigError("settlement_s must come after bidding_start_s");
    }
    const double ticks_per_cycle = cycle_s() / trip_interval_s;
    if (std::fabs(ticks_per_cycle - std::round(ticks_per_cycle)) > 1e-9) {
      throw ConfigError("the plan cycle must be a whole number of trip intervals");
    }
    if (!(rider_ttl_s > 0.0)) throw ConfigError("rider_ttl_s must be positive");
    if (!(task_dwell_s >= 0.0)) throw ConfigError("task_dwell_s must be non-negative");
    if (!(bid_radius_km >= 0.0)) throw ConfigError("bid_radius_km must be non-negative");
    if (max_bids_per_driver == 0) throw ConfigError("max_bids_per_driver must be positive");
    if (!(outskirt_bias >= 0.0 && outskirt_bias <= 1.0)) {
      throw ConfigError("outskirt_bias must lie in [0, 1]");
    }
    if (!(trip_shape > 0.0) || !(demand_spread_km > 0.0) || !(min_trip_km >= 0.0)) {
      throw ConfigError("trip_shape and demand_spread_km must be positive");
    }
    (void)grid();
  }
};

struct DriverSpec {
  DriverId id;
  DriverKind kind = DriverKind::kTypeA;
  Location location;
  bool operator==(const DriverSpec&) const = default;
};

// Everything a run needs, fully materialised.
struct Scenario {
  ScenarioConfig config;
  Location depot;
  std::vector<DriverSpec> drivers;
  std::vector<SensingTask> tasks;
  std::vector<TripRequest> requests;     // sorted by release time; negative = warm-up
  std::vector<ZoneStats> zone_stats;     // indexed by zone
};

// ---------------------------------------------------------------------------
// Zone statistics

// Mean pickups (requests) and drop-offs (vehicles becoming free) per zone per
// plan cycle over a history spanning `cycles` cycles. An empty history falls
// back to one of each everywhere.
inline std::vector<ZoneStats> estimate_zone_stats(const std::vector<TripRequest>& history,
                                                  const ZoneGrid& grid, std::size_t cycles) {
  std::vector<ZoneStats> stats(grid.zone_count());
  for (std::size_t z = 0; z < stats.size(); ++z) stats[z].zone = ZoneId{z};
  if (history.empty() || cycles == 0) {
    for (ZoneStats& s : stats) s.expected_requests = s.expected_taxis = 1.0;
    return stats;
  }
  for (const TripRequest& r : history) {
    stats[grid.zone_of(r.origin).index].expected_requests += 1.0;
    stats[grid.zone_of(r.destination).index].expected_taxis += 1.0;
  }
  const double n = static_cast<double>(cycles);
  for (ZoneStats& s : stats) {
    s.expected_requests /= n;
    s.expected_taxis /= n;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), 0x7a11u};
  return std::mt19937_64(seq);
}

enum StreamSalt : std::uint64_t { kFleet = 1, kTasks = 2, kDemand = 3, kHistory = 4, kDepot = 5 };

class CityModel {
 public:
  CityModel(const ScenarioConfig& cfg) : cfg_(cfg), grid_(cfg.grid()) {
    std::vector<double> weights;
    const Location c = grid_.center();
    for (std::size_t z = 0; z < grid_.zone_count(); ++z) {
      const Location p = grid_.centroid(ZoneId{z});
      const double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
      weights.push_back(std::exp(-d2 / (2.0 * cfg.demand_spread_km * cfg.demand_spread_km)));
    }
    zones_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  const ZoneGrid& grid() const { return grid_; }

  Location uniform_point(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Location{grid_.origin().x + u(rng) * grid_.width(),
                    grid_.origin().y + u(rng) * grid_.height()};
  }

  Location popular_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Location c = grid_.centroid(ZoneId{zones_(rng)});
    return Location{c.x + (u(rng) - 0.5) * grid_.cell_width(),
                    c.y + (u(rng) - 0.5) * grid_.cell_height()};
  }

  // Origin from the popularity kernel; destination reached by travelling a
  // gamma-distributed distance towards a second popular point.
  std::pair<Location, Location> trip(std::mt19937_64& rng) {
    const double shape = cfg_.trip_shape;
    std::gamma_distribution<double> length(shape, cfg_.params.mean_trip_km / shape);
    for (;;) {
      const Location o = popular_point(rng);
      const Location toward = popular_point(rng);
      const double km = length(rng);
      if (km < cfg_.min_trip_km) continue;
      const double span = distance(o, toward, cfg_.metric);
      if (span <= 1e-9) continue;
      const double f = km / span;
      const Location d{o.x + f * (toward.x - o.x), o.y + f * (toward.y - o.y)};
      if (grid_.contains(d)) return {o, d};
    }
  }

 private:
  const ScenarioConfig& cfg_;
  ZoneGrid grid_;
  std::discrete_distribution<std::size_t> zones_;
};

inline std::vector<TripRequest> synthetic_requests(const ScenarioConfig& cfg, CityModel& city,
                                                   std::mt19937_64& rng, double from_s) {
  std::vector<TripRequest> out;
  if (cfg.expected_trips <= 0.0) return out;
  std::exponential_distribution<double> gap(cfg.expected_trips / cfg.horizon_s);
  double t = from_s + gap(rng);
  while (t < cfg.horizon_s) {
    const auto [o, d] = city.trip(rng);
    // Release times land on whole seconds, matching the trip-record format.
    out.push_back(make_trip(RiderId{static_cast<std::uint32_t>(out.size())}, std::floor(t), o,
                            d, distance(o, d, cfg.metric), cfg.params, cfg.rider_ttl_s));
    t += gap(rng);
  }
  return out;
}

}  // namespace detail

// Builds a scenario from the configuration and cfg.seed. Streams for the
// fleet, tasks, demand, and warm-up history are independent, so changing one
// count does not reshuffle the others.
inline Scenario generate_synthetic(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario s;
  s.config = cfg;
  detail::CityModel city(s.config);
  const ZoneGrid& grid = city.grid();

  auto depot_rng = detail::stream(cfg.seed, detail::kDepot);
  s.depot = cfg.depot ? *cfg.depot : city.uniform_point(depot_rng);

  auto fleet_rng = detail::stream(cfg.seed, detail::kFleet);
  for (std::size_t i = 0; i < cfg.n_type_a + cfg.n_type_b; ++i) {
    const DriverKind kind = i < cfg.n_type_a ? DriverKind::kTypeA : DriverKind::kTypeB;
    s.drivers.push_back(
        DriverSpec{DriverId{static_cast<std::uint32_t>(i)}, kind, city.uniform_point(fleet_rng)});
  }

  auto task_rng = detail::stream(cfg.seed, detail::kTasks);
  const Location c = grid.center();
  const double far = distance(c, grid.origin(), Metric::kEuclidean);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (s.tasks.size() < cfg.n_tasks) {
    const Location poi = city.uniform_point(task_rng);
    const double accept = (1.0 - cfg.outskirt_bias) +
                          cfg.outskirt_bias * distance(poi, c, Metric::kEuclidean) / far;
    if (u(task_rng) > accept) continue;
    s.tasks.push_back(
        make_task(TaskId{static_cast<std::uint32_t>(s.tasks.size())}, poi, s.depot, cfg.metric));
  }

  auto demand_rng = detail::stream(cfg.seed, detail::kDemand);
  s.requests = detail::synthetic_requests(s.config, city, demand_rng, -cfg.warmup_s);

  auto history_rng = detail::stream(cfg.seed, detail::kHistory);
  const std::vector<TripRequest> history = detail::synthetic_requests(s.config, city, history_rng, 0.0);
  s.zone_stats = estimate_zone_stats(history, grid, cfg.cycle_count());
  return s;
}

// ---------------------------------------------------------------------------
// Trip records

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct TripLoad {
  std::vector<TripRequest> trips;
  std::vector<RowError> errors;
};

// Reads `release_s,pu_zone,do_zone,distance_km` rows. Pickup and drop-off
// sit at zone centroids. Bad rows are reported with their line numbers; more
// than 10% bad rows aborts the load.
inline TripLoad parse_trip_records(std::istream& in, const ZoneGrid& grid, const Params& p,
                                   double ttl_s) {
  TripLoad out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trip records: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "release_s,pu_zone,do_zone,distance_km") {
    throw ConfigError("trip records: unexpected header '" + line + "'");
  }
  std::size_t line_no = 1, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    auto fail = [&](const std::string& why) { out.errors.push_back({line_no, why}); };
    if (fields.size() != 4) {
      fail("expected 4 fields, found " + std::to_string(fields.size()));
      continue;
    }
    try {
      std::size_t used = 0;
      const long long release = std::stoll(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("release_s");
      const long long pu = std::stoll(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("pu_zone");
      const long long dz = std::stoll(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("do_zone");
      const double km = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("distance_km");
      if (release < 0) {
        fail("negative release time");
        continue;
      }
      const auto zones = static_cast<long long>(grid.zone_count());
      if (pu < 0 || pu >= zones || dz < 0 || dz >= zones) {
        fail("zone id out of range");
        continue;
      }
      if (!std::isfinite(km) || km < 0.0) {
        fail("distance must be finite and non-negative");
        continue;
      }
      out.trips.push_back(make_trip(RiderId{0}, static_cast<double>(release),
                                    grid.centroid(ZoneId{static_cast<std::size_t>(pu)}),
                                    grid.centroid(ZoneId{static_cast<std::size_t>(dz)}), km, p,
                                    ttl_s));
    } catch (const std::invalid_argument&) {
      fail("non-numeric field");
    } catch (const std::out_of_range&) {
      fail("numeric field out of range");
    }
  }
  if (rows > 0 && out.errors.size() * 10 > rows) {
    throw ConfigError("trip records: " + std::to_string(out.errors.size()) + " of " +
                      std::to_string(rows) + " rows malformed (first at line " +
                      std::to_string(out.errors.front().line) + ": " +
                      out.errors.front().message + ")");
  }
  std::stable_sort(out.trips.begin(), out.trips.end(),
                   [](const TripRequest& a, const TripRequest& b) {
                     return a.release_s < b.release_s;
                   });
  for (std::size_t i = 0; i < out.trips.size(); ++i) {
    out.trips[i].id = RiderId{static_cast<std::uint32_t>(i)};
  }
  return out;
}

inline TripLoad load_trip_records(const std::string& path, const ZoneGrid& grid, const Params& p,
                                  double ttl_s) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read trip records '" + path + "'");
  return parse_trip_records(in, grid, p, ttl_s);
}

// ---------------------------------------------------------------------------
// JSON

inline Json params_to_json(const Params& p) {
  return Json{{"p_r_s", p.base_fare.to_double()},
              {"beta1", p.fare_per_km},
              {"beta2", p.fare_per_min},
              {"L0_s", p.base_fare_km},
              {"t0_s", p.base_fare_min},
              {"L_ub", p.max_pickup_km},
              {"mean_speed", p.mean_speed_kmh},
              {"alpha", p.driver_rate_per_km},
              {"b_lb", p.bid_lower},
              {"b_ub", p.bid_upper},
              {"mu", p.sensing_penalty_per_km},
              {"c_q", p.dedicated_cost_per_km},
              {"C", p.task_base_reward.to_double()},
              {"l0", p.mean_trip_km},
              {"f_m", p.opportunity_cost_cap.to_double()},
              {"omega", p.total_budget.to_double()},
              {"T0", p.cycle_minutes},
              {"compensation", p.compensation_form == CompensationForm::kValuationGap
                                   ? "valuation_gap"
                                   : "published_closed_form"}};
}

namespace detail {

template <typename T>
void read_field(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + key + ": wrong type");
  }
}

inline void read_money(const Json& j, const char* key, Money& out, const std::string& where) {
  if (!j.contains(key)) return;
  double v = 0.0;
  read_field(j, key, v, where);
  out = Money::from_double(v);
}

inline const std::vector<std::string>& known_param_keys() {
  static const std::vector<std::string> keys{
      "p_r_s", "beta1", "beta2", "L0_s", "t0_s", "L_ub", "mean_speed", "alpha", "b_lb",
      "b_ub",  "mu",    "c_q",   "C",    "l0",   "f_m",  "omega",      "T0",    "compensation"};
  return keys;
}

}  // namespace detail

inline Params params_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("params must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto& keys = detail::known_param_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("params." + key + ": unknown parameter");
    }
  }
  Params p;
  const std::string w = "params.";
  detail::read_money(j, "p_r_s", p.base_fare, w);
  detail::read_field(j, "beta1", p.fare_per_km, w);
  detail::read_field(j, "beta2", p.fare_per_min, w);
  detail::read_field(j, "L0_s", p.base_fare_km, w);
  detail::read_field(j, "t0_s", p.base_fare_min, w);
  detail::read_field(j, "L_ub", p.max_pickup_km, w);
  detail::read_field(j, "mean_speed", p.mean_speed_kmh, w);
  detail::read_field(j, "alpha", p.driver_rate_per_km, w);
  detail::read_field(j, "b_lb", p.bid_lower, w);
  detail::read_field(j, "b_ub", p.bid_upper, w);
  detail::read_field(j, "mu", p.sensing_penalty_per_km, w);
  detail::read_field(j, "c_q", p.dedicated_cost_per_km, w);
  detail::read_money(j, "C", p.task_base_reward, w);
  detail::read_field(j, "l0", p.mean_trip_km, w);
  detail::read_money(j, "f_m", p.opportunity_cost_cap, w);
  detail::read_money(j, "omega", p.total_budget, w);
  detail::read_field(j, "T0", p.cycle_minutes, w);
  if (j.contains("compensation")) {
    std::string form;
    detail::read_field(j, "compensation", form, w);
    if (form == "valuation_gap") {
      p.compensation_form = CompensationForm::kValuationGap;
    } else if (form == "published_closed_form") {
      p.compensation_form = CompensationForm::kPublishedClosedForm;
    } else {
      throw ConfigError("params.compensation: unknown form '" + form + "'");
    }
  }
  return p;
}

inline Json location_to_json(Location l) { return Json::array({l.x, l.y}); }

inline Location location_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [x, y]");
  }
  return Location::checked(j[0].get<double>(), j[1].get<double>());
}

inline Json config_to_json(const ScenarioConfig& c) {
  Json j{{"horizon_s", c.horizon_s},
         {"warmup_s", c.warmup_s},
         {"n_type_a", c.n_type_a},
         {"n_type_b", c.n_type_b},
         {"n_tasks", c.n_tasks},
         {"expected_trips", c.expected_trips},
         {"params", params_to_json(c.params)},
         {"city_width_km", c.city_width_km},
         {"city_height_km", c.city_height_km},
         {"zone_cols", c.zone_cols},
         {"zone_rows", c.zone_rows},
         {"metric", c.metric == Metric::kManhattan ? "manhattan" : "euclidean"},
         {"demand_spread_km", c.demand_spread_km},
         {"trip_shape", c.trip_shape},
         {"min_trip_km", c.min_trip_km},
         {"outskirt_bias", c.outskirt_bias},
         {"trip_interval_s", c.trip_interval_s},
         {"bidding_start_s", c.bidding_start_s},
         {"settlement_s", c.settlement_s},
         {"rider_ttl_s", c.rider_ttl_s},
         {"task_dwell_s", c.task_dwell_s},
         {"max_bids_per_driver", c.max_bids_per_driver},
         {"bid_radius_km", c.bid_radius_km},
         {"seed", c.seed}};
  if (c.depot) j["depot"] = location_to_json(*c.depot);
  if (!c.trip_file.empty()) j["trip_file"] = c.trip_file;
  return j;
}

// Parses a configuration document. n_type_a and n_type_b are required;
// "demand_level" may be "low", "high", or a number of trips over the horizon.
inline ScenarioConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const char* required : {"n_type_a", "n_type_b"}) {
    if (!j.contains(required)) throw ConfigError(std::string("missing required field: ") + required);
  }
  ScenarioConfig c;
  const std::string w;
  detail::read_field(j, "horizon_s", c.horizon_s, w);
  detail::read_field(j, "warmup_s", c.warmup_s, w);
  detail::read_field(j, "n_type_a", c.n_type_a, w);
  detail::read_field(j, "n_type_b", c.n_type_b, w);
  detail::read_field(j, "n_tasks", c.n_tasks, w);
  detail::read_field(j, "expected_trips", c.expected_trips, w);
  if (j.contains("demand_level")) {
    const Json& d = j.at("demand_level");
    if (d == "low") {
      c.expected_trips = 1000.0;
    } else if (d == "high") {
      c.expected_trips = 2000.0;
    } else if (d.is_number()) {
      c.expected_trips = d.get<double>();
    } else {
      throw ConfigError("demand_level: expected \"low\", \"high\", or a trip count");
    }
  }
  if (j.contains("params")) c.params = params_from_json(j.at("params"));
  detail::read_field(j, "city_width_km", c.city_width_km, w);
  detail::read_field(j, "city_height_km", c.city_height_km, w);
  detail::read_field(j, "zone_cols", c.zone_cols, w);
  detail::read_field(j, "zone_rows", c.zone_rows, w);
  if (j.contains("metric")) {
    std::string metric;
    detail::read_field(j, "metric", metric, w);
    if (metric == "manhattan") {
      c.metric = Metric::kManhattan;
    } else if (metric == "euclidean") {
      c.metric = Metric::kEuclidean;
    } else {
      throw ConfigError("metric: expected manhattan or euclidean");
    }
  }
  if (j.contains("depot")) c.depot = location_from_json(j.at("depot"), "depot");
  detail::read_field(j, "demand_spread_km", c.demand_spread_km, w);
  detail::read_field(j, "trip_shape", c.trip_shape, w);
  detail::read_field(j, "min_trip_km", c.min_trip_km, w);
  detail::read_field(j, "outskirt_bias", c.outskirt_bias, w);
  detail::read_field(j, "trip_interval_s", c.trip_interval_s, w);
  detail::read_field(j, "bidding_start_s", c.bidding_start_s, w);
  detail::read_field(j, "settlement_s", c.settlement_s, w);
  detail::read_field(j, "rider_ttl_s", c.rider_ttl_s, w);
  detail::read_field(j, "task_dwell_s", c.task_dwell_s, w);
  detail::read_field(j, "max_bids_per_driver", c.max_bids_per_driver, w);
  detail::read_field(j, "bid_radius_km", c.bid_radius_km, w);
  detail::read_field(j, "seed", c.seed, w);
  detail::read_field(j, "trip_file", c.trip_file, w);
  c.validate();
  return c;
}

inline Json scenario_to_json(const Scenario& s) {
  Json j = config_to_json(s.config);
  j["materialized"] = Json::object();
  Json& m = j["materialized"];
  m["depot"] = location_to_json(s.depot);
  m["drivers"] = Json::array();
  for (const DriverSpec& d : s.drivers) {
    m["drivers"].push_back({{"id", d.id.value},
                            {"kind", d.kind == DriverKind::kTypeA ? "A" : "B"},
                            {"location", location_to_json(d.location)}});
  }
  m["tasks"] = Json::array();
  for (const SensingTask& t : s.tasks) {
    m["tasks"].push_back({{"id", t.id.value},
                          {"poi", location_to_json(t.poi)},
                          {"depot_km", t.depot_distance_km}});
  }
  m["requests"] = Json::array();
  for (const TripRequest& r : s.requests) {
    m["requests"].push_back({{"id", r.id.value},
                             {"release_s", r.release_s},
                             {"origin", location_to_json(r.origin)},
                             {"destination", location_to_json(r.destination)},
                             {"distance_km", r.distance_km},
                             {"travel_min", r.travel_minutes},
                             {"expiry_s", r.expiry_s}});
  }
  m["zone_stats"] = Json::array();
  for (const ZoneStats& z : s.zone_stats) {
    m["zone_stats"].push_back({z.expected_requests, z.expected_taxis});
  }
  return j;
}

inline Scenario scenario_from_json(const Json& j) {
  Scenario s;
  Json cfg = j;
  cfg.erase("materialized");
  s.config = config_from_json(cfg);
  if (!j.contains("materialized")) throw ConfigError("missing required field: materialized");
  try {
    const Json& m = j.at("materialized");
    s.depot = location_from_json(m.at("depot"), "materialized.depot");
    for (const Json& d : m.at("drivers")) {
      const std::string kind = d.at("kind").get<std::string>();
      if (kind != "A" && kind != "B") throw ConfigError("driver kind must be A or B");
      s.drivers.push_back({DriverId{d.at("id").get<std::uint32_t>()},
                           kind == "A" ? DriverKind::kTypeA : DriverKind::kTypeB,
                           location_from_json(d.at("location"), "driver location")});
    }
    for (const Json& t : m.at("tasks")) {
      SensingTask task;
      task.id = TaskId{t.at("id").get<std::uint32_t>()};
      task.poi = location_from_json(t.at("poi"), "task poi");
      task.depot_distance_km = t.at("depot_km").get<double>();
      s.tasks.push_back(task);
    }
    for (const Json& r : m.at("requests")) {
      s.requests.push_back(TripRequest{RiderId{r.at("id").get<std::uint32_t>()},
                                       r.at("release_s").get<double>(),
                                       location_from_json(r.at("origin"), "request origin"),
                                       location_from_json(r.at("destination"), "request destination"),
                                       r.at("distance_km").get<double>(),
                                       r.at("travel_min").get<double>(),
                                       r.at("expiry_s").get<double>()});
    }
    std::size_t z = 0;
    for (const Json& st : m.at("zone_stats")) {
      s.zone_stats.push_back({ZoneId{z++}, st.at(0).get<double>(), st.at(1).get<double>()});
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("materialized scenario: ") + e.what());
  }
  if (s.zone_stats.size() != s.config.grid().zone_count()) {
    throw ConfigError("materialized scenario: zone_stats does not match the zone grid");
  }
  return s;
}

// FNV-1a over the canonical (key-sorted, compact) JSON text of the config.
inline std::string config_digest(const ScenarioConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// Builds the scenario a configuration describes: synthetic entities, with
// the trip file (if any) replacing the synthetic requests.
inline Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario s = generate_synthetic(cfg);
  if (!cfg.trip_file.empty()) {
    s.requests = load_trip_records(cfg.trip_file, s.config.grid(), cfg.params,
                                   cfg.rider_ttl_s).trips;
  }
  return s;
}

}  // namespace taxisense
