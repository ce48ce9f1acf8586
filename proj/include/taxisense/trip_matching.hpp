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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "taxisense/domain.hpp"
#include "taxisense/kuhn_munkres.hpp"
#include "taxisense/pricing.hpp"

namespace taxisense {

// Everything a matching interval needs besides the agents themselves.
struct MatchingContext {
  const Params& params;
  const ZoneGrid& grid;
  std::span<const ZoneStats> zone_stats;  // indexed by ZoneId::index
  Metric metric = Metric::kManhattan;

  const ZoneStats& stats_at(Location loc) const {
    const ZoneId zone = grid.zone_of(loc);
    if (zone.index >= zone_stats.size()) {
      throw std::out_of_range("MatchingContext: no statistics for zone");
    }
    return zone_stats[zone.index];
  }
};

struct DriverPosition {
  DriverId id;
  Location location;
};

struct CandidateEdge {
  DriverId driver;
  RiderId rider;
  double pickup_km = 0.0;  // L_dr
  double saved_km = 0.0;   // sigma_dr = max surviving L_dr - L_dr
};

struct MatchedTrip {
  DriverId driver;
  RiderId rider;
  double pickup_km = 0.0;
};

struct TripMatching {
  std::vector<MatchedTrip> pairs;  // sorted by driver id
  double total_weight = 0.0;       // sum of saved_km over pairs
  double reference_pickup_km = 0.0;  // largest surviving pickup distance
};

// Platform revenue of serving the rider is non-negative (fare >= driver
// earning). Depends on the rider only.
inline bool revenue_feasible(const TripRequest& rider, const MatchingContext& ctx) {
  const Money fare = rider_fare(rider.distance_km, rider.travel_minutes, ctx.params);
  const Money earning = driver_trip_earning(
      rider.distance_km, ctx.stats_at(rider.destination), ctx.params);
  return fare - earning >= Money{};
}

// Feasible driver-rider edges, ordered by (driver id, rider id). The saved
// distance is measured against the largest pickup distance among the
// surviving edges, so it is never negative.
inline std::vector<CandidateEdge> build_candidate_edges(
    std::span<const DriverPosition> drivers, std::span<const TripRequest> riders,
    const MatchingContext& ctx) {
  std::vector<CandidateEdge> edges;
  if (drivers.empty() || riders.empty()) return edges;

  std::vector<char> rider_ok(riders.size());
  for (std::size_t r = 0; r < riders.size(); ++r) {
    rider_ok[r] = revenue_feasible(riders[r], ctx) ? 1 : 0;
  }
  for (const DriverPosition& d : drivers) {
    for (std::size_t r = 0; r < riders.size(); ++r) {
      if (!rider_ok[r]) continue;
      const double pickup = distance(d.location, riders[r].origin, ctx.metric);
      if (pickup > ctx.params.max_pickup_km) continue;
      edges.push_back(CandidateEdge{d.id, riders[r].id, pickup, 0.0});
    }
  }
  double max_pickup = 0.0;
  for (const CandidateEdge& e : edges) max_pickup = std::max(max_pickup, e.pickup_km);
  for (CandidateEdge& e : edges) e.saved_km = max_pickup - e.pickup_km;
  std::sort(edges.begin(), edges.end(), [](const CandidateEdge& a, const CandidateEdge& b) {
    return a.driver != b.driver ? a.driver < b.driver : a.rider < b.rider;
  });
  return edges;
}

// Integer weight matrix over the drivers and riders that have at least one
// edge. Saved distance is quantised to millimetres and scaled so that one
// extra matched pair never outweighs a millimetre of saving; among optimal
// matchings the solver therefore prefers the one with more pairs.
struct TripWeightMatrix {
  WeightMatrix<std::int64_t> weights;
  std::vector<DriverId> row_driver;
  std::vector<RiderId> col_rider;
  std::vector<const CandidateEdge*> edge_at;  // row-major, nullptr if absent
};

inline TripWeightMatrix trip_weight_matrix(const std::vector<CandidateEdge>& edges) {
  TripWeightMatrix m;
  for (const CandidateEdge& e : edges) {
    m.row_driver.push_back(e.driver);
    m.col_rider.push_back(e.rider);
  }
  auto unique_sorted = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(m.row_driver);
  unique_sorted(m.col_rider);
  const std::size_t rows = m.row_driver.size();
  const std::size_t cols = m.col_rider.size();
  m.weights = WeightMatrix<std::int64_t>(rows, cols);
  m.edge_at.assign(rows * cols, nullptr);
  const auto cardinality_scale = static_cast<std::int64_t>(std::min(rows, cols) + 1);
  for (const CandidateEdge& e : edges) {
    const auto r = static_cast<std::size_t>(
        std::lower_bound(m.row_driver.begin(), m.row_driver.end(), e.driver) -
        m.row_driver.begin());
    const auto c = static_cast<std::size_t>(
        std::lower_bound(m.col_rider.begin(), m.col_rider.end(), e.rider) -
        m.col_rider.begin());
    const std::int64_t saved_mm = std::llround(e.saved_km * 1.0e6);
    m.weights(r, c) = saved_mm * cardinality_scale + 1;
    m.edge_at[r * cols + c] = &e;
  }
  return m;
}

inline TripMatching match_candidate_edges(const std::vector<CandidateEdge>& edges) {
  TripMatching out;
  if (edges.empty()) return out;
  for (const CandidateEdge& e : edges) {
    out.reference_pickup_km = std::max(out.reference_pickup_km, e.pickup_km);
  }
  const TripWeightMatrix m = trip_weight_matrix(edges);
  const Assignment<std::int64_t> solved = km_solve(m.weights);
  for (const auto& [r, c] : solved.pairs) {
    const CandidateEdge* e = m.edge_at[r * m.col_rider.size() + c];
    out.pairs.push_back(MatchedTrip{e->driver, e->rider, e->pickup_km});
    out.total_weight += e->saved_km;
  }
  return out;
}

// Trip matching for one interval: maximises total saved pickup distance
// subject to one rider per driver, the pickup radius, and non-negative
// platform revenue.
inline TripMatching match_trips(std::span<const DriverPosition> drivers,
                                std::span<const TripRequest> riders,
                                const MatchingContext& ctx) {
  return match_candidate_edges(build_candidate_edges(drivers, riders, ctx));
}

// Objective of the penalty formulation: total pickup distance plus the
// largest surviving pickup distance for every rider left unmatched.
inline double penalty_objective(const TripMatching& matching,
                                const std::vector<CandidateEdge>& edges,
                                std::size_t rider_count) {
  double max_pickup = 0.0;
  for (const CandidateEdge& e : edges) max_pickup = std::max(max_pickup, e.pickup_km);
  double total = 0.0;
  for (const MatchedTrip& t : matching.pairs) total += t.pickup_km;
  return total + max_pickup * static_cast<double>(rider_count - matching.pairs.size());
}

}  // namespace taxisense
