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

// Money-valued formulas: rider fares, driver trip earnings, both opportunity
// costs, and the valuation stack used when Type-B drivers bid on sensing
// tasks. Every function computes in double precision and rounds once to
// Money at the end.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "taxisense/domain.hpp"
#include "taxisense/money.hpp"

namespace taxisense {

// Expected requests and available taxis per plan cycle in one zone.
struct ZoneStats {
  ZoneId zone;
  double expected_requests = 0.0;
  double expected_taxis = 0.0;
};

namespace detail {
inline void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be finite and non-negative");
  }
}
}  // namespace detail

inline Money rider_fare(double trip_km, double trip_minutes, const Params& p) {
  detail::require_non_negative(trip_km, "rider_fare: distance");
  detail::require_non_negative(trip_minutes, "rider_fare: travel time");
  const double distance_part =
      std::max(0.0, p.fare_per_km * (trip_km - p.base_fare_km));
  const double time_part =
      std::max(0.0, p.fare_per_min * (trip_minutes - p.base_fare_min));
  return p.base_fare + Money::from_double(distance_part + time_part);
}

// Expected cruising-time cost of ending a trip in the given zone, capped at
// f_m. A zone with no expected requests returns the cap.
inline Money trip_opportunity_cost(const ZoneStats& stats, const Params& p) {
  detail::require_non_negative(stats.expected_requests, "zone requests");
  detail::require_non_negative(stats.expected_taxis, "zone taxis");
  if (stats.expected_requests <= 0.0) return p.opportunity_cost_cap;
  const double cruising = p.driver_rate_per_km * p.mean_speed_kmh *
                          p.cycle_hours() * (stats.expected_taxis + 1.0) /
                          (2.0 * stats.expected_requests);
  return std::min(p.opportunity_cost_cap, Money::from_double(cruising));
}

inline Money driver_trip_earning(double trip_km, const ZoneStats& destination,
                                 const Params& p) {
  detail::require_non_negative(trip_km, "driver_trip_earning: distance");
  return Money::from_double(p.driver_rate_per_km * trip_km) +
         trip_opportunity_cost(destination, p);
}

inline Money sensing_opportunity_cost(double task_km, const Params& p) {
  detail::require_non_negative(task_km, "sensing_opportunity_cost: distance");
  return Money::from_double(
      std::max(0.0, p.sensing_penalty_per_km * (task_km - p.mean_trip_km)));
}

// Expected payoff of an equal-distance trip: alpha*l plus the sensing
// opportunity cost past l0.
inline Money hidden_valuation(double task_km, const Params& p) {
  detail::require_non_negative(task_km, "hidden_valuation: distance");
  const double alpha = p.driver_rate_per_km;
  const double l0 = p.mean_trip_km;
  if (task_km <= l0) return Money::from_double(alpha * task_km);
  return Money::from_double(alpha * l0 +
                            (alpha + p.sensing_penalty_per_km) * (task_km - l0));
}

inline void check_bid(double unit_price, const Params& p) {
  if (!std::isfinite(unit_price) || unit_price < p.bid_lower ||
      unit_price > p.bid_upper) {
    throw std::domain_error("bid " + std::to_string(unit_price) +
                            " outside [" + std::to_string(p.bid_lower) + ", " +
                            std::to_string(p.bid_upper) + "]");
  }
}

inline Money stated_valuation(double unit_price, double task_km,
                              const Params& p) {
  return p.task_base_reward + Money::from_double(unit_price * task_km);
}

// Distance past which the stated valuation falls below the hidden one, or
// +inf when the bid is at least alpha + mu.
inline double break_even_distance(double unit_price, const Params& p) {
  const double slope = p.driver_rate_per_km + p.sensing_penalty_per_km - unit_price;
  if (slope <= 0.0) return INFINITY;
  return (p.task_base_reward.to_double() +
          p.sensing_penalty_per_km * p.mean_trip_km) / slope;
}

inline Money compensation(double unit_price, double task_km, const Params& p) {
  check_bid(unit_price, p);
  detail::require_non_negative(task_km, "compensation: distance");
  switch (p.compensation_form) {
    case CompensationForm::kValuationGap: {
      const Money gap =
          hidden_valuation(task_km, p) - stated_valuation(unit_price, task_km, p);
      return std::max(gap, Money{});
    }
    case CompensationForm::kPublishedClosedForm: {
      if (task_km <= break_even_distance(unit_price, p)) return Money{};
      return Money::from_double(
          p.driver_rate_per_km * task_km +
          p.sensing_penalty_per_km * (task_km - p.mean_trip_km) -
          unit_price * task_km);
    }
  }
  return Money{};
}

struct Valuation {
  Money hidden;        // reservation payoff
  Money stated;        // C + B*l
  Money compensation;  // s(B, l)
  Money adjusted;      // stated + compensation
  Money upper_bound;   // C + b_ub*l + s(b_ub, l)
  double unit_price = 0.0;
  double task_km = 0.0;
};

inline Valuation adjusted_valuation(double unit_price, double task_km,
                                    const Params& p) {
  Valuation v;
  v.compensation = compensation(unit_price, task_km, p);
  v.hidden = hidden_valuation(task_km, p);
  v.stated = stated_valuation(unit_price, task_km, p);
  v.adjusted = v.stated + v.compensation;
  v.upper_bound = stated_valuation(p.bid_upper, task_km, p) +
                  compensation(p.bid_upper, task_km, p);
  v.unit_price = unit_price;
  v.task_km = task_km;
  return v;
}

// Valuation carrying only the two figures the auctions consume. Used for
// instances specified directly in money terms.
inline Valuation bare_valuation(Money adjusted, Money upper_bound) {
  Valuation v;
  v.stated = adjusted;
  v.adjusted = adjusted;
  v.upper_bound = upper_bound;
  return v;
}

inline Money dedicated_cost(double depot_km, const Params& p) {
  detail::require_non_negative(depot_km, "dedicated_cost: distance");
  return Money::from_double(p.dedicated_cost_per_km * depot_km);
}

// delta = c_q * l_qk - v. Negative savings are legitimate.
inline Money cost_saving(double depot_km, Money adjusted, const Params& p) {
  return dedicated_cost(depot_km, p) - adjusted;
}

}  // namespace taxisense
