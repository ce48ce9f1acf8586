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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "taxisense/money.hpp"

namespace taxisense {

// Raised for invalid scenario or parameter input. The CLI maps it to exit 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a state-machine transition would break a driver invariant.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Tag>
struct Id {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const Id&) const = default;
};

using DriverId = Id<struct DriverTag>;
using RiderId = Id<struct RiderTag>;
using TaskId = Id<struct TaskTag>;

// ---------------------------------------------------------------------------
// Geometry

// Planar position in km. Coordinates are always finite.
struct Location {
  double x = 0.0;
  double y = 0.0;

  constexpr bool operator==(const Location&) const = default;

  static Location checked(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw ConfigError("Location: coordinates must be finite");
    }
    return Location{x, y};
  }
};

enum class Metric { kEuclidean, kManhattan };

inline double distance(Location a, Location b, Metric metric) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  switch (metric) {
    case Metric::kManhattan:
      return std::fabs(dx) + std::fabs(dy);
    case Metric::kEuclidean:
      break;
  }
  return std::hypot(dx, dy);
}

struct ZoneId {
  std::size_t index = 0;
  constexpr auto operator<=>(const ZoneId&) const = default;
};

// Rectangular zone overlay, row-major from the south-west corner. Points
// outside the bounding box clamp to the nearest boundary zone.
class ZoneGrid {
 public:
  ZoneGrid() : ZoneGrid(1.0, 1.0, 1, 1) {}

  ZoneGrid(double width_km, double height_km, std::size_t cols,
           std::size_t rows, Location origin = {})
      : width_(width_km),
        height_(height_km),
        cols_(cols),
        rows_(rows),
        origin_(origin) {
    if (!(width_km > 0.0) || !(height_km > 0.0) || cols == 0 || rows == 0 ||
        !std::isfinite(width_km) || !std::isfinite(height_km)) {
      throw ConfigError("ZoneGrid: extent and cell counts must be positive");
    }
  }

  std::size_t zone_count() const { return cols_ * rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return rows_; }
  double width() const { return width_; }
  double height() const { return height_; }
  Location origin() const { return origin_; }
  double cell_width() const { return width_ / static_cast<double>(cols_); }
  double cell_height() const { return height_ / static_cast<double>(rows_); }

  ZoneId zone_of(Location loc) const {
    const std::size_t col = cell_index(loc.x - origin_.x, cell_width(), cols_);
    const std::size_t row = cell_index(loc.y - origin_.y, cell_height(), rows_);
    return ZoneId{row * cols_ + col};
  }

  Location centroid(ZoneId zone) const {
    if (zone.index >= zone_count()) {
      throw std::out_of_range("ZoneGrid::centroid: zone index out of range");
    }
    const std::size_t col = zone.index % cols_;
    const std::size_t row = zone.index / cols_;
    return Location{origin_.x + (static_cast<double>(col) + 0.5) * cell_width(),
                    origin_.y + (static_cast<double>(row) + 0.5) * cell_height()};
  }

  Location center() const {
    return Location{origin_.x + width_ / 2.0, origin_.y + height_ / 2.0};
  }

  bool contains(Location loc) const {
    return loc.x >= origin_.x && loc.x <= origin_.x + width_ &&
           loc.y >= origin_.y && loc.y <= origin_.y + height_;
  }

 private:
  static std::size_t cell_index(double offset, double cell, std::size_t n) {
    if (!(offset > 0.0)) return 0;
    const double idx = std::floor(offset / cell);
    if (idx >= static_cast<double>(n - 1)) return n - 1;
    return static_cast<std::size_t>(idx);
  }

  double width_;
  double height_;
  std::size_t cols_;
  std::size_t rows_;
  Location origin_;
};

// ---------------------------------------------------------------------------
// Parameters

// How the compensating function closes the gap between the stated and the
// hidden valuation. kValuationGap is s = max{hidden - stated, 0}, which keeps
// the upper bound C + b_ub*l + s(b_ub, l) above every admissible adjusted
// valuation. kPublishedClosedForm evaluates alpha*l + mu*(l - l0) - B*l past
// the break-even distance; it omits the base reward C and can therefore
// exceed the upper bound when b_ub < alpha + mu.
enum class CompensationForm { kValuationGap, kPublishedClosedForm };

struct Params {
  Money base_fare = Money::units(12);   // p_r^s
  double fare_per_km = 1.70;            // beta1
  double fare_per_min = 0.50;           // beta2
  double base_fare_km = 3.0;            // L0^s
  double base_fare_min = 10.0;          // t0^s
  double max_pickup_km = 2.0;           // L_ub
  double mean_speed_kmh = 35.0;         // V-bar
  double driver_rate_per_km = 2.0;      // alpha
  double bid_lower = 2.0;               // b_lb
  double bid_upper = 4.0;               // b_ub
  double sensing_penalty_per_km = 1.0;  // mu
  double dedicated_cost_per_km = 8.0;   // c_q
  Money task_base_reward = Money::units(15);       // C
  double mean_trip_km = 3.0;                       // l0
  Money opportunity_cost_cap = Money::units(10);   // f_m
  Money total_budget = Money::units(2000);         // Omega
  double cycle_minutes = 5.0;                      // T0
  CompensationForm compensation_form = CompensationForm::kValuationGap;

  double cycle_hours() const { return cycle_minutes / 60.0; }

  // Travel time in minutes for a distance at the mean speed.
  double travel_minutes(double km) const { return 60.0 * km / mean_speed_kmh; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("params.") + name + " must be positive");
      }
    };
    positive(fare_per_km, "beta1");
    positive(fare_per_min, "beta2");
    positive(base_fare_km, "L0_s");
    positive(base_fare_min, "t0_s");
    positive(max_pickup_km, "L_ub");
    positive(mean_speed_kmh, "mean_speed");
    positive(driver_rate_per_km, "alpha");
    positive(bid_lower, "b_lb");
    positive(bid_upper, "b_ub");
    positive(sensing_penalty_per_km, "mu");
    positive(dedicated_cost_per_km, "c_q");
    positive(mean_trip_km, "l0");
    positive(cycle_minutes, "T0");
    if (base_fare <= Money{}) throw ConfigError("params.p_r_s must be positive");
    if (task_base_reward <= Money{}) throw ConfigError("params.C must be positive");
    if (opportunity_cost_cap <= Money{}) throw ConfigError("params.f_m must be positive");
    if (total_budget < Money{}) throw ConfigError("params.omega must be non-negative");
    if (!(driver_rate_per_km <= bid_lower && bid_lower <= bid_upper &&
          bid_upper <= dedicated_cost_per_km)) {
      throw ConfigError("params: require alpha <= b_lb <= b_ub <= c_q");
    }
  }
};

// ---------------------------------------------------------------------------
// Agents and demand

enum class DriverKind { kTypeA, kTypeB };

enum class Mechanism { kVcg, kRbc };

inline const char* to_string(Mechanism m) {
  return m == Mechanism::kVcg ? "vcg" : "rbc";
}

inline Mechanism parse_mechanism(const std::string& name) {
  if (name == "vcg") return Mechanism::kVcg;
  if (name == "rbc") return Mechanism::kRbc;
  throw ConfigError("unknown mechanism '" + name + "' (expected vcg or rbc)");
}

enum class Activity { kIdle, kOnTrip, kOnTask, kAwaitingAuction };

inline const char* to_string(Activity a) {
  switch (a) {
    case Activity::kIdle: return "idle";
    case Activity::kOnTrip: return "on_trip";
    case Activity::kOnTask: return "on_task";
    case Activity::kAwaitingAuction: return "awaiting_auction";
  }
  return "?";
}

// A vehicle. Only Type-B vehicles may bid on or execute sensing tasks; every
// transition enforces that.
class Driver {
 public:
  Driver(DriverId id, DriverKind kind, Location location)
      : id_(id), kind_(kind), location_(location) {}

  DriverId id() const { return id_; }
  DriverKind kind() const { return kind_; }
  Location location() const { return location_; }
  Activity activity() const { return activity_; }
  std::optional<double> busy_until() const { return until_; }
  Money earnings() const { return earnings_; }
  Money cost_basis() const { return cost_basis_; }
  bool is_idle() const { return activity_ == Activity::kIdle; }

  void start_trip(double now_s, double until_s, Location destination) {
    require_available("start_trip");
    set_until(now_s, until_s);
    activity_ = Activity::kOnTrip;
    next_location_ = destination;
  }

  void start_task(double now_s, double until_s, Location poi) {
    require_type_b("start_task");
    require_available("start_task");
    set_until(now_s, until_s);
    activity_ = Activity::kOnTask;
    next_location_ = poi;
  }

  void await_auction() {
    require_type_b("await_auction");
    if (activity_ != Activity::kIdle) {
      throw StateError("await_auction: driver is not idle");
    }
    activity_ = Activity::kAwaitingAuction;
  }

  void leave_auction() {
    if (activity_ != Activity::kAwaitingAuction) {
      throw StateError("leave_auction: driver is not awaiting an auction");
    }
    activity_ = Activity::kIdle;
  }

  // Completes the current trip or task if it ends at or before now_s. The
  // driver repositions to the trip destination / task POI.
  bool complete_if_due(double now_s) {
    if ((activity_ != Activity::kOnTrip && activity_ != Activity::kOnTask) ||
        !until_ || *until_ > now_s) {
      return false;
    }
    activity_ = Activity::kIdle;
    location_ = next_location_;
    until_.reset();
    return true;
  }

  void credit(Money amount) { earnings_ += amount; }
  void add_cost_basis(Money amount) { cost_basis_ += amount; }

 private:
  void require_type_b(const char* what) const {
    if (kind_ != DriverKind::kTypeB) {
      throw StateError(std::string(what) + ": Type-A drivers never take sensing tasks");
    }
  }
  void require_available(const char* what) const {
    if (activity_ != Activity::kIdle && activity_ != Activity::kAwaitingAuction) {
      throw StateError(std::string(what) + ": driver is busy");
    }
  }
  void set_until(double now_s, double until_s) {
    if (!(until_s >= now_s)) {
      throw StateError("busy-until timestamp precedes the current time");
    }
    until_ = until_s;
  }

  DriverId id_;
  DriverKind kind_;
  Location location_;
  Location next_location_{};
  Activity activity_ = Activity::kIdle;
  std::optional<double> until_;
  Money earnings_{};
  Money cost_basis_{};
};

struct TripRequest {
  RiderId id;
  double release_s = 0.0;
  Location origin;
  Location destination;
  double distance_km = 0.0;     // L_r
  double travel_minutes = 0.0;  // t_r
  double expiry_s = 0.0;
};

inline TripRequest make_trip(RiderId id, double release_s, Location origin,
                             Location destination, double distance_km,
                             const Params& params, double ttl_s) {
  if (!(distance_km >= 0.0) || !std::isfinite(distance_km)) {
    throw ConfigError("trip distance must be finite and non-negative");
  }
  return TripRequest{id,          release_s,
                     origin,      destination,
                     distance_km, params.travel_minutes(distance_km),
                     release_s + ttl_s};
}

enum class TaskState { kPending, kAssigned, kFallback, kDeferred };

inline const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::kPending: return "pending";
    case TaskState::kAssigned: return "assigned";
    case TaskState::kFallback: return "fallback";
    case TaskState::kDeferred: return "deferred";
  }
  return "?";
}

struct SensingTask {
  TaskId id;
  Location poi;
  std::size_t release_cycle = 0;
  double depot_distance_km = 0.0;  // l_qk
  TaskState state = TaskState::kPending;
  std::optional<DriverId> assigned_to;
};

inline SensingTask make_task(TaskId id, Location poi, Location depot,
                             Metric metric) {
  return SensingTask{id, poi, 0, distance(depot, poi, metric),
                     TaskState::kPending, std::nullopt};
}

}  // namespace taxisense

template <typename Tag>
struct std::hash<taxisense::Id<Tag>> {
  std::size_t operator()(const taxisense::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
