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
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "taxisense/domain.hpp"
#include "taxisense/kuhn_munkres.hpp"
#include "taxisense/money.hpp"
#include "taxisense/pricing.hpp"
#include "taxisense/trip_matching.hpp"

namespace taxisense {

// One driver's bid on one task: a unit price and the driver-to-POI distance.
struct Bid {
  DriverId driver;
  TaskId task;
  double unit_price = 0.0;
  double task_km = 0.0;
};

struct AuctionEntry {
  Valuation valuation;
  Money saving;  // c_q * l_qk - adjusted valuation
};

// Drivers x tasks table of valuations for one sensing round. Drivers and
// tasks are addressed by dense index; ids are kept for reporting.
class AuctionInstance {
 public:
  AuctionInstance() = default;
  AuctionInstance(std::vector<DriverId> drivers, std::vector<TaskId> tasks,
                  std::vector<Money> dedicated_costs)
      : drivers_(std::move(drivers)),
        tasks_(std::move(tasks)),
        dedicated_(std::move(dedicated_costs)),
        entries_(drivers_.size() * tasks_.size()) {
    if (dedicated_.size() != tasks_.size()) {
      throw std::invalid_argument("AuctionInstance: one dedicated cost per task");
    }
  }

  std::size_t driver_count() const { return drivers_.size(); }
  std::size_t task_count() const { return tasks_.size(); }
  DriverId driver(std::size_t d) const { return drivers_.at(d); }
  TaskId task(std::size_t k) const { return tasks_.at(k); }
  Money dedicated_cost(std::size_t k) const { return dedicated_.at(k); }

  void set_valuation(std::size_t d, std::size_t k, const Valuation& v) {
    check(d, k);
    entries_[d * tasks_.size() + k] = AuctionEntry{v, dedicated_[k] - v.adjusted};
  }
  void clear(std::size_t d, std::size_t k) {
    check(d, k);
    entries_[d * tasks_.size() + k].reset();
  }

  const std::optional<AuctionEntry>& entry(std::size_t d, std::size_t k) const {
    check(d, k);
    return entries_[d * tasks_.size() + k];
  }
  bool has_bid(std::size_t d, std::size_t k) const { return entry(d, k).has_value(); }

  std::optional<std::size_t> driver_index(DriverId id) const {
    const auto it = std::find(drivers_.begin(), drivers_.end(), id);
    if (it == drivers_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - drivers_.begin());
  }

 private:
  void check(std::size_t d, std::size_t k) const {
    if (d >= drivers_.size() || k >= tasks_.size()) {
      throw std::out_of_range("AuctionInstance: index out of range");
    }
  }

  std::vector<DriverId> drivers_;
  std::vector<TaskId> tasks_;
  std::vector<Money> dedicated_;
  std::vector<std::optional<AuctionEntry>> entries_;
};

// Builds the round instance from the released tasks and the submitted bids.
// Bids naming an unknown driver or task, or repeating a (driver, task) pair,
// are rejected; prices outside [b_lb, b_ub] raise std::domain_error.
inline AuctionInstance build_auction_instance(std::span<const DriverId> drivers,
                                              std::span<const SensingTask> tasks,
                                              std::span<const Bid> bids,
                                              const Params& p) {
  std::vector<TaskId> task_ids;
  std::vector<Money> costs;
  for (const SensingTask& t : tasks) {
    task_ids.push_back(t.id);
    costs.push_back(dedicated_cost(t.depot_distance_km, p));
  }
  AuctionInstance inst({drivers.begin(), drivers.end()}, task_ids, costs);
  std::unordered_map<DriverId, std::size_t> d_index;
  std::unordered_map<TaskId, std::size_t> k_index;
  for (std::size_t d = 0; d < drivers.size(); ++d) d_index.emplace(drivers[d], d);
  for (std::size_t k = 0; k < task_ids.size(); ++k) k_index.emplace(task_ids[k], k);
  for (const Bid& b : bids) {
    const auto di = d_index.find(b.driver);
    const auto ki = k_index.find(b.task);
    if (di == d_index.end() || ki == k_index.end()) {
      throw std::invalid_argument("bid references an unknown driver or task");
    }
    if (inst.has_bid(di->second, ki->second)) {
      throw std::invalid_argument("duplicate bid for a driver-task pair");
    }
    inst.set_valuation(di->second, ki->second,
                       adjusted_valuation(b.unit_price, b.task_km, p));
  }
  return inst;
}

struct AwardedPair {
  std::size_t driver = 0;  // index into the instance
  std::size_t task = 0;
  constexpr auto operator<=>(const AwardedPair&) const = default;
};

struct WinnerSelection {
  std::vector<AwardedPair> pairs;  // sorted by driver index
  Money objective;
  // Some task with a usable bid stayed unassigned because the drivers could
  // not cover every biddable task.
  bool coverage_shortfall = false;
};

namespace detail {

// Masks over an instance: active[d] == 0 removes driver d, blocked[d*K + k]
// removes a single pair. Empty spans mean "nothing removed".
struct PairFilter {
  std::span<const char> active;
  std::span<const char> blocked;

  bool usable(const AuctionInstance& inst, std::size_t d, std::size_t k) const {
    if (!active.empty() && !active[d]) return false;
    if (!blocked.empty() && blocked[d * inst.task_count() + k]) return false;
    return inst.has_bid(d, k);
  }
};

// Maximum-cardinality matching over the usable pairs, and among those the
// one maximising the sum of value(entry). Each usable edge gets weight
// BIG + value with BIG larger than the total absolute value, so a single
// extra pair always dominates.
template <typename ValueFn>
WinnerSelection solve_coverage(const AuctionInstance& inst, const PairFilter& filter,
                               ValueFn value) {
  WinnerSelection out;
  std::vector<std::size_t> rows, cols;
  std::vector<char> col_used(inst.task_count(), 0);
  std::int64_t big = 1;
  for (std::size_t d = 0; d < inst.driver_count(); ++d) {
    bool any = false;
    for (std::size_t k = 0; k < inst.task_count(); ++k) {
      if (!filter.usable(inst, d, k)) continue;
      any = true;
      col_used[k] = 1;
      big += std::llabs(value(*inst.entry(d, k)).ticks());
    }
    if (any) rows.push_back(d);
  }
  for (std::size_t k = 0; k < inst.task_count(); ++k) {
    if (col_used[k]) cols.push_back(k);
  }
  if (rows.empty()) return out;

  WeightMatrix<std::int64_t> w(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (filter.usable(inst, rows[r], cols[c])) {
        w(r, c) = big + value(*inst.entry(rows[r], cols[c])).ticks();
      }
    }
  }
  const Assignment<std::int64_t> solved = km_solve(w);
  for (const auto& [r, c] : solved.pairs) {
    out.pairs.push_back(AwardedPair{rows[r], cols[c]});
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.coverage_shortfall = out.pairs.size() < cols.size();
  return out;
}

inline const AwardedPair& find_winner(const WinnerSelection& sel, std::size_t d) {
  for (const AwardedPair& pr : sel.pairs) {
    if (pr.driver == d) return pr;
  }
  throw std::invalid_argument("payment requested for a driver that did not win");
}

inline std::vector<char> all_but(std::size_t n, std::size_t excluded) {
  std::vector<char> mask(n, 1);
  mask[excluded] = 0;
  return mask;
}

}  // namespace detail

inline Money total_saving(const AuctionInstance& inst,
                          const std::vector<AwardedPair>& pairs) {
  Money total;
  for (const AwardedPair& pr : pairs) total += inst.entry(pr.driver, pr.task)->saving;
  return total;
}

// Maximises the total cost saving among assignments that cover as many
// biddable tasks as possible. active (optional) switches drivers off.
inline WinnerSelection select_winners_vcg(const AuctionInstance& inst,
                                          std::span<const char> active = {}) {
  WinnerSelection sel = detail::solve_coverage(
      inst, detail::PairFilter{active, {}},
      [](const AuctionEntry& e) { return e.saving; });
  sel.objective = total_saving(inst, sel.pairs);
  return sel;
}

// Marginal-contribution payment: v + Pi - Pi(without d), with coverage
// re-evaluated on the reduced driver set.
inline Money vcg_payment(const AuctionInstance& inst, const WinnerSelection& sel,
                         std::size_t d) {
  const AwardedPair& pr = detail::find_winner(sel, d);
  const std::vector<char> mask = detail::all_but(inst.driver_count(), d);
  const Money without = select_winners_vcg(inst, mask).objective;
  return inst.entry(d, pr.task)->valuation.adjusted + sel.objective - without;
}

// ---------------------------------------------------------------------------
// Round execution shared by both mechanisms.

struct Settlement {
  DriverId driver;
  TaskId task;
  Money valuation;    // adjusted valuation
  Money upper_bound;
  Money payment;
  Money utility;      // payment - valuation
};

struct TripFix {
  RiderId rider;
  DriverId original;
  std::optional<DriverId> replacement;  // nullopt: the trip match was dropped
};

struct RoundOutcome {
  std::vector<Settlement> winners;  // sorted by driver id
  Money objective;
  std::vector<TripFix> displaced_trip_fixes;
  Money expenditure;
  bool coverage_shortfall = false;
  std::vector<TaskId> unassigned_tasks;  // go back to the pool
  std::vector<TaskId> relaxed_tasks;     // subset of unassigned_tasks
  std::optional<Money> round_budget;
  std::size_t pruning_steps = 0;
};

struct RoundResult {
  RoundOutcome outcome;
  TripMatching trips;
};

// A trip match whose driver just won a task is handed to the nearest idle
// driver that neither won nor already holds a trip, within the pickup
// radius; ties go to the smallest driver id. Without such a driver the trip
// match is dropped and the rider stays in the queue.
inline std::vector<TripFix> resolve_winner_conflicts(
    TripMatching& trips, const std::unordered_set<DriverId>& winners,
    std::span<const DriverPosition> idle_drivers, std::span<const TripRequest> riders,
    const MatchingContext& ctx) {
  std::vector<TripFix> fixes;
  if (winners.empty()) return fixes;
  std::unordered_set<DriverId> matched;
  for (const MatchedTrip& t : trips.pairs) matched.insert(t.driver);
  std::unordered_map<RiderId, const TripRequest*> rider_by_id;
  for (const TripRequest& r : riders) rider_by_id.emplace(r.id, &r);

  std::vector<MatchedTrip> kept;
  for (MatchedTrip t : trips.pairs) {
    if (!winners.contains(t.driver)) {
      kept.push_back(t);
      continue;
    }
    const auto rit = rider_by_id.find(t.rider);
    if (rit == rider_by_id.end()) {
      throw std::invalid_argument("trip match references an unknown rider");
    }
    const Location origin = rit->second->origin;
    const DriverPosition* best = nullptr;
    double best_km = 0.0;
    for (const DriverPosition& j : idle_drivers) {
      if (winners.contains(j.id) || matched.contains(j.id)) continue;
      const double km = distance(j.location, origin, ctx.metric);
      if (km > ctx.params.max_pickup_km) continue;
      if (best == nullptr || km < best_km || (km == best_km && j.id < best->id)) {
        best = &j;
        best_km = km;
      }
    }
    trips.total_weight -= trips.reference_pickup_km - t.pickup_km;
    if (best == nullptr) {
      fixes.push_back(TripFix{t.rider, t.driver, std::nullopt});
      continue;
    }
    fixes.push_back(TripFix{t.rider, t.driver, best->id});
    matched.insert(best->id);
    t.driver = best->id;
    t.pickup_km = best_km;
    trips.total_weight += trips.reference_pickup_km - best_km;
    kept.push_back(t);
  }
  std::sort(kept.begin(), kept.end(), [](const MatchedTrip& a, const MatchedTrip& b) {
    return a.driver < b.driver;
  });
  trips.pairs = std::move(kept);
  return fixes;
}

namespace detail {

template <typename PaymentFn>
RoundOutcome settle(const AuctionInstance& inst, const WinnerSelection& sel,
                    PaymentFn payment) {
  RoundOutcome out;
  out.objective = sel.objective;
  out.coverage_shortfall = sel.coverage_shortfall;
  std::vector<char> assigned(inst.task_count(), 0);
  for (const AwardedPair& pr : sel.pairs) {
    const AuctionEntry& e = *inst.entry(pr.driver, pr.task);
    const Money p = payment(pr.driver);
    out.winners.push_back(Settlement{inst.driver(pr.driver), inst.task(pr.task),
                                     e.valuation.adjusted, e.valuation.upper_bound, p,
                                     p - e.valuation.adjusted});
    out.expenditure += p;
    assigned[pr.task] = 1;
  }
  std::sort(out.winners.begin(), out.winners.end(),
            [](const Settlement& a, const Settlement& b) { return a.driver < b.driver; });
  for (std::size_t k = 0; k < inst.task_count(); ++k) {
    if (!assigned[k]) out.unassigned_tasks.push_back(inst.task(k));
  }
  return out;
}

inline std::unordered_set<DriverId> winner_ids(const RoundOutcome& o) {
  std::unordered_set<DriverId> ids;
  for (const Settlement& s : o.winners) ids.insert(s.driver);
  return ids;
}

}  // namespace detail

// Winner selection and payments only; no trip interaction.
inline RoundOutcome settle_vcg(const AuctionInstance& inst) {
  const WinnerSelection sel = select_winners_vcg(inst);
  return detail::settle(inst, sel, [&](std::size_t d) { return vcg_payment(inst, sel, d); });
}

// One sensing round under the VCG mechanism: award tasks, match trips over
// every idle driver, then hand conflicting trips to substitutes.
inline RoundResult run_vcg_round(const AuctionInstance& inst,
                                 std::span<const DriverPosition> idle_drivers,
                                 std::span<const TripRequest> riders,
                                 const MatchingContext& ctx) {
  RoundResult result;
  result.outcome = settle_vcg(inst);
  result.trips = match_trips(idle_drivers, riders, ctx);
  result.outcome.displaced_trip_fixes = resolve_winner_conflicts(
      result.trips, detail::winner_ids(result.outcome), idle_drivers, riders, ctx);
  return result;
}

}  // namespace taxisense
