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
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "taxisense/auction_vcg.hpp"
#include "taxisense/money.hpp"

namespace taxisense {

// Tracks the platform budget across rounds. Each round is opened with the
// number of tasks released now and the number still outstanding, and closed
// with what was actually paid.
class BudgetLedger {
 public:
  explicit BudgetLedger(Money total) : total_(total) {
    if (total < Money{}) throw std::invalid_argument("BudgetLedger: negative budget");
  }

  Money total() const { return total_; }
  const std::vector<Money>& spent_per_round() const { return spent_; }
  Money spent() const {
    return std::accumulate(spent_.begin(), spent_.end(), Money{});
  }
  Money remaining() const { return total_ - spent(); }
  std::size_t released_this_round() const { return released_; }
  std::size_t remaining_tasks() const { return remaining_tasks_; }

  void open_round(std::size_t released, std::size_t remaining_tasks) {
    if (released > remaining_tasks) {
      throw std::invalid_argument("BudgetLedger: more tasks released than remain");
    }
    released_ = released;
    remaining_tasks_ = remaining_tasks;
  }

  void close_round(Money theta) {
    if (theta < Money{}) throw std::invalid_argument("BudgetLedger: negative spend");
    if (theta > remaining()) {
      throw std::logic_error("BudgetLedger: round spend exceeds the remaining budget");
    }
    spent_.push_back(theta);
  }

 private:
  Money total_;
  std::vector<Money> spent_{Money{}};  // Theta_0 = 0
  std::size_t released_ = 0;
  std::size_t remaining_tasks_ = 0;
};

// Omega_T = K_T / K_r * (Omega - sum Theta), rounded down to the tick.
inline Money round_budget(const BudgetLedger& ledger) {
  const std::size_t kt = ledger.released_this_round();
  const std::size_t kr = ledger.remaining_tasks();
  if (kt == 0) return Money{};
  if (kr == 0) throw std::logic_error("round_budget: tasks released but none remain");
  const __int128 scaled = static_cast<__int128>(ledger.remaining().ticks()) *
                          static_cast<__int128>(kt) / static_cast<__int128>(kr);
  return Money::from_ticks(static_cast<std::int64_t>(scaled));
}

// Pairs pruned during winner selection, and the tasks whose every bidder
// ended up pruned.
class TabuList {
 public:
  TabuList() = default;
  explicit TabuList(const AuctionInstance& inst)
      : tasks_(inst.task_count()),
        blocked_(inst.driver_count() * inst.task_count(), 0),
        relaxed_mask_(inst.task_count(), 0) {}

  bool forbidden(std::size_t d, std::size_t k) const { return blocked_[d * tasks_ + k]; }
  const std::vector<AwardedPair>& forbidden_pairs() const { return order_; }
  const std::vector<std::size_t>& relaxed_tasks() const { return relaxed_; }
  bool relaxed(std::size_t k) const { return relaxed_mask_[k]; }
  std::span<const char> mask() const { return blocked_; }

  // Adds (d, k); relaxes k once no bidder on it remains usable.
  void add(const AuctionInstance& inst, std::size_t d, std::size_t k) {
    if (blocked_[d * tasks_ + k]) return;
    blocked_[d * tasks_ + k] = 1;
    order_.push_back(AwardedPair{d, k});
    for (std::size_t j = 0; j < inst.driver_count(); ++j) {
      if (inst.has_bid(j, k) && !blocked_[j * tasks_ + k]) return;
    }
    relaxed_mask_[k] = 1;
    relaxed_.push_back(k);
  }

 private:
  std::size_t tasks_ = 0;
  std::vector<char> blocked_;
  std::vector<AwardedPair> order_;
  std::vector<char> relaxed_mask_;
  std::vector<std::size_t> relaxed_;
};

struct RbcSelection {
  WinnerSelection selection;  // objective holds Psi' = sum of adjusted valuations
  TabuList tabu;
  Money upper_bound_total;    // sum of v-bar over the final pairs
  std::size_t pruning_steps = 0;
};

inline Money total_valuation(const AuctionInstance& inst,
                             const std::vector<AwardedPair>& pairs) {
  Money total;
  for (const AwardedPair& pr : pairs) {
    total += inst.entry(pr.driver, pr.task)->valuation.adjusted;
  }
  return total;
}

inline Money total_upper_bound(const AuctionInstance& inst,
                               const std::vector<AwardedPair>& pairs) {
  Money total;
  for (const AwardedPair& pr : pairs) {
    total += inst.entry(pr.driver, pr.task)->valuation.upper_bound;
  }
  return total;
}

// Minimum total valuation among maximum-coverage assignments on the pairs the
// tabu list still allows; no budget constraint.
inline WinnerSelection solve_min_valuation(const AuctionInstance& inst,
                                           const TabuList& tabu,
                                           std::span<const char> active = {}) {
  WinnerSelection sel = detail::solve_coverage(
      inst, detail::PairFilter{active, tabu.mask()},
      [](const AuctionEntry& e) { return -e.valuation.adjusted; });
  sel.objective = total_valuation(inst, sel.pairs);
  return sel;
}

// Greedy budget pruning: while the selected pairs' upper bounds exceed the
// round budget, forbid the selected pair with the largest valuation (ties:
// larger upper bound, then larger driver id) and re-solve.
inline RbcSelection select_winners_rbc(const AuctionInstance& inst, Money budget) {
  if (budget < Money{}) throw std::invalid_argument("select_winners_rbc: negative budget");
  RbcSelection out{{}, TabuList(inst), {}, 0};
  for (;;) {
    out.selection = solve_min_valuation(inst, out.tabu);
    out.upper_bound_total = total_upper_bound(inst, out.selection.pairs);
    if (out.upper_bound_total <= budget) return out;
    const AwardedPair* worst = nullptr;
    for (const AwardedPair& pr : out.selection.pairs) {
      if (worst == nullptr) {
        worst = &pr;
        continue;
      }
      const Valuation& a = inst.entry(pr.driver, pr.task)->valuation;
      const Valuation& b = inst.entry(worst->driver, worst->task)->valuation;
      if (a.adjusted != b.adjusted) {
        if (a.adjusted > b.adjusted) worst = &pr;
      } else if (a.upper_bound != b.upper_bound) {
        if (a.upper_bound > b.upper_bound) worst = &pr;
      } else if (inst.driver(pr.driver) > inst.driver(worst->driver)) {
        worst = &pr;
      }
    }
    out.tabu.add(inst, worst->driver, worst->task);
    ++out.pruning_steps;
  }
}

// Payment for winner d: v-bar when removing d lowers the optimum, otherwise
// v plus the marginal increase, capped at v-bar. The reduced problem keeps
// the final tabu list and drops the budget constraint.
inline Money rbc_payment(const AuctionInstance& inst, const RbcSelection& sel,
                         std::size_t d) {
  const AwardedPair& pr = detail::find_winner(sel.selection, d);
  const Valuation& v = inst.entry(d, pr.task)->valuation;
  const std::vector<char> mask = detail::all_but(inst.driver_count(), d);
  const Money without = solve_min_valuation(inst, sel.tabu, mask).objective;
  const Money with = sel.selection.objective;
  if (without < with) return v.upper_bound;
  return std::min(v.adjusted + (without - with), v.upper_bound);
}

inline RoundOutcome settle_rbc(const AuctionInstance& inst, Money budget) {
  const RbcSelection sel = select_winners_rbc(inst, budget);
  RoundOutcome out = detail::settle(inst, sel.selection,
                                    [&](std::size_t d) { return rbc_payment(inst, sel, d); });
  for (std::size_t k : sel.tabu.relaxed_tasks()) out.relaxed_tasks.push_back(inst.task(k));
  std::sort(out.relaxed_tasks.begin(), out.relaxed_tasks.end());
  out.round_budget = budget;
  out.pruning_steps = sel.pruning_steps;
  return out;
}

// One sensing round under budget control. The ledger must have been opened
// for this round; it is closed with the round's total payment.
inline RoundResult run_rbc_round(const AuctionInstance& inst,
                                 std::span<const DriverPosition> idle_drivers,
                                 std::span<const TripRequest> riders,
                                 const MatchingContext& ctx, BudgetLedger& ledger) {
  RoundResult result;
  result.outcome = settle_rbc(inst, round_budget(ledger));
  result.trips = match_trips(idle_drivers, riders, ctx);
  result.outcome.displaced_trip_fixes = resolve_winner_conflicts(
      result.trips, detail::winner_ids(result.outcome), idle_drivers, riders, ctx);
  ledger.close_round(result.outcome.expenditure);
  return result;
}

}  // namespace taxisense
