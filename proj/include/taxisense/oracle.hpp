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

// Exhaustive reference solvers and the incentive-compatibility probe. These
// are deliberately naive and only accept small instances.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taxisense/auction_rbc.hpp"
#include "taxisense/auction_vcg.hpp"
#include "taxisense/kuhn_munkres.hpp"
#include "taxisense/pricing.hpp"

namespace taxisense::oracle {

inline constexpr std::size_t kMaxMatchingSide = 8;
inline constexpr std::size_t kMaxAuctionSide = 7;

// Best partial matching by enumeration. Rows choose a column or stay out.
template <EdgeWeight W>
Assignment<W> brute_force_matching(const WeightMatrix<W>& weights) {
  if (weights.rows() > kMaxMatchingSide || weights.cols() > kMaxMatchingSide) {
    throw std::length_error("brute_force_matching: instance larger than 8x8");
  }
  Assignment<W> best;
  std::vector<std::pair<std::size_t, std::size_t>> current;
  std::vector<char> used(weights.cols(), 0);
  std::function<void(std::size_t, W)> visit = [&](std::size_t r, W total) {
    if (r == weights.rows()) {
      if (total > best.total) {
        best.total = total;
        best.pairs = current;
      }
      return;
    }
    visit(r + 1, total);
    for (std::size_t c = 0; c < weights.cols(); ++c) {
      if (used[c] || !weights.present(r, c)) continue;
      used[c] = 1;
      current.emplace_back(r, c);
      visit(r + 1, total + weights(r, c));
      current.pop_back();
      used[c] = 0;
    }
  };
  visit(0, W{});
  return best;
}

enum class Objective { kMaxSaving, kMinValuation };

struct SelectionQuery {
  Objective objective = Objective::kMaxSaving;
  bool coverage = true;          // restrict to maximum-cardinality assignments
  std::optional<Money> budget;   // sum of upper bounds must not exceed it
  const TabuList* tabu = nullptr;
  std::span<const char> active;  // empty: every driver takes part
};

struct OracleSelection {
  std::vector<AwardedPair> pairs;
  Money value;
};

// Enumerates every one-to-one assignment of drivers to tasks that respects
// the tabu list and budget; with coverage only the largest ones compete.
inline OracleSelection brute_force_winner_selection(const AuctionInstance& inst,
                                                    const SelectionQuery& q) {
  if (inst.driver_count() > kMaxAuctionSide || inst.task_count() > kMaxAuctionSide) {
    throw std::length_error("brute_force_winner_selection: instance larger than 7x7");
  }
  OracleSelection best;
  std::size_t best_size = 0;
  bool found = false;
  std::vector<AwardedPair> current;
  std::vector<char> used(inst.task_count(), 0);

  auto score = [&](const AuctionEntry& e) {
    return q.objective == Objective::kMaxSaving ? e.saving : -e.valuation.adjusted;
  };
  std::function<void(std::size_t, Money, Money)> visit = [&](std::size_t d, Money value,
                                                             Money upper) {
    if (d == inst.driver_count()) {
      if (q.budget && upper > *q.budget) return;
      const std::size_t size = current.size();
      bool better = !found;
      if (found) {
        if (q.coverage && size != best_size) {
          better = size > best_size;
        } else {
          better = value > best.value;
        }
      }
      if (better) {
        found = true;
        best_size = size;
        best.value = value;
        best.pairs = current;
      }
      return;
    }
    visit(d + 1, value, upper);
    if (!q.active.empty() && !q.active[d]) return;
    for (std::size_t k = 0; k < inst.task_count(); ++k) {
      if (used[k] || !inst.has_bid(d, k)) continue;
      if (q.tabu != nullptr && q.tabu->forbidden(d, k)) continue;
      const AuctionEntry& e = *inst.entry(d, k);
      used[k] = 1;
      current.push_back(AwardedPair{d, k});
      visit(d + 1, value + score(e), upper + e.valuation.upper_bound);
      current.pop_back();
      used[k] = 0;
    }
  };
  visit(0, Money{}, Money{});
  if (q.objective == Objective::kMinValuation) best.value = -best.value;
  return best;
}

// The greedy pruning loop with every inner optimisation done by enumeration.
inline RbcSelection reference_rbc_selection(const AuctionInstance& inst, Money budget) {
  RbcSelection out{{}, TabuList(inst), {}, 0};
  for (;;) {
    SelectionQuery q;
    q.objective = Objective::kMinValuation;
    q.tabu = &out.tabu;
    const OracleSelection sel = brute_force_winner_selection(inst, q);
    out.selection.pairs = sel.pairs;
    out.selection.objective = sel.value;
    out.upper_bound_total = total_upper_bound(inst, sel.pairs);
    if (out.upper_bound_total <= budget) return out;
    const AwardedPair* worst = nullptr;
    for (const AwardedPair& pr : out.selection.pairs) {
      const Valuation& a = inst.entry(pr.driver, pr.task)->valuation;
      if (worst == nullptr) {
        worst = &pr;
        continue;
      }
      const Valuation& b = inst.entry(worst->driver, worst->task)->valuation;
      const auto key_a = std::make_tuple(a.adjusted, a.upper_bound, inst.driver(pr.driver));
      const auto key_b = std::make_tuple(b.adjusted, b.upper_bound, inst.driver(worst->driver));
      if (key_a > key_b) worst = &pr;
    }
    out.tabu.add(inst, worst->driver, worst->task);
    ++out.pruning_steps;
  }
}

// ---------------------------------------------------------------------------
// Bid-level instances for incentive probing.

struct ProbeInstance {
  std::size_t drivers = 0;
  std::size_t tasks = 0;
  std::vector<double> depot_km;                // per task
  std::vector<double> unit_price;              // truthful price per driver
  std::vector<std::optional<double>> task_km;  // drivers x tasks, nullopt: no bid
  Money round_budget;                          // used by the budgeted mechanism

  const std::optional<double>& km(std::size_t d, std::size_t k) const {
    return task_km[d * tasks + k];
  }
};

// Auction with every driver reporting its truthful price, except that
// `deviant` (if given) reports `price` instead.
inline AuctionInstance probe_auction(const ProbeInstance& probe, const Params& p,
                                     std::optional<std::size_t> deviant = std::nullopt,
                                     double price = 0.0) {
  std::vector<DriverId> ids;
  std::vector<TaskId> task_ids;
  std::vector<Money> costs;
  for (std::size_t d = 0; d < probe.drivers; ++d) {
    ids.push_back(DriverId{static_cast<std::uint32_t>(d)});
  }
  for (std::size_t k = 0; k < probe.tasks; ++k) {
    task_ids.push_back(TaskId{static_cast<std::uint32_t>(k)});
    costs.push_back(dedicated_cost(probe.depot_km[k], p));
  }
  AuctionInstance inst(ids, task_ids, costs);
  for (std::size_t d = 0; d < probe.drivers; ++d) {
    const double b = deviant && *deviant == d ? price : probe.unit_price[d];
    for (std::size_t k = 0; k < probe.tasks; ++k) {
      if (probe.km(d, k)) inst.set_valuation(d, k, adjusted_valuation(b, *probe.km(d, k), p));
    }
  }
  return inst;
}

inline RoundOutcome settle(Mechanism m, const AuctionInstance& inst, Money budget) {
  return m == Mechanism::kVcg ? settle_vcg(inst) : settle_rbc(inst, budget);
}

// Utility of driver d in an outcome, measured against its truthful valuation
// of whichever task it won. Losers have utility zero.
inline Money true_utility(const ProbeInstance& probe, const Params& p,
                          const RoundOutcome& outcome, std::size_t d) {
  for (const Settlement& s : outcome.winners) {
    if (s.driver.value != d) continue;
    const double km = *probe.km(d, s.task.value);
    return s.payment - adjusted_valuation(probe.unit_price[d], km, p).adjusted;
  }
  return Money{};
}

struct IcProbeResult {
  Money gain;                  // best deviant utility minus truthful utility
  Money truthful_utility;
  double best_price = 0.0;     // deviation achieving the gain
};

inline IcProbeResult ic_probe(Mechanism m, const ProbeInstance& probe, const Params& p,
                              std::size_t driver, std::span<const double> grid) {
  if (probe.drivers > kMaxAuctionSide || probe.tasks > kMaxAuctionSide) {
    throw std::length_error("ic_probe: instance larger than 7x7");
  }
  if (driver >= probe.drivers) throw std::out_of_range("ic_probe: driver index");
  IcProbeResult r;
  r.truthful_utility =
      true_utility(probe, p, settle(m, probe_auction(probe, p), probe.round_budget), driver);
  r.gain = Money::from_ticks(std::numeric_limits<std::int64_t>::min());
  for (double price : grid) {
    const RoundOutcome dev =
        settle(m, probe_auction(probe, p, driver, price), probe.round_budget);
    const Money gain = true_utility(probe, p, dev, driver) - r.truthful_utility;
    if (gain > r.gain) {
      r.gain = gain;
      r.best_price = price;
    }
  }
  if (grid.empty()) r.gain = Money{};
  return r;
}

inline std::vector<double> bid_grid(const Params& p, double step = 0.25) {
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((p.bid_upper - p.bid_lower) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(p.bid_lower + step * static_cast<double>(i));
  return grid;
}

// Random bid-level instance. Bids are sparse, distances cover both sides of
// the compensation threshold, and the round budget ranges from nothing to
// more than every task's most expensive bid.
inline ProbeInstance random_probe_instance(std::mt19937_64& rng, const Params& p,
                                           std::size_t max_drivers, std::size_t max_tasks) {
  std::uniform_int_distribution<std::size_t> nd(1, max_drivers), nk(1, max_tasks);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ProbeInstance probe;
  probe.drivers = nd(rng);
  probe.tasks = nk(rng);
  const std::vector<double> grid = bid_grid(p);
  for (std::size_t k = 0; k < probe.tasks; ++k) {
    probe.depot_km.push_back(0.5 + 11.5 * unit(rng));
  }
  for (std::size_t d = 0; d < probe.drivers; ++d) {
    if (unit(rng) < 0.5) {
      probe.unit_price.push_back(grid[static_cast<std::size_t>(unit(rng) * grid.size()) % grid.size()]);
    } else {
      probe.unit_price.push_back(p.bid_lower + (p.bid_upper - p.bid_lower) * unit(rng));
    }
  }
  const double density = 0.3 + 0.7 * unit(rng);
  probe.task_km.resize(probe.drivers * probe.tasks);
  Money budget_cap;
  std::vector<Money> priciest(probe.tasks);
  for (std::size_t d = 0; d < probe.drivers; ++d) {
    for (std::size_t k = 0; k < probe.tasks; ++k) {
      if (unit(rng) >= density) continue;
      const double km = unit(rng) < 0.8 ? 0.2 + 5.8 * unit(rng) : 6.0 + 19.0 * unit(rng);
      probe.task_km[d * probe.tasks + k] = km;
      priciest[k] = std::max(priciest[k], adjusted_valuation(p.bid_upper, km, p).upper_bound);
    }
  }
  for (Money m : priciest) budget_cap += m;
  probe.round_budget = Money::from_double(1.2 * unit(rng) * budget_cap.to_double());
  return probe;
}

// ---------------------------------------------------------------------------
// Property suites over random instances. Each returns how many checks ran,
// how many failed, the worst observed value, and the first failing case.

struct Violation {
  Mechanism mechanism = Mechanism::kVcg;
  std::size_t instance_index = 0;
  ProbeInstance instance;
  std::optional<std::size_t> driver;
  std::optional<double> deviation_price;
  Money magnitude;
  std::string what;
};

struct SuiteResult {
  std::size_t instances = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  std::optional<Violation> first;

  bool passed() const { return violations == 0; }
  void fail(Violation v) {
    ++violations;
    if (!first) first = std::move(v);
  }
};

// Individual rationality: no winner is paid less than its valuation.
// `worst` is the smallest winner utility seen.
inline SuiteResult ir_suite(Mechanism m, std::size_t n, std::uint64_t seed, const Params& p,
                            std::size_t max_side = 5) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  r.worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const ProbeInstance probe = random_probe_instance(rng, p, max_side, max_side);
    const RoundOutcome out = settle(m, probe_auction(probe, p), probe.round_budget);
    ++r.instances;
    for (const Settlement& w : out.winners) {
      ++r.checks;
      r.worst = std::min(r.worst, w.utility.to_double());
      if (w.utility < Money{}) {
        r.fail({m, i, probe, w.driver.value, std::nullopt, w.utility,
                "winner paid " + w.payment.to_string() + " against valuation " +
                    w.valuation.to_string()});
      }
    }
  }
  if (r.checks == 0) r.worst = 0.0;
  return r;
}

// Incentive compatibility: no driver gains by quoting another grid price.
// `worst` is the largest gain seen.
inline SuiteResult ic_suite(Mechanism m, std::size_t n, std::uint64_t seed, const Params& p,
                            std::size_t max_side = 5) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  const std::vector<double> grid = bid_grid(p);
  r.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const ProbeInstance probe = random_probe_instance(rng, p, max_side, max_side);
    ++r.instances;
    for (std::size_t d = 0; d < probe.drivers; ++d) {
      const IcProbeResult res = ic_probe(m, probe, p, d, grid);
      r.checks += grid.size();
      r.worst = std::max(r.worst, res.gain.to_double());
      if (res.gain > Money{}) {
        r.fail({m, i, probe, d, res.best_price, res.gain,
                "deviating from " + std::to_string(probe.unit_price[d]) + " to " +
                    std::to_string(res.best_price) + " gains " + res.gain.to_string()});
      }
    }
  }
  if (r.checks == 0) r.worst = 0.0;
  return r;
}

// Budget balance of the budgeted mechanism: a round never pays more than its
// budget. `worst` is the largest spend-to-budget ratio seen.
inline SuiteResult bb_suite(std::size_t n, std::uint64_t seed, const Params& p,
                            std::size_t max_side = 6) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const ProbeInstance probe = random_probe_instance(rng, p, max_side, max_side);
    const RoundOutcome out = settle_rbc(probe_auction(probe, p), probe.round_budget);
    ++r.instances;
    ++r.checks;
    if (probe.round_budget > Money{}) {
      r.worst = std::max(r.worst, out.expenditure.to_double() / probe.round_budget.to_double());
    }
    if (out.expenditure > probe.round_budget) {
      r.fail({Mechanism::kRbc, i, probe, std::nullopt, std::nullopt,
              out.expenditure - probe.round_budget,
              "round paid " + out.expenditure.to_string() + " against budget " +
                  probe.round_budget.to_string()});
    }
  }
  return r;
}

// Allocative efficiency: the fast winner selection reaches the enumerated
// optimum (max saving under coverage for VCG; the same greedy pruning trace
// for the budgeted mechanism). `worst` counts mismatches.
inline SuiteResult ae_suite(Mechanism m, std::size_t n, std::uint64_t seed, const Params& p,
                            std::size_t max_side = 6) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const ProbeInstance probe = random_probe_instance(rng, p, max_side, max_side);
    const AuctionInstance inst = probe_auction(probe, p);
    ++r.instances;
    ++r.checks;
    Money fast, slow;
    bool same = true;
    if (m == Mechanism::kVcg) {
      const WinnerSelection sel = select_winners_vcg(inst);
      const OracleSelection ref = brute_force_winner_selection(inst, {});
      fast = sel.objective;
      slow = ref.value;
      same = fast == slow && sel.pairs.size() == ref.pairs.size();
    } else {
      const RbcSelection sel = select_winners_rbc(inst, probe.round_budget);
      const RbcSelection ref = reference_rbc_selection(inst, probe.round_budget);
      fast = sel.selection.objective;
      slow = ref.selection.objective;
      same = fast == slow && sel.upper_bound_total == ref.upper_bound_total &&
             sel.selection.pairs.size() == ref.selection.pairs.size() &&
             sel.pruning_steps == ref.pruning_steps;
    }
    if (!same) {
      r.worst += 1.0;
      r.fail({m, i, probe, std::nullopt, std::nullopt, fast - slow,
              "solver objective " + fast.to_string() + " vs enumeration " + slow.to_string()});
    }
  }
  return r;
}

// Kuhn-Munkres against exhaustive matching on random rectangular matrices
// with missing edges, for integer and real weights. `worst` is the largest
// difference in optimum.
inline SuiteResult km_suite(std::size_t n, std::uint64_t seed, std::size_t max_side = 8) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> iw(-20, 100);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t rows = side(rng), cols = side(rng);
    const double density = 0.2 + 0.8 * unit(rng);
    WeightMatrix<std::int64_t> wi(rows, cols);
    WeightMatrix<double> wd(rows, cols);
    for (std::size_t a = 0; a < rows; ++a) {
      for (std::size_t b = 0; b < cols; ++b) {
        if (unit(rng) < density) wi(a, b) = iw(rng);
        if (unit(rng) < density) wd(a, b) = 50.0 * unit(rng) - 5.0;
      }
    }
    ++r.instances;
    r.checks += 2;
    const auto fi = km_solve(wi), bi = brute_force_matching(wi);
    const auto fd = km_solve(wd), bd = brute_force_matching(wd);
    const double di = std::fabs(static_cast<double>(fi.total - bi.total));
    const double dd = std::fabs(fd.total - bd.total);
    r.worst = std::max({r.worst, di, dd});
    if (di != 0.0 || dd > 1e-9) {
      r.fail({Mechanism::kVcg, i, {}, std::nullopt, std::nullopt, Money{},
              "matching optimum differs: int " + std::to_string(fi.total) + " vs " +
                  std::to_string(bi.total) + ", real " + std::to_string(fd.total) + " vs " +
                  std::to_string(bd.total)});
    }
  }
  return r;
}

}  // namespace taxisense::oracle
