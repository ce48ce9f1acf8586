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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "taxisense/auction_rbc.hpp"
#include "taxisense/oracle.hpp"

namespace taxisense {
namespace {

Money m(double v) { return Money::from_double(v); }

AuctionInstance money_instance(const std::vector<std::vector<double>>& v,
                               const std::vector<std::vector<double>>& upper) {
  std::vector<DriverId> ds;
  std::vector<TaskId> ks;
  for (std::size_t d = 0; d < v.size(); ++d) ds.push_back(DriverId{static_cast<std::uint32_t>(d + 1)});
  for (std::size_t k = 0; k < v[0].size(); ++k) ks.push_back(TaskId{static_cast<std::uint32_t>(k + 1)});
  AuctionInstance inst(ds, ks, std::vector<Money>(ks.size(), m(100)));
  for (std::size_t d = 0; d < v.size(); ++d) {
    for (std::size_t k = 0; k < v[d].size(); ++k) {
      if (!std::isnan(v[d][k])) inst.set_valuation(d, k, bare_valuation(m(v[d][k]), m(upper[d][k])));
    }
  }
  return inst;
}

TEST(BudgetLedgerTest, RoundBudgetHandValues) {
  BudgetLedger ledger(m(2000));
  ledger.open_round(40, 40);
  EXPECT_EQ(round_budget(ledger), m(2000));
  ledger.close_round(m(300));
  ledger.open_round(20, 40);
  EXPECT_EQ(round_budget(ledger), m(850));
  ledger.open_round(0, 40);
  EXPECT_EQ(round_budget(ledger), Money{});
  ledger.open_round(0, 0);
  EXPECT_EQ(round_budget(ledger), Money{});
}

TEST(BudgetLedgerTest, StartsWithZeroSpendAndTracksIdentity) {
  BudgetLedger ledger(m(2000));
  ASSERT_EQ(ledger.spent_per_round().size(), 1u);
  EXPECT_EQ(ledger.spent_per_round()[0], Money{});
  ledger.close_round(m(120.5));
  ledger.close_round(m(79.5));
  EXPECT_EQ(ledger.remaining() + ledger.spent(), ledger.total());
  EXPECT_EQ(ledger.remaining(), m(1800));
}

TEST(BudgetLedgerTest, RejectsInconsistentRounds) {
  BudgetLedger ledger(m(100));
  EXPECT_THROW(ledger.open_round(3, 2), std::invalid_argument);
  EXPECT_THROW(ledger.close_round(m(100.0001)), std::logic_error);
  EXPECT_THROW(ledger.close_round(m(-1)), std::invalid_argument);
  EXPECT_THROW(BudgetLedger(m(-1)), std::invalid_argument);
}

TEST(BudgetLedgerTest, RoundsDownToTheTick) {
  BudgetLedger ledger(m(1));
  ledger.open_round(1, 3);
  EXPECT_EQ(round_budget(ledger).ticks(), 3333);
}

TEST(SelectWinnersRbcTest, GenerousBudgetMatchesUnconstrainedOptimum) {
  const AuctionInstance inst = money_instance({{10, 12}, {11, 25}}, {{16, 20}, {18, 40}});
  const RbcSelection sel = select_winners_rbc(inst, m(1e6));
  EXPECT_EQ(sel.pruning_steps, 0u);
  EXPECT_EQ(sel.selection.objective, m(23));
  ASSERT_EQ(sel.selection.pairs.size(), 2u);
  EXPECT_EQ(sel.selection.pairs[0], (AwardedPair{0, 1}));
  EXPECT_EQ(sel.selection.pairs[1], (AwardedPair{1, 0}));
}

TEST(SelectWinnersRbcTest, PruningTraceOnTwoByTwo) {
  // Cheapest cover (d1,k2)+(d2,k1) needs 38 > 30; (d1,k2) goes. Next cover
  // (d1,k1)+(d2,k2) needs 56; (d2,k2) goes, leaving k2 without bidders. The
  // cheapest single pair (d1,k1) fits.
  const AuctionInstance inst = money_instance({{10, 12}, {11, 25}}, {{16, 20}, {18, 40}});
  const RbcSelection sel = select_winners_rbc(inst, m(30));
  EXPECT_EQ(sel.pruning_steps, 2u);
  ASSERT_EQ(sel.selection.pairs.size(), 1u);
  EXPECT_EQ(sel.selection.pairs[0], (AwardedPair{0, 0}));
  EXPECT_EQ(sel.upper_bound_total, m(16));
  EXPECT_TRUE(sel.tabu.forbidden(0, 1));
  EXPECT_TRUE(sel.tabu.forbidden(1, 1));
  ASSERT_EQ(sel.tabu.relaxed_tasks().size(), 1u);
  EXPECT_EQ(sel.tabu.relaxed_tasks()[0], 1u);
  EXPECT_EQ(rbc_payment(inst, sel, 0), m(11));

  const RbcSelection ref = oracle::reference_rbc_selection(inst, m(30));
  EXPECT_EQ(ref.selection.pairs, sel.selection.pairs);
}

TEST(SelectWinnersRbcTest, UnaffordablePairIsDeferred) {
  const AuctionInstance inst = money_instance({{10}}, {{23}});
  const RoundOutcome out = settle_rbc(inst, m(20));
  EXPECT_TRUE(out.winners.empty());
  ASSERT_EQ(out.unassigned_tasks.size(), 1u);
  ASSERT_EQ(out.relaxed_tasks.size(), 1u);
  EXPECT_EQ(out.expenditure, Money{});
}

TEST(SelectWinnersRbcTest, PruningTieBreaksByUpperBoundThenDriverId) {
  const AuctionInstance by_bound = money_instance({{10, NAN}, {NAN, 10}}, {{12, 0}, {15, 15}});
  RbcSelection sel = select_winners_rbc(by_bound, m(20));
  ASSERT_EQ(sel.tabu.forbidden_pairs().size(), 1u);
  EXPECT_EQ(sel.tabu.forbidden_pairs()[0], (AwardedPair{1, 1}));

  const AuctionInstance by_id = money_instance({{10, NAN}, {NAN, 10}}, {{15, 0}, {15, 15}});
  sel = select_winners_rbc(by_id, m(20));
  EXPECT_EQ(sel.tabu.forbidden_pairs()[0], (AwardedPair{1, 1}));
}

TEST(RbcPaymentTest, MarginalBranch) {
  const AuctionInstance inst = money_instance({{10}, {15}}, {{23}, {30}});
  const RbcSelection sel = select_winners_rbc(inst, m(100));
  EXPECT_EQ(rbc_payment(inst, sel, 0), m(15));
  EXPECT_THROW(rbc_payment(inst, sel, 1), std::invalid_argument);
}

TEST(RbcPaymentTest, SoleBidderIsPaidUpperBound) {
  const AuctionInstance inst = money_instance({{10}}, {{23}});
  const RbcSelection sel = select_winners_rbc(inst, m(100));
  EXPECT_EQ(rbc_payment(inst, sel, 0), m(23));
}

TEST(RbcPaymentTest, ClampsAtUpperBound) {
  const AuctionInstance inst = money_instance({{10}, {40}}, {{23}, {45}});
  const RbcSelection sel = select_winners_rbc(inst, m(100));
  EXPECT_EQ(rbc_payment(inst, sel, 0), m(23));
}

TEST(RunRbcRoundTest, NoDriversDefersEverything) {
  const Params p;
  const ZoneGrid grid(10.0, 10.0, 1, 1);
  const std::vector<ZoneStats> stats{{ZoneId{0}, 5.0, 5.0}};
  const MatchingContext ctx{p, grid, stats, Metric::kEuclidean};
  std::vector<SensingTask> tasks{make_task(TaskId{1}, {1, 1}, {0, 0}, Metric::kEuclidean),
                                 make_task(TaskId{2}, {2, 1}, {0, 0}, Metric::kEuclidean)};
  const AuctionInstance inst = build_auction_instance({}, tasks, {}, p);
  BudgetLedger ledger(p.total_budget);
  ledger.open_round(2, 10);
  const RoundResult r = run_rbc_round(inst, {}, {}, ctx, ledger);
  EXPECT_EQ(r.outcome.unassigned_tasks.size(), 2u);
  EXPECT_EQ(r.outcome.expenditure, Money{});
  EXPECT_EQ(*r.outcome.round_budget, m(400));
  EXPECT_EQ(ledger.spent_per_round().size(), 2u);
}

// Randomised properties over bid-level instances.
TEST(RbcPropertiesTest, BudgetRationalityCapAndTermination) {
  const Params p;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 400; ++trial) {
    const oracle::ProbeInstance probe = oracle::random_probe_instance(rng, p, 6, 6);
    const AuctionInstance inst = oracle::probe_auction(probe, p);
    const RbcSelection sel = select_winners_rbc(inst, probe.round_budget);
    EXPECT_LE(sel.pruning_steps, inst.driver_count() * inst.task_count());
    EXPECT_LE(sel.upper_bound_total, probe.round_budget);
    for (std::size_t k : sel.tabu.relaxed_tasks()) {
      for (std::size_t d = 0; d < inst.driver_count(); ++d) {
        if (inst.has_bid(d, k)) EXPECT_TRUE(sel.tabu.forbidden(d, k));
      }
    }
    const RoundOutcome out = settle_rbc(inst, probe.round_budget);
    EXPECT_LE(out.expenditure, probe.round_budget);
    for (const Settlement& s : out.winners) {
      EXPECT_GE(s.utility, Money{});
      EXPECT_LE(s.payment, s.upper_bound);
    }
    EXPECT_EQ(out.winners.size() + out.unassigned_tasks.size(), inst.task_count());
  }
}

TEST(RbcPropertiesTest, MatchesEnumerationDrivenReference) {
  const Params p;
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const oracle::ProbeInstance probe = oracle::random_probe_instance(rng, p, 6, 6);
    const AuctionInstance inst = oracle::probe_auction(probe, p);
    const RbcSelection fast = select_winners_rbc(inst, probe.round_budget);
    const RbcSelection ref = oracle::reference_rbc_selection(inst, probe.round_budget);
    EXPECT_EQ(fast.selection.objective, ref.selection.objective) << "trial " << trial;
    EXPECT_EQ(fast.selection.pairs.size(), ref.selection.pairs.size());
    EXPECT_EQ(fast.upper_bound_total, ref.upper_bound_total);
    // Payment sub-problems against enumeration with the same tabu list.
    for (const AwardedPair& pr : fast.selection.pairs) {
      std::vector<char> mask(inst.driver_count(), 1);
      mask[pr.driver] = 0;
      oracle::SelectionQuery q;
      q.objective = oracle::Objective::kMinValuation;
      q.tabu = &fast.tabu;
      q.active = mask;
      EXPECT_EQ(solve_min_valuation(inst, fast.tabu, mask).objective,
                oracle::brute_force_winner_selection(inst, q).value);
    }
  }
}

}  // namespace
}  // namespace taxisense
