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

// Discrete-time simulation of the two-track timeline: trip matching every
// interval for all idle drivers, and a plan cycle (trip matching, bidding,
// settlement) for sensing-equipped drivers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "taxisense/auction_rbc.hpp"
#include "taxisense/auction_vcg.hpp"
#include "taxisense/domain.hpp"
#include "taxisense/pricing.hpp"
#include "taxisense/scenario.hpp"
#include "taxisense/trip_matching.hpp"

namespace taxisense {

struct BiddingPolicy {
  double bid_lower = 2.0;
  double bid_upper = 4.0;
  std::size_t max_bids_per_driver = 5;
  double bid_radius_km = 0.0;  // 0 means unlimited
};

inline BiddingPolicy bidding_policy(const ScenarioConfig& cfg) {
  return BiddingPolicy{cfg.params.bid_lower, cfg.params.bid_upper, cfg.max_bids_per_driver,
                       cfg.bid_radius_km};
}

// The unit price a driver quotes in a cycle. One stream per (seed, cycle,
// driver), so the price does not depend on what else happened in the run.
inline double draw_unit_price(const BiddingPolicy& policy, std::uint64_t seed,
                              std::size_t cycle, DriverId driver) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cycle), driver.value, 0xb1d5u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(policy.bid_lower, policy.bid_upper);
  return std::clamp(u(rng), policy.bid_lower, policy.bid_upper);
}

// Bids on the nearest tasks within the radius, all at one unit price. Ties
// in distance go to the smaller task id.
inline std::vector<Bid> generate_bids(DriverId driver, Location at,
                                      std::span<const SensingTask> tasks,
                                      const BiddingPolicy& policy, double unit_price,
                                      Metric metric) {
  std::vector<std::pair<double, TaskId>> near;
  for (const SensingTask& t : tasks) {
    const double km = distance(at, t.poi, metric);
    if (policy.bid_radius_km > 0.0 && km > policy.bid_radius_km) continue;
    near.emplace_back(km, t.id);
  }
  std::sort(near.begin(), near.end());
  if (near.size() > policy.max_bids_per_driver) near.resize(policy.max_bids_per_driver);
  std::vector<Bid> bids;
  for (const auto& [km, id] : near) bids.push_back(Bid{driver, id, unit_price, km});
  return bids;
}

// ---------------------------------------------------------------------------
// Reports

struct CycleRecord {
  std::size_t cycle = 0;
  std::size_t released = 0;
  std::size_t assigned = 0;
  std::size_t bidders = 0;
  std::size_t bids = 0;
  Money theta;                       // total payment of the round
  std::optional<Money> omega_t;      // round budget (budgeted mechanism only)
  Money objective;                   // Pi or Psi'
  std::size_t pruning_steps = 0;
  bool coverage_shortfall = false;
  std::size_t trip_fixes = 0;
  std::vector<Settlement> winners;
};

// Raw totals a run accumulates; aggregates are derived from them.
struct RunTotals {
  Money total_budget;
  Money dedicated_cost_all_tasks;  // sum of c_q * l_qk over every task
  Money payments;
  std::size_t task_count = 0;
  std::size_t tasks_assigned = 0;
  std::size_t tasks_fallback = 0;
  std::size_t riders_released = 0;
  std::size_t riders_matched = 0;
  double total_wait_s = 0.0;
  Money earnings_a;
  Money earnings_b;
  std::size_t drivers_a = 0;
  std::size_t drivers_b = 0;
};

struct Aggregates {
  Money ss;
  Money rb;
  double cr = 0.0;
  bool cr_vacuous = false;  // no tasks: CR is reported as 1
  double awt_s = 0.0;
  double atr = 0.0;
  Money ap_a;
  Money ap_b;
};

inline Money mean_money(Money total, std::size_t n) {
  if (n == 0) return Money{};
  return Money::from_ticks(total.ticks() / static_cast<std::int64_t>(n));
}

inline Aggregates compute_metrics(const RunTotals& t) {
  Aggregates a;
  a.ss = t.dedicated_cost_all_tasks - t.payments;
  a.rb = t.total_budget - t.payments;
  if (t.task_count == 0) {
    a.cr = 1.0;
    a.cr_vacuous = true;
  } else {
    a.cr = static_cast<double>(t.tasks_assigned) / static_cast<double>(t.task_count);
  }
  a.awt_s = t.riders_matched == 0 ? 0.0 : t.total_wait_s / static_cast<double>(t.riders_matched);
  a.atr = t.riders_released == 0
              ? 0.0
              : static_cast<double>(t.riders_matched) / static_cast<double>(t.riders_released);
  a.ap_a = mean_money(t.earnings_a, t.drivers_a);
  a.ap_b = mean_money(t.earnings_b, t.drivers_b);
  return a;
}

struct SimulationReport {
  std::string config_digest;
  std::uint64_t seed = 0;
  Mechanism mechanism = Mechanism::kVcg;
  Aggregates aggregates;
  RunTotals totals;
  std::vector<CycleRecord> cycles;
};

// Receives run-log events in order; may be empty.
using EventSink = std::function<void(const Json&)>;

// ---------------------------------------------------------------------------
// The run

namespace detail {

class Simulation {
 public:
  Simulation(const Scenario& s, Mechanism mechanism, std::uint64_t seed, EventSink sink)
      : s_(s),
        cfg_(s.config),
        p_(s.config.params),
        grid_(s.config.grid()),
        ctx_{p_, grid_, s.zone_stats, s.config.metric},
        mechanism_(mechanism),
        seed_(seed),
        policy_(bidding_policy(s.config)),
        ledger_(p_.total_budget),
        sink_(std::move(sink)) {
    cfg_.validate();
    if (s.zone_stats.size() != grid_.zone_count()) {
      throw ConfigError("scenario zone_stats does not cover the zone grid");
    }
    std::unordered_set<DriverId> seen;
    for (const DriverSpec& d : s.drivers) {
      if (!seen.insert(d.id).second) throw ConfigError("duplicate driver id");
      index_.emplace(d.id, drivers_.size());
      drivers_.emplace_back(d.id, d.kind, d.location);
    }
    std::unordered_set<TaskId> task_ids;
    for (const SensingTask& t : s.tasks) {
      if (!task_ids.insert(t.id).second) throw ConfigError("duplicate task id");
      pool_.push_back(t);
      totals_.dedicated_cost_all_tasks += dedicated_cost(t.depot_distance_km, p_);
    }
    for (std::size_t i = 1; i < s.requests.size(); ++i) {
      if (s.requests[i].release_s < s.requests[i - 1].release_s) {
        throw ConfigError("requests must be sorted by release time");
      }
    }
    totals_.total_budget = p_.total_budget;
    totals_.task_count = s.tasks.size();
  }

  SimulationReport run() {
    const double interval = cfg_.trip_interval_s;
    const double cycle_s = cfg_.cycle_s();
    const auto ticks_per_cycle = static_cast<std::size_t>(std::llround(cycle_s / interval));
    const auto bid_tick = static_cast<std::size_t>(std::llround(cfg_.bidding_start_s / interval));
    const auto settle_tick = static_cast<std::size_t>(std::llround(cfg_.settlement_s / interval));
    const std::size_t total_ticks = cfg_.cycle_count() * ticks_per_cycle;

    // Warm-up: trips only, nothing measured, so the horizon opens on a
    // loaded fleet rather than an empty one.
    const auto warmup_ticks = static_cast<std::int64_t>(std::llround(cfg_.warmup_s / interval));
    for (std::int64_t tick = -warmup_ticks; tick < 0; ++tick) {
      const double now = static_cast<double>(tick) * interval;
      complete_due(now, false);
      admit_riders(now);
      match_interval(now);
    }

    for (std::size_t tick = 0; tick < total_ticks; ++tick) {
      const double now = static_cast<double>(tick) * interval;
      const std::size_t cycle = tick / ticks_per_cycle;
      const std::size_t offset = tick % ticks_per_cycle;
      if (offset == 0) emit({{"t", now}, {"event", "cycle_open"}, {"cycle", cycle}});

      complete_due(now, offset >= bid_tick && offset < settle_tick && batch_open_);
      admit_riders(now);
      if (offset == bid_tick) release_batch(now, cycle);
      if (offset == settle_tick && batch_open_) {
        settle_round(now, cycle);
      } else {
        match_interval(now);
      }
    }
    const double end = static_cast<double>(total_ticks) * interval;
    finish(end);
    return report();
  }

 private:
  void emit(Json event) {
    if (sink_) sink_(event);
  }

  Driver& driver(DriverId id) { return drivers_[index_.at(id)]; }

  void complete_due(double now, bool batch_joinable) {
    for (Driver& d : drivers_) {
      if (!d.complete_if_due(now)) continue;
      if (batch_joinable && d.kind() == DriverKind::kTypeB) d.await_auction();
    }
  }

  void admit_riders(double now) {
    while (next_rider_ < s_.requests.size() && s_.requests[next_rider_].release_s <= now) {
      const TripRequest& r = s_.requests[next_rider_++];
      queue_.push_back(r);
      if (r.release_s >= 0.0) ++totals_.riders_released;
    }
    std::vector<TripRequest> kept;
    for (const TripRequest& r : queue_) {
      if (r.expiry_s < now) {
        emit({{"t", now}, {"event", "rider_expired"}, {"rider", r.id.value}});
      } else {
        kept.push_back(r);
      }
    }
    queue_ = std::move(kept);
  }

  std::vector<DriverPosition> positions(bool include_awaiting) const {
    std::vector<DriverPosition> out;
    for (const Driver& d : drivers_) {
      if (d.is_idle() || (include_awaiting && d.activity() == Activity::kAwaitingAuction)) {
        out.push_back(DriverPosition{d.id(), d.location()});
      }
    }
    return out;
  }

  void release_batch(double now, std::size_t cycle) {
    std::size_t idle_b = 0;
    for (const Driver& d : drivers_) {
      if (d.kind() == DriverKind::kTypeB && d.is_idle()) ++idle_b;
    }
    const std::size_t remaining = pool_.size();
    const std::size_t kt = std::min(remaining, idle_b);
    if (kt == 0) return;
    batch_.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(kt));
    pool_.erase(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(kt));
    for (SensingTask& t : batch_) t.release_cycle = cycle;
    batch_open_ = true;
    batch_remaining_ = remaining;
    for (Driver& d : drivers_) {
      if (d.kind() == DriverKind::kTypeB && d.is_idle()) d.await_auction();
    }
    Json ids = Json::array();
    for (const SensingTask& t : batch_) ids.push_back(t.id.value);
    emit({{"t", now}, {"event", "tasks_released"}, {"cycle", cycle}, {"tasks", ids},
          {"remaining", remaining}});
  }

  void settle_round(double now, std::size_t cycle) {
    CycleRecord rec;
    rec.cycle = cycle;
    rec.released = batch_.size();

    std::vector<DriverId> bidders;
    std::vector<Bid> bids;
    for (const Driver& d : drivers_) {
      if (d.activity() != Activity::kAwaitingAuction) continue;
      const double price = draw_unit_price(policy_, seed_, cycle, d.id());
      std::vector<Bid> mine = generate_bids(d.id(), d.location(), batch_, policy_, price,
                                            cfg_.metric);
      if (mine.empty()) continue;
      bidders.push_back(d.id());
      Json tasks = Json::array();
      for (const Bid& b : mine) tasks.push_back(b.task.value);
      emit({{"t", now}, {"event", "bid"}, {"cycle", cycle}, {"driver", d.id().value},
            {"unit_price", price}, {"tasks", tasks}});
      bids.insert(bids.end(), mine.begin(), mine.end());
    }
    rec.bidders = bidders.size();
    rec.bids = bids.size();

    const AuctionInstance inst = build_auction_instance(bidders, batch_, bids, p_);
    const std::vector<DriverPosition> idle = positions(true);
    RoundResult result;
    if (mechanism_ == Mechanism::kVcg) {
      result = run_vcg_round(inst, idle, queue_, ctx_);
    } else {
      ledger_.open_round(batch_.size(), batch_remaining_);
      result = run_rbc_round(inst, idle, queue_, ctx_, ledger_);
    }
    const RoundOutcome& out = result.outcome;
    rec.theta = out.expenditure;
    rec.omega_t = out.round_budget;
    rec.objective = out.objective;
    rec.pruning_steps = out.pruning_steps;
    rec.coverage_shortfall = out.coverage_shortfall;
    rec.trip_fixes = out.displaced_trip_fixes.size();
    rec.winners = out.winners;
    rec.assigned = out.winners.size();

    std::unordered_map<TaskId, const SensingTask*> task_by_id;
    for (const SensingTask& t : batch_) task_by_id.emplace(t.id, &t);
    for (const Settlement& w : out.winners) {
      const SensingTask& task = *task_by_id.at(w.task);
      Driver& d = driver(w.driver);
      const double km = distance(d.location(), task.poi, cfg_.metric);
      d.start_task(now, now + km / p_.mean_speed_kmh * 3600.0 + cfg_.task_dwell_s, task.poi);
      d.credit(w.payment);
      d.add_cost_basis(w.valuation);
      totals_.payments += w.payment;
      ++totals_.tasks_assigned;
      emit({{"t", now}, {"event", "award"}, {"cycle", cycle}, {"driver", w.driver.value},
            {"task", w.task.value}, {"valuation", w.valuation.to_double()},
            {"upper_bound", w.upper_bound.to_double()}, {"payment", w.payment.to_double()}});
    }
    for (const TripFix& f : out.displaced_trip_fixes) {
      emit({{"t", now}, {"event", "trip_fix"}, {"rider", f.rider.value},
            {"original", f.original.value},
            {"replacement", f.replacement ? Json(f.replacement->value) : Json(nullptr)}});
    }
    apply_trips(now, result.trips);
    for (Driver& d : drivers_) {
      if (d.activity() == Activity::kAwaitingAuction) d.leave_auction();
    }
    // Unassigned tasks return to the front of the pool in their batch order.
    std::vector<SensingTask> deferred;
    for (const TaskId id : out.unassigned_tasks) {
      SensingTask t = *task_by_id.at(id);
      t.state = TaskState::kDeferred;
      deferred.push_back(t);
      emit({{"t", now}, {"event", "task_deferred"}, {"task", id.value}});
    }
    std::sort(deferred.begin(), deferred.end(), [&](const SensingTask& a, const SensingTask& b) {
      return batch_position(a.id) < batch_position(b.id);
    });
    pool_.insert(pool_.begin(), deferred.begin(), deferred.end());

    Json round{{"t", now},
               {"event", "round"},
               {"cycle", cycle},
               {"released", rec.released},
               {"assigned", rec.assigned},
               {"theta", rec.theta.to_double()},
               {"objective", rec.objective.to_double()}};
    if (rec.omega_t) round["omega_t"] = rec.omega_t->to_double();
    emit(round);
    cycles_.push_back(std::move(rec));
    batch_.clear();
    batch_open_ = false;
  }

  std::size_t batch_position(TaskId id) const {
    for (std::size_t i = 0; i < batch_.size(); ++i) {
      if (batch_[i].id == id) return i;
    }
    return batch_.size();
  }

  void match_interval(double now) {
    if (queue_.empty()) return;
    // Drivers waiting on the auction stay matchable; a trip revokes their bids.
    const std::vector<DriverPosition> idle = positions(true);
    if (idle.empty()) return;
    apply_trips(now, match_trips(idle, queue_, ctx_));
  }

  void apply_trips(double now, const TripMatching& trips) {
    if (trips.pairs.empty()) return;
    std::unordered_set<RiderId> served;
    std::unordered_map<RiderId, const TripRequest*> by_id;
    for (const TripRequest& r : queue_) by_id.emplace(r.id, &r);
    for (const MatchedTrip& m : trips.pairs) {
      const TripRequest& r = *by_id.at(m.rider);
      Driver& d = driver(m.driver);
      if (d.activity() == Activity::kAwaitingAuction) {
        emit({{"t", now}, {"event", "bid_revoked"}, {"driver", m.driver.value}});
      }
      const double hours = (m.pickup_km + r.distance_km) / p_.mean_speed_kmh;
      d.start_trip(now, now + hours * 3600.0, r.destination);
      const Money earning = driver_trip_earning(r.distance_km, ctx_.stats_at(r.destination), p_);
      if (now >= 0.0) d.credit(earning);
      served.insert(r.id);
      if (r.release_s >= 0.0) {
        ++totals_.riders_matched;
        totals_.total_wait_s += now - r.release_s;
      }
      emit({{"t", now}, {"event", "trip_match"}, {"driver", m.driver.value},
            {"rider", m.rider.value}, {"pickup_km", m.pickup_km}, {"wait_s", now - r.release_s},
            {"earning", earning.to_double()}});
    }
    std::erase_if(queue_, [&](const TripRequest& r) { return served.contains(r.id); });
  }

  void finish(double end) {
    for (SensingTask& t : pool_) {
      t.state = TaskState::kFallback;
      ++totals_.tasks_fallback;
      emit({{"t", end}, {"event", "task_fallback"}, {"task", t.id.value}});
    }
    if (totals_.tasks_assigned + totals_.tasks_fallback != totals_.task_count) {
      throw std::logic_error("task conservation violated");
    }
    for (const Driver& d : drivers_) {
      if (d.kind() == DriverKind::kTypeA) {
        totals_.earnings_a += d.earnings();
        ++totals_.drivers_a;
      } else {
        totals_.earnings_b += d.earnings();
        ++totals_.drivers_b;
      }
    }
    emit({{"t", end}, {"event", "horizon_end"}});
  }

  SimulationReport report() const {
    SimulationReport r;
    r.config_digest = config_digest(cfg_);
    r.seed = seed_;
    r.mechanism = mechanism_;
    r.totals = totals_;
    r.aggregates = compute_metrics(totals_);
    r.cycles = cycles_;
    return r;
  }

  const Scenario& s_;
  const ScenarioConfig& cfg_;
  const Params& p_;
  ZoneGrid grid_;
  MatchingContext ctx_;
  Mechanism mechanism_;
  std::uint64_t seed_;
  BiddingPolicy policy_;
  BudgetLedger ledger_;
  EventSink sink_;

  std::vector<Driver> drivers_;
  std::unordered_map<DriverId, std::size_t> index_;
  std::deque<SensingTask> pool_;
  std::vector<SensingTask> batch_;
  bool batch_open_ = false;
  std::size_t batch_remaining_ = 0;
  std::vector<TripRequest> queue_;
  std::size_t next_rider_ = 0;
  RunTotals totals_;
  std::vector<CycleRecord> cycles_;
};

}  // namespace detail

// Runs one scenario under one mechanism. The seed drives the bidding policy;
// the scenario itself is fixed.
inline SimulationReport run(const Scenario& scenario, Mechanism mechanism, std::uint64_t seed,
                            EventSink sink = {}) {
  return detail::Simulation(scenario, mechanism, seed, std::move(sink)).run();
}

// ---------------------------------------------------------------------------
// Serialisation

inline Json aggregates_to_json(const Aggregates& a) {
  return Json{{"ss", a.ss.to_double()},     {"rb", a.rb.to_double()},
              {"cr", a.cr},                 {"cr_vacuous", a.cr_vacuous},
              {"awt_s", a.awt_s},           {"atr", a.atr},
              {"ap_a", a.ap_a.to_double()}, {"ap_b", a.ap_b.to_double()}};
}

inline Json report_to_json(const SimulationReport& r) {
  Json cycles = Json::array();
  for (const CycleRecord& c : r.cycles) {
    Json winners = Json::array();
    for (const Settlement& w : c.winners) {
      winners.push_back({{"driver", w.driver.value},
                         {"task", w.task.value},
                         {"valuation", w.valuation.to_double()},
                         {"upper_bound", w.upper_bound.to_double()},
                         {"payment", w.payment.to_double()}});
    }
    cycles.push_back({{"cycle", c.cycle},
                      {"released", c.released},
                      {"assigned", c.assigned},
                      {"bidders", c.bidders},
                      {"bids", c.bids},
                      {"theta", c.theta.to_double()},
                      {"omega_t", c.omega_t ? Json(c.omega_t->to_double()) : Json(nullptr)},
                      {"objective", c.objective.to_double()},
                      {"pruning_steps", c.pruning_steps},
                      {"coverage_shortfall", c.coverage_shortfall},
                      {"trip_fixes", c.trip_fixes},
                      {"winners", winners}});
  }
  const RunTotals& t = r.totals;
  return Json{{"config_digest", r.config_digest},
              {"seed", r.seed},
              {"mechanism", to_string(r.mechanism)},
              {"aggregates", aggregates_to_json(r.aggregates)},
              {"totals",
               {{"payments", t.payments.to_double()},
                {"dedicated_cost_all_tasks", t.dedicated_cost_all_tasks.to_double()},
                {"tasks", t.task_count},
                {"tasks_assigned", t.tasks_assigned},
                {"tasks_fallback", t.tasks_fallback},
                {"riders_released", t.riders_released},
                {"riders_matched", t.riders_matched}}},
              {"cycles", cycles}};
}

inline std::string metrics_csv(const SimulationReport& r) {
  std::string out = "cycle,released,assigned,theta,omega_t,objective\n";
  for (const CycleRecord& c : r.cycles) {
    out += std::to_string(c.cycle) + "," + std::to_string(c.released) + "," +
           std::to_string(c.assigned) + "," + c.theta.to_string() + "," +
           (c.omega_t ? c.omega_t->to_string() : std::string()) + "," +
           c.objective.to_string() + "\n";
  }
  return out;
}

}  // namespace taxisense
