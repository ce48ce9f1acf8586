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

// Command implementations behind the taxisense executable: run, compare,
// sweep, and verify. Each returns a process exit code and writes its files
// atomically.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "taxisense/domain.hpp"
#include "taxisense/oracle.hpp"
#include "taxisense/scenario.hpp"
#include "taxisense/simulator.hpp"

namespace taxisense::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kConfigError = 2, kIoError = 3 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

// A config file holds either a configuration (entities are generated) or a
// materialised scenario.
struct ScenarioSource {
  Json document;
  bool materialized = false;
  ScenarioConfig config;
  std::optional<Scenario> fixed;

  // The scenario for a seed. A materialised scenario ignores the seed.
  Scenario build(std::optional<std::uint64_t> seed) const {
    if (fixed) return *fixed;
    ScenarioConfig c = config;
    if (seed) c.seed = *seed;
    try {
      return build_scenario(c);
    } catch (const std::ios_base::failure& e) {
      throw IoError(e.what());
    }
  }
};

inline ScenarioSource load_source(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  ScenarioSource src;
  try {
    src.document = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (src.document.is_object() && src.document.contains("materialized")) {
    src.materialized = true;
    src.fixed = scenario_from_json(src.document);
    src.config = src.fixed->config;
  } else {
    src.config = config_from_json(src.document);
  }
  return src;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results are written by
// index, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_jobs() {
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string fixed(double v, int digits = 6) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

// Maps exceptions to exit codes and prints the message.
template <typename Fn>
int guarded(std::ostream& err, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string config_path;
  Mechanism mechanism = Mechanism::kRbc;
  std::optional<std::uint64_t> seed;  // defaults to the config seed
  std::string out_dir = ".";
};

inline int cmd_run(const RunOptions& opt, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const ScenarioSource src = load_source(opt.config_path);
    const std::uint64_t seed = opt.seed.value_or(src.config.seed);
    const Scenario scenario = src.build(seed);
    std::string events;
    const SimulationReport report =
        run(scenario, opt.mechanism, seed, [&](const Json& e) { events += e.dump() + "\n"; });
    const std::filesystem::path dir(opt.out_dir);
    ensure_dir(dir);
    write_atomic(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_atomic(dir / "events.ndjson", events);
    write_atomic(dir / "metrics.csv", metrics_csv(report));
    const Aggregates& a = report.aggregates;
    log << "run mechanism=" << to_string(opt.mechanism) << " seed=" << seed
        << " digest=" << report.config_digest << " ss=" << a.ss << " rb=" << a.rb
        << " cr=" << fixed(a.cr, 4) << " atr=" << fixed(a.atr, 4)
        << " awt_s=" << fixed(a.awt_s, 2) << "\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::string config_path;
  std::size_t seeds = 5;
  std::uint64_t first_seed = 1;
  std::string out_dir = ".";
  std::size_t jobs = default_jobs();
};

struct MeanAggregates {
  double ss = 0, rb = 0, cr = 0, awt_s = 0, atr = 0, ap_a = 0, ap_b = 0;
};

inline MeanAggregates mean_of(const std::vector<Aggregates>& runs) {
  MeanAggregates m;
  if (runs.empty()) return m;
  for (const Aggregates& a : runs) {
    m.ss += a.ss.to_double();
    m.rb += a.rb.to_double();
    m.cr += a.cr;
    m.awt_s += a.awt_s;
    m.atr += a.atr;
    m.ap_a += a.ap_a.to_double();
    m.ap_b += a.ap_b.to_double();
  }
  const double n = static_cast<double>(runs.size());
  for (double* v : {&m.ss, &m.rb, &m.cr, &m.awt_s, &m.atr, &m.ap_a, &m.ap_b}) *v /= n;
  return m;
}

inline int cmd_compare(const CompareOptions& opt, std::ostream& log = std::cout,
                       std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (opt.seeds == 0) throw ConfigError("--seeds must be positive");
    const ScenarioSource src = load_source(opt.config_path);
    const Mechanism mechs[] = {Mechanism::kVcg, Mechanism::kRbc};
    std::vector<Aggregates> results(2 * opt.seeds);
    parallel_for(opt.seeds, opt.jobs, [&](std::size_t i) {
      const std::uint64_t seed = opt.first_seed + i;
      const Scenario scenario = src.build(seed);
      for (std::size_t m = 0; m < 2; ++m) {
        results[m * opt.seeds + i] = run(scenario, mechs[m], seed).aggregates;
      }
    });
    std::string csv = "mechanism,SS_mean,RB_mean,CR_mean,AWT_mean,ATR_mean,AP_A_mean,AP_B_mean\n";
    for (std::size_t m = 0; m < 2; ++m) {
      for (std::size_t i = 0; i < opt.seeds; ++i) {
        log << "run mechanism=" << to_string(mechs[m]) << " seed=" << opt.first_seed + i << "\n";
      }
      const MeanAggregates a = mean_of({results.begin() + static_cast<std::ptrdiff_t>(m * opt.seeds),
                                        results.begin() + static_cast<std::ptrdiff_t>((m + 1) * opt.seeds)});
      csv += std::string(to_string(mechs[m])) + "," + fixed(a.ss) + "," + fixed(a.rb) + "," +
             fixed(a.cr) + "," + fixed(a.awt_s) + "," + fixed(a.atr) + "," + fixed(a.ap_a) +
             "," + fixed(a.ap_b) + "\n";
    }
    const std::filesystem::path dir(opt.out_dir);
    ensure_dir(dir);
    write_atomic(dir / "compare.csv", csv);
    log << "runs=" << 2 * opt.seeds << "\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string config_path;
  std::string param;
  std::vector<std::string> values;
  std::size_t seeds = 5;
  std::uint64_t first_seed = 1;
  std::vector<Mechanism> mechanisms{Mechanism::kVcg, Mechanism::kRbc};
  std::string out_dir = ".";
  std::size_t jobs = default_jobs();
};

inline const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> names{"n_type_a", "n_type_b", "bid_bounds",
                                              "demand_level", "omega"};
  return names;
}

// Applies one sweep value to a configuration document.
inline ScenarioConfig apply_sweep_value(Json doc, const std::string& param,
                                        const std::string& value) {
  auto number = [&](const std::string& text) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw ConfigError(param + ": '" + text + "' is not a number");
    }
    return v;
  };
  auto count = [&](const std::string& text) {
    const double v = number(text);
    if (v < 0 || v != std::floor(v)) throw ConfigError(param + ": '" + text + "' is not a count");
    return static_cast<std::size_t>(v);
  };
  if (!doc.contains("params")) doc["params"] = Json::object();
  if (param == "n_type_a" || param == "n_type_b") {
    doc[param] = count(value);
  } else if (param == "bid_bounds") {
    const auto colon = value.find(':');
    if (colon == std::string::npos) throw ConfigError("bid_bounds: expected LOW:HIGH");
    doc["params"]["b_lb"] = number(value.substr(0, colon));
    doc["params"]["b_ub"] = number(value.substr(colon + 1));
  } else if (param == "demand_level") {
    doc.erase("expected_trips");
    if (value == "low" || value == "high") {
      doc["demand_level"] = value;
    } else {
      doc["demand_level"] = number(value);
    }
  } else if (param == "omega") {
    doc["params"]["omega"] = number(value);
  } else {
    throw ConfigError("unknown sweep parameter '" + param + "'");
  }
  return config_from_json(doc);
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& log = std::cout,
                     std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto& names = sweepable_params();
    if (std::find(names.begin(), names.end(), opt.param) == names.end()) {
      throw ConfigError("unknown sweep parameter '" + opt.param + "'");
    }
    if (opt.values.empty()) throw ConfigError("--values must list at least one value");
    if (opt.seeds == 0) throw ConfigError("--seeds must be positive");
    if (opt.mechanisms.empty()) throw ConfigError("no mechanism selected");
    const ScenarioSource src = load_source(opt.config_path);
    if (src.materialized) throw ConfigError("sweep needs a configuration, not a materialised scenario");
    std::vector<ScenarioConfig> configs;
    for (const std::string& v : opt.values) configs.push_back(apply_sweep_value(src.document, opt.param, v));

    const std::size_t per_value = opt.seeds;
    std::vector<std::vector<Aggregates>> results(configs.size() * per_value);
    parallel_for(results.size(), opt.jobs, [&](std::size_t i) {
      ScenarioConfig c = configs[i / per_value];
      c.seed = opt.first_seed + i % per_value;
      Scenario scenario;
      try {
        scenario = build_scenario(c);
      } catch (const std::ios_base::failure& e) {
        throw IoError(e.what());
      }
      for (Mechanism m : opt.mechanisms) results[i].push_back(run(scenario, m, c.seed).aggregates);
    });

    std::string csv = "param,value,seed,mechanism,ss,rb,cr,awt_s,atr,ap_a,ap_b\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string& value = opt.values[i / per_value];
      const std::uint64_t seed = opt.first_seed + i % per_value;
      for (std::size_t m = 0; m < opt.mechanisms.size(); ++m) {
        const Aggregates& a = results[i][m];
        csv += opt.param + ",\"" + value + "\"," + std::to_string(seed) + "," +
               to_string(opt.mechanisms[m]) + "," + a.ss.to_string() + "," + a.rb.to_string() +
               "," + fixed(a.cr) + "," + fixed(a.awt_s) + "," + fixed(a.atr) + "," +
               a.ap_a.to_string() + "," + a.ap_b.to_string() + "\n";
      }
    }
    const std::filesystem::path dir(opt.out_dir);
    ensure_dir(dir);
    write_atomic(dir / "sweep.csv", csv);
    log << "sweep " << opt.param << ": " << results.size() * opt.mechanisms.size() << " rows\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::string suite;
  std::size_t instances = 1000;
  std::uint64_t seed = 1;
  std::vector<Mechanism> mechanisms{Mechanism::kVcg, Mechanism::kRbc};
  std::string out_dir = ".";
  std::optional<std::string> params_path;  // JSON object of parameter overrides
};

inline Json probe_to_json(const oracle::ProbeInstance& probe) {
  Json km = Json::array();
  for (std::size_t d = 0; d < probe.drivers; ++d) {
    Json row = Json::array();
    for (std::size_t k = 0; k < probe.tasks; ++k) {
      row.push_back(probe.km(d, k) ? Json(*probe.km(d, k)) : Json(nullptr));
    }
    km.push_back(row);
  }
  return Json{{"drivers", probe.drivers},
              {"tasks", probe.tasks},
              {"depot_km", probe.depot_km},
              {"unit_price", probe.unit_price},
              {"task_km", km},
              {"round_budget", probe.round_budget.to_double()}};
}

inline Json violation_to_json(const std::string& suite, const oracle::Violation& v) {
  Json j{{"suite", suite},
         {"mechanism", to_string(v.mechanism)},
         {"instance_index", v.instance_index},
         {"what", v.what},
         {"magnitude", v.magnitude.to_double()}};
  if (v.instance.drivers > 0) j["instance"] = probe_to_json(v.instance);
  if (v.driver) j["driver"] = *v.driver;
  if (v.deviation_price) j["deviation_price"] = *v.deviation_price;
  return j;
}

inline int cmd_verify(const VerifyOptions& opt, std::ostream& log = std::cout,
                      std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    Params p;
    if (opt.params_path) {
      std::ifstream in(*opt.params_path);
      if (!in) throw ConfigError("cannot read params file '" + *opt.params_path + "'");
      try {
        p = params_from_json(Json::parse(in));
      } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("params file is not valid JSON: ") + e.what());
      }
    }
    p.validate();
    if (opt.instances == 0) throw ConfigError("--instances must be positive");

    struct Row {
      std::string label;
      oracle::SuiteResult result;
    };
    std::vector<Row> rows;
    const std::string& s = opt.suite;
    if (s == "ir" || s == "ic" || s == "ae") {
      if (opt.mechanisms.empty()) throw ConfigError("no mechanism selected");
      for (Mechanism m : opt.mechanisms) {
        oracle::SuiteResult r = s == "ir"   ? oracle::ir_suite(m, opt.instances, opt.seed, p)
                                : s == "ic" ? oracle::ic_suite(m, opt.instances, opt.seed, p)
                                            : oracle::ae_suite(m, opt.instances, opt.seed, p);
        rows.push_back({to_string(m), std::move(r)});
      }
    } else if (s == "bb") {
      rows.push_back({"rbc", oracle::bb_suite(opt.instances, opt.seed, p)});
    } else if (s == "oracle") {
      rows.push_back({"km", oracle::km_suite(opt.instances, opt.seed)});
    } else {
      throw ConfigError("unknown suite '" + s + "' (expected ir, ic, bb, ae, oracle)");
    }

    Json failures = Json::array();
    for (const Row& row : rows) {
      const oracle::SuiteResult& r = row.result;
      log << s << " " << row.label << ": instances=" << r.instances << " checks=" << r.checks
          << " violations=" << r.violations << " worst=" << fixed(r.worst, 4) << " "
          << (r.passed() ? "PASS" : "FAIL") << "\n";
      if (r.first) failures.push_back(violation_to_json(s, *r.first));
    }
    if (failures.empty()) return kOk;
    const std::filesystem::path dir(opt.out_dir);
    ensure_dir(dir);
    const std::filesystem::path file = dir / ("counterexample-" + s + ".json");
    write_atomic(file, failures.dump(2) + "\n");
    log << "counterexample written to " << file.string() << "\n";
    return kViolation;
  });
}

}  // namespace taxisense::cli
