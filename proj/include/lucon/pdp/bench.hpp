/*
 * Copyright 2026 The Lucon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lucon/bench/alloc_counter.hpp"
#include "lucon/pdp/pdp.hpp"
#include "lucon/policy/compiler.hpp"

namespace lucon::pdp {

struct BenchRow {
  std::size_t n_rules = 0;
  std::size_t n_labels = 0;
  double mean_us = 0;
  double p95_us = 0;
  std::size_t mem_bytes = 0;
};

struct BenchOptions {
  std::size_t trials = 200;      // minimum timed decisions per row
  double min_seconds = 0.05;     // keep sampling until this much time passed
  std::size_t max_trials = 20000;
  std::uint64_t seed = 1;
};

inline const char* kBenchProbeUrl = "https://probe.example/ingest";

/// Worst-case policy: every rule targets its own service, every service
/// matches the probe URL, and every rule fires on label_0.
inline policy::PolicyAst bench_policy(std::size_t n_rules) {
  policy::PolicyAst ast;
  ast.services.reserve(n_rules);
  ast.rules.reserve(n_rules);
  for (std::size_t i = 0; i < n_rules; ++i) {
    std::string svc = "svc_" + std::to_string(i);
    ast.services.push_back({svc, "http[s]?://.+", {}, {}, {}, {}});
    policy::FlowRule r;
    r.name = "rule_" + std::to_string(i);
    r.target = svc;
    r.trigger_labels = {Term::atom("label_0")};
    r.decision.effect = policy::Effect::drop;
    ast.rules.push_back(std::move(r));
  }
  return ast;
}

/// label_0 .. label_{n-1}, shuffled before insertion.
inline LabelSet bench_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<Term> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms.push_back(Term::atom("label_" + std::to_string(i)));
  }
  std::shuffle(terms.begin(), terms.end(), rng);
  return LabelSet(terms);
}

inline BenchRow bench_one(const CompiledPolicy& cp, const LabelSet& labels,
                          const BenchOptions& options) {
  using clock = std::chrono::steady_clock;
  DecisionRequest req{std::nullopt, std::string(kBenchProbeUrl), labels};
  const std::size_t expected = cp.ast.rules.size();

  for (int i = 0; i < 3; ++i) (void)decide(cp, req);

  std::size_t mem = 0;
  {
    bench::PeakScope scope;
    DecisionResult r = decide(cp, req);
    mem = scope.peak_increment();
    if (r.matched_rules.size() != expected) {
      throw Error("bench policy did not match every rule");
    }
  }

  std::vector<double> samples;
  samples.reserve(options.trials);
  auto start = clock::now();
  while (samples.size() < options.max_trials) {
    auto t0 = clock::now();
    DecisionResult r = decide(cp, req);
    auto t1 = clock::now();
    (void)r;
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    double elapsed = std::chrono::duration<double>(t1 - start).count();
    if (samples.size() >= options.trials && elapsed >= options.min_seconds) break;
  }
  std::sort(samples.begin(), samples.end());
  double sum = 0;
  for (double s : samples) sum += s;
  BenchRow row;
  row.n_rules = cp.ast.rules.size();
  row.n_labels = labels.size();
  row.mean_us = sum / static_cast<double>(samples.size());
  std::size_t k = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(samples.size())));
  row.p95_us = samples[std::min(samples.size() - 1, k == 0 ? 0 : k - 1)];
  row.mem_bytes = mem;
  return row;
}

/// One row per (rules, labels) pair.
inline std::vector<BenchRow> bench_decide(const std::vector<std::size_t>& rules,
                                          const std::vector<std::size_t>& labels,
                                          const BenchOptions& options = {}) {
  std::mt19937_64 rng(options.seed);
  std::vector<BenchRow> rows;
  for (std::size_t n_rules : rules) {
    CompiledPolicy cp = policy::compile(bench_policy(n_rules));
    for (std::size_t n_labels : labels) {
      LabelSet set = bench_labels(std::max<std::size_t>(n_labels, 1), rng);
      rows.push_back(bench_one(cp, set, options));
    }
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "n_rules,n_labels,mean_us,p95_us,mem_bytes\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.3f,%.3f,%zu\n", r.n_rules,
                  r.n_labels, r.mean_us, r.p95_us, r.mem_bytes);
    out += buf;
  }
  return out;
}

/// Coefficient of determination of the least-squares line through (x, y).
inline double linear_fit_r2(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 1.0;
  return (sxy * sxy) / (sxx * syy);
}

}  // namespace lucon::pdp
