// Copyright 2026 The smpool Authors.
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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include "smpool/harness.h"
#include "smpool/rng.h"

namespace smpool {
namespace {

double median_ns(int repeats, const std::function<void()>& fn) {
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  fn();  // warm-up
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(
        std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2,
                   samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.repeats < 1) throw SpecError("bench: repeats must be >= 1");
  Xoshiro256 rng(cfg.seed);
  const Tensor x = uniform_tensor(cfg.shape, rng);
  const auto dims = cfg.shape.nchw();
  const PoolSpec pool = cfg.pool.value_or(PoolSpec::global(dims[2], dims[3]));

  struct Variant {
    std::string name;
    MomentSpec spec;
    bool sap;
  };
  std::vector<Variant> variants = {
      {"sap", MomentSpec{}, true},
      {"smp(1)", MomentSpec::make(1, NormKind::none), false},
      {"smp(2)", MomentSpec::make(2, NormKind::none), false},
      {"smp(4)+layer", MomentSpec::make(4, NormKind::layer), false},
  };
  if (cfg.n == 3) {
    variants.push_back(
        {"smp(3)+layer", MomentSpec::make(3, NormKind::layer), false});
  }

  volatile double sink = 0;
  BenchReport report;
  double sap_ns = 0, smp4_ns = 0;
  std::int64_t extra2 = 0, extra4 = 0;
  for (const Variant& v : variants) {
    const std::function<void()> run = [&] {
      const Tensor out = v.sap ? sap_forward(x, pool, cfg.threads)
                               : [&] {
                                   ForwardOptions opts;
                                   opts.threads = cfg.threads;
                                   return smp_forward(x, pool, v.spec, opts);
                                 }();
      sink = out[0];
    };
    BenchRow row;
    row.name = v.name;
    row.n = v.spec.n;
    row.norm = to_string(v.spec.norm);
    row.median_ns = median_ns(cfg.repeats, run);
    const MomentLayout layout = moment_layout(cfg.shape, pool, v.spec.n);
    row.ns_per_output_element =
        row.median_ns / static_cast<double>(layout.shape().size());
    row.cost = op_cost(cfg.shape, pool, v.spec);
    if (v.sap) sap_ns = row.median_ns;
    if (v.spec.n == 4) {
      smp4_ns = row.median_ns;
      extra4 = row.cost.extra_vs_sap;
    }
    if (v.spec.n == 2) extra2 = row.cost.extra_vs_sap;
    report.rows.push_back(row);
  }
  report.smp4_over_sap_time = sap_ns > 0 ? smp4_ns / sap_ns : 0.0;
  report.extra_ratio_n4_over_n2 =
      extra2 > 0 ? static_cast<double>(extra4) / static_cast<double>(extra2)
                 : 0.0;
  return report;
}

std::string format_bench_table(const BenchReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %14s %16s %16s %16s\n", "operator",
                "median_ns", "ns/out_elem", "mul_add_count", "extra_vs_sap");
  os << line;
  for (const BenchRow& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-14s %14.0f %16.3f %16lld %16lld\n",
                  r.name.c_str(), r.median_ns, r.ns_per_output_element,
                  static_cast<long long>(r.cost.mul_add_count),
                  static_cast<long long>(r.cost.extra_vs_sap));
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "smp(4)/sap wall time: %.3f   extra MAC ratio smp(4)/smp(2): "
                "%.4f\n",
                report.smp4_over_sap_time, report.extra_ratio_n4_over_n2);
  os << line;
  return os.str();
}

}  // namespace smpool
