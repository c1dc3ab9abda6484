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

// smpool command-line harness: generate, pool, gradcheck, bench, toytrain.
//
// Exit codes: 0 success, 1 check failed, 2 usage or configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smpool/grad.h"
#include "smpool/harness.h"
#include "smpool/rng.h"
#include "smpool/smp.h"
#include "smpool/tensor_io.h"

namespace {

using smpool::Index;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::vector<Index> parse_list(const std::string& text) {
  std::vector<Index> out;
  std::string token;
  for (char ch : text + ",") {
    if (ch == ',' || ch == 'x' || ch == 'X') {
      if (token.empty()) throw smpool::SpecError("malformed list '" + text + "'");
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw smpool::SpecError("malformed list '" + text + "'");
      }
      out.push_back(static_cast<Index>(v));
      token.clear();
    } else if (ch != ' ') {
      token += ch;
    }
  }
  return out;
}

std::pair<Index, Index> parse_pair(const std::string& text, const char* what) {
  const auto v = parse_list(text);
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() == 2) return {v[0], v[1]};
  throw smpool::SpecError(std::string(what) + " takes one or two values");
}

std::string shape_string(const smpool::Shape& s) {
  const auto d = s.nchw();
  return std::to_string(d[0]) + "×" + std::to_string(d[1]) + "×" +
         std::to_string(d[2]) + "×" + std::to_string(d[3]);
}

// Geometry flags shared by pool, gradcheck and bench.
struct GeometryFlags {
  std::string kernel;
  std::string stride = "1";
  std::string pad = "0";
  std::string dilation = "1";
  bool global = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--kernel", kernel, "kernel size: k or kh,kw");
    cmd->add_option("--stride", stride, "stride: s or sh,sw")->capture_default_str();
    cmd->add_option("--pad", pad, "padding: p or ph,pw")->capture_default_str();
    cmd->add_option("--dilation", dilation, "dilation: d or dh,dw")
        ->capture_default_str();
    cmd->add_flag("--global", global, "one window covering the whole plane");
  }

  smpool::PoolSpec resolve(Index h, Index w,
                           const std::string& default_kernel) const {
    if (global || (kernel.empty() && default_kernel == "global")) {
      return smpool::PoolSpec::global(h, w);
    }
    smpool::PoolSpec p;
    std::tie(p.kernel_h, p.kernel_w) =
        parse_pair(kernel.empty() ? default_kernel : kernel, "--kernel");
    std::tie(p.stride_h, p.stride_w) = parse_pair(stride, "--stride");
    std::tie(p.pad_h, p.pad_w) = parse_pair(pad, "--pad");
    std::tie(p.dilation_h, p.dilation_w) = parse_pair(dilation, "--dilation");
    return p;
  }
};

struct MomentFlags {
  int n = 1;
  std::string norm = "layer";
  bool unsafe_no_norm = false;
  bool standardize = false;
  std::string norm_axis = "per-order";

  void add_to(CLI::App* cmd, int default_n) {
    n = default_n;
    cmd->add_option("-n,--n", n, "highest moment order (1..4)")
        ->capture_default_str();
    cmd->add_option("--norm", norm, "normalization of orders >= 3: none|layer|max|batch")
        ->capture_default_str();
    cmd->add_flag("--unsafe-no-norm", unsafe_no_norm,
                  "allow n >= 3 with --norm none");
    cmd->add_flag("--standardize", standardize,
                  "divide m3, m4 by sigma^3, sigma^4 before normalization");
    cmd->add_option("--norm-axis", norm_axis, "per-order|joint")
        ->capture_default_str();
  }

  smpool::MomentSpec resolve() const {
    smpool::MomentSpec s;
    s.n = n;
    s.norm = smpool::parse_norm(norm);
    s.unsafe_no_norm = unsafe_no_norm;
    s.standardize_pre_norm = standardize;
    if (norm_axis == "per-order") {
      s.norm_axis = smpool::NormAxis::per_order;
    } else if (norm_axis == "joint") {
      s.norm_axis = smpool::NormAxis::joint;
    } else {
      throw smpool::SpecError("unknown --norm-axis '" + norm_axis + "'");
    }
    s.validate();
    return s;
  }
};

void print_json(const nlohmann::ordered_json& j,
                const std::optional<std::string>& report_path) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (report_path) {
    std::ofstream out(*report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw smpool::FormatError("cannot write " + *report_path);
    out << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial moment pooling: operators, gradient checks, "
               "benchmarks and the training-stability experiment"};
  app.require_subcommand(1);

  // generate -----------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a synthetic feature map");
  std::string gen_pattern, gen_shape = "1,1,3,3", gen_out;
  std::optional<double> gen_a, gen_b;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--pattern", gen_pattern,
                  "checkerboard|solid|ramp|uniform-noise")
      ->required();
  gen->add_option("--shape", gen_shape, "extents, e.g. 1,1,3,3")
      ->capture_default_str();
  gen->add_option("--a", gen_a, "first value (checkerboard/solid) or lower bound");
  gen->add_option("--b", gen_b, "second value (checkerboard) or upper bound");
  gen->add_option("--seed", gen_seed, "seed for uniform-noise");
  gen->add_option("-o,--out", gen_out, "output TensorFile")->required();

  // pool ---------------------------------------------------------------------
  auto* pool = app.add_subcommand("pool", "apply SMP(n) or SAP to a TensorFile");
  std::string pool_in, pool_out, pool_mode = "smp";
  int pool_threads = 1;
  GeometryFlags pool_geom;
  MomentFlags pool_moments;
  pool->add_option("-i,--input", pool_in, "input TensorFile")->required();
  pool->add_option("-o,--out", pool_out, "output TensorFile")->required();
  pool->add_option("--mode", pool_mode, "smp|sap")->capture_default_str();
  pool->add_option("--threads", pool_threads, "worker threads")
      ->capture_default_str();
  pool_geom.add_to(pool);
  pool_moments.add_to(pool, 1);

  // gradcheck ----------------------------------------------------------------
  auto* gc = app.add_subcommand("gradcheck",
                                "finite-difference check of the SMP backward");
  std::string gc_shape = "2,3,8,8";
  std::uint64_t gc_seed = 5;
  double gc_tol = smpool::kGradCheckTolerance;
  double gc_h = smpool::kGradCheckStep;
  bool gc_perturb = false;
  int gc_threads = 1;
  std::optional<std::string> gc_report;
  GeometryFlags gc_geom;
  MomentFlags gc_moments;
  gc->add_option("--shape", gc_shape, "input extents")->capture_default_str();
  gc->add_option("--seed", gc_seed, "seed for input and upstream")
      ->capture_default_str();
  gc->add_option("--tol", gc_tol, "max relative error")->capture_default_str();
  gc->add_option("--step", gc_h, "central-difference step h")->capture_default_str();
  gc->add_option("--threads", gc_threads, "worker threads")
      ->capture_default_str();
  gc->add_flag("--perturb-backward", gc_perturb,
               "corrupt the analytic gradient (negative control)");
  gc->add_option("--report", gc_report, "also write the JSON report here");
  gc_geom.add_to(gc);
  gc_moments.add_to(gc, 4);

  // bench --------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "time SAP against SMP(2), SMP(4)");
  std::string bench_shape = "1,64,32,32";
  smpool::BenchConfig bench_cfg;
  bool bench_json = false;
  GeometryFlags bench_geom;
  bench->add_option("-n,--n", bench_cfg.n, "additional order to time")
      ->capture_default_str();
  bench->add_option("--shape", bench_shape, "input extents")
      ->capture_default_str();
  bench->add_option("--repeats", bench_cfg.repeats, "timed repetitions")
      ->capture_default_str();
  bench->add_option("--threads", bench_cfg.threads, "worker threads")
      ->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "input seed")->capture_default_str();
  bench->add_flag("--json", bench_json, "print the report as JSON");
  bench_geom.add_to(bench);

  // toytrain -----------------------------------------------------------------
  auto* tt = app.add_subcommand("toytrain",
                                "seeded training-stability experiment");
  smpool::ToyTrainConfig tt_cfg;
  std::string tt_norm = "layer", tt_feature_shape = "4,16,16";
  std::optional<std::string> tt_report;
  tt->add_option("--seed", tt_cfg.seed)->capture_default_str();
  tt->add_option("--steps", tt_cfg.steps)->capture_default_str();
  tt->add_option("--lr", tt_cfg.lr)->capture_default_str();
  tt->add_option("-n,--n", tt_cfg.n)->capture_default_str();
  tt->add_option("--norm", tt_norm, "none|layer|max|batch")->capture_default_str();
  tt->add_flag("--unsafe-no-norm", tt_cfg.unsafe_no_norm);
  tt->add_option("--batch", tt_cfg.batch)->capture_default_str();
  tt->add_option("--feature-shape", tt_feature_shape, "C,H,W")
      ->capture_default_str();
  tt->add_option("--input-scale", tt_cfg.input_scale)->capture_default_str();
  tt->add_option("--report", tt_report, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      smpool::PatternParams params;
      const smpool::Pattern pattern = smpool::parse_pattern(gen_pattern);
      if (pattern == smpool::Pattern::uniform_noise) {
        params.a = gen_a.value_or(0.0);
        params.b = gen_b.value_or(1.0);
      } else {
        params.a = gen_a.value_or(1.0);
        params.b = gen_b.value_or(0.0);
      }
      params.seed = gen_seed;
      const smpool::Tensor t = smpool::generate_pattern(
          pattern, smpool::Shape(parse_list(gen_shape)), params);
      smpool::write_tensor(t, gen_out);
      return kExitOk;
    }

    if (*pool) {
      const smpool::Tensor x = smpool::read_tensor(pool_in);
      const smpool::PoolSpec geometry =
          pool_geom.resolve(x.height(), x.width(), "global");
      smpool::Tensor y;
      if (pool_mode == "sap") {
        y = smpool::sap_forward(x, geometry, pool_threads);
      } else if (pool_mode == "smp") {
        smpool::ForwardOptions opts;
        opts.threads = pool_threads;
        y = smpool::smp_forward(x, geometry, pool_moments.resolve(), opts);
      } else {
        throw smpool::SpecError("unknown --mode '" + pool_mode + "'");
      }
      smpool::write_tensor(y, pool_out);
      std::cout << shape_string(x.shape()) << " → " << shape_string(y.shape())
                << "\n";
      return kExitOk;
    }

    if (*gc) {
      const smpool::Shape shape(parse_list(gc_shape));
      const smpool::MomentSpec spec = gc_moments.resolve();
      const auto dims = shape.nchw();
      const smpool::PoolSpec geometry = gc_geom.resolve(dims[2], dims[3], "3");
      smpool::Xoshiro256 x_rng(gc_seed, 0);
      smpool::Xoshiro256 u_rng(gc_seed, 1);
      const smpool::Tensor x = smpool::uniform_tensor(shape, x_rng);
      const smpool::MomentLayout layout =
          smpool::moment_layout(shape, geometry, spec.n);
      const smpool::Tensor u = smpool::uniform_tensor(layout.shape(), u_rng);

      smpool::GradCheckReport report;
      if (!gc_perturb) {
        report = smpool::check_smp_gradient(x, geometry, spec, u, gc_h, gc_tol,
                                            gc_threads);
      } else {
        std::vector<double> divisors;
        if (spec.normalizes_high_orders() && spec.norm == smpool::NormKind::max) {
          divisors = smpool::max_norm_divisors(
              smpool::pre_norm_moments(x, geometry, spec), layout, spec);
        }
        const auto forward = [&](const smpool::BasicTensor<long double>& xr) {
          smpool::ForwardOptions opts;
          if (!divisors.empty()) opts.frozen_max_divisors = &divisors;
          return smpool::smp_forward(xr, geometry, spec, opts);
        };
        const smpool::AnalyticBackward corrupted =
            [&](const smpool::Tensor& xx, const smpool::Tensor& uu) {
              smpool::Tensor g = smpool::smp_backward(xx, geometry, spec, uu);
              g[0] = g[0] * 1.01 + 1e-3;
              return g;
            };
        report = smpool::finite_diff_check(forward, corrupted, x, u, gc_h,
                                           gc_tol, gc_threads);
      }
      print_json(smpool::to_json(report), gc_report);
      return report.passed ? kExitOk : kExitCheckFailed;
    }

    if (*bench) {
      bench_cfg.shape = smpool::Shape(parse_list(bench_shape));
      const auto dims = bench_cfg.shape.nchw();
      bench_cfg.pool = bench_geom.resolve(dims[2], dims[3], "global");
      const smpool::BenchReport report = smpool::run_bench(bench_cfg);
      if (bench_json) {
        print_json(smpool::to_json(report), std::nullopt);
      } else {
        std::cout << smpool::format_bench_table(report);
      }
      return kExitOk;
    }

    if (*tt) {
      tt_cfg.norm = smpool::parse_norm(tt_norm);
      const auto fs = parse_list(tt_feature_shape);
      if (fs.size() != 3) throw smpool::SpecError("--feature-shape takes C,H,W");
      tt_cfg.channels = fs[0];
      tt_cfg.height = fs[1];
      tt_cfg.width = fs[2];
      const smpool::ToyTrainReport report = smpool::run_toytrain(tt_cfg);
      print_json(smpool::to_json(report), tt_report);
      return kExitOk;
    }
  } catch (const smpool::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
