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

#include <cmath>

#include "smpool/harness.h"
#include "smpool/rng.h"

namespace smpool {
namespace {

constexpr double kTargetNoise = 0.01;

// RNG streams of one seed.
enum Stream : std::uint64_t { kCoefStream = 0, kFeatureStream = 1, kNoiseStream = 2 };

}  // namespace

void ToyTrainConfig::validate() const {
  if (steps < 1) throw SpecError("toytrain: steps must be >= 1");
  if (!(lr > 0)) throw SpecError("toytrain: lr must be positive");
  if (batch < 1) throw SpecError("toytrain: batch must be >= 1");
  if (channels < 1 || height < 1 || width < 1) {
    throw SpecError("toytrain: feature shape extents must be >= 1");
  }
  if (!(input_scale > 0)) throw SpecError("toytrain: input_scale must be positive");
  if (norm == NormKind::batch && batch < 2) {
    throw SpecError("toytrain: batch norm needs batch >= 2");
  }
}

ToyTrainReport run_toytrain(const ToyTrainConfig& cfg) {
  cfg.validate();
  const MomentSpec spec = MomentSpec::make(cfg.n, cfg.norm, cfg.unsafe_no_norm);
  const PoolSpec pool = PoolSpec::global(cfg.height, cfg.width);
  const Shape feature_shape =
      Shape::nchw(cfg.batch, cfg.channels, cfg.height, cfg.width);
  const Index C = cfg.channels;
  const Index B = cfg.batch;

  Xoshiro256 coef_rng(cfg.seed, kCoefStream);
  Xoshiro256 feature_rng(cfg.seed, kFeatureStream);
  Xoshiro256 noise_rng(cfg.seed, kNoiseStream);

  // coef(i - 1, c) weights the true order-i moment of channel c.
  Eigen::MatrixXd coef(kMaxMomentOrder, C);
  for (Index i = 0; i < coef.rows(); ++i)
    for (Index c = 0; c < C; ++c) coef(i, c) = coef_rng.uniform(-1.0, 1.0);

  const Index features = cfg.n * C;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(features);
  double bias = 0.0;
  BatchNormState bn_state = BatchNormState::fresh((cfg.n - 2 > 0 ? cfg.n - 2 : 0) * C);

  ToyTrainReport report;
  report.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    Tensor x = uniform_tensor(feature_shape, feature_rng, -1.0, 1.0);
    x.data() *= cfg.input_scale;

    const Tensor truth = raw_moments(x, pool, kMaxMomentOrder);
    Eigen::VectorXd target(B);
    for (Index s = 0; s < B; ++s) {
      double y = 0.0;
      for (int i = 0; i < kMaxMomentOrder; ++i)
        for (Index c = 0; c < C; ++c) y += coef(i, c) * truth(s, i * C + c, 0, 0);
      target(s) = y + kTargetNoise * noise_rng.normal();
    }

    ForwardOptions opts;
    opts.batch_state = &bn_state;
    const Tensor pooled = smp_forward(x, pool, spec, opts);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>
        z(pooled.data().data(), B, features);

    const Eigen::VectorXd residual =
        (z * weights).array() + bias - target.array();
    const double loss = 0.5 * residual.squaredNorm() / static_cast<double>(B);
    report.loss_curve.push_back(loss);
    if (!std::isfinite(loss) && !report.step_of_first_nonfinite) {
      report.step_of_first_nonfinite = step;
    }

    weights -= cfg.lr * (z.transpose() * residual) / static_cast<double>(B);
    bias -= cfg.lr * residual.mean();
  }
  report.final_loss = report.loss_curve.back();
  return report;
}

}  // namespace smpool
