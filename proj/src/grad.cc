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

#include "smpool/grad.h"

#include <cmath>

namespace smpool {

GradCheckReport check_smp_gradient(const Tensor& x, const PoolSpec& pool,
                                   const MomentSpec& spec,
                                   const Tensor& upstream, double h,
                                   double tol, int threads) {
  spec.validate();
  std::vector<double> divisors;
  if (spec.normalizes_high_orders() && spec.norm == NormKind::max) {
    divisors = max_norm_divisors(pre_norm_moments(x, pool, spec),
                                 moment_layout(x.shape(), pool, spec.n), spec);
  }
  const auto forward = [&](const BasicTensor<long double>& xr) {
    ForwardOptions opts;
    if (!divisors.empty()) opts.frozen_max_divisors = &divisors;
    return smp_forward(xr, pool, spec, opts);
  };
  const AnalyticBackward backward = [&](const Tensor& xx, const Tensor& u) {
    return smp_backward(xx, pool, spec, u);
  };
  return finite_diff_check(forward, backward, x, upstream, h, tol, threads);
}

Tensor profile_upstream(const Shape& output_shape, const MomentLayout& layout,
                        int order) {
  Tensor u(output_shape);
  const Index block = layout.channels * layout.positions();
  for (Index s = 0; s < layout.batch; ++s) {
    const Index start = layout.offset(s, layout.channel(order, 0));
    for (Index k = 0; k < block; ++k) {
      u[start + k] = std::sin(1.0 + 0.7 * static_cast<double>(k));
    }
  }
  return u;
}

std::vector<double> gradient_magnitude_profile(const Tensor& x,
                                               const PoolSpec& pool,
                                               const MomentSpec& spec) {
  MomentSpec s = spec;
  if (s.norm == NormKind::none) s.unsafe_no_norm = true;
  s.validate();
  const MomentLayout layout = moment_layout(x.shape(), pool, s.n);
  std::vector<double> profile;
  for (int i = 1; i <= s.n; ++i) {
    const Tensor u = profile_upstream(layout.shape(), layout, i);
    profile.push_back(smp_backward(x, pool, s, u).data().abs().maxCoeff());
  }
  return profile;
}

}  // namespace smpool
