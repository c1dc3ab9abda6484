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

#include "smpool/smp.h"

namespace smpool {

OpCostReport op_cost(const Shape& shape, const PoolSpec& pool,
                     const MomentSpec& spec) {
  spec.validate();
  const auto [batch, channels, h, w] = shape.nchw();
  const WindowMask mask = detail::has_padding(pool)
                              ? detail::checked_window_mask(h, w, pool)
                              : WindowMask::Constant(
                                    output_dims(h, w, pool).h *
                                        output_dims(h, w, pool).w,
                                    pool.window_size(), true);

  const std::int64_t planes = batch * channels;
  const std::int64_t cells = planes * mask.rows();
  const std::int64_t values = planes * mask.count();

  const std::int64_t sap = values;
  std::int64_t total = sap;
  for (int i = 2; i <= spec.n; ++i) total += values + cells;
  if (spec.n >= 3) {
    const std::int64_t high = (spec.n - 2) * cells;
    if (spec.standardize_pre_norm) total += cells + 2 * high;
    switch (spec.norm) {
      case NormKind::layer:
      case NormKind::batch:
        total += 3 * high;
        break;
      case NormKind::max:
        total += 2 * high;
        break;
      case NormKind::none:
        break;
    }
  }
  return {total, total - sap};
}

}  // namespace smpool
