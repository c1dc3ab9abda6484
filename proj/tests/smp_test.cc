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

#include <gtest/gtest.h>

#include "smpool/rng.h"
#include "smpool/smp.h"
#include "test_util.h"

namespace smpool {
namespace {

using testing::max_abs_diff;
using testing::random_geometry;
using testing::random_tensor;

const MomentSpec kUnsafe4 = MomentSpec::make(4, NormKind::none, true);

Tensor checkerboard() {
  return Tensor(Shape::nchw(1, 1, 3, 3), {1, 0, 1, 0, 1, 0, 1, 0, 1});
}

TEST(MomentSpec, GuardsUnnormalizedHighOrders) {
  EXPECT_THROW(MomentSpec::make(3, NormKind::none), SpecError);
  EXPECT_THROW(MomentSpec::make(4, NormKind::none), SpecError);
  EXPECT_NO_THROW(MomentSpec::make(4, NormKind::none, true));
  EXPECT_NO_THROW(MomentSpec::make(2, NormKind::none));
  EXPECT_THROW(MomentSpec::make(5, NormKind::layer), SpecError);
  EXPECT_THROW(MomentSpec::make(0, NormKind::layer), SpecError);
  MomentSpec bad;
  bad.eps_norm = 0;
  EXPECT_THROW(bad.validate(), SpecError);
}

TEST(SmpForward, CheckerboardGlobalSmp4) {
  const Tensor y = smp_forward(checkerboard(), PoolSpec::global(3, 3), kUnsafe4);
  ASSERT_EQ(y.shape(), Shape::nchw(1, 4, 1, 1));
  EXPECT_NEAR(y[0], 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(y[1], 20.0 / 81.0, 1e-15);
  EXPECT_NEAR(y[2], -20.0 / 729.0, 1e-15);
  EXPECT_NEAR(y[3], 3780.0 / 59049.0, 1e-15);
}

TEST(SmpForward, SolidGlobalSmp4) {
  const Tensor solid = Tensor::constant(Shape::nchw(1, 1, 3, 3), 7.0);
  const Tensor y = smp_forward(solid, PoolSpec::global(3, 3), kUnsafe4);
  EXPECT_TRUE(bit_equal(y, Tensor(Shape::nchw(1, 4, 1, 1), {7, 0, 0, 0})));
}

TEST(SmpForward, MomentMajorChannelLayout) {
  const Tensor x = random_tensor(Shape::nchw(2, 3, 5, 5), 77);
  const PoolSpec p = PoolSpec::square(2, 1);
  const Tensor y = smp_forward(x, p, kUnsafe4);
  const Tensor naive = testing::naive_raw_moments(x, p, 4);
  ASSERT_EQ(y.shape(), Shape::nchw(2, 12, 4, 4));
  for (Index c = 0; c < 3; ++c) {
    const auto v = testing::gather_window(x, 1, c, 2, 3, p);
    const auto mv = central_moments(std::span<const double>(v), 4);
    for (int i = 1; i <= 4; ++i) {
      EXPECT_DOUBLE_EQ(y(1, (i - 1) * 3 + c, 2, 3), mv[i]);
    }
  }
  EXPECT_LE(max_abs_diff(y, naive), 1e-12);
}

TEST(SmpForward, ExclusivePaddingUsesInBoundsCellsOnly) {
  const Tensor x(Shape::nchw(1, 1, 2, 2), {1, 2, 3, 4});
  const Tensor y = smp_forward(x, PoolSpec::square(2, 1, 1),
                               MomentSpec::make(2, NormKind::none));
  ASSERT_EQ(y.shape(), Shape::nchw(1, 2, 3, 3));
  EXPECT_EQ(y(0, 0, 0, 0), 1.0);  // corner window sees only x(0,0)
  EXPECT_EQ(y(0, 1, 0, 0), 0.0);
  EXPECT_EQ(y(0, 0, 0, 1), 1.5);  // top edge: {1, 2}
  EXPECT_EQ(y(0, 1, 0, 1), 0.25);
  EXPECT_EQ(y(0, 0, 1, 1), 2.5);  // centre: all four
}

TEST(SmpForward, RejectsWindowsThatSeeOnlyPadding) {
  const Tensor x = random_tensor(Shape::nchw(1, 1, 3, 3), 1);
  PoolSpec p = PoolSpec::square(1, 1, 1);
  EXPECT_THROW(smp_forward(x, p, MomentSpec{}), GeometryError);
}

TEST(SmpForward, GeometryAndSpecErrors) {
  const Tensor x = random_tensor(Shape::nchw(1, 1, 3, 3), 1);
  EXPECT_THROW(smp_forward(x, PoolSpec::square(4), MomentSpec{}), GeometryError);
  MomentSpec unguarded;
  unguarded.n = 3;
  EXPECT_THROW(smp_forward(x, PoolSpec::square(2), unguarded), SpecError);
}

TEST(SmpForward, LowOrdersNeverNormalized) {
  const Tensor x = random_tensor(Shape::nchw(2, 2, 6, 6), 31, -3, 3);
  const PoolSpec p = PoolSpec::square(3);
  const Tensor raw = raw_moments(x, p, 4);
  for (NormKind k : {NormKind::layer, NormKind::max, NormKind::batch}) {
    const Tensor y = smp_forward(x, p, MomentSpec::make(4, k));
    const MomentLayout L = moment_layout(x.shape(), p, 4);
    for (Index s = 0; s < 2; ++s) {
      const Index lo = L.offset(s, 0);
      const Index len = 2 * L.channels * L.positions();
      EXPECT_TRUE((y.data().segment(lo, len) == raw.data().segment(lo, len)).all());
    }
  }
}

TEST(SmpForward, LayerNormGroupsArePerOrderPerSample) {
  const Tensor x = random_tensor(Shape::nchw(2, 3, 6, 6), 32, -2, 2);
  const PoolSpec p = PoolSpec::square(3);
  const Tensor y = smp_forward(x, p, MomentSpec::make(4, NormKind::layer));
  const MomentLayout L = moment_layout(x.shape(), p, 4);
  const Index len = L.channels * L.positions();
  for (Index s = 0; s < 2; ++s) {
    for (int i = 3; i <= 4; ++i) {
      const auto g = y.data().segment(L.offset(s, L.channel(i, 0)), len);
      EXPECT_LT(std::abs(g.mean()), 1e-10);
      EXPECT_NEAR((g - g.mean()).square().mean(), 1.0, 1e-3);
    }
  }
}

TEST(SmpForward, JointAxisNormalizesAllHighOrdersTogether) {
  const Tensor x = random_tensor(Shape::nchw(1, 2, 5, 5), 33, -2, 2);
  const PoolSpec p = PoolSpec::square(2);
  MomentSpec spec = MomentSpec::make(4, NormKind::layer);
  spec.norm_axis = NormAxis::joint;
  const Tensor y = smp_forward(x, p, spec);
  const MomentLayout L = moment_layout(x.shape(), p, 4);
  const auto g = y.data().segment(L.offset(0, L.channel(3, 0)),
                                  2 * L.channels * L.positions());
  EXPECT_LT(std::abs(g.mean()), 1e-10);
  EXPECT_NEAR((g - g.mean()).square().mean(), 1.0, 1e-3);
}

TEST(SmpForward, StandardizeDividesBySigmaPowers) {
  const Tensor x = random_tensor(Shape::nchw(1, 1, 4, 4), 34, -2, 2);
  const PoolSpec p = PoolSpec::global(4, 4);
  MomentSpec spec = MomentSpec::make(4, NormKind::none, true);
  spec.standardize_pre_norm = true;
  const Tensor y = smp_forward(x, p, spec);
  const Tensor raw = raw_moments(x, p, 4);
  const double sigma = std::sqrt(raw[1]);
  EXPECT_DOUBLE_EQ(y[2], raw[2] / (sigma * sigma * sigma + kNormEps));
  EXPECT_DOUBLE_EQ(y[3], raw[3] / (raw[1] * raw[1] + kNormEps));
}

TEST(SmpForward, BatchNormRunningStateAndEval) {
  const Tensor x = random_tensor(Shape::nchw(4, 2, 4, 4), 35, -2, 2);
  const PoolSpec p = PoolSpec::square(2, 2);
  const MomentSpec spec = MomentSpec::make(4, NormKind::batch);
  BatchNormState state;
  ForwardOptions train;
  train.batch_state = &state;
  smp_forward(x, p, spec, train);
  ASSERT_EQ(state.running_mean.size(), 4);  // (n - 2) * C high-order channels
  EXPECT_TRUE((state.running_mean != 0.0).any());

  ForwardOptions eval;
  eval.batch_mode = BatchNormMode::eval;
  eval.batch_state = &state;
  const Tensor y = smp_forward(x, p, spec, eval);
  EXPECT_FALSE(has_nonfinite(y));

  ForwardOptions no_state;
  no_state.batch_mode = BatchNormMode::eval;
  EXPECT_THROW(smp_forward(x, p, spec, no_state), SpecError);
  EXPECT_THROW(smp_forward(random_tensor(Shape::nchw(1, 2, 4, 4), 1), p, spec),
               SpecError);
}

TEST(SapForward, GlobalMean) {
  const Tensor x(Shape::nchw(1, 1, 2, 2), {1, 2, 3, 4});
  const Tensor y = sap_forward(x, PoolSpec::global(2, 2));
  EXPECT_EQ(y.shape(), Shape::nchw(1, 1, 1, 1));
  EXPECT_EQ(y[0], 2.5);
}

TEST(SapForward, StridedRamp) {
  Tensor ramp(Shape::nchw(1, 1, 4, 4));
  for (Index i = 0; i < 16; ++i) ramp[i] = static_cast<double>(i);
  const Tensor y = sap_forward(ramp, PoolSpec::square(2, 2));
  EXPECT_TRUE(bit_equal(y, Tensor(Shape::nchw(1, 1, 2, 2), {2.5, 4.5, 10.5, 12.5})));
}

TEST(SapForward, BitwiseEqualToSmp1) {
  Xoshiro256 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Shape shape = Shape::nchw(rng.uniform_int(1, 2), rng.uniform_int(1, 4),
                                    rng.uniform_int(1, 16), rng.uniform_int(1, 16));
    const auto d = shape.nchw();
    const PoolSpec p = random_geometry(rng, d[2], d[3]);
    const Tensor x = random_tensor(shape, 100 + t);
    EXPECT_TRUE(bit_equal(sap_forward(x, p), smp_forward(x, p, MomentSpec{})));
  }
}

TEST(SapForward, MatchesBoxFilterWithoutPadding) {
  Xoshiro256 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Shape shape = Shape::nchw(1, 2, rng.uniform_int(1, 12), rng.uniform_int(1, 12));
    const auto d = shape.nchw();
    const PoolSpec p = random_geometry(rng, d[2], d[3], false);
    const Tensor x = random_tensor(shape, 200 + t);
    EXPECT_LE(max_abs_diff(sap_forward(x, p), testing::box_filter_conv(x, p)), 1e-10);
  }
}

TEST(SmpProperties, ShapeLaw) {
  Xoshiro256 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Shape shape = Shape::nchw(rng.uniform_int(1, 3), rng.uniform_int(1, 4),
                                    rng.uniform_int(1, 10), rng.uniform_int(1, 10));
    const auto d = shape.nchw();
    const PoolSpec p = random_geometry(rng, d[2], d[3]);
    const int n = static_cast<int>(rng.uniform_int(1, 4));
    const Tensor y = smp_forward(random_tensor(shape, t), p,
                                 MomentSpec::make(n, NormKind::none, true));
    const OutputDims od = output_dims(d[2], d[3], p);
    EXPECT_EQ(y.shape(), Shape::nchw(d[0], n * d[1], od.h, od.w));
  }
}

TEST(SmpProperties, NonLinearForOrderTwo) {
  const Tensor board = checkerboard();
  Tensor negated = board;
  negated.data() = -board.data();
  Tensor sum = board;
  sum.data() += negated.data();
  const PoolSpec p = PoolSpec::global(3, 3);
  const MomentSpec spec = MomentSpec::make(2, NormKind::none);
  const double m2_of_sum = smp_forward(sum, p, spec)[1];
  const double sum_of_m2 =
      smp_forward(board, p, spec)[1] + smp_forward(negated, p, spec)[1];
  EXPECT_EQ(m2_of_sum, 0.0);
  EXPECT_NEAR(sum_of_m2, 2 * 20.0 / 81.0, 1e-15);
}

TEST(SmpProperties, ShiftOnlyMovesMeanChannels) {
  Xoshiro256 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Shape shape = Shape::nchw(1, 2, rng.uniform_int(2, 10), rng.uniform_int(2, 10));
    const auto d = shape.nchw();
    const PoolSpec p = random_geometry(rng, d[2], d[3]);
    const Tensor x = random_tensor(shape, 300 + t);
    const double c = rng.uniform(-3, 3);
    Tensor shifted = x;
    shifted.data() += c;
    const Tensor a = smp_forward(x, p, kUnsafe4);
    const Tensor b = smp_forward(shifted, p, kUnsafe4);
    const MomentLayout L = moment_layout(shape, p, 4);
    const Index block = L.channels * L.positions();
    EXPECT_LE((b.data().head(block) - a.data().head(block) - c).abs().maxCoeff(), 1e-10);
    EXPECT_LE((b.data().tail(3 * block) - a.data().tail(3 * block)).abs().maxCoeff(), 1e-10);
  }
}

TEST(SmpProperties, ThreadCountDoesNotChangeBits) {
  const Tensor x = random_tensor(Shape::nchw(2, 5, 12, 12), 9);
  const PoolSpec p = PoolSpec::square(3, 2, 1);
  ForwardOptions one, many;
  many.threads = 4;
  const MomentSpec spec = MomentSpec::make(4, NormKind::layer);
  EXPECT_TRUE(bit_equal(smp_forward(x, p, spec, one), smp_forward(x, p, spec, many)));
}

// --- op cost ----------------------------------------------------------------

TEST(OpCost, SapHasNoExtra) {
  const auto r = op_cost(Shape::nchw(1, 8, 10, 10), PoolSpec::square(3), MomentSpec{});
  EXPECT_EQ(r.extra_vs_sap, 0);
  EXPECT_EQ(r.mul_add_count, 8 * 64 * 9);
}

TEST(OpCost, GlobalExtraScalesLinearlyWithChannels) {
  const MomentSpec s2 = MomentSpec::make(2, NormKind::none);
  const auto a = op_cost(Shape::nchw(1, 16, 20, 30), PoolSpec::global(20, 30), s2);
  const auto b = op_cost(Shape::nchw(1, 32, 20, 30), PoolSpec::global(20, 30), s2);
  EXPECT_EQ(b.extra_vs_sap, 2 * a.extra_vs_sap);
  EXPECT_GT(a.extra_vs_sap, 16 * 20 * 30 - 1);
}

TEST(OpCost, MonotoneInOrder) {
  const Shape shape = Shape::nchw(2, 8, 12, 12);
  const PoolSpec p = PoolSpec::square(3, 1, 1);
  std::int64_t prev = -1;
  for (int n = 1; n <= 4; ++n) {
    for (NormKind k : {NormKind::none, NormKind::layer}) {
      if (n < 3 && k != NormKind::none) continue;
      if (n >= 3 && k == NormKind::none) continue;
      const auto r = op_cost(shape, p, MomentSpec::make(n, k));
      EXPECT_GT(r.extra_vs_sap, prev);
      EXPECT_GE(r.extra_vs_sap, 0);
      prev = r.extra_vs_sap;
    }
  }
}

TEST(OpCost, FourthOverSecondOrderRatio) {
  // Last feature map of a VGG16 trunk on a 3x1920x1080 input.
  const Shape shape = Shape::nchw(1, 512, 33, 60);
  const PoolSpec p = PoolSpec::global(33, 60);
  const auto e2 = op_cost(shape, p, MomentSpec::make(2, NormKind::none)).extra_vs_sap;
  const auto e4 = op_cost(shape, p, MomentSpec::make(4, NormKind::layer)).extra_vs_sap;
  const double ratio = static_cast<double>(e4) / static_cast<double>(e2);
  EXPECT_GE(ratio, 2.5);
  EXPECT_LE(ratio, 3.5);
}

}  // namespace
}  // namespace smpool
