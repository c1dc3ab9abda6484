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

#include "smpool/harness.h"
#include "smpool/rng.h"

namespace smpool {

Pattern parse_pattern(const std::string& name) {
  if (name == "checkerboard") return Pattern::checkerboard;
  if (name == "solid") return Pattern::solid;
  if (name == "ramp") return Pattern::ramp;
  if (name == "uniform-noise") return Pattern::uniform_noise;
  throw SpecError("unknown pattern '" + name +
                  "' (expected checkerboard, solid, ramp or uniform-noise)");
}

Tensor generate_pattern(Pattern pattern, const Shape& shape,
                        const PatternParams& params) {
  Tensor t(shape);
  switch (pattern) {
    case Pattern::checkerboard:
      for (Index s = 0; s < t.batch(); ++s)
        for (Index c = 0; c < t.channels(); ++c)
          for (Index h = 0; h < t.height(); ++h)
            for (Index w = 0; w < t.width(); ++w)
              t(s, c, h, w) = (h + w) % 2 == 0 ? params.a : params.b;
      break;
    case Pattern::solid:
      t.data().setConstant(params.a);
      break;
    case Pattern::ramp:
      for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
      break;
    case Pattern::uniform_noise: {
      if (!params.seed) throw SpecError("uniform-noise needs a seed");
      Xoshiro256 rng(*params.seed);
      t = uniform_tensor(shape, rng, params.a, params.b);
      break;
    }
  }
  return t;
}

NormKind parse_norm(const std::string& name) {
  if (name == "none") return NormKind::none;
  if (name == "layer") return NormKind::layer;
  if (name == "max") return NormKind::max;
  if (name == "batch") return NormKind::batch;
  throw SpecError("unknown norm '" + name +
                  "' (expected none, layer, max or batch)");
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::none: return "none";
    case NormKind::layer: return "layer";
    case NormKind::max: return "max";
    case NormKind::batch: return "batch";
  }
  return "none";
}

}  // namespace smpool
