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

namespace smpool {

nlohmann::ordered_json real_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::ordered_json to_json(const GradCheckReport& r) {
  nlohmann::ordered_json j;
  j["max_rel_error"] = real_to_json(r.max_rel_error);
  j["max_abs_error"] = real_to_json(r.max_abs_error);
  j["worst_index"] = r.worst_index;
  j["n_checked"] = r.n_checked;
  j["passed"] = r.passed;
  j["tolerance"] = r.tolerance;
  return j;
}

nlohmann::ordered_json to_json(const ToyTrainReport& r) {
  nlohmann::ordered_json j;
  if (r.step_of_first_nonfinite) {
    j["step_of_first_nonfinite"] = *r.step_of_first_nonfinite;
  } else {
    j["step_of_first_nonfinite"] = nullptr;
  }
  j["final_loss"] = real_to_json(r.final_loss);
  auto curve = nlohmann::ordered_json::array();
  for (double v : r.loss_curve) curve.push_back(real_to_json(v));
  j["loss_curve"] = std::move(curve);
  return j;
}

nlohmann::ordered_json to_json(const OpCostReport& r) {
  nlohmann::ordered_json j;
  j["mul_add_count"] = r.mul_add_count;
  j["extra_vs_sap"] = r.extra_vs_sap;
  return j;
}

nlohmann::ordered_json to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const BenchRow& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["name"] = row.name;
    jr["n"] = row.n;
    jr["norm"] = row.norm;
    jr["median_ns"] = row.median_ns;
    jr["ns_per_output_element"] = row.ns_per_output_element;
    jr["op_cost"] = to_json(row.cost);
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  j["smp4_over_sap_time"] = r.smp4_over_sap_time;
  j["extra_ratio_n4_over_n2"] = r.extra_ratio_n4_over_n2;
  return j;
}

}  // namespace smpool
