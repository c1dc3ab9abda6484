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

#pragma once

#include <filesystem>
#include <string>

#include "smpool/tensor.h"

namespace smpool {

// TensorFile layout: one line of compact JSON {"dtype":"f64","shape":[...]}
// terminated by '\n', followed by 8 * product(shape) bytes of little-endian
// IEEE-754 doubles in row-major order.

// Canonical header line (including the trailing newline) for `shape`.
std::string tensor_header(const Shape& shape);

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

}  // namespace smpool
