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

#include "smpool/tensor_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace smpool {
namespace {

constexpr char kDtype[] = "f64";

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return __builtin_bswap64(v);
  }
  return v;
}

}  // namespace

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  return std::memcmp(a.data().data(), b.data().data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::string tensor_header(const Shape& shape) {
  nlohmann::ordered_json header;
  header["dtype"] = kDtype;
  header["shape"] = shape.dims();
  return header.dump() + "\n";
}

std::string encode_tensor(const Tensor& t) {
  std::string out = tensor_header(t.shape());
  const std::size_t header_len = out.size();
  out.resize(header_len + 8 * static_cast<std::size_t>(t.size()));
  char* dst = out.data() + header_len;
  for (Index i = 0; i < t.size(); ++i) {
    const std::uint64_t bits =
        to_little_endian(std::bit_cast<std::uint64_t>(t[i]));
    std::memcpy(dst + 8 * i, &bits, 8);
  }
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw FormatError("malformed header: missing newline terminator");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed header JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("dtype") ||
      !header.contains("shape")) {
    throw FormatError("malformed header: expected keys \"dtype\" and \"shape\"");
  }
  if (!header["dtype"].is_string() || header["dtype"] != kDtype) {
    throw FormatError("unsupported dtype " + header["dtype"].dump());
  }
  const auto& dims_json = header["shape"];
  if (!dims_json.is_array()) throw FormatError("malformed header: shape");
  std::vector<Index> dims;
  for (const auto& d : dims_json) {
    if (!d.is_number_integer()) throw FormatError("malformed header: shape");
    dims.push_back(d.get<Index>());
  }
  Shape shape = [&] {
    try {
      return Shape(dims);
    } catch (const ShapeError& e) {
      throw FormatError(std::string("invalid shape: ") + e.what());
    }
  }();

  const std::size_t payload = bytes.size() - newline - 1;
  if (payload != 8 * static_cast<std::size_t>(shape.size())) {
    throw FormatError("payload length mismatch: expected " +
                      std::to_string(8 * shape.size()) + " bytes, got " +
                      std::to_string(payload));
  }
  Tensor t(shape);
  const char* src = bytes.data() + newline + 1;
  for (Index i = 0; i < t.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, src + 8 * i, 8);
    t[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_tensor(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace smpool
