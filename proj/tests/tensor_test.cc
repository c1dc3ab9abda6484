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

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "smpool/rng.h"
#include "smpool/tensor.h"
#include "smpool/tensor_io.h"
#include "test_util.h"

namespace smpool {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("smpool_tensor_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(Shape, RejectsBadRankAndExtents) {
  EXPECT_THROW(Shape(std::vector<Index>{}), ShapeError);
  EXPECT_THROW(Shape({1, 2, 3, 4, 5}), ShapeError);
  EXPECT_THROW(Shape({2, 0}), ShapeError);
  EXPECT_EQ((Shape{3, 4}).nchw(), (std::array<Index, 4>{1, 1, 3, 4}));
}

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(Shape{3}, {1.0, 2.0}), ShapeError);
}

TEST(Tensor, RowMajorNchwIndexing) {
  const Shape shape = Shape::nchw(2, 3, 4, 5);
  Tensor ramp(shape);
  for (Index i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto path = temp_file("ramp.bin");
  write_tensor(ramp, path);
  const Tensor back = read_tensor(path);
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 3; ++c)
      for (Index h = 0; h < 4; ++h)
        for (Index w = 0; w < 5; ++w)
          EXPECT_EQ(back(n, c, h, w),
                    static_cast<double>(((n * 3 + c) * 4 + h) * 5 + w));
  std::filesystem::remove(path);
}

TEST(TensorFile, MinimalFileReadsZero) {
  const auto path = temp_file("minimal.bin");
  spit(path, std::string("{\"dtype\":\"f64\",\"shape\":[1]}\n") +
                 std::string(8, '\0'));
  const Tensor t = read_tensor(path);
  EXPECT_EQ(t.shape(), Shape{1});
  EXPECT_EQ(t[0], 0.0);
  std::filesystem::remove(path);
}

TEST(TensorFile, ShortPayloadIsRejected) {
  const auto path = temp_file("short.bin");
  spit(path, std::string("{\"dtype\":\"f64\",\"shape\":[1]}\n") +
                 std::string(7, '\0'));
  try {
    read_tensor(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("payload length mismatch"),
              std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(TensorFile, MalformedHeaderAndDtype) {
  EXPECT_THROW(decode_tensor("{\"dtype\":\"f64\",\"shape\":[1]"), FormatError);
  EXPECT_THROW(decode_tensor("{\"dtype\":\"f64\",\"shape\":[1}\n" +
                             std::string(8, '\0')),
               FormatError);
  EXPECT_THROW(decode_tensor("{\"dtype\":\"f32\",\"shape\":[1]}\n" +
                             std::string(4, '\0')),
               FormatError);
  EXPECT_THROW(decode_tensor("{\"dtype\":\"f64\",\"shape\":[0]}\n"),
               FormatError);
}

TEST(TensorFile, HeaderByteCount) {
  // Canonical compact serialization, counted by hand:
  // {"dtype":"f64","shape":[2]} is 27 bytes, plus the newline.
  const Tensor t(Shape{2}, {1.0, -1.0});
  const std::string bytes = encode_tensor(t);
  const std::string expected_header = "{\"dtype\":\"f64\",\"shape\":[2]}\n";
  ASSERT_EQ(expected_header.size(), 28u);
  EXPECT_EQ(bytes.substr(0, 28), expected_header);
  EXPECT_EQ(bytes.size(), 28u + 16u);
  // 1.0 little-endian: 00 .. 00 f0 3f
  EXPECT_EQ(static_cast<unsigned char>(bytes[28 + 7]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[28 + 6]), 0xf0);
}

TEST(TensorFile, IdentityRoundTripRank4) {
  const Tensor t(Shape::nchw(1, 1, 1, 1), {5.0});
  const auto path = temp_file("five.bin");
  write_tensor(t, path);
  EXPECT_TRUE(bit_equal(read_tensor(path), t));
  std::filesystem::remove(path);
}

TEST(TensorFile, NanPayloadPreserved) {
  const double payload_nan = std::bit_cast<double>(0x7ff8'0000'dead'beefULL);
  const Tensor t(Shape{2}, {1.0, payload_nan});
  const Tensor back = decode_tensor(encode_tensor(t));
  EXPECT_TRUE(std::isnan(back[1]));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(back[1]), 0x7ff8'0000'dead'beefULL);
}

TEST(TensorFile, RandomRoundTripIsByteIdentical) {
  Xoshiro256 rng(42);
  const auto path = temp_file("rt.bin");
  const auto path2 = temp_file("rt2.bin");
  for (int trial = 0; trial < 100; ++trial) {
    const Index rank = rng.uniform_int(1, 4);
    std::vector<Index> dims;
    for (Index r = 0; r < rank; ++r) dims.push_back(rng.uniform_int(1, 5));
    Tensor t{Shape(dims)};
    for (Index i = 0; i < t.size(); ++i) {
      // Arbitrary bit patterns, including NaNs, infinities and subnormals.
      t[i] = std::bit_cast<double>(rng.next());
    }
    write_tensor(t, path);
    const Tensor back = read_tensor(path);
    ASSERT_TRUE(bit_equal(back, t));
    write_tensor(back, path2);
    ASSERT_EQ(slurp(path), slurp(path2));
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST(HasNonfinite, DetectsNanAndInf) {
  EXPECT_FALSE(has_nonfinite(Tensor(Shape{3}, {1, 2, 3})));
  EXPECT_TRUE(has_nonfinite(
      Tensor(Shape{2}, {1, std::numeric_limits<double>::quiet_NaN()})));
  EXPECT_TRUE(has_nonfinite(
      Tensor(Shape{2}, {1, std::numeric_limits<double>::infinity()})));
}

TEST(TensorFile, MissingFile) {
  EXPECT_THROW(read_tensor(temp_file("does_not_exist.bin")), FormatError);
}

}  // namespace
}  // namespace smpool
