#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "mixagg/errors.hpp"
#include "mixagg/tensor_io.hpp"
#include "test_util.hpp"

namespace mixagg {
namespace {

using testing::random_tensor;

std::string serialize(const Tensor& t) {
  std::ostringstream out(std::ios::binary);
  write_tensor(out, t);
  return out.str();
}

Tensor deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_tensor(in);
}

TEST(Mxt1, ByteLayout) {
  // Hand-assembled: magic, rank 2, dims 1 and 2, floats 1.0f and -2.0f.
  const unsigned char expected[] = {'M', 'X', 'T', '1', 2, 0, 0, 0, 1, 0, 0, 0, 0,    0,    0,    0,
                                    2,   0,   0,   0,   0, 0, 0, 0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0};
  const auto bytes = serialize(Tensor({1, 2}, {1.0f, -2.0f}));
  ASSERT_EQ(bytes.size(), sizeof(expected));
  EXPECT_EQ(std::memcmp(bytes.data(), expected, sizeof(expected)), 0);
}

TEST(Mxt1, RoundTripIsBitExactOnRandomPayloads) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    Shape dims;
    const std::size_t rank = 1 + rng() % 4;
    for (std::size_t i = 0; i < rank; ++i) dims.push_back(1 + rng() % 5);
    auto t = random_tensor<float>(dims, rng(), -1e6, 1e6);
    // Special values survive too.
    t[0] = -0.0f;
    if (t.size() > 1) t[1] = std::numeric_limits<float>::denorm_min();
    const auto bytes = serialize(t);
    const auto back = deserialize(bytes);
    ASSERT_EQ(back.dims(), t.dims());
    EXPECT_EQ(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(float)), 0);
    EXPECT_EQ(serialize(back), bytes);
  }
}

TEST(Mxt1, RejectsBadMagic) {
  auto bytes = serialize(Tensor({2}, {1, 2}));
  bytes[3] = '2';
  EXPECT_THROW(deserialize(bytes), IoError);
}

TEST(Mxt1, RejectsEveryTruncation) {
  const auto bytes = serialize(random_tensor<float>({2, 3}, 1));
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    EXPECT_THROW(deserialize(bytes.substr(0, n)), IoError) << "prefix " << n;
  }
}

TEST(Mxt1, RejectsZeroRankAndZeroDims) {
  auto bytes = serialize(Tensor({2}, {1, 2}));
  auto zero_rank = bytes;
  zero_rank[4] = 0;
  EXPECT_THROW(deserialize(zero_rank), IoError);
  auto zero_dim = bytes;
  zero_dim[8] = 0;
  EXPECT_THROW(deserialize(zero_dim), IoError);
}

TEST(Mxt1, FileRoundTrip) {
  testing::TempDir dir("mxt");
  const auto t = random_tensor<float>({3, 4, 5}, 2);
  save_tensor(dir / "t.mxt", t);
  EXPECT_EQ(load_tensor(dir / "t.mxt"), t);
  EXPECT_THROW(load_tensor(dir / "missing.mxt"), IoError);
}

}  // namespace
}  // namespace mixagg
