#include <filesystem>

#include "doctest.h"
#include "wavehdnn/checkpoint.hpp"
#include "wavehdnn/errors.hpp"

using namespace wavehdnn;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.num_users = 3;
  c.num_items = 2;
  c.dim = 2;
  c.layers = 1;
  Matrix a(3, 2), b(2, 2);
  a << 1, -2, 3.5, 1e-300, -0.0, 7;
  b << 0.25, 0.5, 0.75, 1.0;
  c.tensors = {a, b, a, b};
  return c;
}

void expect_equal(const Checkpoint& x, const Checkpoint& y) {
  CHECK(x.num_users == y.num_users);
  CHECK(x.num_items == y.num_items);
  CHECK(x.dim == y.dim);
  CHECK(x.layers == y.layers);
  REQUIRE(x.tensors.size() == y.tensors.size());
  for (std::size_t k = 0; k < x.tensors.size(); ++k) CHECK(x.tensors[k] == y.tensors[k]);
}

}  // namespace

TEST_CASE("serialize then deserialize is lossless") {
  const auto c = sample();
  const auto bytes = serialize(c);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "WHDNN");
  expect_equal(deserialize(bytes), c);
  CHECK(serialize(deserialize(bytes)) == bytes);
  CHECK(c.model_kind() == "lightgcn");
  CHECK(c.fused_items() == c.tensors[3]);
}

TEST_CASE("layout sizes") {
  // magic + version + 4 counts + 4 x (rank + 2 dims) + values + checksum
  const std::size_t expected = 5 + 4 + 32 + 4 * (4 + 16) + (6 + 4 + 6 + 4) * 8 + 8;
  CHECK(serialize(sample()).size() == expected);
}

TEST_CASE("corrupt input is rejected") {
  auto bytes = serialize(sample());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad_magic), FormatError);
  auto flipped = bytes;
  flipped[60] ^= 0x01;
  CHECK_THROWS_AS(deserialize(flipped), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_THROWS_AS(deserialize(truncated), FormatError);
  auto version = bytes;
  version[5] = 9;
  CHECK_THROWS_AS(deserialize(version), FormatError);
  CHECK_THROWS_AS(deserialize({}), FormatError);
}

TEST_CASE("files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "wavehdnn_test_checkpoint";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto c = sample();
  save_checkpoint(c, dir / "m.ckpt");
  expect_equal(load_checkpoint(dir / "m.ckpt"), c);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}
