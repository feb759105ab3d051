#include <cstring>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rangeal/error.hpp"
#include "rangeal/synth.hpp"
#include "rangeal/tensor_io.hpp"
#include "temp_dir.hpp"

using namespace rangeal;

namespace {

std::uint32_t u32_at(const std::vector<std::byte>& b, std::size_t off) {
  return std::to_integer<std::uint32_t>(b[off]) | std::to_integer<std::uint32_t>(b[off + 1]) << 8 |
         std::to_integer<std::uint32_t>(b[off + 2]) << 16 | std::to_integer<std::uint32_t>(b[off + 3]) << 24;
}

}  // namespace

TEST_CASE("MCPT byte layout") {
  McProbTensor t(3, 2, 2, 1);
  t.valid = {1, 0, 1, 1, 0, 1};
  for (std::size_t p = 0; p < 6; ++p) {
    t.at(p, 0, 0) = 0.25f;
    t.at(p, 1, 0) = 0.75f;
  }
  const auto b = encode_tensor(t);
  REQUIRE(b.size() == 24 + 6 * 2 * 4 + 6);
  CHECK(std::memcmp(b.data(), "MCPT", 4) == 0);
  CHECK(u32_at(b, 4) == 1);
  CHECK(u32_at(b, 8) == 3);
  CHECK(u32_at(b, 12) == 2);
  CHECK(u32_at(b, 16) == 2);
  CHECK(u32_at(b, 20) == 1);
  // Pixel (u=1, v=0) class 1 sits at float index (0*3 + 1)*2 + 1.
  float f;
  std::memcpy(&f, b.data() + 24 + 3 * 4, 4);
  CHECK(f == 0.75f);
  CHECK(std::to_integer<int>(b[24 + 48 + 1]) == 0);
  CHECK(std::to_integer<int>(b[24 + 48 + 2]) == 1);
}

TEST_CASE("MCPT tensors round-trip bit-exactly") {
  TempDir dir("mcpt");
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = oracle::random_tensor(gen, 1 + trial % 16, 1 + trial % 7, 2 + trial % 4, 1 + trial % 8);
    CHECK(decode_tensor(encode_tensor(t)) == t);
    store_tensor(t, dir / "t.mcpt");
    const auto back = load_external_tensor(dir / "t.mcpt");
    REQUIRE(back == t);
    REQUIRE(std::memcmp(back.probs.data(), t.probs.data(), t.probs.size() * 4) == 0);
  }
}

TEST_CASE("malformed MCPT inputs") {
  std::mt19937_64 gen(1);
  const auto t = oracle::random_tensor(gen, 4, 3, 3, 2);
  const auto good = encode_tensor(t);
  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_tensor(truncated), Error);
  CHECK_THROWS_AS(decode_tensor(std::span(good).first(10)), Error);
  auto magic = good;
  magic[0] = std::byte{'X'};
  CHECK_THROWS_AS(decode_tensor(magic), Error);
  auto dims = good;
  dims[16] = std::byte{4};  // C = 4 no longer matches the payload
  CHECK_THROWS_AS(decode_tensor(dims), Error);
  auto huge = good;
  for (int k = 8; k < 24; ++k) huge[k] = std::byte{0xff};
  CHECK_THROWS_AS(decode_tensor(huge), Error);
  auto version = good;
  version[4] = std::byte{9};
  CHECK_THROWS_AS(decode_tensor(version), Error);
  auto mask = good;
  mask.back() = std::byte{2};
  CHECK_THROWS_AS(decode_tensor(mask), Error);
  try {
    decode_tensor(truncated);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedTensor);
  }
}

TEST_CASE("range images round-trip through MCPT version 2") {
  TempDir dir("rimg");
  SceneSpec spec;
  spec.beams.width = 64;
  spec.beams.height = 8;
  const RangeImage img = project(generate_scene(spec, 3), spec.beams);
  REQUIRE(img.has_instances());
  store_range_image(img, dir / "r.mcpt");
  CHECK(load_range_image(dir / "r.mcpt") == img);
  RangeImage plain = img;
  plain.instance.clear();
  CHECK(decode_range_image(encode_range_image(plain)) == plain);
  CHECK_THROWS_AS(decode_tensor(encode_range_image(img)), Error);
  std::mt19937_64 gen(2);
  CHECK_THROWS_AS(decode_range_image(encode_tensor(oracle::random_tensor(gen, 2, 2, 2, 1))), Error);
}
