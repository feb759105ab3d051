#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rangeal/projection.hpp"
#include "rangeal/uncertainty.hpp"

namespace rangeal {

// MCPT container: "MCPT", then five little-endian u32 (version, W, H, C, T),
// then W*H*C*T little-endian float32 in (v, u, c, t) row-major order, then
// W*H validity bytes (0 or 1).
//
// Version 1 holds a Monte-Carlo probability tensor. Version 2 holds a range
// image with T = 1 and the planes x, y, r, remission, label, point index and,
// when C = 7, instance id.
inline constexpr std::uint32_t kTensorVersionProbs = 1;
inline constexpr std::uint32_t kTensorVersionRangeImage = 2;

struct TensorHeader {
  std::uint32_t version = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t classes = 0;
  std::uint32_t iterations = 0;
};

std::vector<std::byte> encode_tensor(const McProbTensor& t);
McProbTensor decode_tensor(std::span<const std::byte> bytes);

std::vector<std::byte> encode_range_image(const RangeImage& img);
RangeImage decode_range_image(std::span<const std::byte> bytes);

/// Parses and checks the header against the payload length.
TensorHeader decode_header(std::span<const std::byte> bytes);

void store_tensor(const McProbTensor& t, const std::filesystem::path& path);
McProbTensor load_external_tensor(const std::filesystem::path& path);

void store_range_image(const RangeImage& img, const std::filesystem::path& path);
RangeImage load_range_image(const std::filesystem::path& path);

}  // namespace rangeal
