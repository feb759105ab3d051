#include "rangeal/rng.hpp"

#include <cmath>
#include <numbers>

namespace rangeal {

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw unbiased for spans that do not divide 2^64.
  const std::uint64_t limit = max() - (max() % span + 1) % span;
  std::uint64_t x = (*this)();
  while (x > limit) x = (*this)();
  return lo + static_cast<std::int64_t>(x % span);
}

double RngStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rangeal
