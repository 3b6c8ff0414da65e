#include "awsde/randomness.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "awsde/error.hpp"

namespace awsde {

TimeGrid::TimeGrid(double horizon, std::int64_t steps)
    : horizon_(horizon), steps_(steps), step_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    fail(ErrorKind::configuration, "time grid: horizon must be positive and finite");
  }
  if (steps <= 0) {
    fail(ErrorKind::configuration, "time grid: steps must be positive");
  }
  step_ = horizon / static_cast<double>(steps);
  if (!(step_ < 1.0)) {
    fail(ErrorKind::configuration,
         "time grid: step h = T/N = " + std::to_string(step_) + " must satisfy h < 1 (need N > T)");
  }
}

TimeGrid TimeGrid::coarsen(std::int64_t factor) const {
  if (factor <= 0 || steps_ % factor != 0) {
    fail(ErrorKind::configuration, "coarsening factor " + std::to_string(factor) +
                                       " does not divide N = " + std::to_string(steps_));
  }
  return TimeGrid(horizon_, steps_ / factor);
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Philox4x32::Block Philox4x32::operator()(Block ctr) const noexcept {
  std::uint32_t k0 = key_[0];
  std::uint32_t k1 = key_[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  if (stream == 0) return seed;
  return splitmix64(seed ^ splitmix64(stream));
}

double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::int64_t path_index,
                   std::int64_t step) noexcept {
  const Philox4x32 gen(derive_seed(seed, stream));
  const auto s = static_cast<std::uint64_t>(step);
  const auto p = static_cast<std::uint64_t>(path_index);
  const auto out = gen({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                        static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)});
  constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  const std::uint64_t a = ((static_cast<std::uint64_t>(out[0]) << 32) | out[1]) >> 11;
  const std::uint64_t b = ((static_cast<std::uint64_t>(out[2]) << 32) | out[3]) >> 11;
  const double u1 = (static_cast<double>(a) + 1.0) * kInv53;  // (0, 1]
  const double u2 = static_cast<double>(b) * kInv53;          // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void fill_increments(const TimeGrid& grid, std::uint64_t seed, std::int64_t path_index,
                     std::span<double> out) {
  if (static_cast<std::int64_t>(out.size()) != grid.steps()) {
    fail(ErrorKind::configuration, "increment buffer size does not match the grid");
  }
  const double scale = std::sqrt(grid.step());
  for (std::int64_t k = 0; k < grid.steps(); ++k) {
    out[static_cast<std::size_t>(k)] = scale * gaussian_at(seed, 0, path_index, k);
  }
}

IncrementBatch sample_increments(const TimeGrid& grid, std::uint64_t seed,
                                 std::int64_t path_index) {
  IncrementBatch batch{grid, seed, path_index,
                       std::vector<double>(static_cast<std::size_t>(grid.steps())), false};
  fill_increments(grid, seed, path_index, batch.values);
  return batch;
}

TruncationLevel truncation_level(double h) {
  if (!(h > 0.0 && h < 1.0)) {
    fail(ErrorKind::domain, "truncation level needs h in (0, 1), got " + std::to_string(h));
  }
  return {4.0 * std::sqrt(-h * std::log(h))};
}

TruncationLevel truncation_level(const TimeGrid& grid) { return truncation_level(grid.step()); }

double truncate_increment(double value, TruncationLevel level) noexcept {
  if (value > level.a_h) return level.a_h;
  if (value < -level.a_h) return -level.a_h;
  return value;
}

IncrementBatch truncate_increments(const IncrementBatch& batch) {
  const TruncationLevel level = truncation_level(batch.grid);
  IncrementBatch out = batch;
  for (double& v : out.values) v = truncate_increment(v, level);
  out.truncated = true;
  return out;
}

IncrementBatch correlate(const IncrementBatch& batch, const IncrementBatch& independent,
                         double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    fail(ErrorKind::domain, "correlation must lie in [-1, 1], got " + std::to_string(rho));
  }
  if (!(batch.grid == independent.grid) || batch.values.size() != independent.values.size()) {
    fail(ErrorKind::configuration, "correlate: batches are on different grids");
  }
  if (rho == 1.0) return batch;
  if (rho == 0.0) return independent;
  IncrementBatch out = batch;
  const double orth = std::sqrt(1.0 - rho * rho);
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = rho * batch.values[k] + orth * independent.values[k];
  }
  return out;
}

}  // namespace awsde
