#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace awsde {

// Uniform grid on [0, T] with N steps. Construction rejects h >= 1 so that
// log h < 0 everywhere downstream.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::int64_t steps);

  double horizon() const noexcept { return horizon_; }
  std::int64_t steps() const noexcept { return steps_; }
  double step() const noexcept { return step_; }
  double time(std::int64_t k) const noexcept {
    return k == steps_ ? horizon_ : static_cast<double>(k) * step_;
  }

  // Grid with the same horizon and steps / factor steps.
  TimeGrid coarsen(std::int64_t factor) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  std::int64_t steps_;
  double step_;
};

struct TruncationLevel {
  double a_h;
};

struct IncrementBatch {
  TimeGrid grid;
  std::uint64_t seed;
  std::int64_t path_index;
  std::vector<double> values;
  bool truncated = false;
};

// Philox4x32-10 counter-based generator. Every output block is a pure
// function of (key, counter), so paths can be generated in any order on any
// number of threads.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(Block counter) const noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
};

// Standard normal draw for the (seed, stream, path_index, step) counter.
double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::int64_t path_index,
                   std::int64_t step) noexcept;

// Derives the seed of an independent stream (used for the second Brownian
// motion in a correlated pair).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

IncrementBatch sample_increments(const TimeGrid& grid, std::uint64_t seed,
                                 std::int64_t path_index);

// In-place variant for hot loops; `out` must have grid.steps() entries.
void fill_increments(const TimeGrid& grid, std::uint64_t seed, std::int64_t path_index,
                     std::span<double> out);

TruncationLevel truncation_level(const TimeGrid& grid);
TruncationLevel truncation_level(double h);

double truncate_increment(double value, TruncationLevel level) noexcept;
IncrementBatch truncate_increments(const IncrementBatch& batch);

IncrementBatch correlate(const IncrementBatch& batch, const IncrementBatch& independent,
                         double rho);

}  // namespace awsde
