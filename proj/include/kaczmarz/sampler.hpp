#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kaczmarz/dense.hpp"
#include "kaczmarz/rng.hpp"

namespace kaczmarz {

// Source of row indices for the solver step rules. Production code uses
// RowSampler; tests inject fixed sequences to force row choices.
struct RowSource {
  virtual ~RowSource() = default;
  virtual std::size_t next_row() = 0;
};

// Samples row j with probability ||a_j||^2 / ||A||_F^2 by binary search on
// the cumulative weights. Holds its own seeded generator; one sampler per
// run, never shared across threads.
class RowSampler final : public RowSource {
 public:
  RowSampler(const DenseMatrix& a, std::uint64_t seed);

  std::size_t next_row() override;

  std::size_t size() const { return cum_weights_.size(); }
  const std::vector<double>& cum_weights() const { return cum_weights_; }
  // Implied probability of row j (difference of adjacent cumulative weights).
  double probability(std::size_t j) const;

 private:
  std::vector<double> cum_weights_;
  Xoshiro256pp rng_;
};

// Replays a fixed sequence of rows, cycling when exhausted. Test helper and
// building block for cyclic sweeps.
class FixedRowSequence final : public RowSource {
 public:
  explicit FixedRowSequence(std::vector<std::size_t> rows)
      : rows_(std::move(rows)) {}

  std::size_t next_row() override {
    const std::size_t j = rows_[pos_ % rows_.size()];
    ++pos_;
    return j;
  }

 private:
  std::vector<std::size_t> rows_;
  std::size_t pos_ = 0;
};

}  // namespace kaczmarz
