#include "kaczmarz/sampler.hpp"

#include <algorithm>

namespace kaczmarz {

RowSampler::RowSampler(const DenseMatrix& a, std::uint64_t seed)
    : cum_weights_(a.rows()), rng_(seed) {
  // Neumaier-compensated prefix sums keep each implied probability within
  // ~1 ulp of row_norms_sq[j]/frob_sq even for thousands of rows.
  const auto& w = a.row_norms_sq();
  const double total = a.frob_sq();
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double p = w[j] / total;
    const double t = sum + p;
    if (std::abs(sum) >= std::abs(p)) {
      comp += (sum - t) + p;
    } else {
      comp += (p - t) + sum;
    }
    sum = t;
    cum_weights_[j] = sum + comp;
  }
  // Pin the last weight so next_row() can never fall off the end.
  cum_weights_.back() = 1.0;
}

std::size_t RowSampler::next_row() {
  const double u = rng_.next_double();
  const auto it =
      std::upper_bound(cum_weights_.begin(), cum_weights_.end(), u);
  return static_cast<std::size_t>(it - cum_weights_.begin());
}

double RowSampler::probability(std::size_t j) const {
  return j == 0 ? cum_weights_[0] : cum_weights_[j] - cum_weights_[j - 1];
}

}  // namespace kaczmarz
