#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "netepi/errors.hpp"
#include "netepi/rng.hpp"

namespace netepi {

/// Normalized probability mass over node degrees k in [k_min, k_max].
///
/// Immutable after construction. The cumulative table used by `sample` is
/// built once, so a distribution can be shared across threads freely.
class DegreeDistribution {
 public:
  /// P(k) proportional to k^-gamma on [k_min, k_max], normalized by direct summation.
  static DegreeDistribution truncated_power_law(double gamma, int k_min, int k_max) {
    if (k_min < 1) throw ParameterError("k_min must be >= 1, got " + std::to_string(k_min));
    if (k_max < k_min) throw ParameterError("k_max must be >= k_min");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be > 0");
    std::vector<double> w(static_cast<std::size_t>(k_max - k_min + 1));
    for (int k = k_min; k <= k_max; ++k) w[static_cast<std::size_t>(k - k_min)] = std::pow(k, -gamma);
    return DegreeDistribution(k_min, std::move(w));
  }

  static DegreeDistribution from_weights(int k_min, std::span<const double> weights) {
    if (k_min < 1) throw ParameterError("k_min must be >= 1, got " + std::to_string(k_min));
    if (weights.empty()) throw ParameterError("weights must not be empty");
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("weights must be finite and nonnegative");
    }
    if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
      throw ParameterError("at least one weight must be positive");
    }
    return DegreeDistribution(k_min, std::vector<double>(weights.begin(), weights.end()));
  }

  /// All mass at degree k.
  static DegreeDistribution single(int k) {
    const double one = 1.0;
    return from_weights(k, std::span<const double>(&one, 1));
  }

  int k_min() const noexcept { return k_min_; }
  int k_max() const noexcept { return k_min_ + static_cast<int>(pmf_.size()) - 1; }
  std::size_t size() const noexcept { return pmf_.size(); }

  /// Mass at degree k; zero outside the support.
  double pmf(int k) const noexcept {
    if (k < k_min_ || k > k_max()) return 0.0;
    return pmf_[static_cast<std::size_t>(k - k_min_)];
  }
  std::span<const double> pmf() const noexcept { return pmf_; }

  double mean_degree() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) m += static_cast<double>(k_min_ + static_cast<int>(i)) * pmf_[i];
    return m;
  }

  double second_moment() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      const double k = k_min_ + static_cast<double>(i);
      m += k * k * pmf_[i];
    }
    return m;
  }

  /// Draw a degree by inverse-CDF lookup (binary search over the cumulative table).
  int sample(Rng& rng) const {
    const double u = uniform01(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) it = std::prev(cdf_.end());
    return k_min_ + static_cast<int>(it - cdf_.begin());
  }

  friend bool operator==(const DegreeDistribution& a, const DegreeDistribution& b) {
    return a.k_min_ == b.k_min_ && a.pmf_ == b.pmf_;
  }

 private:
  DegreeDistribution(int k_min, std::vector<double> weights) : k_min_(k_min), pmf_(std::move(weights)) {
    const double z = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
    for (double& p : pmf_) p /= z;
    cdf_.resize(pmf_.size());
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
    // pin the last positive-mass entry to 1 so trailing zero-mass degrees are never drawn
    std::size_t last = pmf_.size() - 1;
    while (pmf_[last] == 0.0) --last;
    std::fill(cdf_.begin() + static_cast<std::ptrdiff_t>(last), cdf_.end(), 1.0);
  }

  int k_min_ = 1;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

inline double mean_degree(const DegreeDistribution& dist) noexcept { return dist.mean_degree(); }

inline int sample_degree(const DegreeDistribution& dist, Rng& rng) { return dist.sample(rng); }

}  // namespace netepi
