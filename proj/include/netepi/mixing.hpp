#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netepi/errors.hpp"

namespace netepi {

// Link-count distributions and the infection functions that turn a node's
// infected links into a per-step infection probability.

inline constexpr int kDirectProductLimit = 30;
inline constexpr int kDefaultApproxThreshold = 100;

namespace detail {

inline double log_factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(2048);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (n < static_cast<int>(table.size())) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

// Exact in double for n <= 30 (largest value C(30,15) fits in the mantissa).
inline double choose_direct(int n, int k) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(name) + " must lie in [0,1]");
}

}  // namespace detail

/// C(N,k) p^k (1-p)^(N-k). Direct products for N <= 30, log-space above.
inline double binomial_pmf(int n, int k, double p) {
  if (n < 0) throw ParameterError("binomial_pmf: N must be >= 0");
  if (k < 0 || k > n) throw ParameterError("binomial_pmf: k out of [0, N]");
  detail::check_probability(p, "binomial_pmf: p");
  if (n <= kDirectProductLimit) {
    return detail::choose_direct(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_c = detail::log_factorial(n) - detail::log_factorial(k) - detail::log_factorial(n - k);
  return std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p));
}

/// Fills out[l] = binomial_pmf(n, l, p) for l = 0..n. `out` needs n+1 slots.
inline void binomial_row(int n, double p, std::span<double> out) {
  if (n <= kDirectProductLimit || p == 0.0 || p == 1.0) {
    for (int l = 0; l <= n; ++l) out[static_cast<std::size_t>(l)] = binomial_pmf(n, l, p);
    return;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lfn = detail::log_factorial(n);
  for (int l = 0; l <= n; ++l) {
    out[static_cast<std::size_t>(l)] =
        std::exp(lfn - detail::log_factorial(l) - detail::log_factorial(n - l) + l * lp + (n - l) * lq);
  }
}

/// de Moivre-Laplace: Gaussian density with mean Np and variance Np(1-p), evaluated at k.
inline double normal_approx_pmf(int n, int k, double p) {
  if (n < 1) throw ParameterError("normal_approx_pmf: N must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal_approx_pmf: p must lie in (0,1)");
  const double mean = n * p;
  const double var = n * p * (1.0 - p);
  const double z = k - mean;
  return std::exp(-z * z / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Exact binomial for N <= threshold, normal approximation above it.
inline double link_count_pmf(int n, int k, double p, int threshold = kDefaultApproxThreshold) {
  if (n <= threshold || p == 0.0 || p == 1.0) return binomial_pmf(n, k, p);
  if (k < 0 || k > n) throw ParameterError("link_count_pmf: k out of [0, N]");
  return normal_approx_pmf(n, k, p);
}

/// Probabilities that a random half-edge points to an infected node of type 1
/// or type 2. The remainder p3 = 1 - p1 - p2 points to non-infected nodes.
struct LinkProbabilities {
  double p1 = 0.0;
  double p2 = 0.0;
  // set when the active network has no half-edges left
  bool extinct = false;

  double p3() const noexcept { return std::max(0.0, 1.0 - p1 - p2); }

  void validate() const {
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || p1 + p2 > 1.0 + 1e-12) {
      throw ParameterError("link probabilities must satisfy p1, p2 >= 0 and p1 + p2 <= 1");
    }
  }
};

/// k!/(k1! k2! k3!) p1^k1 p2^k2 p3^k3 with k3 = k - k1 - k2.
inline double multinomial_pmf(int k, int k1, int k2, const LinkProbabilities& probs) {
  if (k1 < 0 || k2 < 0 || k1 + k2 > k) throw ParameterError("multinomial_pmf: need k1, k2 >= 0 and k1 + k2 <= k");
  probs.validate();
  const int k3 = k - k1 - k2;
  const double p3 = probs.p3();
  if (k <= kDirectProductLimit) {
    const double c = detail::choose_direct(k, k1) * detail::choose_direct(k - k1, k2);
    return c * std::pow(probs.p1, k1) * std::pow(probs.p2, k2) * std::pow(p3, k3);
  }
  const std::array<std::pair<int, double>, 3> parts{{{k1, probs.p1}, {k2, probs.p2}, {k3, p3}}};
  double log_mass = detail::log_factorial(k);
  for (auto [count, prob] : parts) {
    if (count == 0) continue;
    if (prob == 0.0) return 0.0;
    log_mass += count * std::log(prob) - detail::log_factorial(count);
  }
  return std::exp(log_mass);
}

/// f(l, lambda) = 1 - (1 - lambda)^l
inline double infection_prob_single(int l, double lambda) { return 1.0 - std::pow(1.0 - lambda, l); }

/// f(k1, k2, lambda1, lambda2) = 1 - (1 - lambda1)^k1 (1 - lambda2)^k2
inline double infection_prob_two(int k1, int k2, double lambda1, double lambda2) {
  return 1.0 - std::pow(1.0 - lambda1, k1) * std::pow(1.0 - lambda2, k2);
}

/// Sum over l = 1..k of f(l) * L(k, l, p) for an arbitrary infection function f.
template <class InfectionFn>
double infection_hazard(int k, double p, InfectionFn&& f) {
  if (k < 1) throw ParameterError("infection_hazard: k must be >= 1");
  detail::check_probability(p, "infection_hazard: p");
  double h = 0.0;
  for (int l = 1; l <= k; ++l) h += f(l) * binomial_pmf(k, l, p);
  return h;
}

inline double infection_hazard(int k, double p, double lambda) {
  detail::check_probability(lambda, "infection_hazard: lambda");
  return infection_hazard(k, p, [lambda](int l) { return infection_prob_single(l, lambda); });
}

template <class InfectionFn>
double infection_hazard_two(int k, const LinkProbabilities& probs, InfectionFn&& f) {
  if (k < 1) throw ParameterError("infection_hazard_two: k must be >= 1");
  double h = 0.0;
  for (int k1 = 0; k1 <= k; ++k1) {
    for (int k2 = 0; k1 + k2 <= k; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      h += f(k1, k2) * multinomial_pmf(k, k1, k2, probs);
    }
  }
  return h;
}

/// Includes the single-group terms (k1 >= 1, k2 = 0) and (k1 = 0, k2 >= 1).
inline double infection_hazard_two(int k, const LinkProbabilities& probs, double lambda1, double lambda2) {
  detail::check_probability(lambda1, "infection_hazard_two: lambda1");
  detail::check_probability(lambda2, "infection_hazard_two: lambda2");
  return infection_hazard_two(
      k, probs, [=](int k1, int k2) { return infection_prob_two(k1, k2, lambda1, lambda2); });
}

/// Multinomial coefficients k!/(k1! k2! k3!) for every k <= k_max, built once.
/// Read-only after construction.
class MultinomialCoefficients {
 public:
  explicit MultinomialCoefficients(int k_max) : k_max_(k_max) {
    if (k_max < 0) throw ParameterError("MultinomialCoefficients: k_max must be >= 0");
    row_offset_.resize(static_cast<std::size_t>(k_max) + 2);
    row_offset_[0] = 0;
    for (int k = 0; k <= k_max; ++k) {
      row_offset_[static_cast<std::size_t>(k) + 1] =
          row_offset_[static_cast<std::size_t>(k)] + static_cast<std::size_t>((k + 1) * (k + 2) / 2);
    }
    coef_.resize(row_offset_.back());
    for (int k = 0; k <= k_max; ++k) {
      for (int k1 = 0; k1 <= k; ++k1) {
        for (int k2 = 0; k1 + k2 <= k; ++k2) {
          double c;
          if (k <= kDirectProductLimit) {
            c = detail::choose_direct(k, k1) * detail::choose_direct(k - k1, k2);
          } else {
            c = std::exp(detail::log_factorial(k) - detail::log_factorial(k1) - detail::log_factorial(k2) -
                         detail::log_factorial(k - k1 - k2));
          }
          coef_[index(k, k1, k2)] = c;
        }
      }
    }
  }

  int k_max() const noexcept { return k_max_; }

  double operator()(int k, int k1, int k2) const noexcept { return coef_[index(k, k1, k2)]; }

  // Pointer to the contiguous run of coefficients (k, k1, 0..k-k1).
  const double* row(int k, int k1) const noexcept { return coef_.data() + index(k, k1, 0); }

 private:
  std::size_t index(int k, int k1, int k2) const noexcept {
    const auto kk = static_cast<std::size_t>(k);
    const auto a = static_cast<std::size_t>(k1);
    return row_offset_[kk] + a * (kk + 1) - a * (a - (a > 0 ? 1 : 0)) / 2 + static_cast<std::size_t>(k2);
  }

  int k_max_;
  std::vector<std::size_t> row_offset_;
  std::vector<double> coef_;
};

/// Per-degree hazard H_k = sum_l f(l, lambda) L(k, l, p) for every k of a support.
/// Binomial coefficients are cached and combined with power tables of p and
/// 1 - p; supports beyond kCachedChooseLimit fall back to log-space rows.
/// Holds scratch buffers, so one instance per thread.
class HazardProfile {
 public:
  static constexpr int kCachedChooseLimit = 1000;  // C(1000, 500) ~ 2.7e299 still finite

  HazardProfile(int k_min, int k_max, std::optional<int> approx_threshold = std::nullopt)
      : k_min_(k_min), k_max_(k_max), threshold_(approx_threshold),
        row_(static_cast<std::size_t>(k_max) + 1), f_(static_cast<std::size_t>(k_max) + 1),
        pw_p_(static_cast<std::size_t>(k_max) + 1), pw_q_(static_cast<std::size_t>(k_max) + 1) {
    if (k_min < 1 || k_max < k_min) throw ParameterError("HazardProfile: need 1 <= k_min <= k_max");
    if (k_max <= kCachedChooseLimit) {
      for (int k = 0; k <= k_max; ++k) {
        offset_.push_back(choose_.size());
        for (int l = 0; l <= k; ++l) {
          choose_.push_back(k <= kDirectProductLimit
                                ? detail::choose_direct(k, l)
                                : std::exp(detail::log_factorial(k) - detail::log_factorial(l) -
                                           detail::log_factorial(k - l)));
        }
      }
    }
  }

  void compute(double p, double lambda, std::span<double> out) {
    for (int l = 0; l <= k_max_; ++l) f_[static_cast<std::size_t>(l)] = infection_prob_single(l, lambda);
    const bool cached = !choose_.empty();
    if (cached) {
      pw_p_[0] = pw_q_[0] = 1.0;
      for (std::size_t i = 1; i < pw_p_.size(); ++i) {
        pw_p_[i] = pw_p_[i - 1] * p;
        pw_q_[i] = pw_q_[i - 1] * (1.0 - p);
      }
    }
    for (int k = k_min_; k <= k_max_; ++k) {
      double h = 0.0;
      if (p > 0.0 && lambda > 0.0) {
        if (threshold_ && k > *threshold_ && p < 1.0) {
          for (int l = 1; l <= k; ++l) h += f_[static_cast<std::size_t>(l)] * normal_approx_pmf(k, l, p);
        } else if (cached) {
          const double* c = choose_.data() + offset_[static_cast<std::size_t>(k)];
          for (int l = 1; l <= k; ++l) {
            const auto i = static_cast<std::size_t>(l);
            h += f_[i] * c[i] * pw_p_[i] * pw_q_[static_cast<std::size_t>(k - l)];
          }
        } else {
          binomial_row(k, p, row_);
          for (int l = 1; l <= k; ++l) h += f_[static_cast<std::size_t>(l)] * row_[static_cast<std::size_t>(l)];
        }
      }
      out[static_cast<std::size_t>(k - k_min_)] = h;
    }
  }

 private:
  int k_min_;
  int k_max_;
  std::optional<int> threshold_;
  std::vector<double> row_;
  std::vector<double> f_;
  std::vector<double> pw_p_, pw_q_;
  std::vector<std::size_t> offset_;
  std::vector<double> choose_;
};

/// Two-type analogue of HazardProfile built on a shared coefficient cache.
class TwoTypeHazardProfile {
 public:
  TwoTypeHazardProfile(int k_min, int k_max, std::shared_ptr<const MultinomialCoefficients> coef)
      : k_min_(k_min), k_max_(k_max), coef_(std::move(coef)) {
    if (!coef_ || coef_->k_max() < k_max) throw ParameterError("coefficient cache does not cover k_max");
    const auto n = static_cast<std::size_t>(k_max) + 1;
    for (auto* v : {&pw1_, &pw2_, &pw3_, &esc1_, &esc2_}) v->resize(n);
  }

  void compute(const LinkProbabilities& probs, double lambda1, double lambda2, std::span<double> out) {
    powers(probs.p1, pw1_);
    powers(probs.p2, pw2_);
    powers(probs.p3(), pw3_);
    powers(1.0 - lambda1, esc1_);
    powers(1.0 - lambda2, esc2_);
    const bool none = (probs.p1 == 0.0 || lambda1 == 0.0) && (probs.p2 == 0.0 || lambda2 == 0.0);
    for (int k = k_min_; k <= k_max_; ++k) {
      double h = 0.0;
      if (!none) {
        for (int k1 = 0; k1 <= k; ++k1) {
          const double a = pw1_[static_cast<std::size_t>(k1)];
          if (a == 0.0) continue;
          const double* c = coef_->row(k, k1);
          const double e1 = esc1_[static_cast<std::size_t>(k1)];
          for (int k2 = (k1 == 0 ? 1 : 0); k1 + k2 <= k; ++k2) {
            const double f = 1.0 - e1 * esc2_[static_cast<std::size_t>(k2)];
            h += c[k2] * a * pw2_[static_cast<std::size_t>(k2)] * pw3_[static_cast<std::size_t>(k - k1 - k2)] * f;
          }
        }
      }
      out[static_cast<std::size_t>(k - k_min_)] = h;
    }
  }

 private:
  static void powers(double x, std::vector<double>& out) {
    out[0] = 1.0;
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] * x;
  }

  int k_min_;
  int k_max_;
  std::shared_ptr<const MultinomialCoefficients> coef_;
  std::vector<double> pw1_, pw2_, pw3_, esc1_, esc2_;
};

}  // namespace netepi
