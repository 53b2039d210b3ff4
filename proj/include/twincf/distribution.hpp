#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "twincf/similarity.hpp"

namespace twincf {

/// Standard normal CDF via the complementary error function.
/// Monotone, Phi(0) == 0.5 exactly, absolute error far below 1e-7 on [-8, 8].
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Gaussian fitted to one similarity list.
struct GaussianModel {
  double mu = 0.0;
  double sigma = 0.0;  // > 0 once fitted
};

/// Sigma-multiples bounding two value intervals of a similarity list:
/// [mu - k1*sigma, mu + k2*sigma] spans the whole sample range and
/// [mu - k3*sigma, mu + k4*sigma] spans one sub-list (bucket); x is the
/// number of equal-width buckets partitioning [0, 1].
struct SublistParams {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  std::uint32_t x = 1;

  /// The constraint block of the bound's maximisation problem.
  bool satisfies_lp_bounds() const {
    return k1 >= 0.0 && k1 <= 4.0 && k2 > 0.0 && k2 <= 4.0 && k3 >= 0.0 && k4 > 0.0;
  }
};

/// Expected share of a similarity list falling into the bucket
/// [mu - k3*sigma, mu + k4*sigma], relative to the value range
/// [mu - k1*sigma, mu + k2*sigma]:
///
///   (Phi(k3) + Phi(k4) - 1) / (Phi(k1) + Phi(k2) - 1)
///
/// Returned per list entry (the s/n fraction, not the absolute size s).
inline double sublist_fraction(const SublistParams& p) {
  const double denominator = normal_cdf(p.k1) + normal_cdf(p.k2) - 1.0;
  if (!(denominator > 0.0))
    throw std::domain_error("sublist_fraction: degenerate value range (k1 = k2 = 0)");
  return (normal_cdf(p.k3) + normal_cdf(p.k4) - 1.0) / denominator;
}

struct LpSolution {
  SublistParams params;
  GaussianModel model;  // mu, sigma induced by the range constraints
};

/// The known optimum of the sub-list maximisation for values spanning [0, 1]:
/// k1 = 0, k2 = 4, k3 = 0, k4 = 0.01, giving a largest-bucket share of about
/// 1/125. The range constraints mu - k1*sigma = 0 and mu + k2*sigma = 1 then
/// pin mu = 0, sigma = 1/4, and the bucket width constraint
/// mu + k4*sigma = 1/x pins x = 400. Only the arithmetic of this solution is
/// checked here; its optimality is not re-derived.
inline LpSolution lp_solution() {
  LpSolution s;
  s.params = SublistParams{0.0, 4.0, 0.0, 0.01, 400};
  s.model = GaussianModel{0.0, 0.25};
  return s;
}

/// Sample mean / standard deviation (n-1 denominator) of a list's values.
inline GaussianModel fit_gaussian(const SimilarityList& list) {
  const std::size_t n = list.size();
  if (n < 2) throw std::invalid_argument("fit_gaussian: need at least 2 entries");
  double sum = 0.0;
  list.visit([&](const SimilarityEntry& e) { sum += e.sim; });
  const double mu = sum / static_cast<double>(n);
  double ss = 0.0;
  list.visit([&](const SimilarityEntry& e) { ss += (e.sim - mu) * (e.sim - mu); });
  const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sigma > 0.0))
    throw std::domain_error("fit_gaussian: all similarities identical (sigma = 0)");
  return GaussianModel{mu, sigma};
}

/// Empirical vs predicted share of the fullest of x equal-width buckets.
struct SublistReport {
  std::vector<double> bucket_bounds;      // x + 1 edges over [0, 1]
  std::vector<std::size_t> bucket_counts; // sums to the list length
  double empirical_fraction = 0.0;        // max bucket count / list length
  double fraction = 0.0;                  // predicted share from the fitted model
  GaussianModel model;
  SublistParams params;                   // back-solved k values (clamped to [0, 8])
};

/// Bucket occupancy of a list over x equal-width buckets: [j/x, (j+1)/x)
/// for j < x-1, last bucket closed at 1.
inline std::vector<std::size_t> count_buckets(const SimilarityList& list, std::uint32_t x) {
  if (x < 1) throw std::invalid_argument("count_buckets: need at least one bucket");
  std::vector<std::size_t> counts(x, 0);
  list.visit([&](const SimilarityEntry& e) {
    auto j = static_cast<std::size_t>(e.sim * static_cast<double>(x));
    ++counts[std::min<std::size_t>(j, x - 1)];
  });
  return counts;
}

/// Buckets [j/x, (j+1)/x) with the last bucket closed at 1. The predicted
/// fraction back-solves k = |edge - mu| / sigma from the fitted model for the
/// fullest bucket (ties resolved toward the lower bucket).
inline SublistReport largest_bucket(const SimilarityList& list, std::uint32_t x) {
  if (x < 1) throw std::invalid_argument("largest_bucket: need at least one bucket");
  if (list.empty()) throw std::invalid_argument("largest_bucket: empty list");

  SublistReport report;
  report.bucket_bounds.resize(x + 1);
  for (std::uint32_t j = 0; j <= x; ++j)
    report.bucket_bounds[j] = static_cast<double>(j) / static_cast<double>(x);
  report.bucket_counts = count_buckets(list, x);

  std::size_t best = 0;
  for (std::size_t j = 1; j < report.bucket_counts.size(); ++j)
    if (report.bucket_counts[j] > report.bucket_counts[best]) best = j;
  report.empirical_fraction =
      static_cast<double>(report.bucket_counts[best]) / static_cast<double>(list.size());

  report.model = fit_gaussian(list);
  const double lo = report.bucket_bounds[best];
  const double hi = report.bucket_bounds[best + 1];
  auto k_of = [&](double edge) {
    return std::clamp(std::abs(edge - report.model.mu) / report.model.sigma, 0.0, 8.0);
  };
  report.params = SublistParams{k_of(0.0), k_of(1.0), k_of(lo), k_of(hi), x};
  report.fraction = std::clamp(sublist_fraction(report.params), 0.0, 1.0);
  return report;
}

}  // namespace twincf
