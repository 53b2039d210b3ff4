// Independent test oracles. Everything here recomputes expected values by a
// different route than the library (dense vectors, linear scans, sorted-merge
// intersection, quadrature) and must stay free of the implementation paths it
// checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "twincf/rating_matrix.hpp"
#include "twincf/similarity.hpp"

namespace oracle {

// Cosine via dense vectors over the full item space.
inline double dense_cosine(const twincf::RatingMatrix& m, twincf::UserId a, twincf::UserId b) {
  std::vector<double> va(m.item_count(), 0.0), vb(m.item_count(), 0.0);
  for (const auto& e : m.row(a)) va[e.item] = e.value;
  for (const auto& e : m.row(b)) vb[e.item] = e.value;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < m.item_count(); ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  return dot / std::sqrt(na * nb);
}

// Brute-force similarity list for u over users [0, universe) \ {u}.
inline std::vector<twincf::SimilarityEntry> brute_force_list(const twincf::RatingMatrix& m,
                                                             std::size_t universe,
                                                             twincf::UserId u) {
  std::vector<twincf::SimilarityEntry> entries;
  for (twincf::UserId v = 0; v < universe; ++v)
    if (v != u) entries.push_back({v, dense_cosine(m, u, v)});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const twincf::SimilarityEntry& x, const twincf::SimilarityEntry& y) {
                     if (x.sim > y.sim) return true;
                     if (x.sim < y.sim) return false;
                     return x.other < y.other;
                   });
  return entries;
}

// Linear-scan reference for equal_range.
inline std::vector<twincf::UserId> linear_equal_range(
    const std::vector<twincf::SimilarityEntry>& entries, double target, double tol) {
  std::vector<twincf::UserId> out;
  for (const auto& e : entries)
    if (std::abs(e.sim - target) <= tol) out.push_back(e.other);
  std::sort(out.begin(), out.end());
  return out;
}

// c-way intersection by sorted merge over all sets at once.
inline std::vector<twincf::UserId> merge_intersect(
    const std::vector<std::vector<twincf::UserId>>& sets) {
  if (sets.empty()) return {};
  std::vector<twincf::UserId> acc = sets[0];
  for (std::size_t k = 1; k < sets.size(); ++k) {
    std::vector<twincf::UserId> next;
    std::set_intersection(acc.begin(), acc.end(), sets[k].begin(), sets[k].end(),
                          std::back_inserter(next));
    acc = std::move(next);
  }
  return acc;
}

// Standard normal CDF by composite Simpson quadrature of the density from 0
// to z. Panel count keeps the quadrature error around 1e-12, well below the
// 1e-7 budget it polices.
inline double phi_quadrature(double z) {
  const double sign = z < 0 ? -1.0 : 1.0;
  const double upper = std::abs(z);
  if (upper == 0.0) return 0.5;
  const std::size_t panels = 4000;  // must stay even for Simpson weights
  const double h = upper / static_cast<double>(panels);
  auto pdf = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  };
  double sum = pdf(0.0) + pdf(upper);
  for (std::size_t k = 1; k < panels; ++k)
    sum += pdf(static_cast<double>(k) * h) * (k % 2 == 1 ? 4.0 : 2.0);
  const double integral = sum * h / 3.0;
  return 0.5 + sign * integral;
}

}  // namespace oracle
