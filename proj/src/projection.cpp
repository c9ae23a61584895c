// Copyright 2026 The tabadv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tabadv/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tabadv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SingleValued { kThrow, kFreeze };

ProjectionWeights weights_for(const Encoder& encoder, const Example& anchor,
                              std::span<const double> delta,
                              SingleValued single) {
  if (delta.size() != encoder.dim()) {
    throw std::invalid_argument("displacement does not match encoded layout");
  }
  const Schema& schema = encoder.schema();
  ProjectionWeights w(encoder.dim(), kInf);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    const FeatureSpan& s = encoder.span(i);
    if (!f.is_mutable) continue;
    if (f.categorical()) {
      if (f.categories.size() < 2) {
        if (single == SingleValued::kThrow) {
          throw std::invalid_argument("feature '" + f.name +
                                      "' admits no feasible change");
        }
        continue;
      }
      const double c = min_categorical_change_cost(schema, encoder.costs(),
                                                   anchor, i);
      std::fill_n(w.begin() + static_cast<std::ptrdiff_t>(s.offset), s.width, c);
    } else {
      const NumericCost nc = encoder.numeric_cost_for(anchor, i);
      w[s.offset] = delta[s.offset] < 0.0 ? encoded_decrease_rate(nc)
                                          : encoded_increase_rate(nc);
    }
  }
  return w;
}

// Projects `delta` onto { d : sum_i w_i |d_i| <= epsilon } where `w` may
// contain +inf for coordinates that must stay at zero.
std::vector<double> project_with_weights(std::span<const double> delta,
                                         std::span<const double> w,
                                         double epsilon) {
  const std::size_t d = delta.size();
  double cost = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (delta[i] != 0.0) cost += w[i] * std::abs(delta[i]);
  }
  if (cost <= epsilon) return {delta.begin(), delta.end()};
  std::vector<double> out(d, 0.0);
  if (epsilon == 0.0) return out;

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < d; ++i) {
    if (std::isfinite(w[i]) && delta[i] != 0.0) free.push_back(i);
  }
  std::vector<double> u(free.size());
  std::vector<double> wf(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) {
    u[k] = delta[free[k]];
    wf[k] = w[free[k]];
  }
  const std::vector<double> p = project_weighted_simplex(u, wf, epsilon);
  for (std::size_t k = 0; k < free.size(); ++k) out[free[k]] = p[k];
  return out;
}

}  // namespace

ProjectionWeights assemble_weights(const Encoder& encoder,
                                   const Example& anchor,
                                   std::span<const double> delta) {
  return weights_for(encoder, anchor, delta, SingleValued::kThrow);
}

std::vector<double> project_weighted_simplex(std::span<const double> u,
                                             std::span<const double> w,
                                             double epsilon) {
  const std::size_t m = u.size();
  if (w.size() != m) throw std::invalid_argument("weights do not match input");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  for (double wi : w) {
    if (!(wi > 0.0) || !std::isfinite(wi)) {
      throw std::invalid_argument("projection weights must be positive");
    }
  }
  std::vector<double> out(m, 0.0);
  if (epsilon == 0.0 || m == 0) return out;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) total += w[i] * std::abs(u[i]);
  if (total <= epsilon) return {u.begin(), u.end()};

  // Ascending order of z_i = |u_i| / w_i, ties by coordinate index.
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = std::abs(u[i]) / w[i];
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

  // Suffix sums over sorted positions j+1..m (1-based j, 0 = all).
  std::vector<double> suffix_wu(m + 1, 0.0);
  std::vector<double> suffix_ww(m + 1, 0.0);
  for (std::size_t j = m; j-- > 0;) {
    const std::size_t i = perm[j];
    suffix_wu[j] = suffix_wu[j + 1] + w[i] * std::abs(u[i]);
    suffix_ww[j] = suffix_ww[j + 1] + w[i] * w[i];
  }
  // J = max { j : lambda_j > z_(j) }, where lambda_j uses positions > j.
  std::size_t big_j = 0;
  for (std::size_t j = m - 1; j >= 1; --j) {
    // Sorted position j (1-based) is perm[j - 1]; its suffix starts at j.
    const double lambda_j = (suffix_wu[j] - epsilon) / suffix_ww[j];
    if (lambda_j > z[perm[j - 1]]) {
      big_j = j;
      break;
    }
  }
  const double lambda = (suffix_wu[big_j] - epsilon) / suffix_ww[big_j];
  for (std::size_t i = 0; i < m; ++i) {
    const double mag = std::max(std::abs(u[i]) - w[i] * lambda, 0.0);
    out[i] = u[i] < 0.0 ? -mag : mag;
  }
  return out;
}

std::vector<double> project_displacement(std::span<const double> delta,
                                         std::span<const double> w_plus,
                                         std::span<const double> w_minus,
                                         double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  const std::size_t d = delta.size();
  if (w_plus.size() != d || w_minus.size() != d) {
    throw std::invalid_argument("weights do not match displacement");
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) {
    w[i] = delta[i] < 0.0 ? w_minus[i] : w_plus[i];
    if (!(w[i] > 0.0)) {
      throw std::invalid_argument("projection weights must be positive");
    }
  }
  return project_with_weights(delta, w, epsilon);
}

double displacement_cost(std::span<const double> delta,
                         std::span<const double> w_plus,
                         std::span<const double> w_minus) {
  double c = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] > 0.0) {
      c += w_plus[i] * delta[i];
    } else if (delta[i] < 0.0) {
      c += w_minus[i] * -delta[i];
    }
  }
  return c;
}

std::vector<double> project_cost_ball(const Encoder& encoder,
                                      const Example& anchor,
                                      std::span<const double> v,
                                      std::span<const double> v_prime,
                                      double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (v.size() != encoder.dim() || v_prime.size() != encoder.dim()) {
    throw std::invalid_argument("encoded vectors do not match layout");
  }
  std::vector<double> delta(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) delta[i] = v_prime[i] - v[i];
  const ProjectionWeights w =
      weights_for(encoder, anchor, delta, SingleValued::kFreeze);
  return project_with_weights(delta, w, epsilon);
}

}  // namespace tabadv
