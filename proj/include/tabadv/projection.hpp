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

#ifndef TABADV_PROJECTION_HPP_
#define TABADV_PROJECTION_HPP_

#include <span>
#include <vector>

#include "tabadv/cost_model.hpp"

namespace tabadv {

// Per-coordinate weights of the relaxed cost for a proposed displacement.
// Coordinates of immutable features carry +inf: they cannot move.
using ProjectionWeights = std::vector<double>;

// Categorical coordinates take the feature's cheapest change from
// `anchor`; numeric coordinates the encoded decrease rate when delta < 0
// and the increase rate otherwise. Throws std::invalid_argument for a
// mutable categorical feature with a single value.
ProjectionWeights assemble_weights(const Encoder& encoder,
                                   const Example& anchor,
                                   std::span<const double> delta);

// Euclidean projection of `u` onto { t : sum_i w_i |t_i| <= epsilon } by the
// sort-based scan. All weights must be finite and positive.
std::vector<double> project_weighted_simplex(std::span<const double> u,
                                             std::span<const double> w,
                                             double epsilon);

// Displacement delta* minimizing ||v_prime - (v + delta)||_2 subject to
// relaxed_cost(v, v + delta) <= epsilon, where v encodes `anchor`.
std::vector<double> project_cost_ball(const Encoder& encoder,
                                      const Example& anchor,
                                      std::span<const double> v,
                                      std::span<const double> v_prime,
                                      double epsilon);

// Same projection for a raw displacement with explicit sign-dependent
// weights: coordinate i costs w_plus[i] per unit of increase and
// w_minus[i] per unit of decrease. Used by the encoder-level routine and by
// tests that work directly in R^d.
std::vector<double> project_displacement(std::span<const double> delta,
                                         std::span<const double> w_plus,
                                         std::span<const double> w_minus,
                                         double epsilon);

// Sign-dependent weighted l1 cost of a displacement.
double displacement_cost(std::span<const double> delta,
                         std::span<const double> w_plus,
                         std::span<const double> w_minus);

}  // namespace tabadv

#endif  // TABADV_PROJECTION_HPP_
