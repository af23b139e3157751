/*
 * Copyright 2026 The cfprobe Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CFPROBE_LINALG_HPP_
#define CFPROBE_LINALG_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "cfprobe/errors.hpp"

namespace cfprobe {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Norms at or below this are treated as zero for edit directions and means
// of unit vectors.
inline constexpr double kDegenerateNorm = 1e-12;

template <typename A, typename B>
void require_same_dimension(const Eigen::MatrixBase<A>& a,
                            const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dimension mismatch: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
}

// Unit vector in the direction of v.
template <typename Derived>
Vector<typename Derived::Scalar> normalized(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = v.norm();
  if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm))) {
    throw DegenerateInputError("cannot normalize a zero or non-finite vector");
  }
  return v / norm;
}

// Cosine of two unit vectors, i.e. their dot product.
template <typename A, typename B>
typename A::Scalar unit_cosine(const Eigen::MatrixBase<A>& u,
                               const Eigen::MatrixBase<B>& v) {
  require_same_dimension(u, v);
  return u.dot(v);
}

// Cosine between the image edit direction (image_b - image_a) and the text
// edit direction (text_b - text_a).
template <typename IA, typename IB, typename TA, typename TB>
double directional_similarity(const Eigen::MatrixBase<IA>& image_a,
                              const Eigen::MatrixBase<IB>& image_b,
                              const Eigen::MatrixBase<TA>& text_a,
                              const Eigen::MatrixBase<TB>& text_b) {
  require_same_dimension(image_a, image_b);
  require_same_dimension(text_a, text_b);
  require_same_dimension(image_a, text_a);
  const Vector<double> image_dir = (image_b - image_a).template cast<double>();
  const Vector<double> text_dir = (text_b - text_a).template cast<double>();
  const double image_norm = image_dir.norm();
  const double text_norm = text_dir.norm();
  if (image_norm <= kDegenerateNorm || text_norm <= kDegenerateNorm) {
    throw DegenerateInputError("zero edit direction");
  }
  const double c = image_dir.dot(text_dir) / (image_norm * text_norm);
  return std::clamp(c, -1.0, 1.0);
}

// Arithmetic mean of equally sized vectors, rescaled to unit length.
template <typename Scalar>
Vector<Scalar> normalized_mean(std::span<const Vector<Scalar>> vectors) {
  if (vectors.empty()) throw ArgumentError("mean of an empty vector list");
  Vector<Scalar> sum = Vector<Scalar>::Zero(vectors.front().size());
  for (const auto& v : vectors) {
    require_same_dimension(sum, v);
    sum += v;
  }
  sum /= static_cast<Scalar>(vectors.size());
  const Scalar norm = sum.norm();
  if (!(static_cast<double>(norm) > kDegenerateNorm)) {
    throw DegenerateInputError("mean vector is zero");
  }
  return sum / norm;
}

}  // namespace cfprobe

#endif  // CFPROBE_LINALG_HPP_
