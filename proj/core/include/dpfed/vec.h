// Copyright 2025 The dpfed Authors
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

#ifndef DPFED_VEC_H_
#define DPFED_VEC_H_

#include <cstddef>
#include <vector>

namespace dpfed {

// Dense d-dimensional point/gradient. All model arithmetic is 64-bit.
using Vector = std::vector<double>;

// Euclidean ball, the feasible set K. An empty center means the origin.
// The set's diameter is 2 * radius.
struct Ball {
  Vector center;
  double radius = 0.0;
};

double l2_norm(const Vector& v);
double l2_dist(const Vector& a, const Vector& b);
double dot(const Vector& a, const Vector& b);

// y += c * x
void axpy(double c, const Vector& x, Vector& y);
// v *= c
void scale(Vector& v, double c);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);

// Projection of v onto the ball k (closest point in Euclidean norm).
// Throws std::invalid_argument on non-finite input or negative radius.
Vector project(const Vector& v, const Ball& k);

// True if every component is finite.
bool all_finite(const Vector& v);

}  // namespace dpfed

#endif  // DPFED_VEC_H_
