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

#include "dpfed/vec.h"

#include <cmath>
#include <stdexcept>

namespace dpfed {

double l2_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_dist(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_dist: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double c, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

void scale(Vector& v, double c) {
  for (double& x : v) x *= c;
}

Vector add(const Vector& a, const Vector& b) {
  Vector r = a;
  axpy(1.0, b, r);
  return r;
}

Vector sub(const Vector& a, const Vector& b) {
  Vector r = a;
  axpy(-1.0, b, r);
  return r;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector project(const Vector& v, const Ball& k) {
  if (!all_finite(v)) throw std::invalid_argument("project: non-finite input");
  if (k.radius < 0.0) throw std::invalid_argument("project: negative radius");
  if (!k.center.empty() && k.center.size() != v.size()) {
    throw std::invalid_argument("project: center dimension mismatch");
  }
  // Distance from the center; the common case is an origin-centered ball.
  double dist;
  if (k.center.empty()) {
    dist = l2_norm(v);
  } else {
    dist = l2_dist(v, k.center);
  }
  if (dist <= k.radius) return v;
  const double f = k.radius / dist;
  Vector r(v.size());
  if (k.center.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] * f;
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      r[i] = k.center[i] + (v[i] - k.center[i]) * f;
    }
  }
  return r;
}

}  // namespace dpfed
