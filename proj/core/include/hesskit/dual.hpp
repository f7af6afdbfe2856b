#pragma once

#include <cmath>

namespace hesskit {

/// First-order dual number a + b*eps with eps^2 = 0. Running a gradient
/// computation on duals seeded with (theta_i, v_i) yields the directional
/// derivative of the gradient, i.e. an exact Hessian-vector product.
struct Dual {
  double a = 0.0;  // value
  double b = 0.0;  // derivative

  Dual() = default;
  Dual(double value) : a(value) {}
  Dual(double value, double deriv) : a(value), b(deriv) {}
};

inline Dual operator+(Dual x, Dual y) { return {x.a + y.a, x.b + y.b}; }
inline Dual operator-(Dual x, Dual y) { return {x.a - y.a, x.b - y.b}; }
inline Dual operator-(Dual x) { return {-x.a, -x.b}; }
inline Dual operator*(Dual x, Dual y) { return {x.a * y.a, x.a * y.b + x.b * y.a}; }
inline Dual operator/(Dual x, Dual y) {
  const double inv = 1.0 / y.a;
  return {x.a * inv, (x.b - x.a * y.b * inv) * inv};
}
inline Dual& operator+=(Dual& x, Dual y) { x = x + y; return x; }
inline Dual& operator-=(Dual& x, Dual y) { x = x - y; return x; }
inline Dual& operator*=(Dual& x, Dual y) { x = x * y; return x; }

inline bool operator<(Dual x, Dual y) { return x.a < y.a; }
inline bool operator>(Dual x, Dual y) { return x.a > y.a; }

inline Dual exp(Dual x) {
  const double e = std::exp(x.a);
  return {e, e * x.b};
}
inline Dual log(Dual x) { return {std::log(x.a), x.b / x.a}; }
inline Dual tanh(Dual x) {
  const double t = std::tanh(x.a);
  return {t, (1.0 - t * t) * x.b};
}
inline Dual sqrt(Dual x) {
  const double s = std::sqrt(x.a);
  return {s, 0.5 * x.b / s};
}
// pow with constant exponent; derivative uses e*x^(e-1).
inline Dual pow(Dual x, double e) {
  if (e == 0.0) return {1.0, 0.0};
  const double p = std::pow(x.a, e);
  return {p, x.a == 0.0 ? 0.0 : e * std::pow(x.a, e - 1.0) * x.b};
}
// ReLU uses the a.e. derivative (zero branch at the kink).
inline Dual relu(Dual x) { return x.a > 0.0 ? x : Dual{0.0, 0.0}; }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.a; }

}  // namespace hesskit
