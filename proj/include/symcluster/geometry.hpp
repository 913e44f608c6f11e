#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace symcluster {

using Vec3 = Eigen::Vector3d;

/// Dipolar angular kernel D(r) = (1 - 3 cos^2 theta) / |r|^3 in code units
/// (mu_0/4pi = 1, lattice constant = 1). The magnetic-moment matrix elements
/// are factored out and multiplied on by callers.
inline double dipole_kernel(const Vec3& r) {
  double r2 = r.squaredNorm();
  if (r2 == 0.0) throw std::invalid_argument("dipole_kernel: degenerate geometry");
  double c2 = r.z() * r.z() / r2;
  return (1.0 - 3.0 * c2) / (r2 * std::sqrt(r2));
}

/// Exact partial derivatives of the dipole kernel of arbitrary order.
///
/// D is a sum of terms c * x^a y^b z^c * |r|^-k, a form closed under
/// differentiation. Derivatives are built symbolically once per multi-index
/// and evaluated at a point.
class DipoleKernelDerivatives {
 public:
  struct Term {
    double coeff;
    int a, b, c;  // monomial exponents
    int k;        // inverse power of |r|
  };
  using TermList = std::vector<Term>;

  // d^(ax+ay+az) D / dx^ax dy^ay dz^az evaluated at r
  double evaluate(int ax, int ay, int az, const Vec3& r) const {
    const TermList& t = terms(ax, ay, az);
    double r2 = r.squaredNorm();
    if (r2 == 0.0) throw std::invalid_argument("dipole derivative at origin");
    double out = 0.0;
    for (const Term& term : t) {
      out += term.coeff * ipow(r.x(), term.a) * ipow(r.y(), term.b) *
             ipow(r.z(), term.c) * std::pow(r2, -0.5 * term.k);
    }
    return out;
  }

 private:
  static double ipow(double x, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= x;
    return v;
  }

  static TermList differentiate(const TermList& in, int axis) {
    TermList out;
    for (const Term& t : in) {
      int e[3] = {t.a, t.b, t.c};
      if (e[axis] > 0) {
        Term d = t;
        d.coeff *= e[axis];
        (axis == 0 ? d.a : axis == 1 ? d.b : d.c) -= 1;
        out.push_back(d);
      }
      Term d2 = t;
      d2.coeff *= -double(t.k);
      (axis == 0 ? d2.a : axis == 1 ? d2.b : d2.c) += 1;
      d2.k += 2;
      out.push_back(d2);
    }
    // merge like terms
    std::map<std::tuple<int, int, int, int>, double> acc;
    for (const Term& t : out) acc[{t.a, t.b, t.c, t.k}] += t.coeff;
    TermList merged;
    for (auto& [key, c] : acc)
      if (c != 0.0)
        merged.push_back({c, std::get<0>(key), std::get<1>(key),
                          std::get<2>(key), std::get<3>(key)});
    return merged;
  }

  const TermList& terms(int ax, int ay, int az) const {
    auto key = std::make_tuple(ax, ay, az);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    TermList t;
    if (ax == 0 && ay == 0 && az == 0) {
      t = {{1.0, 0, 0, 0, 3}, {-3.0, 0, 0, 2, 5}};  // r^-3 - 3 z^2 r^-5
    } else if (az > 0) {
      t = differentiate(terms(ax, ay, az - 1), 2);
    } else if (ay > 0) {
      t = differentiate(terms(ax, ay - 1, 0), 1);
    } else {
      t = differentiate(terms(ax - 1, 0, 0), 0);
    }
    return cache_.emplace(key, std::move(t)).first->second;
  }

  mutable std::map<std::tuple<int, int, int>, TermList> cache_;
};

}  // namespace symcluster
