#pragma once

#include "cabps/types.hpp"

#include <functional>

namespace cabps::fd {

/// Central-difference step for coordinate value xi.
inline double step_for(double xi, double rel = 1e-5) {
  return rel * std::max(1.0, std::abs(xi));
}

Vector gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                double rel_step = 1e-5);

/// J(i, j) = d F_i / d x_j.
Matrix jacobian(const std::function<Vector(const Vector&)>& F, const Vector& x,
                double rel_step = 1e-5);

/// Fourth-order five-point stencil; for maps that are sensitive to their
/// input, where the central stencil's truncation error shows.
Matrix jacobian5(const std::function<Vector(const Vector&)>& F, const Vector& x,
                 double rel_step = 1e-4);

/// d M / d x_i of a matrix-valued function.
Matrix partial(const std::function<Matrix(const Vector&)>& M, const Vector& x,
               Index i, double rel_step = 1e-5);

/// Trace of the Jacobian of F.
double divergence(const std::function<Vector(const Vector&)>& F,
                  const Vector& x, double rel_step = 1e-5);

}  // namespace cabps::fd
