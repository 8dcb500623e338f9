#include "cabps/finite_difference.hpp"

namespace cabps::fd {

Vector gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                double rel_step) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = step_for(x[i], rel_step);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i]);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

Matrix jacobian(const std::function<Vector(const Vector&)>& F, const Vector& x,
                double rel_step) {
  Matrix J;
  Vector xp = x, xm = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x[j], rel_step);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    const Vector col = (F(xp) - F(xm)) / (xp[j] - xm[j]);
    if (j == 0) J.resize(col.size(), x.size());
    J.col(j) = col;
    xp[j] = xm[j] = x[j];
  }
  return J;
}

Matrix jacobian5(const std::function<Vector(const Vector&)>& F, const Vector& x,
                 double rel_step) {
  Matrix J;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x[j], rel_step);
    auto at = [&](double k) {
      Vector y = x;
      y[j] += k * h;
      return F(y);
    };
    const Vector col = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
    if (j == 0) J.resize(col.size(), x.size());
    J.col(j) = col;
  }
  return J;
}

Matrix partial(const std::function<Matrix(const Vector&)>& M, const Vector& x,
               Index i, double rel_step) {
  const double h = step_for(x[i], rel_step);
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (M(xp) - M(xm)) / (xp[i] - xm[i]);
}

double divergence(const std::function<Vector(const Vector&)>& F,
                  const Vector& x, double rel_step) {
  return jacobian(F, x, rel_step).trace();
}

}  // namespace cabps::fd
