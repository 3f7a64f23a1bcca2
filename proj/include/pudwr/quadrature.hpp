#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace pudwr {

/// Gauss-Legendre rule with n points on [0,1].
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;

  explicit GaussRule(int n) : points(n), weights(n) {
    if (n < 1) throw std::invalid_argument("GaussRule: need at least one point");
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      points[n - 1 - i] = 0.5 * (x + 1);
      weights[n - 1 - i] = 1.0 / ((1 - x * x) * dp * dp);
    }
  }
  int size() const { return static_cast<int>(points.size()); }
};

/// 1D Lagrange basis of degree p on equispaced nodes i/p of [0,1].
inline double lagrange(int p, int i, double x) {
  double v = 1;
  for (int j = 0; j <= p; ++j)
    if (j != i) v *= (x - static_cast<double>(j) / p) / (static_cast<double>(i - j) / p);
  return v;
}

inline double lagrange_derivative(int p, int i, double x) {
  double sum = 0;
  for (int m = 0; m <= p; ++m) {
    if (m == i) continue;
    double term = 1.0 / (static_cast<double>(i - m) / p);
    for (int j = 0; j <= p; ++j)
      if (j != i && j != m) term *= (x - static_cast<double>(j) / p) / (static_cast<double>(i - j) / p);
    sum += term;
  }
  return sum;
}

/// Tensor-product Lagrange shape functions of order p evaluated at the
/// points of a tensor Gauss rule. Local node (a,b) has index a + (p+1) b.
struct ShapeTable {
  int order = 1;
  int n_local = 4;
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  Eigen::MatrixXd values;  // n_local x n_points
  Eigen::MatrixXd dxi;
  Eigen::MatrixXd deta;

  ShapeTable(int p, const std::vector<Eigen::Vector2d>& pts) : order(p), n_local((p + 1) * (p + 1)), points(pts) {
    const auto nq = static_cast<Eigen::Index>(pts.size());
    values.resize(n_local, nq);
    dxi.resize(n_local, nq);
    deta.resize(n_local, nq);
    for (Eigen::Index q = 0; q < nq; ++q)
      for (int b = 0; b <= p; ++b)
        for (int a = 0; a <= p; ++a) {
          const int i = a + (p + 1) * b;
          const double lx = lagrange(p, a, pts[q].x());
          const double ly = lagrange(p, b, pts[q].y());
          values(i, q) = lx * ly;
          dxi(i, q) = lagrange_derivative(p, a, pts[q].x()) * ly;
          deta(i, q) = lx * lagrange_derivative(p, b, pts[q].y());
        }
  }
};

/// Tensor Gauss points on the reference square.
inline std::pair<std::vector<Eigen::Vector2d>, std::vector<double>> tensor_gauss(int n) {
  const GaussRule g(n);
  std::vector<Eigen::Vector2d> pts;
  std::vector<double> w;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(g.points[i], g.points[j]);
      w.push_back(g.weights[i] * g.weights[j]);
    }
  return {pts, w};
}

/// Gauss points on face f of the reference square, and the unit tangent
/// parameter direction used for the surface measure.
inline std::vector<Eigen::Vector2d> face_points(int face, const GaussRule& g) {
  std::vector<Eigen::Vector2d> pts;
  for (double t : g.points) {
    switch (face) {
      case 0: pts.emplace_back(t, 0.0); break;
      case 1: pts.emplace_back(1.0, t); break;
      case 2: pts.emplace_back(t, 1.0); break;
      default: pts.emplace_back(0.0, t); break;
    }
  }
  return pts;
}

}  // namespace pudwr
