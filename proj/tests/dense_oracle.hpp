#pragma once

// Independent dense reference for a tiny instance: the rectangle [0,2]x[0,1]
// split into 2x2 bilinear cells (one sibling patch), 3x3 nodes numbered
// a + 3 b at (a, b/2). Left edge Dirichlet, top edge Robin, rest Neumann.
// Nothing here uses the library's quadrature, shape functions, assembly or
// solvers; only plain formulas and dense Eigen algebra.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Params {
  double Le = 1.3, alpha = 0.8, beta = 10.0, kappa = 0.1;
  double T = 0.2;
  int M = 2;
  double area = 2.0;
};

inline double omega(const Params& p, double th, double y) {
  return p.beta * p.beta / (2 * p.Le) * y * std::exp(p.beta * (th - 1) / (1 + p.alpha * (th - 1)));
}
inline double omega_t(const Params& p, double th, double y) {
  const double d = 1 + p.alpha * (th - 1);
  return omega(p, th, y) * p.beta / (d * d);
}
inline double omega_y(const Params& p, double th, double) {
  return p.beta * p.beta / (2 * p.Le) * std::exp(p.beta * (th - 1) / (1 + p.alpha * (th - 1)));
}

// Gauss rules on [0,1] written out by hand.
struct Rule {
  std::vector<double> x, w;
};
inline Rule gauss(int n) {
  if (n == 3) {
    const double a = 0.5 * std::sqrt(0.6);
    return {{0.5 - a, 0.5, 0.5 + a}, {5.0 / 18, 8.0 / 18, 5.0 / 18}};
  }
  // four points
  const double s = std::sqrt(6.0 / 5.0);
  const double x1 = std::sqrt(3.0 / 7 - 2.0 / 7 * s), x2 = std::sqrt(3.0 / 7 + 2.0 / 7 * s);
  const double w1 = (18 + std::sqrt(30.0)) / 72, w2 = (18 - std::sqrt(30.0)) / 72;
  return {{0.5 - 0.5 * x2, 0.5 - 0.5 * x1, 0.5 + 0.5 * x1, 0.5 + 0.5 * x2}, {w2, w1, w1, w2}};
}

constexpr int kNodes = 9;
inline double node_x(int i) { return i % 3; }
inline double node_y(int i) { return 0.5 * (i / 3); }
inline bool dirichlet(int i) { return i % 3 == 0; }

// Global hat function of node i at (x, y), with gradient.
inline double hat1(double t, int a) { return std::max(0.0, 1.0 - std::abs(t - a)); }
inline double hat1_d(double t, int a, int cell) {
  // derivative on the cell [cell, cell+1]
  if (a == cell) return -1.0;
  if (a == cell + 1) return 1.0;
  return 0.0;
}
struct Basis {
  double v[kNodes];
  double gx[kNodes];
  double gy[kNodes];
};
// Evaluation inside cell (cx, cy) at physical point (x, y).
inline Basis basis(int cx, int cy, double x, double y) {
  Basis b{};
  const double s = 2 * y;  // y in units of the cell height
  for (int i = 0; i < kNodes; ++i) {
    const int a = i % 3, c = i / 3;
    b.v[i] = hat1(x, a) * hat1(s, c);
    b.gx[i] = hat1_d(x, a, cx) * hat1(s, c);
    b.gy[i] = hat1(x, a) * hat1_d(s, c, cy) * 2.0;
  }
  return b;
}

// Biquadratic interpolant over the whole patch from the nine nodal values.
inline double lag2(double t, int a) {
  const double n[3] = {0, 0.5, 1};
  double v = 1;
  for (int j = 0; j < 3; ++j)
    if (j != a) v *= (t - n[j]) / (n[a] - n[j]);
  return v;
}
inline double lag2_d(double t, int a) {
  const double n[3] = {0, 0.5, 1};
  double s = 0;
  for (int m = 0; m < 3; ++m) {
    if (m == a) continue;
    double term = 1 / (n[a] - n[m]);
    for (int j = 0; j < 3; ++j)
      if (j != a && j != m) term *= (t - n[j]) / (n[a] - n[j]);
    s += term;
  }
  return s;
}
struct Value {
  double v, gx, gy;
};
inline Value patch_q2(const double* nodal, double x, double y) {
  Value r{0, 0, 0};
  const double xi = x / 2, eta = y;
  for (int i = 0; i < kNodes; ++i) {
    const int a = i % 3, b = i / 3;
    r.v += nodal[i] * lag2(xi, a) * lag2(eta, b);
    r.gx += nodal[i] * lag2_d(xi, a) * lag2(eta, b) * 0.5;
    r.gy += nodal[i] * lag2(xi, a) * lag2_d(eta, b);
  }
  return r;
}

using Vec = Eigen::VectorXd;  // [theta(9); Y(9)]
using Mat = Eigen::MatrixXd;

template <class F>
void for_quadrature(int n, F&& f) {
  const Rule g = gauss(n);
  for (int cy = 0; cy < 2; ++cy)
    for (int cx = 0; cx < 2; ++cx)
      for (std::size_t j = 0; j < g.x.size(); ++j)
        for (std::size_t i = 0; i < g.x.size(); ++i) {
          const double x = cx + g.x[i], y = 0.5 * (cy + g.x[j]);
          f(cx, cy, x, y, 0.5 * g.w[i] * g.w[j]);
        }
}
template <class F>
void for_robin(int n, F&& f) {
  const Rule g = gauss(n);
  for (int cx = 0; cx < 2; ++cx)
    for (std::size_t i = 0; i < g.x.size(); ++i) f(cx, 1, cx + g.x[i], 1.0, g.w[i]);
}

inline double dot9(const double* c, const double* phi) {
  double s = 0;
  for (int i = 0; i < kNodes; ++i) s += c[i] * phi[i];
  return s;
}

// Full residual (A - F)(phi_i) of one backward Euler step and its Jacobian.
inline void step(const Params& p, const Vec& u, const Vec& up, double k, Vec& r, Mat* jac) {
  r = Vec::Zero(18);
  if (jac) *jac = Mat::Zero(18, 18);
  const double* th = u.data();
  const double* y = u.data() + 9;
  for_quadrature(3, [&](int cx, int cy, double x, double yy, double w) {
    const Basis b = basis(cx, cy, x, yy);
    const double vt = dot9(th, b.v), vy = dot9(y, b.v);
    const double vtp = dot9(up.data(), b.v), vyp = dot9(up.data() + 9, b.v);
    const double gtx = dot9(th, b.gx), gty = dot9(th, b.gy);
    const double gyx = dot9(y, b.gx), gyy = dot9(y, b.gy);
    const double om = omega(p, vt, vy), ot = omega_t(p, vt, vy), oy = omega_y(p, vt, vy);
    for (int i = 0; i < 9; ++i) {
      r[i] += w * ((vt - vtp) * b.v[i] + k * (gtx * b.gx[i] + gty * b.gy[i]) - k * om * b.v[i]);
      r[9 + i] += w * ((vy - vyp) * b.v[i] + k / p.Le * (gyx * b.gx[i] + gyy * b.gy[i]) + k * om * b.v[i]);
      if (!jac) continue;
      for (int j = 0; j < 9; ++j) {
        const double m = w * b.v[i] * b.v[j];
        const double s = w * (b.gx[i] * b.gx[j] + b.gy[i] * b.gy[j]);
        (*jac)(i, j) += m + k * s - k * ot * m;
        (*jac)(i, 9 + j) += -k * oy * m;
        (*jac)(9 + i, j) += k * ot * m;
        (*jac)(9 + i, 9 + j) += m + k / p.Le * s + k * oy * m;
      }
    }
  });
  for_robin(3, [&](int cx, int cy, double x, double yy, double w) {
    const Basis b = basis(cx, cy, x, yy);
    const double vt = dot9(th, b.v);
    for (int i = 0; i < 9; ++i) {
      r[i] += w * k * p.kappa * vt * b.v[i];
      if (jac)
        for (int j = 0; j < 9; ++j) (*jac)(i, j) += w * k * p.kappa * b.v[i] * b.v[j];
    }
  });
}

inline std::vector<int> free_rows() {
  std::vector<int> f;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 9; ++i)
      if (!dirichlet(i)) f.push_back(c * 9 + i);
  return f;
}

inline Mat restrict(const Mat& a, const std::vector<int>& rows) {
  Mat out(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) out(i, j) = a(rows[i], rows[j]);
  return out;
}

// Plain Newton with dense LU; boundary data theta = 1, Y = 0.
inline Vec solve_step(const Params& p, const Vec& up, double k) {
  Vec u = up;
  for (int i = 0; i < 9; ++i)
    if (dirichlet(i)) u[i] = 1.0, u[9 + i] = 0.0;
  const auto rows = free_rows();
  for (int it = 0; it < 50; ++it) {
    Vec r;
    Mat j;
    step(p, u, up, k, r, &j);
    Vec rf(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rf[i] = r[rows[i]];
    if (rf.norm() < 1e-14) break;
    const Vec d = restrict(j, rows).fullPivLu().solve(-rf);
    for (std::size_t i = 0; i < rows.size(); ++i) u[rows[i]] += d[i];
  }
  return u;
}

inline Vec goal_gradient(const Params& p, const Vec& u) {
  Vec g = Vec::Zero(18);
  for_quadrature(3, [&](int cx, int cy, double x, double yy, double w) {
    const Basis b = basis(cx, cy, x, yy);
    const double vt = dot9(u.data(), b.v), vy = dot9(u.data() + 9, b.v);
    for (int i = 0; i < 9; ++i) {
      g[i] += w * omega_t(p, vt, vy) * b.v[i];
      g[9 + i] += w * omega_y(p, vt, vy) * b.v[i];
    }
  });
  return g;
}

inline Mat mass() {
  Mat m = Mat::Zero(18, 18);
  for_quadrature(3, [&](int cx, int cy, double x, double yy, double w) {
    const Basis b = basis(cx, cy, x, yy);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) {
        m(i, j) += w * b.v[i] * b.v[j];
        m(9 + i, 9 + j) += w * b.v[i] * b.v[j];
      }
  });
  return m;
}

// Backward sweep A_n^T z_n = k J'(u_n) / (T |Omega|) + M z_{n+1}; `u` holds
// u_1..u_M. Dirichlet entries of z vanish.
inline std::vector<Vec> adjoint(const Params& p, const std::vector<Vec>& u) {
  const double k = p.T / p.M;
  const auto rows = free_rows();
  const Mat m = mass();
  std::vector<Vec> z(u.size(), Vec::Zero(18));
  Vec next = Vec::Zero(18);
  for (int n = static_cast<int>(u.size()) - 1; n >= 0; --n) {
    Vec r;
    Mat j;
    step(p, u[n], u[n], k, r, &j);
    const Vec rhs = k / (p.T * p.area) * goal_gradient(p, u[n]) + m * next;
    Vec rf(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rf[i] = rhs[rows[i]];
    const Vec zf = restrict(j, rows).transpose().fullPivLu().solve(rf);
    for (std::size_t i = 0; i < rows.size(); ++i) z[n][rows[i]] = zf[i];
    next = z[n];
  }
  return z;
}

// Unlocalized primal cG(1)/cG(1) estimator: temporal weight affine from 0 to
// z_{n+1} - z_n, spatial weight (patch Q2 of z_n) - z_n.
inline double primal_estimator(const Params& p, const Vec& u0, const std::vector<Vec>& u,
                               const std::vector<Vec>& z) {
  const double k = p.T / p.M;
  const double tau[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  double eta = 0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    const Vec& un = u[n];
    const Vec& up = n == 0 ? u0 : u[n - 1];
    const Vec zn = z[n];
    const Vec zdiff = (n + 1 < z.size() ? z[n + 1] : Vec::Zero(18)) - zn;
    // weight w(tau) at a point: temporal end value times tau, plus spatial
    // The temporal weight is cG(1) in space, the spatial one biquadratic:
    // max(order) + 2 Gauss points per direction.
    for (int part = 0; part < 2; ++part) {
      const int nq = part == 0 ? 3 : 4;
      for_quadrature(nq, [&](int cx, int cy, double x, double yy, double wq) {
        const Basis b = basis(cx, cy, x, yy);
        double ws[2], we[2], gsx[2], gsy[2], gex[2], gey[2];
        for (int c = 0; c < 2; ++c) {
          if (part == 0) {
            ws[c] = gsx[c] = gsy[c] = 0;
            we[c] = dot9(zdiff.data() + 9 * c, b.v);
            gex[c] = dot9(zdiff.data() + 9 * c, b.gx);
            gey[c] = dot9(zdiff.data() + 9 * c, b.gy);
          } else {
            const Value q = patch_q2(zn.data() + 9 * c, x, yy);
            ws[c] = we[c] = q.v - dot9(zn.data() + 9 * c, b.v);
            gsx[c] = gex[c] = q.gx - dot9(zn.data() + 9 * c, b.gx);
            gsy[c] = gey[c] = q.gy - dot9(zn.data() + 9 * c, b.gy);
          }
        }
        const double vt = dot9(un.data(), b.v), vy = dot9(un.data() + 9, b.v);
        const double dt = vt - dot9(up.data(), b.v), dy = vy - dot9(up.data() + 9, b.v);
        const double gtx = dot9(un.data(), b.gx), gty = dot9(un.data(), b.gy);
        const double gyx = dot9(un.data() + 9, b.gx), gyy = dot9(un.data() + 9, b.gy);
        const double om = omega(p, vt, vy);
        double a = dt * ws[0] + dy * ws[1];
        for (double t : tau) {
          const double wt = (1 - t) * ws[0] + t * we[0], wy = (1 - t) * ws[1] + t * we[1];
          const double wtx = (1 - t) * gsx[0] + t * gex[0], wty = (1 - t) * gsy[0] + t * gey[0];
          const double wyx = (1 - t) * gsx[1] + t * gex[1], wyy = (1 - t) * gsy[1] + t * gey[1];
          a += 0.5 * k * (gtx * wtx + gty * wty + (gyx * wyx + gyy * wyy) / p.Le + om * (wy - wt));
        }
        eta -= wq * a;
      });
      for_robin(nq, [&](int cx, int cy, double x, double yy, double wq) {
        const Basis b = basis(cx, cy, x, yy);
        double ws, we;
        if (part == 0) {
          ws = 0;
          we = dot9(zdiff.data(), b.v);
        } else {
          ws = we = patch_q2(zn.data(), x, yy).v - dot9(zn.data(), b.v);
        }
        const double vt = dot9(un.data(), b.v);
        double a = 0;
        for (double t : tau) a += 0.5 * k * p.kappa * vt * ((1 - t) * ws + t * we);
        eta -= wq * a;
      });
    }
  }
  return eta;
}

inline double initial_theta(double x, double y) { return std::exp(-x) * (1 + 0.2 * y); }
inline double initial_species(double x, double y) { return 1 - std::exp(-x) * (1 - 0.1 * y); }

inline Vec initial() {
  Vec u(18);
  for (int i = 0; i < 9; ++i) {
    u[i] = initial_theta(node_x(i), node_y(i));
    u[9 + i] = initial_species(node_x(i), node_y(i));
  }
  return u;
}

}  // namespace oracle
