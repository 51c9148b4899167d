#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>

#include "hdfts/basis.hpp"
#include "hdfts/mesh.hpp"
#include "hdfts/rng.hpp"

namespace hdtest {

inline std::shared_ptr<const hdfts::Triangulation> unit_mesh(int rows, int cols) {
  return std::make_shared<hdfts::Triangulation>(
      hdfts::triangulate_rect(hdfts::Rect{0, 1, 0, 1}, rows, cols));
}

inline hdfts::BasisSpec unit_spec(int rows, int cols, int degree) {
  return hdfts::BasisSpec(unit_mesh(rows, cols), degree);
}

inline hdfts::Point random_point(std::mt19937_64& gen, const hdfts::Rect& dom = {0, 1, 0, 1}) {
  return {dom.u_lo + dom.width() * hdfts::uniform01(gen),
          dom.v_lo + dom.height() * hdfts::uniform01(gen)};
}

/// Independent surface second derivatives: differentiates the barycentric
/// monomial form directly from the mesh geometry; shares no code with the
/// library's derivative or penalty assembly paths.
struct SecondDerivs {
  double duu = 0, duv = 0, dvv = 0;
};

inline SecondDerivs surface_second_derivs(const hdfts::BasisSpec& spec,
                                          const Eigen::VectorXd& gamma, int tri, hdfts::Point p) {
  const auto verts = spec.mesh().triangle_vertices(tri);
  Eigen::Matrix2d amat;
  amat << verts[1].u - verts[0].u, verts[2].u - verts[0].u, verts[1].v - verts[0].v,
      verts[2].v - verts[0].v;
  const Eigen::Matrix2d inv = amat.inverse();
  // Rows of inv are the gradients of b2, b3; b1 = 1 - b2 - b3.
  const Eigen::Vector2d g2 = inv.row(0).transpose();
  const Eigen::Vector2d g3 = inv.row(1).transpose();
  const Eigen::Vector2d g1 = -g2 - g3;
  const Eigen::Vector2d grads[3] = {g1, g2, g3};

  const Eigen::Vector2d rel(p.u - verts[0].u, p.v - verts[0].v);
  const Eigen::Vector2d b23 = inv * rel;
  const double b[3] = {1.0 - b23[0] - b23[1], b23[0], b23[1]};

  const int d = spec.degree();
  const int Q = spec.q_per_triangle();
  auto fact = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  auto powi = [](double x, int e) {
    double r = 1;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  };

  SecondDerivs out;
  for (int q = 0; q < Q; ++q) {
    const auto e = hdfts::bernstein_exponents(d, q);
    const double coef =
        gamma[static_cast<Eigen::Index>(tri) * Q + q] * fact(d) / (fact(e[0]) * fact(e[1]) * fact(e[2]));
    for (int m = 0; m < 3; ++m) {
      for (int n = 0; n < 3; ++n) {
        const double f = (m == n) ? double(e[m]) * (e[m] - 1) : double(e[m]) * e[n];
        if (f == 0) continue;
        int em[3] = {e[0], e[1], e[2]};
        em[m] -= 1;
        em[n] -= 1;
        if (em[0] < 0 || em[1] < 0 || em[2] < 0) continue;
        const double mono = powi(b[0], em[0]) * powi(b[1], em[1]) * powi(b[2], em[2]);
        out.duu += coef * f * mono * grads[m][0] * grads[n][0];
        out.duv += coef * f * mono * grads[m][0] * grads[n][1];
        out.dvv += coef * f * mono * grads[m][1] * grads[n][1];
      }
    }
  }
  return out;
}

/// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration.
inline void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = 0.5 * (1.0 + x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// Brute-force roughness energy by Duffy-mapped tensor quadrature: maps an
/// n x n tensor grid onto every triangle and integrates the three squared
/// second derivatives of the surface.
inline double roughness_energy_quadrature(const hdfts::BasisSpec& spec,
                                          const Eigen::VectorXd& gamma, int n) {
  std::vector<double> nodes, weights;
  gauss_legendre_01(n, nodes, weights);
  double total = 0.0;
  for (int l = 0; l < spec.mesh().num_triangles(); ++l) {
    const auto verts = spec.mesh().triangle_vertices(l);
    const double area2 = 2.0 * spec.mesh().triangle_area(l);
    for (int i = 0; i < n; ++i) {
      const double s = nodes[i];
      for (int j = 0; j < n; ++j) {
        const double t = nodes[j];
        const double b1 = s, b2 = (1 - s) * t, b3 = (1 - s) * (1 - t);
        const hdfts::Point p{b1 * verts[0].u + b2 * verts[1].u + b3 * verts[2].u,
                             b1 * verts[0].v + b2 * verts[1].v + b3 * verts[2].v};
        const auto dd = surface_second_derivs(spec, gamma, l, p);
        total += (dd.duu * dd.duu + dd.duv * dd.duv + dd.dvv * dd.dvv) * area2 * (1 - s) *
                 weights[i] * weights[j];
      }
    }
  }
  return total;
}

}  // namespace hdtest
