#include "hdfts/basis.hpp"

#include <cmath>

namespace hdfts {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double multinomial(int d, int i, int j, int k) {
  return factorial(d) / (factorial(i) * factorial(j) * factorial(k));
}

/// Barycentric coordinates clamped into [0,1] and renormalized, after the
/// containment tolerance check. Keeps basis values in [0,1] and the partition
/// of unity exact to rounding for boundary points.
std::array<double, 3> clamped_barycentric(const Triangulation& mesh, int triangle, Point p) {
  auto b = mesh.barycentric(triangle, p);
  for (double c : b) {
    if (c < -1e-12) {
      throw error(errc::out_of_triangle, "eval_basis: point outside the requested triangle");
    }
  }
  double sum = 0.0;
  for (double& c : b) {
    if (c < 0.0) c = 0.0;
    sum += c;
  }
  for (double& c : b) c /= sum;
  return b;
}

/// Gradients of the three barycentric coordinate functions (constant per
/// triangle since the map is affine).
std::array<std::array<double, 2>, 3> barycentric_gradients(const std::array<Point, 3>& v) {
  const double det = (v[1].u - v[0].u) * (v[2].v - v[0].v) - (v[2].u - v[0].u) * (v[1].v - v[0].v);
  if (det == 0.0) throw error(errc::degenerate_triangle, "zero-area triangle");
  const std::array<double, 2> g2 = {(v[2].v - v[0].v) / det, -(v[2].u - v[0].u) / det};
  const std::array<double, 2> g3 = {-(v[1].v - v[0].v) / det, (v[1].u - v[0].u) / det};
  return {{{-g2[0] - g3[0], -g2[1] - g3[1]}, g2, g3}};
}

double pow_nonneg(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

BasisSpec::BasisSpec(std::shared_ptr<const Triangulation> tri, int degree)
    : tri_(std::move(tri)), degree_(degree) {
  if (!tri_) throw error(errc::invalid_config, "BasisSpec: null triangulation");
  if (degree_ < 1) throw error(errc::invalid_config, "BasisSpec: degree must be >= 1");
}

int bernstein_index(int d, int i, int j) {
  const int di = d - i;
  return di * (di + 1) / 2 + (di - j);
}

std::array<int, 3> bernstein_exponents(int d, int q) {
  for (int i = d; i >= 0; --i) {
    const int di = d - i;
    const int block_start = di * (di + 1) / 2;
    if (q < block_start + di + 1) {
      const int j = di - (q - block_start);
      return {i, j, d - i - j};
    }
  }
  throw error(errc::invalid_config, "bernstein_exponents: index out of range");
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, int triangle, Point p) {
  const int d = spec.degree();
  const auto b = clamped_barycentric(spec.mesh(), triangle, p);

  std::vector<double> p1(d + 1, 1.0), p2(d + 1, 1.0), p3(d + 1, 1.0);
  for (int e = 1; e <= d; ++e) {
    p1[e] = p1[e - 1] * b[0];
    p2[e] = p2[e - 1] * b[1];
    p3[e] = p3[e - 1] * b[2];
  }
  Eigen::VectorXd out(spec.q_per_triangle());
  int q = 0;
  for (int i = d; i >= 0; --i) {
    for (int j = d - i; j >= 0; --j) {
      const int k = d - i - j;
      out[q++] = multinomial(d, i, j, k) * p1[i] * p2[j] * p3[k];
    }
  }
  return out;
}

BasisDerivatives eval_basis_derivatives(const BasisSpec& spec, int triangle, Point p) {
  const int d = spec.degree();
  const int Q = spec.q_per_triangle();
  const auto b = clamped_barycentric(spec.mesh(), triangle, p);
  const auto g = barycentric_gradients(spec.mesh().triangle_vertices(triangle));

  BasisDerivatives out;
  out.value.resize(Q);
  out.du.setZero(Q);
  out.dv.setZero(Q);
  out.duu.setZero(Q);
  out.duv.setZero(Q);
  out.dvv.setZero(Q);

  for (int q = 0; q < Q; ++q) {
    const auto e = bernstein_exponents(d, q);
    const double coef = multinomial(d, e[0], e[1], e[2]);
    out.value[q] = coef * pow_nonneg(b[0], e[0]) * pow_nonneg(b[1], e[1]) * pow_nonneg(b[2], e[2]);

    for (int m = 0; m < 3; ++m) {
      if (e[m] == 0) continue;
      std::array<int, 3> em = e;
      em[m] -= 1;
      const double mono = pow_nonneg(b[0], em[0]) * pow_nonneg(b[1], em[1]) * pow_nonneg(b[2], em[2]);
      const double t = coef * e[m] * mono;
      out.du[q] += t * g[m][0];
      out.dv[q] += t * g[m][1];
    }
    for (int m = 0; m < 3; ++m) {
      for (int n = 0; n < 3; ++n) {
        const double f = (m == n) ? static_cast<double>(e[m]) * (e[m] - 1)
                                  : static_cast<double>(e[m]) * e[n];
        if (f == 0.0) continue;
        std::array<int, 3> emn = e;
        emn[m] -= 1;
        emn[n] -= 1;
        if (emn[0] < 0 || emn[1] < 0 || emn[2] < 0) continue;
        const double mono =
            pow_nonneg(b[0], emn[0]) * pow_nonneg(b[1], emn[1]) * pow_nonneg(b[2], emn[2]);
        const double t = coef * f * mono;
        out.duu[q] += t * g[m][0] * g[n][0];
        out.duv[q] += t * g[m][0] * g[n][1];
        out.dvv[q] += t * g[m][1] * g[n][1];
      }
    }
  }
  return out;
}

double eval_surface(const CoefficientSurface& surface, Point p) {
  const int l = surface.basis.mesh().locate(p);
  const int Q = surface.basis.q_per_triangle();
  const Eigen::VectorXd values = eval_basis(surface.basis, l, p);
  return values.dot(surface.gamma.segment(static_cast<Eigen::Index>(l) * Q, Q));
}

std::vector<Point> domain_points(const BasisSpec& spec, int triangle) {
  const int d = spec.degree();
  const auto v = spec.mesh().triangle_vertices(triangle);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(spec.q_per_triangle()));
  for (int q = 0; q < spec.q_per_triangle(); ++q) {
    const auto e = bernstein_exponents(d, q);
    pts.push_back({(e[0] * v[0].u + e[1] * v[1].u + e[2] * v[2].u) / d,
                   (e[0] * v[0].v + e[1] * v[1].v + e[2] * v[2].v) / d});
  }
  return pts;
}

CoefficientSurface interpolate(const BasisSpec& spec, const std::function<double(Point)>& f) {
  const int Q = spec.q_per_triangle();
  const int L = spec.mesh().num_triangles();
  Eigen::VectorXd gamma(spec.dimension());
  Eigen::MatrixXd vander(Q, Q);
  Eigen::VectorXd rhs(Q);
  for (int l = 0; l < L; ++l) {
    const auto pts = domain_points(spec, l);
    for (int r = 0; r < Q; ++r) {
      vander.row(r) = eval_basis(spec, l, pts[static_cast<std::size_t>(r)]).transpose();
      rhs[r] = f(pts[static_cast<std::size_t>(r)]);
    }
    gamma.segment(static_cast<Eigen::Index>(l) * Q, Q) = vander.partialPivLu().solve(rhs);
  }
  return {spec, std::move(gamma)};
}

Eigen::MatrixXd smoothness_matrix(const BasisSpec& spec, int order) {
  const int d = spec.degree();
  if (order < 0 || order > 1) {
    throw error(errc::unsupported_smoothness, "smoothness_matrix: order must be 0 or 1");
  }
  if (order == 1 && d < 2) {
    throw error(errc::unsupported_smoothness, "smoothness_matrix: C^1 needs degree >= 2");
  }
  const auto& mesh = spec.mesh();
  const int Q = spec.q_per_triangle();
  const auto& edges = mesh.interior_edges();
  const int rows_per_edge = (d + 1) + (order == 1 ? d : 0);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges.size()) * rows_per_edge,
                                            spec.dimension());

  // Bernstein coefficient smoothness conditions across a shared edge
  // (Lai--Schumaker). With both triangles relabeled in the role order
  // (apex, P, R) over the shared vertices (P, R):
  //   C^0: cB_{0jk} = cA_{0jk}                       for j+k = d
  //   C^1: cB_{1jk} = l1*cA_{1jk} + l2*cA_{0,j+1,k} + l3*cA_{0,j,k+1}
  // where (l1,l2,l3) are the barycentric coordinates of B's apex with respect
  // to the role-ordered triangle A.
  const auto storage_index = [&](int tri, int apex_vertex, int p_vertex, int r_vertex, int i,
                                 int j, int k) {
    const auto& t = mesh.triangles()[static_cast<std::size_t>(tri)];
    std::array<int, 3> e{};
    for (int pos = 0; pos < 3; ++pos) {
      const int vtx = t[static_cast<std::size_t>(pos)];
      if (vtx == apex_vertex) e[static_cast<std::size_t>(pos)] = i;
      else if (vtx == p_vertex) e[static_cast<std::size_t>(pos)] = j;
      else if (vtx == r_vertex) e[static_cast<std::size_t>(pos)] = k;
      else throw error(errc::invalid_config, "smoothness_matrix: inconsistent edge record");
    }
    return static_cast<Eigen::Index>(tri) * Q + bernstein_index(d, e[0], e[1]);
  };

  Eigen::Index row = 0;
  for (const auto& e : edges) {
    for (int j = 0; j + 0 <= d; ++j) {
      const int k = d - j;
      H(row, storage_index(e.tri_b, e.apex_b, e.v0, e.v1, 0, j, k)) += 1.0;
      H(row, storage_index(e.tri_a, e.apex_a, e.v0, e.v1, 0, j, k)) -= 1.0;
      ++row;
    }
    if (order == 1) {
      const auto pa = mesh.vertex(e.apex_a);
      const auto p0 = mesh.vertex(e.v0);
      const auto p1 = mesh.vertex(e.v1);
      const auto lambda = barycentric(pa, p0, p1, mesh.vertex(e.apex_b));
      for (int j = 0; j <= d - 1; ++j) {
        const int k = d - 1 - j;
        H(row, storage_index(e.tri_b, e.apex_b, e.v0, e.v1, 1, j, k)) += 1.0;
        H(row, storage_index(e.tri_a, e.apex_a, e.v0, e.v1, 1, j, k)) -= lambda[0];
        H(row, storage_index(e.tri_a, e.apex_a, e.v0, e.v1, 0, j + 1, k)) -= lambda[1];
        H(row, storage_index(e.tri_a, e.apex_a, e.v0, e.v1, 0, j, k + 1)) -= lambda[2];
        ++row;
      }
    }
  }
  return H;
}

Eigen::MatrixXd roughness_matrix(const BasisSpec& spec) {
  const int d = spec.degree();
  const int Q = spec.q_per_triangle();
  const int L = spec.mesh().num_triangles();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(spec.dimension(), spec.dimension());
  if (d < 2) return R;  // second derivatives of linear pieces vanish

  const int dm = d - 2;                       // monomial degree of D^2 B
  const int Qm = (dm + 1) * (dm + 2) / 2;     // monomials of that degree

  for (int l = 0; l < L; ++l) {
    const auto v = spec.mesh().triangle_vertices(l);
    const auto g = barycentric_gradients(v);
    const double area = signed_area(v[0], v[1], v[2]);

    // Coefficients of the second derivatives over the degree-(d-2) monomial
    // basis b1^a b2^b b3^c.
    Eigen::MatrixXd cuu = Eigen::MatrixXd::Zero(Q, Qm);
    Eigen::MatrixXd cuv = Eigen::MatrixXd::Zero(Q, Qm);
    Eigen::MatrixXd cvv = Eigen::MatrixXd::Zero(Q, Qm);
    for (int q = 0; q < Q; ++q) {
      const auto e = bernstein_exponents(d, q);
      const double coef = multinomial(d, e[0], e[1], e[2]);
      for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
          const double f = (m == n) ? static_cast<double>(e[m]) * (e[m] - 1)
                                    : static_cast<double>(e[m]) * e[n];
          if (f == 0.0) continue;
          std::array<int, 3> emn = e;
          emn[m] -= 1;
          emn[n] -= 1;
          if (emn[0] < 0 || emn[1] < 0 || emn[2] < 0) continue;
          const int col = bernstein_index(dm, emn[0], emn[1]);
          cuu(q, col) += coef * f * g[m][0] * g[n][0];
          cuv(q, col) += coef * f * g[m][0] * g[n][1];
          cvv(q, col) += coef * f * g[m][1] * g[n][1];
        }
      }
    }

    // W[a,b] = integral over the triangle of the product of monomials a and b:
    // int b1^i b2^j b3^k dA = 2*Area * i! j! k! / (i+j+k+2)!.
    Eigen::MatrixXd W(Qm, Qm);
    for (int a = 0; a < Qm; ++a) {
      const auto ea = bernstein_exponents(dm, a);
      for (int b = 0; b < Qm; ++b) {
        const auto eb = bernstein_exponents(dm, b);
        const int i = ea[0] + eb[0], j = ea[1] + eb[1], k = ea[2] + eb[2];
        W(a, b) = 2.0 * area * factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 2);
      }
    }

    R.block(static_cast<Eigen::Index>(l) * Q, static_cast<Eigen::Index>(l) * Q, Q, Q) =
        cuu * W * cuu.transpose() + cuv * W * cuv.transpose() + cvv * W * cvv.transpose();
  }
  return R;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = ev[i] < 1e-12 ? 0.0 : std::sqrt(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace hdfts
