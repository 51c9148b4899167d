#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "hdfts/mesh.hpp"

namespace hdfts {

/// Degree-d Bernstein basis over a shared triangulation.
///
/// Per triangle there are Q = (d+1)(d+2)/2 basis functions
/// B_{ijk} = d!/(i!j!k!) b1^i b2^j b3^k, i+j+k = d, enumerated in descending
/// lexicographic (i, j, k) order: (d,0,0), (d-1,1,0), (d-1,0,1), ...,
/// (0,0,d). A coefficient vector over the mesh has length L*Q and is ordered
/// triangle-major, basis-index-minor.
class BasisSpec {
 public:
  BasisSpec() = default;
  BasisSpec(std::shared_ptr<const Triangulation> tri, int degree);

  const Triangulation& mesh() const { return *tri_; }
  std::shared_ptr<const Triangulation> mesh_ptr() const { return tri_; }
  int degree() const { return degree_; }
  int q_per_triangle() const { return (degree_ + 1) * (degree_ + 2) / 2; }
  int dimension() const { return mesh().num_triangles() * q_per_triangle(); }

 private:
  std::shared_ptr<const Triangulation> tri_;
  int degree_ = 0;
};

/// Index of exponent triple (i, j, k), i+j+k = d, in the basis enumeration.
int bernstein_index(int d, int i, int j);

/// Exponent triple of basis index q at degree d.
std::array<int, 3> bernstein_exponents(int d, int q);

/// Values of the Q basis functions of triangle l at a point inside it.
/// Throws out_of_triangle if any barycentric coordinate is below -1e-12.
Eigen::VectorXd eval_basis(const BasisSpec& spec, int triangle, Point p);

/// Basis values plus first and second derivatives w.r.t. (u, v).
struct BasisDerivatives {
  Eigen::VectorXd value, du, dv, duu, duv, dvv;
};
BasisDerivatives eval_basis_derivatives(const BasisSpec& spec, int triangle, Point p);

/// Piecewise-polynomial surface: gamma holds the L*Q basis coefficients.
struct CoefficientSurface {
  BasisSpec basis;
  Eigen::VectorXd gamma;

  double operator()(Point p) const { return eval_surface(*this, p); }
  friend double eval_surface(const CoefficientSurface& s, Point p);
};

double eval_surface(const CoefficientSurface& surface, Point p);

/// Q domain points of triangle l: xi_{ijk} = (i*V1 + j*V2 + k*V3)/d.
std::vector<Point> domain_points(const BasisSpec& spec, int triangle);

/// Interpolates f at the domain points of every triangle.
CoefficientSurface interpolate(const BasisSpec& spec, const std::function<double(Point)>& f);

/// Cross-edge smoothness constraint matrix H with L*Q columns.
///
/// For every interior edge it emits the Bernstein coefficient conditions for
/// C^r agreement of the two adjacent polynomials (d+1 rows for the C^0 level,
/// d more for the C^1 level). H*gamma = 0 iff the piecewise polynomial is C^r
/// across all interior edges. Requires r <= d-1 when r = 1.
Eigen::MatrixXd smoothness_matrix(const BasisSpec& spec, int order);

/// Roughness penalty matrix R, block diagonal over triangles, with
/// gamma' R gamma = integral of (D_uu beta)^2 + (D_uv beta)^2 + (D_vv beta)^2
/// over the domain. Entries are exact polynomial integrals.
Eigen::MatrixXd roughness_matrix(const BasisSpec& spec);

/// Symmetric PSD square root with eigenvalues below 1e-12 clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

}  // namespace hdfts
