#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hdfts/errors.hpp"

namespace hdfts {

struct Point {
  double u = 0.0;
  double v = 0.0;
};

/// Axis-aligned rectangle [u_lo,u_hi] x [v_lo,v_hi].
struct Rect {
  double u_lo = 0.0, u_hi = 1.0;
  double v_lo = 0.0, v_hi = 1.0;

  double width() const { return u_hi - u_lo; }
  double height() const { return v_hi - v_lo; }
  double area() const { return width() * height(); }
  bool contains(Point p, double tol = 1e-12) const {
    return p.u >= u_lo - tol && p.u <= u_hi + tol && p.v >= v_lo - tol && p.v <= v_hi + tol;
  }
};

/// Interior edge shared by two triangles. tri_a < tri_b; (v0, v1) are the
/// global indices of the shared vertices, apex_* the opposite vertex of each
/// triangle.
struct InteriorEdge {
  int tri_a = -1, tri_b = -1;
  int v0 = -1, v1 = -1;
  int apex_a = -1, apex_b = -1;
};

/// Uniform diagonal-split triangulation of a rectangle.
///
/// The grid has rows x cols cells; every cell is split along the same
/// lower-left to upper-right diagonal, giving L = 2*rows*cols triangles.
/// Triangles are indexed cell-major (row-major cells), lower triangle first,
/// and every triangle is stored counter-clockwise (positive signed area).
/// Immutable after construction; safe to share across threads.
class Triangulation {
 public:
  const Rect& domain() const { return domain_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<InteriorEdge>& interior_edges() const { return interior_edges_; }

  Point vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  std::array<Point, 3> triangle_vertices(int l) const;
  double triangle_area(int l) const;

  /// Barycentric coordinates of p with respect to triangle l. The three
  /// coordinates sum to one by construction; p lies inside iff all are >= 0.
  std::array<double, 3> barycentric(int l, Point p) const;

  /// Lowest-index triangle containing p (tolerance 1e-12 on barycentrics).
  /// Points on shared edges resolve to the lower triangle index.
  int locate(Point p) const;

  /// min over triangles of in-radius / diameter (shape-regularity measure).
  double min_shape_ratio() const;

  std::string to_json() const;
  static Triangulation from_json(const std::string& text);

  /// Generic mesh from explicit vertices and (counter-clockwise) triangles;
  /// locate() falls back to a linear scan for such meshes.
  static Triangulation from_triangles(const Rect& domain, std::vector<Point> vertices,
                                      std::vector<std::array<int, 3>> triangles);

  friend Triangulation triangulate_rect(const Rect& domain, int rows, int cols);

 private:
  Rect domain_;
  int rows_ = 0, cols_ = 0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<InteriorEdge> interior_edges_;

  void build_edges();
};

/// Barycentric coordinates of p in the triangle (a, b, c).
std::array<double, 3> barycentric(Point a, Point b, Point c, Point p);

double signed_area(Point a, Point b, Point c);

/// Builds the uniform rows x cols diagonal-split mesh of the domain.
Triangulation triangulate_rect(const Rect& domain, int rows, int cols);

}  // namespace hdfts
