#include "hdfts/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "json.hpp"

namespace hdfts {

double signed_area(Point a, Point b, Point c) {
  return 0.5 * ((b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v));
}

std::array<double, 3> barycentric(Point a, Point b, Point c, Point p) {
  const double det = (b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v);
  if (det == 0.0 || !std::isfinite(det)) {
    throw error(errc::degenerate_triangle, "barycentric: zero-area triangle");
  }
  const double du = p.u - a.u;
  const double dv = p.v - a.v;
  const double b2 = (du * (c.v - a.v) - (c.u - a.u) * dv) / det;
  const double b3 = ((b.u - a.u) * dv - du * (b.v - a.v)) / det;
  return {1.0 - b2 - b3, b2, b3};
}

std::array<Point, 3> Triangulation::triangle_vertices(int l) const {
  const auto& t = triangles_[static_cast<std::size_t>(l)];
  return {vertices_[static_cast<std::size_t>(t[0])], vertices_[static_cast<std::size_t>(t[1])],
          vertices_[static_cast<std::size_t>(t[2])]};
}

double Triangulation::triangle_area(int l) const {
  const auto v = triangle_vertices(l);
  return signed_area(v[0], v[1], v[2]);
}

std::array<double, 3> Triangulation::barycentric(int l, Point p) const {
  const auto v = triangle_vertices(l);
  return hdfts::barycentric(v[0], v[1], v[2], p);
}

int Triangulation::locate(Point p) const {
  constexpr double tol = 1e-12;
  if (!domain_.contains(p, tol)) {
    throw error(errc::out_of_domain, "locate: point outside the domain rectangle");
  }
  if (rows_ == 0) {  // generic mesh: lowest-index linear scan
    for (int l = 0; l < num_triangles(); ++l) {
      const auto b = barycentric(l, p);
      if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) return l;
    }
    throw error(errc::out_of_domain, "locate: no containing triangle found");
  }
  const double cw = domain_.width() / cols_;
  const double ch = domain_.height() / rows_;
  int ci = static_cast<int>(std::floor((p.v - domain_.v_lo) / ch));
  int cj = static_cast<int>(std::floor((p.u - domain_.u_lo) / cw));
  ci = std::clamp(ci, 0, rows_ - 1);
  cj = std::clamp(cj, 0, cols_ - 1);

  // A point on a cell boundary is contained in up to four cells; scan the
  // candidate cells in triangle-index order so ties resolve to the lowest
  // index.
  for (int i = std::max(0, ci - 1); i <= std::min(rows_ - 1, ci + 1); ++i) {
    for (int j = std::max(0, cj - 1); j <= std::min(cols_ - 1, cj + 1); ++j) {
      const int base = 2 * (i * cols_ + j);
      for (int k = 0; k < 2; ++k) {
        const auto b = barycentric(base + k, p);
        if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) return base + k;
      }
    }
  }
  throw error(errc::out_of_domain, "locate: no containing triangle found");
}

double Triangulation::min_shape_ratio() const {
  double best = std::numeric_limits<double>::infinity();
  for (int l = 0; l < num_triangles(); ++l) {
    const auto v = triangle_vertices(l);
    const double e0 = std::hypot(v[1].u - v[0].u, v[1].v - v[0].v);
    const double e1 = std::hypot(v[2].u - v[1].u, v[2].v - v[1].v);
    const double e2 = std::hypot(v[0].u - v[2].u, v[0].v - v[2].v);
    const double s = 0.5 * (e0 + e1 + e2);
    const double inradius = signed_area(v[0], v[1], v[2]) / s;
    const double diameter = std::max({e0, e1, e2});
    best = std::min(best, inradius / diameter);
  }
  return best;
}

void Triangulation::build_edges() {
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edge_map;  // edge -> (tri, apex)
  for (int l = 0; l < num_triangles(); ++l) {
    const auto& t = triangles_[static_cast<std::size_t>(l)];
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(e)];
      const int b = t[static_cast<std::size_t>((e + 1) % 3)];
      const int apex = t[static_cast<std::size_t>((e + 2) % 3)];
      edge_map[{std::min(a, b), std::max(a, b)}].emplace_back(l, apex);
    }
  }
  for (const auto& [key, tris] : edge_map) {
    if (tris.size() == 2) {
      InteriorEdge e;
      const auto& first = tris[0].first < tris[1].first ? tris[0] : tris[1];
      const auto& second = tris[0].first < tris[1].first ? tris[1] : tris[0];
      e.tri_a = first.first;
      e.apex_a = first.second;
      e.tri_b = second.first;
      e.apex_b = second.second;
      e.v0 = key.first;
      e.v1 = key.second;
      interior_edges_.push_back(e);
    } else if (tris.size() != 1) {
      throw error(errc::invalid_domain, "mesh edge shared by more than two triangles");
    }
  }
}

Triangulation Triangulation::from_triangles(const Rect& domain, std::vector<Point> vertices,
                                            std::vector<std::array<int, 3>> triangles) {
  Triangulation tri;
  tri.domain_ = domain;
  tri.vertices_ = std::move(vertices);
  tri.triangles_ = std::move(triangles);
  for (int l = 0; l < tri.num_triangles(); ++l) {
    if (!(tri.triangle_area(l) > 0.0)) {
      throw error(errc::degenerate_triangle, "from_triangles: non-positive triangle area");
    }
  }
  tri.build_edges();
  return tri;
}

Triangulation triangulate_rect(const Rect& domain, int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw error(errc::invalid_config, "triangulate_rect: rows and cols must be >= 1");
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw error(errc::invalid_domain, "triangulate_rect: degenerate domain rectangle");
  }
  Triangulation tri;
  tri.domain_ = domain;
  tri.rows_ = rows;
  tri.cols_ = cols;
  tri.vertices_.reserve(static_cast<std::size_t>((rows + 1) * (cols + 1)));
  for (int i = 0; i <= rows; ++i) {
    for (int j = 0; j <= cols; ++j) {
      // Exact endpoints keep domain-boundary points classifiable at 1e-12.
      const double u = (j == cols) ? domain.u_hi : domain.u_lo + domain.width() * j / cols;
      const double v = (i == rows) ? domain.v_hi : domain.v_lo + domain.height() * i / rows;
      tri.vertices_.push_back({u, v});
    }
  }
  const auto vid = [cols](int i, int j) { return i * (cols + 1) + j; };
  tri.triangles_.reserve(static_cast<std::size_t>(2 * rows * cols));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int bl = vid(i, j), br = vid(i, j + 1);
      const int tl = vid(i + 1, j), tr = vid(i + 1, j + 1);
      tri.triangles_.push_back({bl, br, tr});  // below the diagonal
      tri.triangles_.push_back({bl, tr, tl});  // above the diagonal
    }
  }
  tri.build_edges();
  return tri;
}

std::string Triangulation::to_json() const {
  nlohmann::json j;
  j["domain"] = {{"u_lo", domain_.u_lo}, {"u_hi", domain_.u_hi}, {"v_lo", domain_.v_lo}, {"v_hi", domain_.v_hi}};
  j["rows"] = rows_;
  j["cols"] = cols_;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const auto& p : vertices_) verts.push_back({p.u, p.v});
  auto& tris = j["triangles"] = nlohmann::json::array();
  for (const auto& t : triangles_) tris.push_back({t[0], t[1], t[2]});
  return j.dump();
}

Triangulation Triangulation::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Rect domain{j.at("domain").at("u_lo").get<double>(), j.at("domain").at("u_hi").get<double>(),
              j.at("domain").at("v_lo").get<double>(), j.at("domain").at("v_hi").get<double>()};
  return triangulate_rect(domain, j.at("rows").get<int>(), j.at("cols").get<int>());
}

}  // namespace hdfts
