#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "hdfts/mesh.hpp"
#include "test_util.hpp"

using namespace hdfts;

TEST_SUITE("mesh") {

TEST_CASE("triangle counts for uniform grids") {
  CHECK(triangulate_rect({0, 1, 0, 1}, 3, 3).num_triangles() == 18);
  CHECK(triangulate_rect({0, 1, 0, 1}, 1, 1).num_triangles() == 2);
  CHECK(triangulate_rect({0, 1, 0, 1}, 10, 10).num_triangles() == 200);
}

TEST_CASE("degenerate domain is rejected") {
  CHECK_THROWS_AS(triangulate_rect({0, 0, 0, 1}, 2, 2), error);
  CHECK_THROWS_AS(triangulate_rect({0, 1, 1, 1}, 2, 2), error);
  CHECK_THROWS_AS(triangulate_rect({0, 1, 0, 1}, 0, 3), error);
}

TEST_CASE("barycentric coordinates") {
  const auto mesh = triangulate_rect({0, 1, 0, 1}, 2, 2);
  const auto verts = mesh.triangle_vertices(0);

  SUBCASE("vertex maps to a unit coordinate") {
    const auto b = mesh.barycentric(0, verts[0]);
    CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(b[2] == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("centroid is symmetric") {
    const Point c{(verts[0].u + verts[1].u + verts[2].u) / 3,
                  (verts[0].v + verts[1].v + verts[2].v) / 3};
    const auto b = mesh.barycentric(0, c);
    for (double x : b) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("coordinates always sum to one") {
    std::mt19937_64 gen(7);
    for (int i = 0; i < 200; ++i) {
      const auto b = mesh.barycentric(3, hdtest::random_point(gen));
      CHECK(std::abs(b[0] + b[1] + b[2] - 1.0) < 1e-14);
    }
  }
  SUBCASE("outside point has a negative coordinate") {
    const auto b = mesh.barycentric(0, {0.95, 0.95});
    CHECK((b[0] < 0 || b[1] < 0 || b[2] < 0));
  }
  SUBCASE("zero-area triangle throws") {
    CHECK_THROWS_AS(barycentric({0, 0}, {1, 1}, {2, 2}, {0.5, 0.5}), error);
  }
}

TEST_CASE("locate basics") {
  const auto mesh = triangulate_rect({0, 1, 0, 1}, 3, 3);

  SUBCASE("centroid of triangle 5 locates to 5") {
    const auto v = mesh.triangle_vertices(5);
    const Point c{(v[0].u + v[1].u + v[2].u) / 3, (v[0].v + v[1].v + v[2].v) / 3};
    CHECK(mesh.locate(c) == 5);
  }
  SUBCASE("domain corners resolve to corner-incident triangles") {
    // The upper-left and lower-right corners touch exactly one triangle.
    const int ul = mesh.locate({0.0, 1.0});
    const auto bul = mesh.barycentric(ul, {0.0, 1.0});
    CHECK(std::min({bul[0], bul[1], bul[2]}) >= -1e-12);
    CHECK(ul == 2 * ((3 - 1) * 3) + 1);  // upper triangle of the top-left cell
    const int lr = mesh.locate({1.0, 0.0});
    CHECK(lr == 2 * (3 - 1));  // lower triangle of the bottom-right cell
    CHECK_NOTHROW(mesh.locate({0.0, 0.0}));
    CHECK_NOTHROW(mesh.locate({1.0, 1.0}));
  }
  SUBCASE("shared-edge midpoints tie-break to the lower index") {
    REQUIRE(!mesh.interior_edges().empty());
    for (const auto& e : mesh.interior_edges()) {
      const Point mid{(mesh.vertex(e.v0).u + mesh.vertex(e.v1).u) / 2,
                      (mesh.vertex(e.v0).v + mesh.vertex(e.v1).v) / 2};
      // Both adjacent triangles contain the midpoint...
      for (int l : {e.tri_a, e.tri_b}) {
        const auto b = mesh.barycentric(l, mid);
        CHECK(std::min({b[0], b[1], b[2]}) >= -1e-12);
      }
      // ...and locate picks the lower index.
      CHECK(mesh.locate(mid) == e.tri_a);
    }
    // Concrete instance: the diagonal edge shared by triangles 2 and 3.
    const auto& diag = mesh.interior_edges();
    const auto it = std::find_if(diag.begin(), diag.end(), [](const InteriorEdge& e) {
      return e.tri_a == 2 && e.tri_b == 3;
    });
    REQUIRE(it != diag.end());
    const Point mid{(mesh.vertex(it->v0).u + mesh.vertex(it->v1).u) / 2,
                    (mesh.vertex(it->v0).v + mesh.vertex(it->v1).v) / 2};
    CHECK(mesh.locate(mid) == 2);
  }
  SUBCASE("outside the domain throws") {
    CHECK_THROWS_AS(mesh.locate({1.5, 0.5}), error);
    CHECK_THROWS_AS(mesh.locate({0.5, -0.1}), error);
  }
}

TEST_CASE("locate returns containing triangles for random points") {
  const auto mesh = triangulate_rect({-1, 2, 0.5, 3}, 4, 5);
  std::mt19937_64 gen(42);
  for (int i = 0; i < 1000; ++i) {
    const Point p = hdtest::random_point(gen, mesh.domain());
    const int l = mesh.locate(p);
    const auto b = mesh.barycentric(l, p);
    CHECK(std::min({b[0], b[1], b[2]}) >= -1e-12);
  }
}

TEST_CASE("areas tile the domain for all grid sizes") {
  for (int rows = 1; rows <= 12; ++rows) {
    for (int cols = 1; cols <= 12; ++cols) {
      const auto mesh = triangulate_rect({0, 2, 0, 1.5}, rows, cols);
      double total = 0.0;
      for (int l = 0; l < mesh.num_triangles(); ++l) {
        CHECK(mesh.triangle_area(l) > 0.0);
        total += mesh.triangle_area(l);
      }
      CHECK(std::abs(total - mesh.domain().area()) <= 1e-12 * mesh.domain().area());
    }
  }
}

TEST_CASE("edge structure") {
  const int rows = 3, cols = 4;
  const auto mesh = triangulate_rect({0, 1, 0, 1}, rows, cols);
  // Diagonals + interior verticals + interior horizontals.
  const int expected_interior = rows * cols + rows * (cols - 1) + (rows - 1) * cols;
  CHECK(static_cast<int>(mesh.interior_edges().size()) == expected_interior);

  // Every undirected edge of every triangle appears in exactly 1 or 2
  // triangles.
  std::map<std::pair<int, int>, int> counts;
  for (const auto& t : mesh.triangles()) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      counts[{std::min(a, b), std::max(a, b)}] += 1;
    }
  }
  for (const auto& [edge, count] : counts) CHECK((count == 1 || count == 2));

  for (const auto& e : mesh.interior_edges()) {
    CHECK(e.tri_a < e.tri_b);
    CHECK(e.apex_a != e.apex_b);
  }
}

TEST_CASE("shape regularity of the uniform mesh") {
  // Right isoceles triangles have in-radius/diameter = (2 - sqrt 2) / (2 sqrt 2).
  const auto mesh = triangulate_rect({0, 1, 0, 1}, 3, 3);
  CHECK(mesh.min_shape_ratio() == doctest::Approx((2.0 - std::sqrt(2.0)) / (2.0 * std::sqrt(2.0))));
  CHECK(mesh.min_shape_ratio() > 0.15);
}

TEST_CASE("json round trip") {
  const auto mesh = triangulate_rect({0, 1, -1, 1}, 2, 5);
  const auto back = Triangulation::from_json(mesh.to_json());
  CHECK(back.num_triangles() == mesh.num_triangles());
  CHECK(back.vertices().size() == mesh.vertices().size());
  CHECK(back.to_json() == mesh.to_json());
}

}  // TEST_SUITE
