#include <cmath>
#include <random>

#include "doctest.h"
#include "ensflow/assembly.hpp"
#include "ensflow/fespace.hpp"
#include "ensflow/quadrature.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

VectorField constant(double a, double b) {
  return [a, b](double, double, double) -> Point { return {a, b}; };
}

// Direct quadrature of |u_h|^2 with the element basis, independent of M.
double quad_l2_sq(const FEFunction& u) {
  const Mesh& mesh = u.space->mesh();
  const TriangleRule& rule = triangle_rule_deg4();
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point v = u.value(t, P2Basis::at(g, rule.barycentric[q]));
      s += rule.weights[q] * g.area * (v[0] * v[0] + v[1] * v[1]);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("dof counts") {
  auto s1 = test::square_space(1);
  CHECK(s1->num_p2() == 9);
  CHECK(s1->num_velocity() == 18);
  CHECK(s1->num_pressure() == 4);
  CHECK(test::square_space(2)->num_pressure() == 9);
  for (int n : {1, 2, 5}) {
    auto s = test::square_space(n);
    CHECK(s->num_p2() == s->mesh().num_vertices() + s->mesh().num_edges());
    // All-Dirichlet: every boundary node (4n vertices + 4n midpoints), both components.
    CHECK(s->constrained_velocity_dofs().size() == static_cast<std::size_t>(16 * n));
  }
}

TEST_CASE("open boundary dofs are not constrained") {
  auto s = test::square_space_open_right(4);
  for (int d : s->constrained_velocity_dofs()) {
    const Point& x = s->node(d % s->num_p2());
    const bool interior_of_right = x[0] == 1.0 && x[1] > 0.0 && x[1] < 1.0;
    CHECK_FALSE(interior_of_right);
  }
  CHECK(s->open_edges().size() == 4);
}

TEST_CASE("interpolation") {
  auto s = test::square_space(3);
  const FEFunction c = interpolate(s, constant(1.0, 0.0), 0.0);
  for (int i = 0; i < s->num_p2(); ++i) {
    CHECK(c.coeffs[i] == 1.0);
    CHECK(c.coeffs[i + s->num_p2()] == 0.0);
  }
  const VectorField u = [](double x, double y, double t) -> Point {
    return {x * x - y * std::sin(t), -2 * x * y + x * std::cos(t)};
  };
  for (double t : {0.0, 0.7}) {
    CHECK(l2_error(interpolate(s, u, t), u, t) < 1e-12);
  }
  const ScalarField p = [](double x, double y, double t) { return (x + y - 1) * std::sin(t); };
  CHECK(l2_error(interpolate(s, p, 1.0), p, 1.0) < 1e-12);
}

TEST_CASE("norms against closed forms") {
  auto s = test::square_space_open_right(4);
  const Norms c = norms(interpolate(s, constant(-3.0, 0.0), 0.0));
  CHECK(c.L2 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.H1_semi == doctest::Approx(0.0).epsilon(1e-12));

  const Norms nx = norms(interpolate(
      s, [](double x, double, double) -> Point { return {x, 0.0}; }, 0.0));
  CHECK(nx.L2 == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(nx.H1_semi == doctest::Approx(1.0).epsilon(1e-12));

  const Norms ny = norms(interpolate(
      s, [](double, double y, double) -> Point { return {y, 0.0}; }, 0.0));
  CHECK(ny.boundary_L2 == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("mass-matrix norm equals direct quadrature") {
  std::mt19937_64 rng(11);
  auto s = test::square_space(3);
  for (int k = 0; k < 5; ++k) {
    const FEFunction u = test::random_velocity(s, rng);
    const double n = norms(u).L2;
    CHECK(n * n == doctest::Approx(quad_l2_sq(u)).epsilon(1e-12));
  }
}

TEST_CASE("inf norms on the sample set") {
  ThetaParams tp;
  tp.epsilon = 1.0;
  tp.U0 = 1.0;
  auto s = test::square_space_open_right(4);
  const InfNorms a = inf_norms(interpolate(s, constant(1.0, 0.0), 0.0), tp);
  CHECK(a.value_inf == doctest::Approx(1.0));
  CHECK(a.divergence_inf == doctest::Approx(0.0));

  const InfNorms b = inf_norms(
      interpolate(s, [](double x, double y, double) -> Point { return {x, -y}; }, 0.0), tp);
  CHECK(b.value_inf == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(b.divergence_inf == doctest::Approx(0.0));

  const InfNorms c = inf_norms(
      interpolate(s, [](double x, double, double) -> Point { return {x, 0.0}; }, 0.0), tp);
  CHECK(c.boundary_normal_theta_inf == doctest::Approx((1.0 - std::tanh(1.0)) / 2).epsilon(1e-12));

  const FEFunction p = FEFunction::zero_pressure(s);
  CHECK_THROWS(inf_norms(p, tp));
}

TEST_CASE("smoothed Heaviside") {
  ThetaParams tp;
  tp.epsilon = 0.01;
  tp.U0 = 2.0;
  const double e = tp.epsilon * tp.U0;
  CHECK(theta(0.0, tp).theta0 == 0.5);
  CHECK(theta(10 * e, tp).theta0 == doctest::Approx((1 - std::tanh(10.0)) / 2).epsilon(1e-6));
  CHECK(theta(10 * e, tp).theta0 == doctest::Approx(2.06e-9).epsilon(0.01));
  CHECK(theta(-10 * e, tp).theta0 == doctest::Approx(1.0 - 2.06e-9).epsilon(1e-12));
  double prev = 1.0;
  for (double s = -1.0; s <= 1.0; s += 1e-3) {
    const ThetaValues v = theta(s, tp);
    CHECK(v.theta0 + v.theta1 == 1.0);
    CHECK(v.theta0 <= prev);
    prev = v.theta0;
  }
  ThetaParams bad;
  bad.epsilon = 0.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("locate finds the containing triangle") {
  const Mesh m = generate_unit_square(4);
  const auto loc = locate(m, {0.3, 0.6});
  REQUIRE(loc.has_value());
  const ElementGeometry g = ElementGeometry::of(m, loc->triangle);
  const Point x = g.map(loc->bary);
  CHECK(x[0] == doctest::Approx(0.3));
  CHECK(x[1] == doctest::Approx(0.6));
  CHECK_FALSE(locate(m, {1.5, 0.5}).has_value());
}
