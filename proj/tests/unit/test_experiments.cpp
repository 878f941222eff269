#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ensflow/experiments.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

// Hand-derived strong-form right-hand side for the scaled manufactured fields.
Point forcing_oracle(double s, double nu, double x, double y, double t) {
  const double u1 = s * (x * x - y * std::sin(t));
  const double u2 = s * (-2 * x * y + x * std::cos(t));
  const double u1x = s * 2 * x, u1y = -s * std::sin(t);
  const double u2x = s * (-2 * y + std::cos(t)), u2y = -s * 2 * x;
  const double ut1 = -s * y * std::cos(t), ut2 = -s * x * std::sin(t);
  const double lap1 = s * 2.0, lap2 = 0.0;
  const double px = s * std::sin(t), py = s * std::sin(t);
  return {ut1 + u1 * u1x + u2 * u1y - nu * lap1 + px, ut2 + u1 * u2x + u2 * u2y - nu * lap2 + py};
}

}  // namespace

TEST_CASE("manufactured family parameters") {
  MMSFamily f;
  f.J = 2;
  f.epsilon = 0.1;
  CHECK(f.offset(0) == doctest::Approx(0.1));
  CHECK(f.offset(1) == doctest::Approx(-0.1));
  CHECK(f.viscosity(0) == doctest::Approx(1.1));
  MMSFamily g;
  g.J = 4;
  g.epsilon = 0.1;
  CHECK(g.viscosities() == std::vector<double>{1.1, 1.2, 0.9, 0.8});
}

TEST_CASE("manufactured fields") {
  MMSFamily f;
  f.J = 2;
  const MMSFields e = mms_exact(f, 0);
  const Point u = e.u(1.0, 0.0, 0.0);
  CHECK(u[0] == doctest::Approx(1.1));
  CHECK(u[1] == doctest::Approx(1.1));
  MMSFamily base;
  base.epsilon = 0.0;
  const Point b = mms_exact(base, 0).u(1.0, 0.0, 0.0);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 1.0);
  // Divergence by central differences.
  const double hd = 1e-5;
  for (double x : {0.1, 0.5, 0.9}) {
    const double div = (e.u(x + hd, 0.3, 0.4)[0] - e.u(x - hd, 0.3, 0.4)[0]) / (2 * hd) +
                       (e.u(x, 0.3 + hd, 0.4)[1] - e.u(x, 0.3 - hd, 0.4)[1]) / (2 * hd);
    CHECK(std::abs(div) < 1e-8);
  }
}

TEST_CASE("manufactured forcing") {
  MMSFamily f;
  f.J = 2;
  const VectorField f0 = mms_forcing(f, 0);
  CHECK(f0(0, 0, 0)[0] == doctest::Approx(-2.42).epsilon(1e-14));
  CHECK(f0(0, 0, 0)[1] == 0.0);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int j = 0; j < 2; ++j) {
    const VectorField fj = mms_forcing(f, j);
    for (int k = 0; k < 20; ++k) {
      const double x = d(rng), y = d(rng), t = 2 * d(rng);
      const Point a = fj(x, y, t);
      const Point b = forcing_oracle(f.scale(j), f.viscosity(j), x, y, t);
      CHECK(std::abs(a[0] - b[0]) < 1e-12);
      CHECK(std::abs(a[1] - b[1]) < 1e-12);
    }
  }
}

TEST_CASE("error is purely temporal") {
  ConvergenceOptions o;
  o.family.J = 2;
  o.dts = {0.01};
  o.T = 0.2;
  o.mesh_n = {4};
  const auto coarse = convergence_study(o);
  o.mesh_n = {8};
  const auto fine = convergence_study(o);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(coarse[0].u_error[j] - fine[0].u_error[j]) < 0.05 * fine[0].u_error[j]);
  }
}

TEST_CASE("second-order rates at T = 0.5") {
  ConvergenceOptions o;
  o.family.J = 2;
  o.dts = {0.02, 0.01, 0.005};
  o.T = 0.5;
  o.mesh_n = {4};
  const auto rows = convergence_study(o);
  REQUIRE(rows.size() == 3);
  CHECK(std::isnan(rows[0].u_rate[0]));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (int j = 0; j < 2; ++j) {
      CHECK(rows[r].u_rate[j] >= 1.85);
      CHECK(rows[r].u_rate[j] <= 2.15);
      CHECK(rows[r].p_rate[j] >= 1.85);
      CHECK(rows[r].p_rate[j] <= 2.15);
    }
  }
  std::ostringstream os;
  write_convergence_csv(os, rows);
  const std::string csv = os.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("benchmark inflow profiles") {
  const VectorField in = cylinder_inflow(false);
  const Point a = in(0.0, 0.205, 4.0);
  CHECK(a[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(a[1] == 0.0);
  CHECK(in(0.0, 0.0, 4.0)[0] == 0.0);
  CHECK(in(2.2, 0.205, 4.0)[0] == 0.0);
  CHECK(cylinder_inflow(true)(2.2, 0.205, 4.0)[0] == doctest::Approx(1.5));

  const auto g = contraction_inflow(3, 0.01);
  CHECK(g[0](0.0, 0.5, 0.0)[0] == doctest::Approx(1.0));
  CHECK(g[1](0.0, 0.5, 0.0)[0] == doctest::Approx(1.01));
  CHECK(g[2](0.0, 0.5, 0.0)[0] == doctest::Approx(0.99));
  CHECK(cylinder_viscosities(3) == std::vector<double>{1.0 / 1000, 1.0 / 900, 1.0 / 800});
}

TEST_CASE("random stream fields are solenoidal and vanish on the box") {
  const VectorField f = random_stream_field(7, {0, 0}, {2, 1});
  const double hd = 1e-5;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.05, 0.95);
  double max_value = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double x = 2 * d(rng), y = d(rng);
    const double div = (f(x + hd, y, 0)[0] - f(x - hd, y, 0)[0]) / (2 * hd) +
                       (f(x, y + hd, 0)[1] - f(x, y - hd, 0)[1]) / (2 * hd);
    CHECK(std::abs(div) < 1e-6);
    max_value = std::max(max_value, std::hypot(f(x, y, 0)[0], f(x, y, 0)[1]));
  }
  CHECK(max_value > 1e-3);
  for (double s : {0.0, 0.3, 0.7, 1.0}) {
    CHECK(std::hypot(f(0.0, s, 0)[0], f(0.0, s, 0)[1]) < 1e-14);
    CHECK(std::hypot(f(2 * s, 1.0, 0)[0], f(2 * s, 1.0, 0)[1]) < 1e-14);
  }
  // Same seed, same field.
  CHECK(random_stream_field(7, {0, 0}, {2, 1})(0.4, 0.4, 0)[0] == f(0.4, 0.4, 0)[0]);
}

TEST_CASE("forces of trivial states") {
  auto mesh = std::make_shared<const Mesh>(cylinder_mesh(22, 4));
  BoundaryPartition p;
  p.dirichlet = {tags::kInlet, tags::kWalls, tags::kCylinder};
  p.open = {tags::kOutlet};
  auto s = std::make_shared<const TaylorHoodSpace>(mesh, p);
  const Vector zu = Vector::Zero(s->num_velocity());
  const Vector zp = Vector::Zero(s->num_pressure());
  const Forces z = drag_lift_dp(s, zu, zu, zp, 1e-3);
  CHECK(z.drag == 0.0);
  CHECK(z.lift == 0.0);
  CHECK(z.pressure_drop == 0.0);

  const Vector cp = Vector::Constant(s->num_pressure(), 3.0);
  const Forces c = drag_lift_dp(s, zu, zu, cp, 1e-3);
  CHECK(std::abs(c.drag) < 1e-10);
  CHECK(std::abs(c.lift) < 1e-10);
  CHECK(std::abs(c.pressure_drop) < 1e-12);
  const Forces cb = drag_lift_boundary(s, zu, cp, 1e-3);
  CHECK(std::abs(cb.drag) < 1e-10);
  CHECK(std::abs(cb.lift) < 1e-10);

  ForceOptions outside;
  outside.front = {5.0, 5.0};
  CHECK_THROWS(drag_lift_dp(s, zu, zu, zp, 1e-3, outside));
}

TEST_CASE("benchmark problems are consistent") {
  CylinderOptions co;
  co.n_x = 22;
  co.n_y = 4;
  const Problem cyl = cylinder_problem(co);
  CHECK_NOTHROW(cyl.partition.validate(*cyl.mesh));
  CHECK(cyl.data.dirichlet.size() == 3);
  CHECK(cyl.inlet_diameter == doctest::Approx(0.41));

  ContractionOptions ko;
  ko.h = 0.25;
  const Problem con = contraction_problem(ko);
  CHECK_NOTHROW(con.partition.validate(*con.mesh));
  CHECK(con.stokes_forcing.size() == 3);
  CHECK(con.partition.open.size() == 2);
}
