#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ensflow/linsolve.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

SolverError::Kind singular_kind(const SparseMatrix& m) {
  try {
    factorize(m);
  } catch (const SolverError& e) {
    return e.kind();
  }
  FAIL("expected a SolverError");
  return SolverError::Kind::kDimension;
}

// Stokes problem whose solution lies in P2/P1: u = (x^2, -2xy), p = x + y - 1.
struct StokesCase {
  std::shared_ptr<const TaylorHoodSpace> space;
  OperatorSet ops;
  VectorField u = [](double x, double y, double) -> Point { return {x * x, -2 * x * y}; };
  ScalarField p = [](double x, double y, double) { return x + y - 1; };
  VectorField f = [](double, double, double) -> Point { return {-1.0, 1.0}; };

  explicit StokesCase(std::shared_ptr<const TaylorHoodSpace> s) : space(s), ops(assemble_core(*s)) {}
  SaddleSystem system() const { return SaddleSystem::for_space(*space, ops, ops.K); }
  Vector rhs(const SaddleSystem& sys) const {
    return sys.rhs(rhs_forcing(*space, f, 0.0), interpolate(space, u, 0.0).coeffs);
  }
};

}  // namespace

TEST_CASE("small dense systems") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 3;
  const Factorization f = factorize(dense_to_sparse(a));
  const Vector x = f.solve((Vector(2) << 3, 4).finished());
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
  const Vector b = Vector::LinSpaced(5, -2, 2);
  CHECK((factorize(dense_to_sparse(id)).solve(b) - b).norm() == 0.0);
  CHECK_THROWS_AS(f.solve(Vector::Zero(3)), SolverError);

  Eigen::MatrixXd s(2, 2);
  s << 1, 2, 2, 4;
  CHECK(singular_kind(dense_to_sparse(s)) == SolverError::Kind::kSingular);
  CHECK(singular_kind(dense_to_sparse(Eigen::MatrixXd::Ones(2, 3))) ==
        SolverError::Kind::kDimension);
}

TEST_CASE("Stokes with a P2/P1 solution is reproduced exactly") {
  StokesCase c(test::square_space(4));
  const SaddleSystem sys = c.system();
  CHECK(sys.has_mean_constraint());
  CHECK(sys.size() == c.space->num_velocity() + c.space->num_pressure() + 1);
  const Factorization f = factorize(sys);
  const Vector x = f.solve(c.rhs(sys));
  FEFunction u = FEFunction::zero_velocity(c.space);
  u.coeffs = x.head(c.space->num_velocity());
  FEFunction p = FEFunction::zero_pressure(c.space);
  p.coeffs = x.segment(c.space->num_velocity(), c.space->num_pressure());
  CHECK(l2_error(u, c.u, 0.0) < 1e-10);
  CHECK(l2_error(p, c.p, 0.0) < 1e-10);
  CHECK((c.ops.B * u.coeffs).lpNorm<Eigen::Infinity>() < 1e-10);
  // Residual of the full system.
  const Vector r = sys.matrix() * x - c.rhs(sys);
  CHECK(r.norm() < 1e-10 * c.rhs(sys).norm());
}

TEST_CASE("all-Dirichlet Stokes without a mean constraint is singular") {
  auto s = test::square_space(3);
  const OperatorSet ops = assemble_core(*s);
  const SaddleSystem sys(ops.K, ops.B, s->constrained_velocity_dofs(), nullptr);
  CHECK_FALSE(sys.has_mean_constraint());
  CHECK(singular_kind(sys.matrix()) == SolverError::Kind::kSingular);
}

TEST_CASE("open boundary needs no pressure constraint") {
  auto s = test::square_space_open_right(3);
  const OperatorSet ops = assemble_core(*s);
  const SaddleSystem sys = SaddleSystem::for_space(*s, ops, ops.K);
  CHECK_FALSE(sys.has_mean_constraint());
  CHECK_NOTHROW(factorize(sys));
}

TEST_CASE("multi-column solve equals column-by-column solves") {
  StokesCase c(test::square_space(3));
  const SaddleSystem sys = c.system();
  const Factorization f = factorize(sys);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  Eigen::MatrixXd rhs(sys.size(), 4);
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs.data()[i] = d(rng);
  const auto before = solver_counters();
  const Eigen::MatrixXd x = solve_multi(f, sys, rhs);
  const auto after = solver_counters();
  CHECK(after.solves - before.solves == 4);
  CHECK(after.factorizations == before.factorizations);
  for (int j = 0; j < 4; ++j) CHECK((x.col(j) - f.solve(rhs.col(j))).norm() == 0.0);
}

TEST_CASE("factorization counters and stale detection") {
  StokesCase c(test::square_space(2));
  const SaddleSystem sys = c.system();
  const auto before = solver_counters();
  const Factorization f = factorize(sys);
  CHECK(solver_counters().factorizations - before.factorizations == 1);
  CHECK(f.valid_for(sys.matrix()));
  CHECK(std::string(Factorization::backend()).size() > 0);

  const SaddleSystem other = SaddleSystem::for_space(*c.space, c.ops, SparseMatrix(2.0 * c.ops.K));
  CHECK_FALSE(f.valid_for(other.matrix()));
  try {
    solve_multi(f, other, Eigen::MatrixXd::Zero(other.size(), 1));
    FAIL("expected kStale");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::kStale);
  }
}

TEST_CASE("fingerprint sees values and pattern") {
  auto s = test::square_space(2);
  const OperatorSet ops = assemble_core(*s);
  CHECK(fingerprint(ops.K) == fingerprint(SparseMatrix(ops.K)));
  SparseMatrix k2 = ops.K;
  k2.coeffRef(0, 0) += 1e-15;
  CHECK(fingerprint(k2) != fingerprint(ops.K));
}

TEST_CASE("smallest eigenvalue against closed forms") {
  using std::numbers::pi;
  // Full Dirichlet square: 2 pi^2.
  auto full = test::square_space(8);
  const EigenResult a = mixed_eigenvalue(*full, assemble_core(*full));
  CHECK(a.lambda == doctest::Approx(2 * pi * pi).epsilon(1e-3));
  CHECK(a.residual < 1e-8);

  // Dirichlet only on x = 0: pi^2 / 4.
  BoundaryPartition p;
  p.dirichlet = {tags::kLeft};
  p.open = {tags::kBottom, tags::kRight, tags::kTop};
  auto strip = test::square_space(8, p);
  CHECK(mixed_eigenvalue(*strip, assemble_core(*strip)).lambda ==
        doctest::Approx(pi * pi / 4).epsilon(1e-5));

  // Nothing constrained.
  BoundaryPartition none;
  none.open = {1, 2, 3, 4};
  auto free = test::square_space(4, none);
  CHECK(mixed_eigenvalue(*free, assemble_core(*free)).lambda == 0.0);
}

TEST_CASE("eigenvalue decreases under nested refinement") {
  double prev = 1e300;
  for (int n : {2, 4, 8}) {
    auto s = test::square_space(n);
    const double l = mixed_eigenvalue(*s, assemble_core(*s)).lambda;
    CHECK(l < prev);
    CHECK(l >= 2 * std::numbers::pi * std::numbers::pi * (1 - 1e-12));
    prev = l;
  }
}

TEST_CASE("inverse constant is mesh-size independent on uniform meshes") {
  const double c4 = calibrate_inverse_constant(*test::square_space(4)).C;
  const double c8 = calibrate_inverse_constant(*test::square_space(8)).C;
  CHECK(c4 > 1.0);
  CHECK(c4 == doctest::Approx(c8).epsilon(1e-10));
}

TEST_CASE("matrix market export") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 2.5;
  std::ostringstream os;
  write_matrix_market(os, dense_to_sparse(a));
  const std::string s = os.str();
  CHECK(s.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
  CHECK(s.find("2 2 2") != std::string::npos);
  CHECK(s.find("2 2 2.5") != std::string::npos);
}
