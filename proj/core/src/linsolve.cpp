#include "ensflow/linsolve.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <ostream>
#include <string>

#include "ensflow/quadrature.hpp"

#ifdef ENSFLOW_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace ensflow {
namespace {

std::atomic<std::uint64_t> g_factorizations{0};
std::atomic<std::uint64_t> g_solves{0};

using Triplets = std::vector<Eigen::Triplet<double>>;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // FNV-1a over 64-bit words
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

SaddleSystem::SaddleSystem(const SparseMatrix& A, const SparseMatrix& B,
                           const std::vector<int>& constrained_velocity,
                           const Vector* pressure_mean)
    : nu_(static_cast<int>(A.rows())),
      np_(static_cast<int>(B.rows())),
      has_mean_(pressure_mean != nullptr),
      constrained_(constrained_velocity) {
  if (A.cols() != nu_ || B.cols() != nu_) {
    throw SolverError(SolverError::Kind::kDimension, "saddle blocks have inconsistent sizes");
  }
  if (has_mean_ && pressure_mean->size() != np_) {
    throw SolverError(SolverError::Kind::kDimension, "pressure mean vector has wrong size");
  }
  std::sort(constrained_.begin(), constrained_.end());
  const int n = nu_ + np_ + (has_mean_ ? 1 : 0);
  std::vector<char> fixed(n, 0);
  for (int d : constrained_) {
    if (d < 0 || d >= nu_) {
      throw SolverError(SolverError::Kind::kDimension, "constrained dof out of range");
    }
    fixed[d] = 1;
  }

  Triplets kept, lift;
  kept.reserve(A.nonZeros() + 2 * B.nonZeros() + 2 * np_ + constrained_.size());
  auto add = [&](int r, int c, double v) {
    if (fixed[r]) return;
    if (fixed[c]) {
      lift.emplace_back(r, c, v);
    } else {
      kept.emplace_back(r, c, v);
    }
  };
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      add(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (int k = 0; k < B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
      const int p = nu_ + static_cast<int>(it.row());
      const int u = static_cast<int>(it.col());
      add(u, p, -it.value());
      add(p, u, -it.value());
    }
  }
  if (has_mean_) {
    const int m = nu_ + np_;
    for (int k = 0; k < np_; ++k) {
      add(nu_ + k, m, (*pressure_mean)[k]);
      add(m, nu_ + k, (*pressure_mean)[k]);
    }
  }
  for (int d : constrained_) kept.emplace_back(d, d, 1.0);

  matrix_.resize(n, n);
  matrix_.setFromTriplets(kept.begin(), kept.end());
  matrix_.makeCompressed();
  lifting_.resize(n, n);
  lifting_.setFromTriplets(lift.begin(), lift.end());
}

SaddleSystem SaddleSystem::for_space(const TaylorHoodSpace& space, const OperatorSet& ops,
                                     const SparseMatrix& A) {
  const Vector* mean = space.has_open_boundary() ? nullptr : &ops.pressure_mean;
  return SaddleSystem(A, ops.B, space.constrained_velocity_dofs(), mean);
}

Vector SaddleSystem::rhs(const Vector& velocity_load, const Vector& dirichlet) const {
  if (velocity_load.size() != nu_ || dirichlet.size() != nu_) {
    throw SolverError(SolverError::Kind::kDimension, "velocity vector has wrong size");
  }
  const int n = size();
  Vector g = Vector::Zero(n);
  for (int d : constrained_) g[d] = dirichlet[d];
  Vector out = Vector::Zero(n);
  out.head(nu_) = velocity_load;
  if (!constrained_.empty()) out -= lifting_ * g;
  for (int d : constrained_) out[d] = g[d];
  return out;
}

SolverCounters solver_counters() {
  return {g_factorizations.load(), g_solves.load()};
}

std::uint64_t fingerprint(const SparseMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = mix(h, static_cast<std::uint64_t>(m.rows()));
  h = mix(h, static_cast<std::uint64_t>(m.cols()));
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      std::uint64_t bits;
      const double v = it.value();
      std::memcpy(&bits, &v, sizeof bits);
      h = mix(h, static_cast<std::uint64_t>(it.row()) << 32 | static_cast<std::uint64_t>(k));
      h = mix(h, bits);
    }
  }
  return h;
}

struct Factorization::Impl {
#ifdef ENSFLOW_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
  std::atomic<std::uint64_t> solves{0};
};

Factorization::Factorization(std::unique_ptr<Impl> impl, int n, std::uint64_t fp)
    : impl_(std::move(impl)), n_(n), fingerprint_(fp) {}
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;
Factorization::~Factorization() = default;

std::uint64_t Factorization::solves() const { return impl_->solves.load(); }

bool Factorization::valid_for(const SparseMatrix& m) const {
  return m.rows() == n_ && ensflow::fingerprint(m) == fingerprint_;
}

const char* Factorization::backend() {
#ifdef ENSFLOW_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

Vector Factorization::solve(const Vector& rhs) const {
  if (rhs.size() != n_) {
    throw SolverError(SolverError::Kind::kDimension,
                      "rhs has " + std::to_string(rhs.size()) + " rows, system has " +
                          std::to_string(n_));
  }
  Vector x = impl_->lu.solve(rhs);
  impl_->solves.fetch_add(1);
  g_solves.fetch_add(1);
  if (!x.allFinite()) throw SolverError(SolverError::Kind::kNonFinite, "solution is not finite");
  return x;
}

Eigen::MatrixXd Factorization::solve_multi(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != n_) {
    throw SolverError(SolverError::Kind::kDimension,
                      "rhs block has " + std::to_string(rhs.rows()) + " rows, system has " +
                          std::to_string(n_));
  }
  Eigen::MatrixXd x(rhs.rows(), rhs.cols());
  for (Eigen::Index j = 0; j < rhs.cols(); ++j) x.col(j) = solve(rhs.col(j));
  return x;
}

Factorization factorize(const SparseMatrix& m) {
  if (m.rows() != m.cols()) {
    throw SolverError(SolverError::Kind::kDimension, "matrix is not square");
  }
  const int n = static_cast<int>(m.rows());
  auto impl = std::make_unique<Factorization::Impl>();
  SparseMatrix a = m;
  a.makeCompressed();
  impl->lu.compute(a);
  g_factorizations.fetch_add(1);
  if (impl->lu.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::kSingular,
                      "factorization failed: matrix of size " + std::to_string(n) +
                          " is singular (check pressure constraint and boundary data)");
  }
  // Probe: recover a known vector. A numerically singular matrix leaves an
  // arbitrary null-space component in the solution.
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0[i] = 1.0 + 0.5 * std::sin(0.7 * i + 0.3);
  const Vector b = a * x0;
  const Vector x = impl->lu.solve(b);
  const double err = (x - x0).norm() / x0.norm();
  if (!x.allFinite() || !(err < 1e-4)) {
    throw SolverError(SolverError::Kind::kSingular,
                      "matrix of size " + std::to_string(n) +
                          " is numerically singular (probe error " + std::to_string(err) +
                          "); a pressure mean constraint may be missing");
  }
  return Factorization(std::move(impl), n, fingerprint(a));
}

Factorization factorize(const SaddleSystem& system) { return factorize(system.matrix()); }

Eigen::MatrixXd solve_multi(const Factorization& f, const SaddleSystem& system,
                            const Eigen::MatrixXd& rhs) {
  if (f.size() != system.size() || f.fingerprint() != fingerprint(system.matrix())) {
    throw SolverError(SolverError::Kind::kStale, "factorization does not match the system");
  }
  return f.solve_multi(rhs);
}

EigenResult smallest_mixed_eigenvalue(const SparseMatrix& K, const SparseMatrix& M,
                                      const std::vector<int>& constrained, double tol,
                                      int max_iter) {
  const int n = static_cast<int>(K.rows());
  EigenResult result;
  result.vector = Vector::Zero(n);
  if (constrained.empty()) return result;

  std::vector<int> index(n, 0);
  for (int c : constrained) index[c] = -1;
  int nf = 0;
  for (int i = 0; i < n; ++i) {
    if (index[i] == 0) index[i] = nf++;
  }
  auto restrict = [&](const SparseMatrix& a) {
    Triplets t;
    for (int k = 0; k < a.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
        const int r = index[it.row()];
        const int c = index[it.col()];
        if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
      }
    }
    SparseMatrix out(nf, nf);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  };
  const SparseMatrix Kf = restrict(K);
  const SparseMatrix Mf = restrict(M);

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(Kf);
  if (ldlt.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::kSingular, "constrained stiffness is singular");
  }
  Vector x = Vector::Ones(nf);
  x /= std::sqrt(x.dot(Mf * x));
  double lambda = x.dot(Kf * x);
  for (int it = 1; it <= max_iter; ++it) {
    Vector y = ldlt.solve(Mf * x);
    y /= std::sqrt(y.dot(Mf * y));
    const Vector Ky = Kf * y;
    const double next = y.dot(Ky);
    x = std::move(y);
    const bool stagnant = std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    if (stagnant) {
      const double res = (Ky - lambda * (Mf * x)).norm() / Ky.norm();
      if (res <= 1e-8) {
        result.lambda = lambda;
        result.iterations = it;
        result.residual = res;
        for (int i = 0; i < n; ++i) {
          if (index[i] >= 0) result.vector[i] = x[index[i]];
        }
        return result;
      }
    }
  }
  throw SolverError(SolverError::Kind::kNoConvergence,
                    "inverse iteration did not converge in " + std::to_string(max_iter) +
                        " iterations");
}

EigenResult mixed_eigenvalue(const TaylorHoodSpace& space, const OperatorSet& ops) {
  return smallest_mixed_eigenvalue(ops.K_scalar, ops.M_scalar, space.dirichlet_nodes());
}

InverseConstant calibrate_inverse_constant(const TaylorHoodSpace& space) {
  const Mesh& mesh = space.mesh();
  const auto& rule = triangle_rule_deg4();
  InverseConstant out;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    Eigen::Matrix<double, 6, 6> Ke = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 6> Me = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto b = P2Basis::at(g, rule.barycentric[q]);
      const double w = rule.weights[q] * g.area;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          Me(i, j) += w * b.value[i] * b.value[j];
          Ke(i, j) += w * (b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1]);
        }
      }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(Ke, Me);
    double h = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Point& a = g.vertices[k];
      const Point& b = g.vertices[(k + 1) % 3];
      h = std::max(h, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
    const double c = h * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    if (c > out.C) {
      out.C = c;
      out.worst_triangle = t;
    }
  }
  return out;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace ensflow
