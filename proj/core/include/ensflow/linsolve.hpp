#ifndef ENSFLOW_LINSOLVE_HPP
#define ENSFLOW_LINSOLVE_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ensflow/assembly.hpp"

namespace ensflow {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { kSingular, kDimension, kStale, kNoConvergence, kNonFinite };
  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Coupled velocity-pressure system [[A, -B^T], [-B, 0]] with strong
/// Dirichlet elimination and, when Gamma_N is empty, a Lagrange multiplier
/// enforcing a mean-zero pressure.
///
/// Unknown layout: [velocity (nu) | pressure (np) | multiplier (0 or 1)].
class SaddleSystem {
 public:
  SaddleSystem(const SparseMatrix& A, const SparseMatrix& B,
               const std::vector<int>& constrained_velocity,
               const Vector* pressure_mean);

  /// Convenience: constraints and multiplier taken from the space.
  static SaddleSystem for_space(const TaylorHoodSpace& space, const OperatorSet& ops,
                                const SparseMatrix& A);

  const SparseMatrix& matrix() const { return matrix_; }
  int size() const { return static_cast<int>(matrix_.rows()); }
  int num_velocity() const { return nu_; }
  int num_pressure() const { return np_; }
  bool has_mean_constraint() const { return has_mean_; }

  /// Full right-hand side from a velocity load and the Dirichlet values
  /// (entries of `dirichlet` off the constrained set are ignored).
  Vector rhs(const Vector& velocity_load, const Vector& dirichlet) const;

 private:
  int nu_;
  int np_;
  bool has_mean_;
  std::vector<int> constrained_;
  SparseMatrix matrix_;
  SparseMatrix lifting_;  // original columns of the constrained dofs
};

/// Global counters, monotone over the process lifetime.
struct SolverCounters {
  std::uint64_t factorizations = 0;
  std::uint64_t solves = 0;
};
SolverCounters solver_counters();

/// Order-sensitive hash of sparsity pattern and values.
std::uint64_t fingerprint(const SparseMatrix& m);

class Factorization {
 public:
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  ~Factorization();

  std::uint64_t fingerprint() const { return fingerprint_; }
  int size() const { return n_; }
  std::uint64_t solves() const;
  bool valid_for(const SparseMatrix& m) const;

  Vector solve(const Vector& rhs) const;
  /// Each column of `rhs` is solved independently against the same factors.
  Eigen::MatrixXd solve_multi(const Eigen::MatrixXd& rhs) const;

  /// Name of the direct backend in use.
  static const char* backend();

 private:
  friend Factorization factorize(const SparseMatrix& m);
  struct Impl;
  explicit Factorization(std::unique_ptr<Impl> impl, int n, std::uint64_t fp);

  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// Sparse LU factorization. Throws SolverError::kSingular when the matrix is
/// structurally or numerically singular.
Factorization factorize(const SparseMatrix& m);
Factorization factorize(const SaddleSystem& system);

/// Solves against `f` after checking that it was built from `system`.
Eigen::MatrixXd solve_multi(const Factorization& f, const SaddleSystem& system,
                            const Eigen::MatrixXd& rhs);

struct EigenResult {
  double lambda = 0.0;
  int iterations = 0;
  double residual = 0.0;
  Vector vector;  // on all scalar nodes, zero on constrained ones
};

/// Smallest eigenvalue of K x = lambda M x with x = 0 on `constrained`.
/// Returns lambda = 0 when nothing is constrained.
EigenResult smallest_mixed_eigenvalue(const SparseMatrix& K, const SparseMatrix& M,
                                      const std::vector<int>& constrained,
                                      double tol = 1e-10, int max_iter = 5000);

/// lambda_1 of the scalar P2 problem with Dirichlet nodes of the space.
EigenResult mixed_eigenvalue(const TaylorHoodSpace& space, const OperatorSet& ops);

/// Element-wise inverse-inequality constant C = max_T h_T sqrt(lambda_max(K_T, M_T)),
/// so that ||grad v||_T <= C h_T^{-1} ||v||_T for every P2 v.
struct InverseConstant {
  double C = 0.0;
  int worst_triangle = -1;
};
InverseConstant calibrate_inverse_constant(const TaylorHoodSpace& space);

/// MatrixMarket coordinate export.
void write_matrix_market(std::ostream& os, const SparseMatrix& m);

}  // namespace ensflow

#endif  // ENSFLOW_LINSOLVE_HPP
