#ifndef ENSFLOW_ASSEMBLY_HPP
#define ENSFLOW_ASSEMBLY_HPP

#include <Eigen/Sparse>
#include <memory>
#include <string_view>
#include <vector>

#include "ensflow/fespace.hpp"

namespace ensflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Member-independent bilinear operators on the velocity space
/// (component-blocked) plus their scalar P2 building blocks.
struct OperatorSet {
  SparseMatrix M;        // (u, v)
  SparseMatrix K;        // (grad u, grad v)
  SparseMatrix B;        // B(k, i) = (psi_k, div phi_i), pressure x velocity
  SparseMatrix M_gamma;  // (u, v)_{Gamma_N}
  Vector pressure_mean;  // (psi_k, 1)

  SparseMatrix M_scalar;
  SparseMatrix K_scalar;
};

OperatorSet assemble_core(const TaylorHoodSpace& space);

/// Block-diagonal velocity matrix [S 0; 0 S] from a scalar P2 matrix.
SparseMatrix block_diagonal(const SparseMatrix& scalar);

enum class TrilinearForm { kB, kB1, kB2, kB3 };

TrilinearForm parse_trilinear_form(std::string_view id);

/// Assembles the advection matrices. Rows are test functions, columns trial
/// functions, so that z^T N(w) v equals the trilinear form (w, v, z).
///
/// Volume terms use the degree-5 rule, boundary terms 4-point Gauss; both are
/// exact for polynomial P2 integrands, which keeps the skew identities exact.
class ConvectionAssembler {
 public:
  explicit ConvectionAssembler(std::shared_ptr<const TaylorHoodSpace> space);

  /// b1(w, v, z) = (w.grad v, z) + 1/2 (div w, v.z)
  SparseMatrix b1(const FEFunction& w) const;
  /// b2(w, v, z) = -1/2 ((w.n) Theta0(w.n), v.z)_{Gamma_N}
  SparseMatrix b2(const FEFunction& w, const ThetaParams& theta) const;
  /// b3(w, v, z) = 1/2 (b(w, v, z) - b(w, z, v))
  SparseMatrix b3(const FEFunction& w) const;

  /// Scalar P2 blocks of the above.
  SparseMatrix b1_scalar(const FEFunction& w) const;
  SparseMatrix b2_scalar(const FEFunction& w, const ThetaParams& theta) const;
  SparseMatrix b3_scalar(const FEFunction& w) const;

  const TaylorHoodSpace& space() const { return *space_; }

 private:
  struct QuadPoint {
    double weight;  // includes the element area
    P2Basis basis;
  };
  std::shared_ptr<const TaylorHoodSpace> space_;
  std::vector<std::vector<QuadPoint>> cache_;  // per element
};

SparseMatrix convection_b1_matrix(const FEFunction& w);
SparseMatrix convection_b2_matrix(const FEFunction& w, const ThetaParams& theta);

/// Direct quadrature evaluation of a trilinear form (no matrices involved).
double trilinear(TrilinearForm form, const FEFunction& u, const FEFunction& v,
                 const FEFunction& w, const ThetaParams& theta = {});

enum class BoundaryPart { kAll, kOpen };

/// (u.n, v.w) over the whole boundary or over Gamma_N.
double boundary_normal_product(const FEFunction& u, const FEFunction& v,
                               const FEFunction& w, BoundaryPart part);

/// Integral over Gamma_N of (a.n)/2 |v|^2 Theta1(a.n).
double theta1_boundary_flux(const FEFunction& a, const FEFunction& v,
                            const ThetaParams& theta);

/// Load vector (f(t), phi_i) on the velocity space.
Vector rhs_forcing(const TaylorHoodSpace& space, const VectorField& f, double t);

}  // namespace ensflow

#endif  // ENSFLOW_ASSEMBLY_HPP
