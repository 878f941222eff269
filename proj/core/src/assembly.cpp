#include "ensflow/assembly.hpp"

#include <stdexcept>
#include <string>

#include "ensflow/quadrature.hpp"

namespace ensflow {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Velocity value of a P2 field along a boundary edge at parameter s.
Point edge_value(const FEFunction& f, const std::array<int, 3>& dofs, double s) {
  const auto phi = p2_edge_basis(s);
  const int n2 = f.space->num_p2();
  Point v{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    v[0] += phi[i] * f.coeffs[dofs[i]];
    v[1] += phi[i] * f.coeffs[dofs[i] + n2];
  }
  return v;
}

}  // namespace

SparseMatrix block_diagonal(const SparseMatrix& s) {
  const int n = static_cast<int>(s.rows());
  Triplets t;
  t.reserve(2 * s.nonZeros());
  for (int k = 0; k < s.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
      t.emplace_back(it.row() + n, it.col() + n, it.value());
    }
  }
  return from_triplets(2 * n, 2 * n, t);
}

OperatorSet assemble_core(const TaylorHoodSpace& space) {
  const Mesh& mesh = space.mesh();
  const int n2 = space.num_p2();
  const int np = space.num_pressure();
  const auto& rule = triangle_rule_deg4();

  Triplets mt, kt, bt;
  Vector mean = Vector::Zero(np);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    const auto dofs = space.element_dofs(t);
    const auto& tri = mesh.triangles()[t];
    double me[6][6] = {};
    double ke[6][6] = {};
    double be[3][2][6] = {};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& L = rule.barycentric[q];
      const auto basis = P2Basis::at(g, L);
      const double w = rule.weights[q] * g.area;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          me[i][j] += w * basis.value[i] * basis.value[j];
          ke[i][j] += w * dot(basis.grad[i], basis.grad[j]);
        }
      }
      for (int k = 0; k < 3; ++k) {
        mean[tri[k]] += w * L[k];
        for (int j = 0; j < 6; ++j) {
          be[k][0][j] += w * L[k] * basis.grad[j][0];
          be[k][1][j] += w * L[k] * basis.grad[j][1];
        }
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        mt.emplace_back(dofs[i], dofs[j], me[i][j]);
        kt.emplace_back(dofs[i], dofs[j], ke[i][j]);
      }
    }
    for (int k = 0; k < 3; ++k) {
      for (int j = 0; j < 6; ++j) {
        bt.emplace_back(tri[k], dofs[j], be[k][0][j]);
        bt.emplace_back(tri[k], dofs[j] + n2, be[k][1][j]);
      }
    }
  }

  Triplets gt;
  for (int e : space.open_edges()) {
    const auto dofs = space.boundary_edge_dofs(e);
    const double len = mesh.boundary_edge_length(e);
    const auto& rule1 = gauss3();
    for (std::size_t q = 0; q < rule1.points.size(); ++q) {
      const auto phi = p2_edge_basis(rule1.points[q]);
      const double w = rule1.weights[q] * len;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) gt.emplace_back(dofs[i], dofs[j], w * phi[i] * phi[j]);
      }
    }
  }

  OperatorSet ops;
  ops.M_scalar = from_triplets(n2, n2, mt);
  ops.K_scalar = from_triplets(n2, n2, kt);
  ops.M = block_diagonal(ops.M_scalar);
  ops.K = block_diagonal(ops.K_scalar);
  ops.B = from_triplets(np, 2 * n2, bt);
  ops.M_gamma = block_diagonal(from_triplets(n2, n2, gt));
  ops.pressure_mean = mean;
  return ops;
}

TrilinearForm parse_trilinear_form(std::string_view id) {
  if (id == "b") return TrilinearForm::kB;
  if (id == "b1") return TrilinearForm::kB1;
  if (id == "b2") return TrilinearForm::kB2;
  if (id == "b3") return TrilinearForm::kB3;
  throw std::invalid_argument("unknown trilinear form '" + std::string(id) + "'");
}

ConvectionAssembler::ConvectionAssembler(std::shared_ptr<const TaylorHoodSpace> space)
    : space_(std::move(space)) {
  const Mesh& mesh = space_->mesh();
  const auto& rule = triangle_rule_deg5();
  cache_.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    auto& pts = cache_[t];
    pts.reserve(rule.weights.size());
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      pts.push_back({rule.weights[q] * g.area, P2Basis::at(g, rule.barycentric[q])});
    }
  }
}

SparseMatrix ConvectionAssembler::b1_scalar(const FEFunction& w) const {
  w.require(FieldKind::kVelocity);
  const int n2 = space_->num_p2();
  Triplets trip;
  trip.reserve(cache_.size() * 36);
  for (std::size_t t = 0; t < cache_.size(); ++t) {
    const auto dofs = space_->element_dofs(static_cast<int>(t));
    double se[6][6] = {};
    for (const auto& qp : cache_[t]) {
      const Point wv = w.value(static_cast<int>(t), qp.basis);
      const auto gw = w.gradient(static_cast<int>(t), qp.basis);
      const double half_div = 0.5 * (gw[0][0] + gw[1][1]);
      for (int j = 0; j < 6; ++j) {
        const double adv = dot(wv, qp.basis.grad[j]) + half_div * qp.basis.value[j];
        for (int i = 0; i < 6; ++i) se[i][j] += qp.weight * adv * qp.basis.value[i];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(dofs[i], dofs[j], se[i][j]);
    }
  }
  return from_triplets(n2, n2, trip);
}

SparseMatrix ConvectionAssembler::b3_scalar(const FEFunction& w) const {
  w.require(FieldKind::kVelocity);
  const int n2 = space_->num_p2();
  Triplets trip;
  trip.reserve(cache_.size() * 36);
  for (std::size_t t = 0; t < cache_.size(); ++t) {
    const auto dofs = space_->element_dofs(static_cast<int>(t));
    double se[6][6] = {};
    for (const auto& qp : cache_[t]) {
      const Point wv = w.value(static_cast<int>(t), qp.basis);
      double adv[6];
      for (int j = 0; j < 6; ++j) adv[j] = dot(wv, qp.basis.grad[j]);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          se[i][j] += 0.5 * qp.weight *
                      (adv[j] * qp.basis.value[i] - adv[i] * qp.basis.value[j]);
        }
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(dofs[i], dofs[j], se[i][j]);
    }
  }
  return from_triplets(n2, n2, trip);
}

SparseMatrix ConvectionAssembler::b2_scalar(const FEFunction& w,
                                            const ThetaParams& theta_params) const {
  w.require(FieldKind::kVelocity);
  const int n2 = space_->num_p2();
  if (!space_->has_open_boundary()) {
    throw std::invalid_argument("b2 requires a non-empty open boundary");
  }
  const Mesh& mesh = space_->mesh();
  Triplets trip;
  for (int e : space_->open_edges()) {
    const auto dofs = space_->boundary_edge_dofs(e);
    const Point n = mesh.outward_normal(e);
    const double len = mesh.boundary_edge_length(e);
    const auto& rule = gauss4();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const double wn = dot(edge_value(w, dofs, s), n);
      const double coef =
          -0.5 * rule.weights[q] * len * wn * theta(wn, theta_params).theta0;
      const auto phi = p2_edge_basis(s);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) trip.emplace_back(dofs[i], dofs[j], coef * phi[i] * phi[j]);
      }
    }
  }
  return from_triplets(n2, n2, trip);
}

SparseMatrix ConvectionAssembler::b1(const FEFunction& w) const {
  return block_diagonal(b1_scalar(w));
}

SparseMatrix ConvectionAssembler::b2(const FEFunction& w, const ThetaParams& theta) const {
  return block_diagonal(b2_scalar(w, theta));
}

SparseMatrix ConvectionAssembler::b3(const FEFunction& w) const {
  return block_diagonal(b3_scalar(w));
}

SparseMatrix convection_b1_matrix(const FEFunction& w) {
  return ConvectionAssembler(w.space).b1(w);
}

SparseMatrix convection_b2_matrix(const FEFunction& w, const ThetaParams& theta) {
  return ConvectionAssembler(w.space).b2(w, theta);
}

double trilinear(TrilinearForm form, const FEFunction& u, const FEFunction& v,
                 const FEFunction& w, const ThetaParams& theta_params) {
  u.require(FieldKind::kVelocity);
  v.require(FieldKind::kVelocity);
  w.require(FieldKind::kVelocity);
  const auto& space = *u.space;
  const Mesh& mesh = space.mesh();

  if (form == TrilinearForm::kB2) {
    double sum = 0.0;
    for (int e : space.open_edges()) {
      const auto dofs = space.boundary_edge_dofs(e);
      const Point n = mesh.outward_normal(e);
      const double len = mesh.boundary_edge_length(e);
      for (std::size_t q = 0; q < gauss4().points.size(); ++q) {
        const double s = gauss4().points[q];
        const double un = dot(edge_value(u, dofs, s), n);
        sum += -0.5 * gauss4().weights[q] * len * un * theta(un, theta_params).theta0 *
               dot(edge_value(v, dofs, s), edge_value(w, dofs, s));
      }
    }
    return sum;
  }

  const auto& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto basis = P2Basis::at(g, rule.barycentric[q]);
      const Point uv = u.value(t, basis);
      const Point vv = v.value(t, basis);
      const Point wv = w.value(t, basis);
      const auto gv = v.gradient(t, basis);
      const auto gw = w.gradient(t, basis);
      // (u.grad v).w and (u.grad w).v
      const double uv_w = dot(uv, gv[0]) * wv[0] + dot(uv, gv[1]) * wv[1];
      const double uw_v = dot(uv, gw[0]) * vv[0] + dot(uv, gw[1]) * vv[1];
      double val = 0.0;
      switch (form) {
        case TrilinearForm::kB:
          val = uv_w;
          break;
        case TrilinearForm::kB1: {
          const auto gu = u.gradient(t, basis);
          val = uv_w + 0.5 * (gu[0][0] + gu[1][1]) * dot(vv, wv);
          break;
        }
        case TrilinearForm::kB3:
          val = 0.5 * (uv_w - uw_v);
          break;
        case TrilinearForm::kB2:
          break;
      }
      sum += rule.weights[q] * g.area * val;
    }
  }
  return sum;
}

double boundary_normal_product(const FEFunction& u, const FEFunction& v,
                               const FEFunction& w, BoundaryPart part) {
  const auto& space = *u.space;
  const Mesh& mesh = space.mesh();
  std::vector<int> edges;
  if (part == BoundaryPart::kOpen) {
    edges = space.open_edges();
  } else {
    for (int i = 0; i < static_cast<int>(mesh.boundary_edges().size()); ++i) edges.push_back(i);
  }
  double sum = 0.0;
  for (int e : edges) {
    const auto dofs = space.boundary_edge_dofs(e);
    const Point n = mesh.outward_normal(e);
    const double len = mesh.boundary_edge_length(e);
    for (std::size_t q = 0; q < gauss4().points.size(); ++q) {
      const double s = gauss4().points[q];
      sum += gauss4().weights[q] * len * dot(edge_value(u, dofs, s), n) *
             dot(edge_value(v, dofs, s), edge_value(w, dofs, s));
    }
  }
  return sum;
}

double theta1_boundary_flux(const FEFunction& a, const FEFunction& v,
                            const ThetaParams& theta_params) {
  const auto& space = *a.space;
  const Mesh& mesh = space.mesh();
  double sum = 0.0;
  for (int e : space.open_edges()) {
    const auto dofs = space.boundary_edge_dofs(e);
    const Point n = mesh.outward_normal(e);
    const double len = mesh.boundary_edge_length(e);
    for (std::size_t q = 0; q < gauss4().points.size(); ++q) {
      const double s = gauss4().points[q];
      const double an = dot(edge_value(a, dofs, s), n);
      const Point vv = edge_value(v, dofs, s);
      sum += gauss4().weights[q] * len * 0.5 * an * dot(vv, vv) *
             theta(an, theta_params).theta1;
    }
  }
  return sum;
}

Vector rhs_forcing(const TaylorHoodSpace& space, const VectorField& f, double time) {
  const Mesh& mesh = space.mesh();
  const int n2 = space.num_p2();
  Vector out = Vector::Zero(2 * n2);
  const auto& rule = triangle_rule_deg5();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    const auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto basis = P2Basis::at(g, rule.barycentric[q]);
      const Point x = g.map(rule.barycentric[q]);
      const Point fv = f(x[0], x[1], time);
      const double w = rule.weights[q] * g.area;
      for (int i = 0; i < 6; ++i) {
        out[dofs[i]] += w * fv[0] * basis.value[i];
        out[dofs[i] + n2] += w * fv[1] * basis.value[i];
      }
    }
  }
  return out;
}

}  // namespace ensflow
