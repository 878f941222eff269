#include "ensflow/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ensflow/quadrature.hpp"

namespace ensflow {

void ThetaParams::validate() const {
  if (!(epsilon > 0.0) || !(U0 > 0.0)) {
    throw std::invalid_argument("theta parameters need epsilon > 0 and U0 > 0");
  }
}

ThetaValues theta(double s, const ThetaParams& params) {
  const double t0 = 0.5 * (1.0 - std::tanh(s / (params.epsilon * params.U0)));
  return {t0, 1.0 - t0};
}

ElementGeometry ElementGeometry::of(const Mesh& mesh, int t) {
  ElementGeometry g;
  const auto& tri = mesh.triangles()[t];
  for (int k = 0; k < 3; ++k) g.vertices[k] = mesh.vertices()[tri[k]];
  const auto& [p0, p1, p2] = g.vertices;
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
  g.area = 0.5 * det;
  g.grad_lambda[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
  g.grad_lambda[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
  g.grad_lambda[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  return g;
}

Point ElementGeometry::map(const std::array<double, 3>& b) const {
  return {b[0] * vertices[0][0] + b[1] * vertices[1][0] + b[2] * vertices[2][0],
          b[0] * vertices[0][1] + b[1] * vertices[1][1] + b[2] * vertices[2][1]};
}

P2Basis P2Basis::at(const ElementGeometry& g, const std::array<double, 3>& L) {
  P2Basis b;
  const auto& G = g.grad_lambda;
  for (int k = 0; k < 3; ++k) {
    b.value[k] = L[k] * (2.0 * L[k] - 1.0);
    const double s = 4.0 * L[k] - 1.0;
    b.grad[k] = {s * G[k][0], s * G[k][1]};
  }
  for (int k = 0; k < 3; ++k) {
    const int n = (k + 1) % 3;
    b.value[3 + k] = 4.0 * L[k] * L[n];
    b.grad[3 + k] = {4.0 * (L[n] * G[k][0] + L[k] * G[n][0]),
                     4.0 * (L[n] * G[k][1] + L[k] * G[n][1])};
  }
  return b;
}

std::array<double, 3> p2_edge_basis(double s) {
  return {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
}

TaylorHoodSpace::TaylorHoodSpace(std::shared_ptr<const Mesh> mesh,
                                 BoundaryPartition partition)
    : mesh_(std::move(mesh)), partition_(std::move(partition)) {
  partition_.validate(*mesh_);
  const int nv = mesh_->num_vertices();
  n_p2_ = nv + mesh_->num_edges();
  nodes_ = mesh_->vertices();
  nodes_.reserve(n_p2_);
  for (const auto& e : mesh_->edges()) {
    const auto& a = mesh_->vertices()[e[0]];
    const auto& b = mesh_->vertices()[e[1]];
    nodes_.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
  }

  std::vector<BoundaryTag> tag_of(n_p2_, 0);
  std::vector<char> is_dirichlet(n_p2_, 0);
  const auto& boundary = mesh_->boundary_edges();
  for (int i = 0; i < static_cast<int>(boundary.size()); ++i) {
    if (partition_.is_open(boundary[i].tag)) {
      open_edges_.push_back(i);
      continue;
    }
    for (int d : boundary_edge_dofs(i)) {
      if (!is_dirichlet[d]) tag_of[d] = boundary[i].tag;
      is_dirichlet[d] = 1;
    }
  }
  for (int d = 0; d < n_p2_; ++d) {
    if (is_dirichlet[d]) {
      dirichlet_nodes_.push_back(d);
      dirichlet_tags_.push_back(tag_of[d]);
    }
  }
  constrained_ = dirichlet_nodes_;
  for (int d : dirichlet_nodes_) constrained_.push_back(d + n_p2_);
}

std::array<int, 6> TaylorHoodSpace::element_dofs(int t) const {
  const auto& tri = mesh_->triangles()[t];
  const auto& e = mesh_->triangle_edges(t);
  const int nv = mesh_->num_vertices();
  return {tri[0], tri[1], tri[2], nv + e[0], nv + e[1], nv + e[2]};
}

std::array<int, 3> TaylorHoodSpace::boundary_edge_dofs(int i) const {
  const auto& be = mesh_->boundary_edges()[i];
  return {be.vertices[0], be.vertices[1], mesh_->num_vertices() + be.edge};
}

BoundaryTag TaylorHoodSpace::dirichlet_tag(int p2_dof) const {
  auto it = std::lower_bound(dirichlet_nodes_.begin(), dirichlet_nodes_.end(), p2_dof);
  if (it == dirichlet_nodes_.end() || *it != p2_dof) {
    throw std::out_of_range("node is not on the Dirichlet boundary");
  }
  return dirichlet_tags_[it - dirichlet_nodes_.begin()];
}

FEFunction FEFunction::zero_velocity(std::shared_ptr<const TaylorHoodSpace> space) {
  const int n = space->num_velocity();
  return {std::move(space), FieldKind::kVelocity, Vector::Zero(n)};
}

FEFunction FEFunction::zero_pressure(std::shared_ptr<const TaylorHoodSpace> space) {
  const int n = space->num_pressure();
  return {std::move(space), FieldKind::kPressure, Vector::Zero(n)};
}

void FEFunction::require(FieldKind k) const {
  if (kind != k) {
    throw std::invalid_argument(k == FieldKind::kVelocity ? "expected a velocity field"
                                                          : "expected a pressure field");
  }
}

Point FEFunction::value(int t, const P2Basis& basis) const {
  const auto dofs = space->element_dofs(t);
  const int n2 = space->num_p2();
  Point v{0.0, 0.0};
  for (int i = 0; i < 6; ++i) {
    v[0] += coeffs[dofs[i]] * basis.value[i];
    v[1] += coeffs[dofs[i] + n2] * basis.value[i];
  }
  return v;
}

std::array<Point, 2> FEFunction::gradient(int t, const P2Basis& basis) const {
  const auto dofs = space->element_dofs(t);
  const int n2 = space->num_p2();
  std::array<Point, 2> g{};
  for (int i = 0; i < 6; ++i) {
    for (int d = 0; d < 2; ++d) {
      g[0][d] += coeffs[dofs[i]] * basis.grad[i][d];
      g[1][d] += coeffs[dofs[i] + n2] * basis.grad[i][d];
    }
  }
  return g;
}

double FEFunction::pressure(int t, const std::array<double, 3>& bary) const {
  const auto& tri = space->mesh().triangles()[t];
  return bary[0] * coeffs[tri[0]] + bary[1] * coeffs[tri[1]] + bary[2] * coeffs[tri[2]];
}

FEFunction interpolate(std::shared_ptr<const TaylorHoodSpace> space,
                       const VectorField& field, double t) {
  FEFunction f = FEFunction::zero_velocity(space);
  const int n2 = space->num_p2();
  for (int i = 0; i < n2; ++i) {
    const Point& p = space->node(i);
    const Point v = field(p[0], p[1], t);
    f.coeffs[i] = v[0];
    f.coeffs[i + n2] = v[1];
  }
  return f;
}

FEFunction interpolate(std::shared_ptr<const TaylorHoodSpace> space,
                       const ScalarField& field, double t) {
  FEFunction f = FEFunction::zero_pressure(space);
  const auto& vs = space->mesh().vertices();
  for (int i = 0; i < static_cast<int>(vs.size()); ++i) f.coeffs[i] = field(vs[i][0], vs[i][1], t);
  return f;
}

Norms norms(const FEFunction& f) {
  const Mesh& mesh = f.space->mesh();
  const auto& rule = triangle_rule_deg4();
  Norms out;
  double l2 = 0.0, h1 = 0.0, bl2 = 0.0;
  if (f.kind == FieldKind::kPressure) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double area = mesh.signed_area(t);
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        const double p = f.pressure(t, rule.barycentric[q]);
        l2 += rule.weights[q] * area * p * p;
      }
      const auto g = ElementGeometry::of(mesh, t);
      const auto& tri = mesh.triangles()[t];
      Point grad{0.0, 0.0};
      for (int k = 0; k < 3; ++k) {
        grad[0] += f.coeffs[tri[k]] * g.grad_lambda[k][0];
        grad[1] += f.coeffs[tri[k]] * g.grad_lambda[k][1];
      }
      h1 += area * (grad[0] * grad[0] + grad[1] * grad[1]);
    }
    for (int e : f.space->open_edges()) {
      const auto& be = mesh.boundary_edges()[e];
      const double len = mesh.boundary_edge_length(e);
      for (std::size_t q = 0; q < gauss3().points.size(); ++q) {
        const double s = gauss3().points[q];
        const double p = (1.0 - s) * f.coeffs[be.vertices[0]] + s * f.coeffs[be.vertices[1]];
        bl2 += gauss3().weights[q] * len * p * p;
      }
    }
    return {std::sqrt(l2), std::sqrt(h1), std::sqrt(bl2)};
  }

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto basis = P2Basis::at(g, rule.barycentric[q]);
      const Point v = f.value(t, basis);
      const auto gr = f.gradient(t, basis);
      const double w = rule.weights[q] * g.area;
      l2 += w * (v[0] * v[0] + v[1] * v[1]);
      h1 += w * (gr[0][0] * gr[0][0] + gr[0][1] * gr[0][1] + gr[1][0] * gr[1][0] +
                 gr[1][1] * gr[1][1]);
    }
  }
  const int n2 = f.space->num_p2();
  for (int e : f.space->open_edges()) {
    const auto dofs = f.space->boundary_edge_dofs(e);
    const double len = mesh.boundary_edge_length(e);
    for (std::size_t q = 0; q < gauss3().points.size(); ++q) {
      const auto phi = p2_edge_basis(gauss3().points[q]);
      double vx = 0.0, vy = 0.0;
      for (int i = 0; i < 3; ++i) {
        vx += phi[i] * f.coeffs[dofs[i]];
        vy += phi[i] * f.coeffs[dofs[i] + n2];
      }
      bl2 += gauss3().weights[q] * len * (vx * vx + vy * vy);
    }
  }
  out.L2 = std::sqrt(l2);
  out.H1_semi = std::sqrt(h1);
  out.boundary_L2 = std::sqrt(bl2);
  return out;
}

double l2_error(const FEFunction& f, const VectorField& exact, double time) {
  f.require(FieldKind::kVelocity);
  const Mesh& mesh = f.space->mesh();
  const auto& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto basis = P2Basis::at(g, rule.barycentric[q]);
      const Point v = f.value(t, basis);
      const Point x = g.map(rule.barycentric[q]);
      const Point e = exact(x[0], x[1], time);
      sum += rule.weights[q] * g.area *
             ((v[0] - e[0]) * (v[0] - e[0]) + (v[1] - e[1]) * (v[1] - e[1]));
    }
  }
  return std::sqrt(sum);
}

double l2_error(const FEFunction& f, const ScalarField& exact, double time) {
  f.require(FieldKind::kPressure);
  const Mesh& mesh = f.space->mesh();
  const auto& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point x = g.map(rule.barycentric[q]);
      const double d = f.pressure(t, rule.barycentric[q]) - exact(x[0], x[1], time);
      sum += rule.weights[q] * g.area * d * d;
    }
  }
  return std::sqrt(sum);
}

InfNorms inf_norms(const FEFunction& u, const ThetaParams& theta_params) {
  u.require(FieldKind::kVelocity);
  const auto& space = *u.space;
  const Mesh& mesh = space.mesh();
  const int n2 = space.num_p2();
  InfNorms out;
  for (int i = 0; i < n2; ++i) {
    out.value_inf = std::max(out.value_inf, std::hypot(u.coeffs[i], u.coeffs[i + n2]));
  }
  const auto& rule = triangle_rule_deg4();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    for (const auto& bary : rule.barycentric) {
      const auto basis = P2Basis::at(g, bary);
      const Point v = u.value(t, basis);
      const auto gr = u.gradient(t, basis);
      out.value_inf = std::max(out.value_inf, std::hypot(v[0], v[1]));
      out.divergence_inf = std::max(out.divergence_inf, std::abs(gr[0][0] + gr[1][1]));
    }
  }
  for (int e : space.open_edges()) {
    const auto dofs = space.boundary_edge_dofs(e);
    const Point n = mesh.outward_normal(e);
    for (double s : gauss4().points) {
      const auto phi = p2_edge_basis(s);
      double vx = 0.0, vy = 0.0;
      for (int i = 0; i < 3; ++i) {
        vx += phi[i] * u.coeffs[dofs[i]];
        vy += phi[i] * u.coeffs[dofs[i] + n2];
      }
      const double un = vx * n[0] + vy * n[1];
      out.boundary_normal_theta_inf = std::max(
          out.boundary_normal_theta_inf, std::abs(un * theta(un, theta_params).theta0));
    }
  }
  return out;
}

std::optional<Location> locate(const Mesh& mesh, const Point& p, double tol) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = ElementGeometry::of(mesh, t);
    std::array<double, 3> b{};
    for (int k = 0; k < 3; ++k) {
      const Point& o = g.vertices[(k + 1) % 3];
      b[k] = g.grad_lambda[k][0] * (p[0] - o[0]) + g.grad_lambda[k][1] * (p[1] - o[1]);
    }
    if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) return Location{t, b};
  }
  return std::nullopt;
}

}  // namespace ensflow
