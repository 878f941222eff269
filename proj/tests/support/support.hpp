#ifndef ENSFLOW_TEST_SUPPORT_HPP
#define ENSFLOW_TEST_SUPPORT_HPP

#include <cmath>
#include <memory>
#include <random>
#include <string>

#include "ensflow/assembly.hpp"
#include "ensflow/fespace.hpp"
#include "ensflow/mesh.hpp"

namespace ensflow::test {

inline std::string data_path(const std::string& name) {
  return std::string(ENSFLOW_TEST_DATA_DIR) + "/" + name;
}

inline std::shared_ptr<const TaylorHoodSpace> square_space(int n, BoundaryPartition p) {
  auto mesh = std::make_shared<const Mesh>(generate_unit_square(n));
  return std::make_shared<const TaylorHoodSpace>(mesh, std::move(p));
}

inline std::shared_ptr<const TaylorHoodSpace> square_space(int n) {
  auto mesh = std::make_shared<const Mesh>(generate_unit_square(n));
  return std::make_shared<const TaylorHoodSpace>(mesh, BoundaryPartition::all_dirichlet(*mesh));
}

/// Unit square with Gamma_N = {x = 1} and Dirichlet elsewhere.
inline std::shared_ptr<const TaylorHoodSpace> square_space_open_right(int n) {
  BoundaryPartition p;
  p.dirichlet = {tags::kBottom, tags::kTop, tags::kLeft};
  p.open = {tags::kRight};
  return square_space(n, p);
}

inline FEFunction random_velocity(std::shared_ptr<const TaylorHoodSpace> space,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FEFunction f = FEFunction::zero_velocity(space);
  for (int i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = d(rng);
  return f;
}

/// Scale for trilinear identities: product of full H1 norms.
inline double h1_scale(const FEFunction& f) {
  const Norms n = norms(f);
  return std::sqrt(n.L2 * n.L2 + n.H1_semi * n.H1_semi);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace ensflow::test

#endif  // ENSFLOW_TEST_SUPPORT_HPP
