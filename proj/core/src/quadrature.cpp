#include "ensflow/quadrature.hpp"

#include <cmath>

namespace ensflow {
namespace {

void add_orbit3(TriangleRule& r, double a, double b, double w) {
  r.barycentric.push_back({a, b, b});
  r.barycentric.push_back({b, a, b});
  r.barycentric.push_back({b, b, a});
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

TriangleRule make_deg4() {
  // Strang-Fix / Dunavant degree-4 rule.
  TriangleRule r;
  r.degree = 4;
  add_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
  add_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
  return r;
}

TriangleRule make_deg5() {
  // Radon's 7-point degree-5 rule (closed form abscissae).
  TriangleRule r;
  r.degree = 5;
  const double s15 = std::sqrt(15.0);
  r.barycentric.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(9.0 / 40.0);
  const double b1 = (6.0 - s15) / 21.0;
  const double b2 = (6.0 + s15) / 21.0;
  add_orbit3(r, 1.0 - 2.0 * b1, b1, (155.0 - s15) / 1200.0);
  add_orbit3(r, 1.0 - 2.0 * b2, b2, (155.0 + s15) / 1200.0);
  return r;
}

LineRule make_gauss3() {
  LineRule r;
  r.degree = 5;
  const double d = 0.5 * std::sqrt(0.6);
  r.points = {0.5 - d, 0.5, 0.5 + d};
  r.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  return r;
}

LineRule make_gauss4() {
  LineRule r;
  r.degree = 7;
  const double s = std::sqrt(6.0 / 5.0);
  const double x1 = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * s);
  const double x2 = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * s);
  const double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
  const double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
  r.points = {0.5 * (1.0 - x2), 0.5 * (1.0 - x1), 0.5 * (1.0 + x1), 0.5 * (1.0 + x2)};
  r.weights = {0.5 * w2, 0.5 * w1, 0.5 * w1, 0.5 * w2};
  return r;
}

}  // namespace

const TriangleRule& triangle_rule_deg4() {
  static const TriangleRule rule = make_deg4();
  return rule;
}

const TriangleRule& triangle_rule_deg5() {
  static const TriangleRule rule = make_deg5();
  return rule;
}

const LineRule& gauss3() {
  static const LineRule rule = make_gauss3();
  return rule;
}

const LineRule& gauss4() {
  static const LineRule rule = make_gauss4();
  return rule;
}

}  // namespace ensflow
