#include "advntk/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advntk {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double clamp_unit(double rho) { return std::clamp(rho, -1.0, 1.0); }

bool degenerate(const BivariateMoment& m) { return m.s11 * m.s22 == 0.0; }

void check_degenerate(const BivariateMoment& m) {
  if (degenerate(m) && m.s12 != 0.0)
    throw std::runtime_error("gauss moment: zero variance with nonzero covariance");
}

}  // namespace

void BivariateMoment::validate() const {
  if (!std::isfinite(s11) || !std::isfinite(s12) || !std::isfinite(s22))
    throw std::invalid_argument("BivariateMoment: non-finite entry");
  if (s11 < 0.0 || s22 < 0.0)
    throw std::invalid_argument("BivariateMoment: negative variance");
  if (s12 * s12 > s11 * s22 + kCauchySchwarzTol)
    throw std::runtime_error("BivariateMoment: Cauchy-Schwarz violated beyond tolerance");
}

double gauss_ee(Activation act, const BivariateMoment& m) {
  m.validate();
  check_degenerate(m);
  if (act == Activation::Relu) {
    if (degenerate(m)) return 0.0;  // phi(0) = 0 on the degenerate side
    const double sd = std::sqrt(m.s11 * m.s22);
    const double rho = clamp_unit(m.s12 / sd);
    const double theta = std::acos(rho);
    return sd / (2.0 * kPi) * (std::sin(theta) + (kPi - theta) * std::cos(theta));
  }
  // Erf: arcsine kernel. Valid for degenerate variances as written.
  const double p = (1.0 + 2.0 * m.s11) * (1.0 + 2.0 * m.s22);
  return 2.0 / kPi * std::asin(clamp_unit(2.0 * m.s12 / std::sqrt(p)));
}

double gauss_dd(Activation act, const BivariateMoment& m) {
  m.validate();
  check_degenerate(m);
  if (act == Activation::Relu) {
    if (degenerate(m)) return 0.0;  // phi'(0) = 0 convention
    const double rho = clamp_unit(m.s12 / std::sqrt(m.s11 * m.s22));
    return (kPi - std::acos(rho)) / (2.0 * kPi);
  }
  const double r =
      (1.0 + 2.0 * m.s11) * (1.0 + 2.0 * m.s22) - 4.0 * m.s12 * m.s12;
  if (!(r > 0.0)) throw std::runtime_error("gauss_dd(erf): non-positive discriminant");
  return 4.0 / kPi / std::sqrt(r);
}

MomentPartials gauss_ee_partials(Activation act, const BivariateMoment& m) {
  m.validate();
  check_degenerate(m);
  MomentPartials g;
  if (act == Activation::Relu) {
    if (degenerate(m)) return g;
    const double sd = std::sqrt(m.s11 * m.s22);
    const double rho = clamp_unit(m.s12 / sd);
    const double theta = std::acos(rho);
    const double h = std::sin(theta) + (kPi - theta) * std::cos(theta);
    const double hp = kPi - theta;  // dh/drho, finite at rho = +-1
    // ee = sd/(2pi) * h(rho), rho = s12 / sd
    g.d12 = hp / (2.0 * kPi);
    g.d11 = m.s22 / (4.0 * kPi * sd) * h - m.s12 * hp / (4.0 * kPi * m.s11);
    g.d22 = m.s11 / (4.0 * kPi * sd) * h - m.s12 * hp / (4.0 * kPi * m.s22);
    return g;
  }
  const double a = 1.0 + 2.0 * m.s11;
  const double c = 1.0 + 2.0 * m.s22;
  const double p = a * c;
  const double sp = std::sqrt(p);
  const double u = 2.0 * m.s12 / sp;
  const double denom = std::sqrt(std::max(1.0 - u * u, 1e-300));
  const double pref = 2.0 / kPi / denom;
  g.d12 = pref * 2.0 / sp;
  g.d11 = pref * (-2.0 * m.s12 * c / (p * sp));  // du/ds11, with da/ds11 = 2 folded in
  g.d22 = pref * (-2.0 * m.s12 * a / (p * sp));
  return g;
}

MomentPartials gauss_dd_partials(Activation act, const BivariateMoment& m) {
  m.validate();
  check_degenerate(m);
  MomentPartials g;
  if (act == Activation::Relu) {
    if (degenerate(m)) return g;
    const double sd = std::sqrt(m.s11 * m.s22);
    const double rho = clamp_unit(m.s12 / sd);
    // d/drho of (pi - acos(rho))/(2pi); one-sided limit near |rho| = 1.
    const double rho2 = std::min(rho * rho, 1.0 - 1e-12);
    const double dd_drho = 1.0 / (2.0 * kPi * std::sqrt(1.0 - rho2));
    g.d12 = dd_drho / sd;
    g.d11 = dd_drho * (-m.s12 / (2.0 * m.s11 * sd));
    g.d22 = dd_drho * (-m.s12 / (2.0 * m.s22 * sd));
    return g;
  }
  const double a = 1.0 + 2.0 * m.s11;
  const double c = 1.0 + 2.0 * m.s22;
  const double r = a * c - 4.0 * m.s12 * m.s12;
  if (!(r > 0.0)) throw std::runtime_error("gauss_dd_partials(erf): non-positive discriminant");
  const double r32 = r * std::sqrt(r);
  g.d11 = -4.0 / kPi * c / r32;  // includes d/ds11 a = 2 and the -1/2 power
  g.d22 = -4.0 / kPi * a / r32;
  g.d12 = 16.0 / kPi * m.s12 / r32;
  return g;
}

}  // namespace advntk
