#include "advntk/expm.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace advntk {
namespace {

constexpr double kTheta13 = 5.371920351148152;

const double kB[14] = {64764752532480000., 32382376266240000., 7771770303897600.,
                       1187353796428800.,  129060195264000.,   10559470521600.,
                       670442572800.,      33522128640.,       1323241920.,
                       40840800.,          960960.,            16380.,
                       182.,               1.};

double norm1(const Mat& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); }

void check_input(const Mat& A, int dim_cap, const char* who) {
  if (A.rows() != A.cols()) throw std::invalid_argument(std::string(who) + ": non-square");
  if (A.rows() > dim_cap)
    throw std::invalid_argument(std::string(who) + ": dimension exceeds cap");
  if (!A.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

// Plain-matrix ring.
struct MatRing {
  using Elem = Mat;
  static Mat identity_like(const Mat& m) { return Mat::Identity(m.rows(), m.rows()); }
  static Mat mul(const Mat& a, const Mat& b) { return a * b; }
  static Mat add(const Mat& a, const Mat& b) { return a + b; }
  static Mat scale(const Mat& a, double s) { return s * a; }
  static Mat solve(const Mat& a, const Mat& b) {
    return Eigen::PartialPivLU<Mat>(a).solve(b);
  }
  static double scaling_norm(const Mat& a) { return norm1(a); }
  static bool finite(const Mat& a) { return a.allFinite(); }
};

/// First-order jet B + eps*C with eps^2 = 0. Propagating jets through the
/// Pade evaluation computes the exponential of the block triangular matrix
/// [[B, C], [0, B]] at three n x n GEMMs per product instead of the 8x cost
/// of a materialized 2n x 2n multiply; the derivative block is exactly the
/// Frechet derivative of expm.
struct Jet {
  Mat v, d;
};

struct JetRing {
  using Elem = Jet;
  static Jet identity_like(const Jet& m) {
    return {Mat::Identity(m.v.rows(), m.v.rows()), Mat::Zero(m.v.rows(), m.v.rows())};
  }
  static Jet mul(const Jet& a, const Jet& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
  static Jet add(const Jet& a, const Jet& b) { return {a.v + b.v, a.d + b.d}; }
  static Jet scale(const Jet& a, double s) { return {s * a.v, s * a.d}; }
  static Jet solve(const Jet& a, const Jet& b) {
    Eigen::PartialPivLU<Mat> lu(a.v);
    Jet x;
    x.v = lu.solve(b.v);
    x.d = lu.solve(b.d - a.d * x.v);
    return x;
  }
  static double scaling_norm(const Jet& a) { return norm1(a.v); }
  static bool finite(const Jet& a) { return a.v.allFinite() && a.d.allFinite(); }
};

template <class Ring>
typename Ring::Elem expm_core(typename Ring::Elem A) {
  const double nrm = Ring::scaling_norm(A);
  int s = 0;
  if (nrm > kTheta13) s = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
  if (s > 0) A = Ring::scale(A, std::ldexp(1.0, -s));

  const auto I = Ring::identity_like(A);
  const auto A2 = Ring::mul(A, A);
  const auto A4 = Ring::mul(A2, A2);
  const auto A6 = Ring::mul(A2, A4);

  // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
  auto U = Ring::mul(
      A, Ring::add(Ring::mul(A6, Ring::add(Ring::add(Ring::scale(A6, kB[13]),
                                                     Ring::scale(A4, kB[11])),
                                           Ring::scale(A2, kB[9]))),
                   Ring::add(Ring::add(Ring::scale(A6, kB[7]), Ring::scale(A4, kB[5])),
                             Ring::add(Ring::scale(A2, kB[3]), Ring::scale(I, kB[1])))));
  // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
  auto V = Ring::add(
      Ring::mul(A6, Ring::add(Ring::add(Ring::scale(A6, kB[12]), Ring::scale(A4, kB[10])),
                              Ring::scale(A2, kB[8]))),
      Ring::add(Ring::add(Ring::scale(A6, kB[6]), Ring::scale(A4, kB[4])),
                Ring::add(Ring::scale(A2, kB[2]), Ring::scale(I, kB[0]))));

  auto R = Ring::solve(Ring::add(V, Ring::scale(U, -1.0)), Ring::add(V, U));
  for (int i = 0; i < s; ++i) R = Ring::mul(R, R);
  if (!Ring::finite(R)) throw std::runtime_error("expm: overflow during evaluation");
  return R;
}

}  // namespace

Mat expm(const Mat& A, int dim_cap) {
  check_input(A, dim_cap, "expm");
  return expm_core<MatRing>(A);
}

Mat expm_frechet(const Mat& A, const Mat& E, int dim_cap) {
  check_input(A, dim_cap, "expm_frechet");
  check_input(E, dim_cap, "expm_frechet");
  if (E.rows() != A.rows()) throw std::invalid_argument("expm_frechet: shape mismatch");
  return expm_core<JetRing>(Jet{A, E}).d;
}

Mat expm_frechet_adjoint(const Mat& A, const Mat& G, int dim_cap) {
  // <L*(A,G), E> = <G, L(A,E)> holds with L*(A, G) = L(A^T, G).
  return expm_frechet(A.transpose(), G, dim_cap);
}

}  // namespace advntk
