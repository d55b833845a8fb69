#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace advntk {

/// Pointwise activation of the hidden layers.
///
/// Erf is twice-differentiable and Lipschitz, the smooth reference choice.
/// Relu is kept because the experimental architectures use it, even though
/// it is not twice-differentiable.
enum class Activation { Erf, Relu };

inline const char* activation_name(Activation a) {
  return a == Activation::Erf ? "erf" : "relu";
}

inline double phi(Activation a, double x) {
  return a == Activation::Erf ? std::erf(x) : (x > 0.0 ? x : 0.0);
}

inline double phi_prime(Activation a, double x) {
  if (a == Activation::Erf) {
    return 1.1283791670955125738961589031215 * std::exp(-x * x);  // 2/sqrt(pi)
  }
  return x > 0.0 ? 1.0 : 0.0;  // phi'(0) = 0 by convention
}

/// Architecture description shared by the analytic kernels and finite nets.
/// depth_L counts hidden layers; the net has depth_L + 1 affine layers.
/// Analytic kernels depend on everything except hidden_width.
struct NetSpec {
  int depth_L = 1;
  int input_dim = 1;
  int output_dim = 1;
  Activation activation = Activation::Erf;
  double sigma_w = 1.76;
  double sigma_b = 0.18;
  int hidden_width = 0;  // finite nets only

  void validate() const {
    if (depth_L < 1) throw std::invalid_argument("NetSpec: depth_L must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("NetSpec: input_dim must be >= 1");
    if (output_dim < 1) throw std::invalid_argument("NetSpec: output_dim must be >= 1");
    if (!(sigma_w > 0.0)) throw std::invalid_argument("NetSpec: sigma_w must be > 0");
    if (!(sigma_b >= 0.0)) throw std::invalid_argument("NetSpec: sigma_b must be >= 0");
    if (!std::isfinite(sigma_w) || !std::isfinite(sigma_b))
      throw std::invalid_argument("NetSpec: sigma_w/sigma_b must be finite");
  }

  /// Width of layer l, counting layer 0 as the input. Requires hidden_width
  /// for 1 <= l <= depth_L.
  int layer_width(int l) const {
    if (l == 0) return input_dim;
    if (l == depth_L + 1) return output_dim;
    if (hidden_width <= 0)
      throw std::invalid_argument("NetSpec: hidden_width not set for finite net");
    return hidden_width;
  }
};

}  // namespace advntk
