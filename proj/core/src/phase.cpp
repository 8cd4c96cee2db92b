#include "phasornet/phase.hpp"

#include <cmath>

#include "phasornet/error.hpp"

namespace phasornet {

double wrap_phase(double p) {
  PHASORNET_CHECK(std::isfinite(p), "non-finite phase");
  double r = p - 2.0 * std::floor((p + 1.0) / 2.0);
  // floor can land one ulp outside the interval for large |p|.
  if (r >= 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  return r;
}

double circular_error(double a, double b) { return wrap_phase(a - b); }

Complex superpose(std::span<const double> x, std::span<const double> w) {
  PHASORNET_CHECK(x.size() == w.size(),
                  "superpose: phase and weight lengths differ");
  PHASORNET_CHECK(!x.empty(), "superpose: empty input");
  double re = 0.0;
  double im = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    re += w[j] * std::cos(kPi * x[j]);
    im += w[j] * std::sin(kPi * x[j]);
  }
  return {re, im};
}

double phase_of(Complex s) {
  if (s.real() == 0.0 && s.imag() == 0.0) return 0.0;
  return std::atan2(s.imag(), s.real()) / kPi;
}

double phasor_activate(std::span<const double> x, std::span<const double> w) {
  return phase_of(superpose(x, w));
}

ActivationGrad activation_grad(std::span<const double> x,
                               std::span<const double> w) {
  const Complex s = superpose(x, w);
  const double a = s.real();
  const double b = s.imag();
  const double mag_sq = a * a + b * b;

  ActivationGrad g;
  g.d_input.assign(x.size(), 0.0);
  g.d_weight.assign(x.size(), 0.0);
  if (mag_sq < kDegenerateMagnitudeSq) {
    g.degenerate = true;
    return g;
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double c = std::cos(kPi * x[j]);
    const double sn = std::sin(kPi * x[j]);
    g.d_input[j] = w[j] * (a * c + b * sn) / mag_sq;
    g.d_weight[j] = (a * sn - b * c) / (kPi * mag_sq);
  }
  return g;
}

PhaseVector encode_target(std::size_t label, std::size_t n_classes) {
  PHASORNET_CHECK(label < n_classes, "encode_target: class index out of range");
  PhaseVector y(n_classes, 0.0);
  y[label] = 0.5;
  return y;
}

double cosine_loss(std::span<const double> target,
                   std::span<const double> output) {
  PHASORNET_CHECK(target.size() == output.size(),
                  "cosine_loss: length mismatch");
  PHASORNET_CHECK(!target.empty(), "cosine_loss: empty input");
  double total = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    total += 1.0 - std::cos(kPi * (target[k] - output[k]));
  }
  return total / static_cast<double>(target.size());
}

std::vector<double> cosine_loss_grad(std::span<const double> target,
                                     std::span<const double> output) {
  PHASORNET_CHECK(target.size() == output.size(),
                  "cosine_loss_grad: length mismatch");
  PHASORNET_CHECK(!target.empty(), "cosine_loss_grad: empty input");
  const double scale = -kPi / static_cast<double>(target.size());
  std::vector<double> g(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    g[k] = scale * std::sin(kPi * (target[k] - output[k]));
  }
  return g;
}

std::size_t predict_class(std::span<const double> output) {
  PHASORNET_CHECK(!output.empty(), "predict_class: empty output");
  std::size_t best = 0;
  double best_dist = std::abs(circular_error(output[0], 0.5));
  for (std::size_t k = 1; k < output.size(); ++k) {
    const double d = std::abs(circular_error(output[k], 0.5));
    if (d < best_dist) {
      best = k;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace phasornet
