#pragma once

// Phase arithmetic and the phasor activation.
//
// Phases are real angles normalized by pi, so a phase p corresponds to the
// unit phasor exp(i*pi*p). Values that differ by 2 are the same phase.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace phasornet {

using Complex = std::complex<double>;
using PhaseVector = std::vector<double>;
using WeightVector = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Below this squared magnitude a superposition is treated as degenerate:
// its phase is 0 and it carries no gradient.
inline constexpr double kDegenerateMagnitudeSq = 1e-12;

// Maps p onto the half-open interval [-1, 1). Throws on non-finite input.
double wrap_phase(double p);

// Signed shortest difference a - b on the circle, in [-1, 1).
double circular_error(double a, double b);

// sum_j w_j * exp(i*pi*x_j)
Complex superpose(std::span<const double> x, std::span<const double> w);

// atan2(im, re) / pi in [-1, 1]; a zero state maps to 0.
double phase_of(Complex s);

double phasor_activate(std::span<const double> x, std::span<const double> w);

struct ActivationGrad {
  std::vector<double> d_input;
  std::vector<double> d_weight;
  bool degenerate = false;
};

// Analytic partials of phasor_activate with respect to inputs and weights.
// With S = a + ib the superposition and theta_j = pi*x_j:
//   dy/dx_j = w_j (a cos theta_j + b sin theta_j) / |S|^2
//   dy/dw_j = (a sin theta_j - b cos theta_j) / (pi |S|^2)
ActivationGrad activation_grad(std::span<const double> x,
                               std::span<const double> w);

// Quadrature one-hot target: 0.5 at the class index, 0 elsewhere.
PhaseVector encode_target(std::size_t label, std::size_t n_classes);

// mean_k (1 - cos(pi * (y_k - y_hat_k)))
double cosine_loss(std::span<const double> target,
                   std::span<const double> output);

// d cosine_loss / d output_k = -(pi / n) sin(pi * (y_k - y_hat_k))
std::vector<double> cosine_loss_grad(std::span<const double> target,
                                     std::span<const double> output);

// Index of the output whose phase is circularly closest to 0.5. Ties go to
// the lowest index.
std::size_t predict_class(std::span<const double> output);

}  // namespace phasornet
