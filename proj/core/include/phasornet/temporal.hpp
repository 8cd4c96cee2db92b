#pragma once

// Spiking execution of phasor networks with resonate-and-fire neurons.
//
// Each neuron holds a complex potential z with dz/dt = lambda*z + I(t),
// lambda = -b*T + i*2*pi/T. Input spikes arrive as box currents of width
// s*T centered on the spike time, with area equal to the synaptic weight.
// A neuron fires when its voltage
// Im(z) peaks above threshold outside the refractory window. Phases are
// carried by spike timing: phase x fires at k*T + T*(x+1)/2 in cycle k, and
// every layer adds a quarter period of integration delay.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phasornet/network.hpp"
#include "phasornet/phase.hpp"
#include "phasornet/rng.hpp"

namespace phasornet {

struct RFParams {
  double period = 1.0;          // T, seconds
  double leakage = 0.2;         // b
  double box_width = 0.05;      // s, fraction of T
  double threshold = 0.03;      // V_th
  double refractory = 0.25;     // seconds
  std::size_t steps_per_cycle = 40;
  std::size_t n_cycles = 10;
  // +1 maps later spikes to larger phases. Fixed by calibrate_orientation.
  int orientation = 1;

  void validate() const;
  double dt() const { return period / static_cast<double>(steps_per_cycle); }
  double horizon() const { return period * static_cast<double>(n_cycles); }
  std::size_t total_steps() const { return steps_per_cycle * n_cycles; }
  Complex lambda() const;
};

struct SpikeEvent {
  std::size_t neuron = 0;
  double t = 0.0;

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

struct SpikeTrain {
  std::vector<SpikeEvent> events;  // sorted by t, ties by neuron
  std::size_t n_neurons = 0;
  double horizon = 0.0;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  void sort();
  // Checks ordering and bounds.
  bool well_formed() const;

  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;
};

// One spike per neuron per cycle at k*T + T*(x_j + 1)/2.
SpikeTrain encode_phases(std::span<const double> phases, const RFParams& params,
                         std::size_t n_cycles);
SpikeTrain encode_phases(std::span<const double> phases, const RFParams& params);

struct DecodedPhases {
  PhaseVector phases;
  std::vector<bool> present;

  std::size_t missing() const;
};

// Phase of each neuron's latest spike in cycle `cycle`, removing a delay of
// depth*T/4. Neurons without a spike in that cycle are flagged missing.
DecodedPhases decode_spikes(const SpikeTrain& train, const RFParams& params,
                            std::size_t depth, std::size_t cycle);

// Like decode_spikes, but a neuron silent in `cycle` falls back to its most
// recent spike from an earlier cycle.
DecodedPhases decode_latest(const SpikeTrain& train, const RFParams& params,
                            std::size_t depth, std::size_t cycle);

// Maps a spike time to a phase for a given layer depth.
double spike_phase(double t, const RFParams& params, std::size_t depth);

// sum_i w_i * exp(-i*pi*x_i): the potential after one full cycle of a
// leak-free neuron starting at rest and driven by ideal impulses at
// t_i = T*x_i/2 (x shifted into [0, 2)). Equals conj(superpose(x, w)).
Complex impulse_closed_form(std::span<const double> x, std::span<const double> w);

// Exact update over dt with a constant real input current.
Complex rf_step(Complex z, double dt, const RFParams& params, double current);

// Integral over [step_start, step_end] of exp(lambda*(step_end - tau)) for the
// part of the step covered by [box_start, box_end]. Multiplying by the box
// height gives the box's exact contribution to z at step_end.
Complex box_response(double step_start, double step_end, double box_start,
                     double box_end, Complex lambda);

// Streaming peak detector for one or more voltage traces sampled on a
// uniform grid.
class SpikeDetector {
 public:
  SpikeDetector(std::size_t n_neurons, const RFParams& params);

  // Feeds the sample of `neuron` taken at time t. Returns the refined spike
  // time when the previous sample was an accepted peak.
  std::optional<double> observe(std::size_t neuron, double v, double t);

  std::optional<double> last_spike(std::size_t neuron) const {
    return last_spike_[neuron];
  }

 private:
  double dt_;
  double threshold_;
  double refractory_;
  std::vector<double> prev2_;
  std::vector<double> prev1_;
  std::vector<std::size_t> seen_;
  std::vector<std::optional<double>> last_spike_;
};

// Spike times detected in a sampled voltage trace starting at t0.
std::vector<double> detect_spikes(std::span<const double> voltage, double t0,
                                  double dt, const RFParams& params);

// Neuron population driven by explicit box currents. Used for single-neuron
// experiments and as a reference for simulate_layer.
class RFState {
 public:
  RFState(std::size_t n_neurons, const RFParams& params, double start_time = 0.0);

  // Registers a box current of width s*T and height w/(s*T) centered on t.
  void inject_spike(std::size_t neuron, double weight, double t);
  // Ideal delta input at the current time: z jumps by weight.
  void inject_impulse(std::size_t neuron, double weight);
  // Advances every neuron by dt, integrating active boxes exactly, and runs
  // spike detection on the new voltage samples. Returns neurons that fired.
  std::vector<SpikeEvent> advance(double dt);

  double time() const { return time_; }
  std::size_t size() const { return z_.size(); }
  Complex z(std::size_t neuron) const { return z_.at(neuron); }
  void set_z(std::size_t neuron, Complex z) { z_.at(neuron) = z; }
  std::optional<double> last_spike(std::size_t neuron) const {
    return detector_.last_spike(neuron);
  }
  std::size_t active_boxes(std::size_t neuron) const {
    return boxes_.at(neuron).size();
  }

 private:
  struct Box {
    double start;
    double end;
    double height;
  };
  RFParams params_;
  double time_ = 0.0;
  bool started_ = false;
  std::vector<Complex> z_;
  std::vector<std::vector<Box>> boxes_;
  SpikeDetector detector_;
};

struct LayerRun {
  SpikeTrain output;
  // Sampled voltage per neuron (steps + 1 samples) when requested.
  std::vector<std::vector<double>> voltage;
};

// Drives a layer of out_dim neurons with the input train through the
// out x in weight matrix for params.n_cycles cycles.
LayerRun simulate_layer(const Eigen::MatrixXd& weights, const SpikeTrain& input,
                        const RFParams& params, bool record_voltage = false);

struct PerturbOptions {
  double drop_probability = 0.0;
  double jitter_sigma = 0.0;  // fraction of T
  // Also perturb the encoded input train, not only inter-layer trains.
  bool include_input = false;
};

struct TemporalTrace {
  // produced[0] is the encoded input; produced[l] the output of dense layer l.
  std::vector<SpikeTrain> produced;
  // delivered[l] is the (possibly perturbed) train fed into dense layer l.
  std::vector<SpikeTrain> delivered;
  // decoded[l][k]: phases of produced[l] in cycle k at depth l.
  std::vector<std::vector<DecodedPhases>> decoded;
  // mse[l][k] against the atemporal phases; empty when undefined.
  std::vector<std::vector<std::optional<double>>> mse;
  // Atemporal phases per layer, entry 0 the projected input.
  std::vector<PhaseVector> reference;
  std::vector<std::vector<std::vector<double>>> voltage;
};

struct NetworkRun {
  std::optional<std::size_t> prediction;  // nullopt for a silent network
  DecodedPhases output;                   // final-cycle phases with fallback
  TemporalTrace trace;
};

// Projects the image atemporally, encodes it as spikes and runs each dense
// layer over the same global time grid. Perturbations use `rng`.
NetworkRun simulate_network(const Model& model, std::span<const double> image,
                            const RFParams& params,
                            const PerturbOptions& perturb = {},
                            Rng* rng = nullptr, bool record_voltage = false);

// Each event removed independently with probability p.
SpikeTrain drop_spikes(const SpikeTrain& train, double p, Rng& rng);

// Each event shifted by N(0, (sigma*period)^2), clamped to [0, horizon].
SpikeTrain jitter_spikes(const SpikeTrain& train, double sigma, double period,
                         Rng& rng);

struct SynopCount {
  // per_layer[l]: spikes delivered from source layer l times its fan-out.
  std::vector<std::uint64_t> per_layer;
  std::uint64_t total = 0;
};

SynopCount count_synops(const TemporalTrace& trace, const Model& model);

// Mean squared circular error over non-missing neurons; nullopt when every
// neuron is missing.
std::optional<double> temporal_phase_mse(const DecodedPhases& decoded,
                                         std::span<const double> reference);

double pearson_r(std::span<const double> a, std::span<const double> b);

// Pearson R between decoded and reference phases after unwrapping each
// decoded value to the branch nearest its reference. Missing entries are
// skipped.
double phase_correlation(const DecodedPhases& decoded,
                         std::span<const double> reference);

// Runs one layer on random input phases and returns the decode orientation
// (+1 or -1) whose final-cycle phases correlate best with the atemporal
// activation.
int calibrate_orientation(const Eigen::MatrixXd& weights, RFParams params,
                          Rng& rng, std::size_t n_inputs = 8);

struct TemporalEvalResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t silent = 0;
  std::size_t atemporal_correct = 0;
  double accuracy = 0.0;
  double atemporal_accuracy = 0.0;
  // Mean over images of the output-layer phase MSE per cycle (over images
  // where it is defined).
  std::vector<std::optional<double>> output_mse;
  // Final-cycle phase MSE per layer (entry 0 the encoded input), averaged
  // over images.
  std::vector<std::optional<double>> layer_mse;
  SynopCount synops;  // summed over images
};

// Temporal accuracy over the first `limit` samples. Image i draws its
// perturbation stream from Rng::derive(seed, stream, i) so results do not
// depend on `threads`.
TemporalEvalResult evaluate_temporal(const Model& model, const ImageDataset& data,
                                     std::size_t limit, const RFParams& params,
                                     const PerturbOptions& perturb = {},
                                     std::uint64_t seed = 1,
                                     std::uint64_t stream = 0,
                                     std::size_t threads = 1);

}  // namespace phasornet
