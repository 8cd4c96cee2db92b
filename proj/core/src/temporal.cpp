#include "phasornet/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "phasornet/error.hpp"

namespace phasornet {

void RFParams::validate() const {
  PHASORNET_CHECK(std::isfinite(period) && period > 0.0, "period must be > 0");
  PHASORNET_CHECK(std::isfinite(leakage) && leakage >= 0.0, "leakage must be >= 0");
  PHASORNET_CHECK(box_width > 0.0 && box_width < 1.0,
                  "box width scale must be in (0, 1)");
  PHASORNET_CHECK(std::isfinite(threshold), "threshold must be finite");
  PHASORNET_CHECK(std::isfinite(refractory) && refractory >= 0.0,
                  "refractory period must be >= 0");
  PHASORNET_CHECK(steps_per_cycle >= 8, "steps per cycle must be >= 8");
  PHASORNET_CHECK(n_cycles >= 1, "cycle count must be >= 1");
  PHASORNET_CHECK(orientation == 1 || orientation == -1,
                  "orientation must be +1 or -1");
}

Complex RFParams::lambda() const {
  return {-leakage * period, 2.0 * kPi / period};
}

void SpikeTrain::sort() {
  std::sort(events.begin(), events.end(), [](const SpikeEvent& a, const SpikeEvent& b) {
    return a.t < b.t || (a.t == b.t && a.neuron < b.neuron);
  });
}

bool SpikeTrain::well_formed() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.neuron >= n_neurons || e.t < 0.0 || e.t > horizon) return false;
    if (i > 0 && events[i - 1].t > e.t) return false;
  }
  return true;
}

SpikeTrain encode_phases(std::span<const double> phases, const RFParams& params,
                         std::size_t n_cycles) {
  SpikeTrain train;
  train.n_neurons = phases.size();
  train.horizon = params.period * static_cast<double>(n_cycles);
  train.events.reserve(phases.size() * n_cycles);
  std::vector<double> offsets(phases.size());
  for (std::size_t j = 0; j < phases.size(); ++j) {
    // Wrapping sends +1 to -1 so every spike lands inside its own cycle.
    offsets[j] = params.period * (wrap_phase(phases[j]) + 1.0) / 2.0;
  }
  for (std::size_t k = 0; k < n_cycles; ++k) {
    const double start = params.period * static_cast<double>(k);
    for (std::size_t j = 0; j < phases.size(); ++j) {
      train.events.push_back({j, start + offsets[j]});
    }
  }
  train.sort();
  return train;
}

SpikeTrain encode_phases(std::span<const double> phases, const RFParams& params) {
  return encode_phases(phases, params, params.n_cycles);
}

std::size_t DecodedPhases::missing() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), false));
}

double spike_phase(double t, const RFParams& params, std::size_t depth) {
  const double T = params.period;
  double shifted = std::fmod(t - static_cast<double>(depth) * T / 4.0, T);
  if (shifted < 0.0) shifted += T;
  const double phase = wrap_phase(2.0 * shifted / T - 1.0);
  return params.orientation > 0 ? phase : wrap_phase(-phase);
}

namespace {

DecodedPhases decode_window(const SpikeTrain& train, const RFParams& params,
                            std::size_t depth, double lo, double hi) {
  DecodedPhases out;
  out.phases.assign(train.n_neurons, 0.0);
  out.present.assign(train.n_neurons, false);
  std::vector<double> latest(train.n_neurons, -1.0);
  for (const auto& e : train.events) {
    if (e.t < lo || e.t >= hi || e.neuron >= train.n_neurons) continue;
    if (!out.present[e.neuron] || e.t >= latest[e.neuron]) {
      latest[e.neuron] = e.t;
      out.present[e.neuron] = true;
    }
  }
  for (std::size_t j = 0; j < train.n_neurons; ++j) {
    if (out.present[j]) out.phases[j] = spike_phase(latest[j], params, depth);
  }
  return out;
}

}  // namespace

DecodedPhases decode_spikes(const SpikeTrain& train, const RFParams& params,
                            std::size_t depth, std::size_t cycle) {
  const double lo = params.period * static_cast<double>(cycle);
  return decode_window(train, params, depth, lo, lo + params.period);
}

DecodedPhases decode_latest(const SpikeTrain& train, const RFParams& params,
                            std::size_t depth, std::size_t cycle) {
  const double hi = params.period * static_cast<double>(cycle + 1);
  return decode_window(train, params, depth, 0.0, hi);
}

Complex impulse_closed_form(std::span<const double> x, std::span<const double> w) {
  PHASORNET_CHECK(x.size() == w.size(),
                  "impulse_closed_form: phase and weight lengths differ");
  PHASORNET_CHECK(!x.empty(), "impulse_closed_form: empty input");
  Complex z{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    z += w[i] * std::exp(Complex{0.0, -kPi * x[i]});
  }
  return z;
}

Complex rf_step(Complex z, double dt, const RFParams& params, double current) {
  const Complex lambda = params.lambda();
  const Complex e = std::exp(lambda * dt);
  return z * e + current * (e - 1.0) / lambda;
}

Complex box_response(double step_start, double step_end, double box_start,
                     double box_end, Complex lambda) {
  const double lo = std::max(step_start, box_start);
  const double hi = std::min(step_end, box_end);
  if (hi <= lo) return {0.0, 0.0};
  return (std::exp(lambda * (step_end - lo)) - std::exp(lambda * (step_end - hi))) /
         lambda;
}

namespace {

// Offset (in samples, within [-0.5, 0.5]) of the vertex of the parabola
// through three samples whose middle one is a rising-to-falling peak above
// threshold.
std::optional<double> peak_offset(double before, double peak, double after,
                                  double threshold) {
  if (!(peak > before && peak >= after && peak > threshold)) return std::nullopt;
  const double denom = before - 2.0 * peak + after;
  const double offset = denom < 0.0 ? 0.5 * (before - after) / denom : 0.0;
  return std::clamp(offset, -0.5, 0.5);
}

}  // namespace

SpikeDetector::SpikeDetector(std::size_t n_neurons, const RFParams& params)
    : dt_(params.dt()),
      threshold_(params.threshold),
      refractory_(params.refractory),
      prev2_(n_neurons, 0.0),
      prev1_(n_neurons, 0.0),
      seen_(n_neurons, 0),
      last_spike_(n_neurons) {}

std::optional<double> SpikeDetector::observe(std::size_t neuron, double v, double t) {
  std::optional<double> fired;
  if (seen_[neuron] >= 2) {
    if (auto offset = peak_offset(prev2_[neuron], prev1_[neuron], v, threshold_)) {
      const double ts = t - dt_ + *offset * dt_;
      const auto& last = last_spike_[neuron];
      if (!last || ts - *last > refractory_) {
        last_spike_[neuron] = ts;
        fired = ts;
      }
    }
  }
  prev2_[neuron] = prev1_[neuron];
  prev1_[neuron] = v;
  ++seen_[neuron];
  return fired;
}

std::vector<double> detect_spikes(std::span<const double> voltage, double t0,
                                  double dt, const RFParams& params) {
  std::vector<double> times;
  std::optional<double> last;
  for (std::size_t n = 1; n + 1 < voltage.size(); ++n) {
    const auto offset =
        peak_offset(voltage[n - 1], voltage[n], voltage[n + 1], params.threshold);
    if (!offset) continue;
    const double ts = t0 + (static_cast<double>(n) + *offset) * dt;
    if (!last || ts - *last > params.refractory) {
      times.push_back(ts);
      last = ts;
    }
  }
  return times;
}

RFState::RFState(std::size_t n_neurons, const RFParams& params, double start_time)
    : params_(params),
      time_(start_time),
      z_(n_neurons, Complex{0.0, 0.0}),
      boxes_(n_neurons),
      detector_(n_neurons, params) {
  params_.validate();
}

void RFState::inject_spike(std::size_t neuron, double weight, double t) {
  PHASORNET_CHECK(neuron < z_.size(), "inject_spike: neuron index out of range");
  const double width = params_.box_width * params_.period;
  boxes_[neuron].push_back({t - 0.5 * width, t + 0.5 * width, weight / width});
}

void RFState::inject_impulse(std::size_t neuron, double weight) {
  PHASORNET_CHECK(neuron < z_.size(), "inject_impulse: neuron index out of range");
  z_[neuron] += weight;
}

std::vector<SpikeEvent> RFState::advance(double dt) {
  const Complex lambda = params_.lambda();
  const Complex decay = std::exp(lambda * dt);
  const double t0 = time_;
  const double t1 = time_ + dt;
  std::vector<SpikeEvent> fired;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (!started_) detector_.observe(i, z_[i].imag(), t0);
    Complex z = z_[i] * decay;
    auto& boxes = boxes_[i];
    for (const auto& b : boxes) {
      z += b.height * box_response(t0, t1, b.start, b.end, lambda);
    }
    std::erase_if(boxes, [t1](const Box& b) { return b.end <= t1; });
    z_[i] = z;
    if (auto ts = detector_.observe(i, z.imag(), t1)) fired.push_back({i, *ts});
  }
  started_ = true;
  time_ = t1;
  return fired;
}

LayerRun simulate_layer(const Eigen::MatrixXd& weights, const SpikeTrain& input,
                        const RFParams& params, bool record_voltage) {
  params.validate();
  PHASORNET_CHECK(static_cast<std::size_t>(weights.cols()) == input.n_neurons,
                  "simulate_layer: input train has " +
                      std::to_string(input.n_neurons) + " neurons, weights expect " +
                      std::to_string(weights.cols()));
  const auto n_out = static_cast<std::size_t>(weights.rows());
  const std::size_t steps = params.total_steps();
  const double dt = params.dt();
  const Complex lambda = params.lambda();
  const Complex decay = std::exp(lambda * dt);
  const double width = params.box_width * params.period;
  const double half = 0.5 * width;
  const double height = 1.0 / width;

  std::vector<SpikeEvent> events = input.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const SpikeEvent& a, const SpikeEvent& b) { return a.t < b.t; });

  LayerRun run;
  run.output.n_neurons = n_out;
  run.output.horizon = params.horizon();
  if (record_voltage) {
    run.voltage.assign(n_out, std::vector<double>());
    for (auto& v : run.voltage) {
      v.reserve(steps + 1);
      v.push_back(0.0);
    }
  }

  Eigen::VectorXd zr = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
  Eigen::VectorXd zi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
  SpikeDetector detector(n_out, params);
  for (std::size_t k = 0; k < n_out; ++k) detector.observe(k, 0.0, 0.0);

  std::vector<Complex> drive(input.n_neurons, Complex{0.0, 0.0});
  std::vector<std::size_t> touched;
  std::vector<bool> is_touched(input.n_neurons, false);
  std::vector<std::size_t> active;
  std::size_t next = 0;

  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * dt;
    const double t1 = static_cast<double>(n + 1) * dt;
    while (next < events.size() && events[next].t - half < t1) active.push_back(next++);

    for (std::size_t idx : active) {
      const auto& e = events[idx];
      const Complex g = height * box_response(t0, t1, e.t - half, e.t + half, lambda);
      if (g == Complex{0.0, 0.0}) continue;
      drive[e.neuron] += g;
      if (!is_touched[e.neuron]) {
        is_touched[e.neuron] = true;
        touched.push_back(e.neuron);
      }
    }
    std::erase_if(active, [&](std::size_t idx) { return events[idx].t + half <= t1; });

    const Eigen::VectorXd rotated_r = zr * decay.real() - zi * decay.imag();
    zi = zr * decay.imag() + zi * decay.real();
    zr = rotated_r;
    for (std::size_t j : touched) {
      const auto col = weights.col(static_cast<Eigen::Index>(j));
      zr.noalias() += drive[j].real() * col;
      zi.noalias() += drive[j].imag() * col;
      drive[j] = {0.0, 0.0};
      is_touched[j] = false;
    }
    touched.clear();

    for (std::size_t k = 0; k < n_out; ++k) {
      const double v = zi(static_cast<Eigen::Index>(k));
      if (record_voltage) run.voltage[k].push_back(v);
      if (auto ts = detector.observe(k, v, t1)) run.output.events.push_back({k, *ts});
    }
  }
  run.output.sort();
  return run;
}

namespace {

std::optional<std::size_t> predict_present(const DecodedPhases& d) {
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (std::size_t k = 0; k < d.phases.size(); ++k) {
    if (!d.present[k]) continue;
    const double dist = std::abs(circular_error(d.phases[k], 0.5));
    if (!best || dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

SpikeTrain perturb(const SpikeTrain& train, const PerturbOptions& opts,
                   const RFParams& params, Rng* rng) {
  if (opts.drop_probability <= 0.0 && opts.jitter_sigma <= 0.0) return train;
  PHASORNET_CHECK(rng != nullptr, "simulate_network: perturbations need an rng");
  SpikeTrain out = train;
  if (opts.drop_probability > 0.0) out = drop_spikes(out, opts.drop_probability, *rng);
  if (opts.jitter_sigma > 0.0) {
    out = jitter_spikes(out, opts.jitter_sigma, params.period, *rng);
  }
  return out;
}

}  // namespace

NetworkRun simulate_network(const Model& model, std::span<const double> image,
                            const RFParams& params, const PerturbOptions& opts,
                            Rng* rng, bool record_voltage) {
  params.validate();
  model.validate();
  NetworkRun run;
  auto& trace = run.trace;
  trace.reference = layer_phases(model, image);
  trace.produced.push_back(encode_phases(trace.reference[0], params));

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const bool perturbed = l > 0 || opts.include_input;
    trace.delivered.push_back(perturbed ? perturb(trace.produced[l], opts, params, rng)
                                        : trace.produced[l]);
    LayerRun layer =
        simulate_layer(model.layers[l].weights, trace.delivered[l], params, record_voltage);
    trace.produced.push_back(std::move(layer.output));
    if (record_voltage) trace.voltage.push_back(std::move(layer.voltage));
  }

  trace.decoded.resize(trace.produced.size());
  trace.mse.resize(trace.produced.size());
  for (std::size_t l = 0; l < trace.produced.size(); ++l) {
    for (std::size_t k = 0; k < params.n_cycles; ++k) {
      trace.decoded[l].push_back(decode_spikes(trace.produced[l], params, l, k));
      trace.mse[l].push_back(temporal_phase_mse(trace.decoded[l].back(), trace.reference[l]));
    }
  }

  const std::size_t depth = model.layers.size();
  run.output = decode_latest(trace.produced[depth], params, depth, params.n_cycles - 1);
  run.prediction = predict_present(run.output);
  return run;
}

SynopCount count_synops(const TemporalTrace& trace, const Model& model) {
  SynopCount c;
  c.per_layer.assign(model.layers.size() + 1, 0);
  for (std::size_t l = 0; l < model.layers.size() && l < trace.delivered.size(); ++l) {
    c.per_layer[l] = static_cast<std::uint64_t>(trace.delivered[l].size()) *
                     static_cast<std::uint64_t>(model.layers[l].out_dim());
    c.total += c.per_layer[l];
  }
  return c;
}

std::optional<double> temporal_phase_mse(const DecodedPhases& decoded,
                                         std::span<const double> reference) {
  PHASORNET_CHECK(decoded.phases.size() == reference.size(),
                  "temporal_phase_mse: layer size mismatch");
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    if (!decoded.present[j]) continue;
    const double e = circular_error(decoded.phases[j], reference[j]);
    total += e * e;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
  PHASORNET_CHECK(a.size() == b.size(), "pearson_r: length mismatch");
  if (a.size() < 2) return 0.0;
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double phase_correlation(const DecodedPhases& decoded,
                         std::span<const double> reference) {
  PHASORNET_CHECK(decoded.phases.size() == reference.size(),
                  "phase_correlation: length mismatch");
  std::vector<double> d;
  std::vector<double> r;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    if (!decoded.present[j]) continue;
    d.push_back(reference[j] + circular_error(decoded.phases[j], reference[j]));
    r.push_back(reference[j]);
  }
  return pearson_r(d, r);
}

int calibrate_orientation(const Eigen::MatrixXd& weights, RFParams params, Rng& rng,
                          std::size_t n_inputs) {
  const auto n_in = static_cast<std::size_t>(weights.cols());
  const auto n_out = static_cast<std::size_t>(weights.rows());
  std::vector<double> decoded_pos;
  std::vector<double> decoded_neg;
  std::vector<double> reference;
  for (std::size_t s = 0; s < n_inputs; ++s) {
    PhaseVector x(n_in);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    params.orientation = 1;
    const LayerRun run = simulate_layer(weights, encode_phases(x, params), params);
    for (int orientation : {1, -1}) {
      params.orientation = orientation;
      const auto dec = decode_spikes(run.output, params, 1, params.n_cycles - 1);
      for (std::size_t k = 0; k < n_out; ++k) {
        if (!dec.present[k]) continue;
        const Eigen::VectorXd row = weights.row(static_cast<Eigen::Index>(k));
        const double ref = phasor_activate(x, std::span<const double>(row.data(), n_in));
        auto& sink = orientation > 0 ? decoded_pos : decoded_neg;
        sink.push_back(ref + circular_error(dec.phases[k], ref));
        if (orientation > 0) reference.push_back(ref);
      }
    }
  }
  if (reference.empty()) return 1;
  // Both orientations see the same spikes, so the present sets coincide.
  const double r_pos = pearson_r(decoded_pos, reference);
  const double r_neg = pearson_r(decoded_neg, reference);
  return r_pos >= r_neg ? 1 : -1;
}

TemporalEvalResult evaluate_temporal(const Model& model, const ImageDataset& data,
                                     std::size_t limit, const RFParams& params,
                                     const PerturbOptions& perturb,
                                     std::uint64_t seed, std::uint64_t stream,
                                     std::size_t threads) {
  const std::size_t n = std::min(limit, data.size());
  PHASORNET_CHECK(n > 0, "empty evaluation set");
  params.validate();

  struct ImageOutcome {
    bool correct = false;
    bool silent = false;
    bool atemporal_correct = false;
    std::vector<std::optional<double>> mse;
    std::vector<std::optional<double>> final_mse;
    SynopCount synops;
  };
  std::vector<ImageOutcome> outcomes(n);
  auto work = [&](std::size_t worker, std::size_t n_workers) {
    for (std::size_t i = worker; i < n; i += n_workers) {
      Rng rng = Rng::derive(seed, stream, i);
      const auto image = data.image_f64(i);
      const NetworkRun run = simulate_network(model, image, params, perturb, &rng);
      auto& o = outcomes[i];
      o.silent = !run.prediction.has_value();
      o.correct = run.prediction && *run.prediction == data.label(i);
      o.atemporal_correct = predict_class(run.trace.reference.back()) == data.label(i);
      o.mse = run.trace.mse.back();
      for (const auto& per_cycle : run.trace.mse) o.final_mse.push_back(per_cycle.back());
      o.synops = count_synops(run.trace, model);
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }

  TemporalEvalResult r;
  r.total = n;
  r.synops.per_layer.assign(model.layers.size() + 1, 0);
  const auto mean_of = [](double sum, std::size_t count) {
    return count > 0 ? std::optional<double>(sum / static_cast<double>(count))
                     : std::nullopt;
  };
  std::vector<double> mse_sum(params.n_cycles, 0.0);
  std::vector<std::size_t> mse_count(params.n_cycles, 0);
  std::vector<double> layer_sum(model.layers.size() + 1, 0.0);
  std::vector<std::size_t> layer_count(model.layers.size() + 1, 0);
  for (const auto& o : outcomes) {
    r.correct += o.correct ? 1 : 0;
    r.silent += o.silent ? 1 : 0;
    r.atemporal_correct += o.atemporal_correct ? 1 : 0;
    for (std::size_t k = 0; k < params.n_cycles; ++k) {
      if (o.mse[k]) {
        mse_sum[k] += *o.mse[k];
        ++mse_count[k];
      }
    }
    for (std::size_t l = 0; l < o.final_mse.size(); ++l) {
      if (o.final_mse[l]) {
        layer_sum[l] += *o.final_mse[l];
        ++layer_count[l];
      }
    }
    for (std::size_t l = 0; l < o.synops.per_layer.size(); ++l) {
      r.synops.per_layer[l] += o.synops.per_layer[l];
    }
    r.synops.total += o.synops.total;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(n);
  r.atemporal_accuracy = static_cast<double>(r.atemporal_correct) / static_cast<double>(n);
  for (std::size_t k = 0; k < params.n_cycles; ++k) {
    r.output_mse.push_back(mean_of(mse_sum[k], mse_count[k]));
  }
  for (std::size_t l = 0; l < layer_sum.size(); ++l) {
    r.layer_mse.push_back(mean_of(layer_sum[l], layer_count[l]));
  }
  return r;
}

}  // namespace phasornet
