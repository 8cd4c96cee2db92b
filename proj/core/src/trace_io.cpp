#include "phasornet/trace_io.hpp"

#include <fmt/format.h>

#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "phasornet/error.hpp"

namespace phasornet {

void write_spikes_csv(std::ostream& out, const std::vector<SpikeTrain>& layers) {
  out << "layer,neuron,t\n";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const auto& e : layers[l].events) {
      out << fmt::format("{},{},{:.9f}\n", l, e.neuron, e.t);
    }
  }
}

std::vector<SpikeTrain> read_spikes_csv(std::istream& in,
                                        const std::vector<std::size_t>& n_neurons,
                                        std::optional<double> horizon) {
  std::string line;
  PHASORNET_CHECK(std::getline(in, line) && line == "layer,neuron,t",
                  "spike csv: expected header 'layer,neuron,t'");
  std::vector<SpikeTrain> layers;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t layer = 0;
    std::size_t neuron = 0;
    double t = 0.0;
    char c1 = 0;
    char c2 = 0;
    PHASORNET_CHECK((ss >> layer >> c1 >> neuron >> c2 >> t) && c1 == ',' && c2 == ',',
                    "spike csv: malformed row " + std::to_string(row));
    if (layers.size() <= layer) layers.resize(layer + 1);
    layers[layer].events.push_back({neuron, t});
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& train = layers[l];
    std::size_t max_neuron = 0;
    double last = 0.0;
    for (const auto& e : train.events) {
      max_neuron = std::max(max_neuron, e.neuron + 1);
      last = std::max(last, e.t);
    }
    train.n_neurons = l < n_neurons.size() ? n_neurons[l] : max_neuron;
    train.horizon = horizon.value_or(last);
    train.sort();
  }
  return layers;
}

std::string trace_to_json(const NetworkRun& run, const RFParams& params,
                          std::optional<std::size_t> label) {
  using nlohmann::json;
  json doc;
  doc["period"] = params.period;
  doc["steps_per_cycle"] = params.steps_per_cycle;
  doc["n_cycles"] = params.n_cycles;
  doc["prediction"] = run.prediction ? json(*run.prediction) : json(nullptr);
  doc["silent"] = !run.prediction.has_value();
  if (label) doc["label"] = *label;
  json layers = json::array();
  const auto& trace = run.trace;
  for (std::size_t l = 0; l < trace.decoded.size(); ++l) {
    json layer;
    layer["depth"] = l;
    layer["n_neurons"] = trace.produced[l].n_neurons;
    layer["spikes"] = trace.produced[l].size();
    layer["reference"] = trace.reference[l];
    json cycles = json::array();
    for (std::size_t k = 0; k < trace.decoded[l].size(); ++k) {
      const auto& d = trace.decoded[l][k];
      json phases = json::array();
      for (std::size_t j = 0; j < d.phases.size(); ++j) {
        phases.push_back(d.present[j] ? json(d.phases[j]) : json(nullptr));
      }
      json cycle;
      cycle["cycle"] = k;
      cycle["phases"] = std::move(phases);
      cycle["mse"] = trace.mse[l][k] ? json(*trace.mse[l][k]) : json(nullptr);
      cycles.push_back(std::move(cycle));
    }
    layer["cycles"] = std::move(cycles);
    layers.push_back(std::move(layer));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

}  // namespace phasornet
