#pragma once

// Spike-train CSV (`layer,neuron,t`, t in seconds with 9 decimals) and the
// JSON trace of per-cycle decoded phases and phase MSE.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasornet/temporal.hpp"

namespace phasornet {

// Rows ordered by layer, then time. Layer 0 is the encoded input.
void write_spikes_csv(std::ostream& out, const std::vector<SpikeTrain>& layers);

// Parses the CSV back into one train per layer. Neuron counts and horizons
// are inferred (max index + 1, last spike time) unless given.
std::vector<SpikeTrain> read_spikes_csv(
    std::istream& in, const std::vector<std::size_t>& n_neurons = {},
    std::optional<double> horizon = std::nullopt);

std::string trace_to_json(const NetworkRun& run, const RFParams& params,
                          std::optional<std::size_t> label = std::nullopt);

}  // namespace phasornet
