#include <algorithm>

#include "phasornet/error.hpp"
#include "phasornet/temporal.hpp"

namespace phasornet {

SpikeTrain drop_spikes(const SpikeTrain& train, double p, Rng& rng) {
  PHASORNET_CHECK(p >= 0.0 && p <= 1.0, "drop probability must be in [0, 1]");
  SpikeTrain out;
  out.n_neurons = train.n_neurons;
  out.horizon = train.horizon;
  if (p == 0.0) {
    out.events = train.events;
    return out;
  }
  for (const auto& e : train.events) {
    if (!rng.bernoulli(p)) out.events.push_back(e);
  }
  return out;
}

SpikeTrain jitter_spikes(const SpikeTrain& train, double sigma, double period,
                         Rng& rng) {
  PHASORNET_CHECK(sigma >= 0.0, "jitter sigma must be >= 0");
  SpikeTrain out = train;
  if (sigma == 0.0) return out;
  const double scale = sigma * period;
  for (auto& e : out.events) {
    e.t = std::clamp(e.t + scale * rng.normal(), 0.0, train.horizon);
  }
  out.sort();
  return out;
}

}  // namespace phasornet
