#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gazesense/gaze_events.hpp"
#include "gazesense/synthgen.hpp"

namespace testsupport {

struct Recovery {
  std::size_t injected = 0;
  std::size_t recovered = 0;
  double max_onset_error_s = 0.0;
  double max_amplitude_error = 0.0;

  double recall() const { return injected == 0 ? 1.0 : static_cast<double>(recovered) / static_cast<double>(injected); }
};

// A constructed saccade counts as recovered when some detected saccade starts
// within onset_tol of it and reproduces its amplitude within amp_tol
// (relative).
inline Recovery match_saccades(const std::vector<gazesense::synth::GroundTruthEvent>& truth,
                               const std::vector<gazesense::events::GazeEvent>& detected,
                               double min_amplitude = 20.0, double onset_tol = 0.020,
                               double amp_tol = 0.10) {
  using gazesense::events::EventKind;
  std::vector<const gazesense::events::GazeEvent*> sacc;
  for (const auto& e : detected) {
    if (e.kind == EventKind::Saccade) sacc.push_back(&e);
  }
  Recovery r;
  for (const auto& t : truth) {
    if (t.kind != EventKind::Saccade || t.amplitude < min_amplitude) continue;
    ++r.injected;
    auto it = std::lower_bound(sacc.begin(), sacc.end(), t.onset_s - onset_tol,
                               [](const auto* e, double v) { return e->onset_s < v; });
    const gazesense::events::GazeEvent* best = nullptr;
    for (; it != sacc.end() && (*it)->onset_s <= t.onset_s + onset_tol; ++it) {
      if (!best || std::abs((*it)->onset_s - t.onset_s) < std::abs(best->onset_s - t.onset_s)) best = *it;
    }
    if (!best) continue;
    const double amp_err = std::abs(best->amplitude - t.amplitude) / t.amplitude;
    if (amp_err > amp_tol) continue;
    ++r.recovered;
    r.max_onset_error_s = std::max(r.max_onset_error_s, std::abs(best->onset_s - t.onset_s));
    r.max_amplitude_error = std::max(r.max_amplitude_error, amp_err);
  }
  return r;
}

inline gazesense::synth::TripRequest sober_request(std::uint64_t seed, double duration_s = 600.0) {
  gazesense::synth::TripRequest req;
  req.seed = seed;
  req.duration_s = duration_s;
  return req;
}

}  // namespace testsupport
