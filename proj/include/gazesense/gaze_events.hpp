#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "gazesense/signal.hpp"

namespace gazesense::events {

enum class EventKind { Fixation, Saccade };

std::string_view to_string(EventKind k);

struct GazeEvent {
  EventKind kind = EventKind::Fixation;
  double onset_s = 0.0;
  double offset_s = 0.0;
  double duration_s = 0.0;
  double amplitude = 0.0;
  double peak_velocity = 0.0;
  double mean_velocity = 0.0;

  double midpoint_s() const { return 0.5 * (onset_s + offset_s); }
};

// Velocity-threshold detector settings. Defaults are for screen millimetres;
// use degree_defaults() when gaze is expressed in degrees of visual angle.
struct EventDetectorParams {
  double initial_threshold = 300.0;
  double min_fixation_duration_s = 0.050;
  double min_saccade_duration_s = 0.010;
  int max_iterations = 100;
  double convergence_tol = 1.0;
  // Lower bound for the adaptive threshold; 0 disables it.
  double min_threshold = 0.0;
  int smoothing_window = 5;
  int smoothing_polyorder = 2;

  static EventDetectorParams degree_defaults();
  void validate() const;
};

struct ThresholdResult {
  double threshold = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Iterates PT <- mean(s <= PT) + 6 sd(s <= PT) over the valid speed samples,
// starting at params.initial_threshold. A run that exhausts max_iterations
// returns the last iterate with converged = false.
ThresholdResult adaptive_velocity_threshold(const SignalChannel& speed, const EventDetectorParams& params);

struct EventDetection {
  std::vector<GazeEvent> events;
  ThresholdResult threshold;
};

// Full detector: differentiates and smooths the gaze channels, thresholds the
// combined speed, trims saccade edges on the unsmoothed speed, then merges
// candidates shorter than their minimum duration into their neighbours.
EventDetection run_event_detection(const SignalChannel& gaze_x, const SignalChannel& gaze_y,
                                   const EventDetectorParams& params);

std::vector<GazeEvent> detect_events(const SignalChannel& gaze_x, const SignalChannel& gaze_y,
                                     const EventDetectorParams& params);

void write_events_csv(const std::filesystem::path& path, const std::vector<GazeEvent>& events);

}  // namespace gazesense::events
