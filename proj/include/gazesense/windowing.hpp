#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gazesense/gaze_events.hpp"
#include "gazesense/signal.hpp"
#include "gazesense/stats.hpp"

namespace gazesense::windowing {

struct WindowSpec {
  double length_s = 60.0;
  double shift_s = 1.0;
  double min_valid_fraction = 0.5;

  void validate() const;
};

struct Window {
  double start_s = 0.0;
  double end_s = 0.0;
  double valid_fraction = 0.0;
  bool dropped = false;
};

// Windows [t - length, t) for t = length, length + shift, ... up to the trip
// duration; windows under min_valid_fraction come back flagged as dropped.
std::vector<Window> sliding_windows(const TripRecording& trip, const WindowSpec& spec);

enum class Source { Camera, Can, Both };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);

inline constexpr std::size_t kEyeFeatureCount = 56;
inline constexpr std::size_t kEventFeatureCount = 58;
inline constexpr std::size_t kHeadFeatureCount = 56;
inline constexpr std::size_t kCameraFeatureCount = kEyeFeatureCount + kEventFeatureCount + kHeadFeatureCount;

// Feature-name builders; the group prefix ("eye.", "event.", "head.", "can.")
// is what group_importance keys on.
std::vector<std::string> eye_feature_names();
std::vector<std::string> event_feature_names();
std::vector<std::string> head_feature_names();
std::vector<std::string> can_feature_names(const std::vector<CanChannelDecl>& decl);
std::vector<std::string> feature_names(Source source, const std::vector<CanChannelDecl>& decl);

std::string feature_group(std::string_view feature_name);

struct FeatureOptions {
  WindowSpec window;
  events::EventDetectorParams detector;
  ScreenGeometry geometry;
  double max_gap_s = kDefaultMaxGapS;
  Source source = Source::Camera;
  std::vector<CanChannelDecl> can_channels;
  // Incremental sorted-window maintenance; false recomputes every window from scratch.
  bool streaming = true;
};

struct FeatureVector {
  std::string participant_id;
  std::string trip_id;
  Scenario scenario = Scenario::Highway;
  Block block = Block::NoAlcohol;
  double bac_gdl = 0.0;
  double window_end_s = 0.0;
  std::vector<double> values;
};

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<FeatureVector> rows;

  std::size_t cols() const { return feature_names.size(); }
  void validate() const;
};

// Pre-processed, trip-wide signals the window features are computed from.
struct TripSignals {
  std::vector<SignalChannel> eye;   // pos_x, pos_y, vel_x, vel_y, vel, acc_x, acc_y, acc
  std::vector<SignalChannel> head;  // vel_x, vel_y, vel_z, vel, acc_x, acc_y, acc_z, acc
  std::vector<SignalChannel> can;   // declared signals with their derivatives, in declaration order
  std::vector<events::GazeEvent> events;
  events::ThresholdResult threshold;
};

// Gap interpolation, visual-angle conversion, derivatives and event detection.
// Throws MissingChannel if a declared CAN signal is absent from the trip.
TripSignals prepare_signals(const TripRecording& trip, const FeatureOptions& opts);

// Batch (non-incremental) per-window features. Each throws AllInvalid when a
// signal has no valid sample inside [start_s, end_s).
std::vector<double> eye_movement_features(const TripSignals& sig, double start_s, double end_s);
std::vector<double> head_movement_features(const TripSignals& sig, double start_s, double end_s);
std::vector<double> can_features(const TripSignals& sig, double start_s, double end_s);
std::vector<double> gaze_event_features(const std::vector<events::GazeEvent>& events, double start_s,
                                        double end_s);

struct TripFeatures {
  std::vector<FeatureVector> rows;
  std::size_t window_count = 0;
  std::size_t dropped = 0;
  events::ThresholdResult threshold;
};

TripFeatures extract_trip_features(const TripRecording& trip, const FeatureOptions& opts);

struct DatasetBuild {
  FeatureMatrix matrix;
  std::size_t window_count = 0;
  std::size_t dropped = 0;
};

// Loads every manifest trip and concatenates its window features in manifest
// order. jobs = 0 uses all hardware threads; the output does not depend on it.
DatasetBuild build_dataset(const StudyManifest& manifest, const FeatureOptions& opts,
                           const std::filesystem::path& base_dir, unsigned jobs = 0,
                           bool allow_metadata_mismatch = false);

}  // namespace gazesense::windowing
