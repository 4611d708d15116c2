#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gazesense/gaze_events.hpp"
#include "gazesense/signal.hpp"

namespace gazesense::synth {

// Multipliers applied on top of a participant's baseline behaviour. The
// identity profile (all 1.0) is the sober condition.
struct EffectProfile {
  double fixation_duration_scale = 1.0;  // mean fixation duration
  double saccade_rate_scale = 1.0;       // probability that a fixation ends in a saccade
  double saccade_amplitude_scale = 1.0;
  double jitter_scale = 1.0;             // fixational gaze noise
  double head_drift_scale = 1.0;
  double lane_scale = 1.0;               // lane-position variability (CAN)

  void validate() const;
  bool operator==(const EffectProfile&) const = default;
};

// Linear dose-response: every multiplier moves from 1.0 at BAC 0 towards its
// value in `anchor` at BAC `anchor_bac`.
EffectProfile interpolate_profile(const EffectProfile& anchor, double anchor_bac, double bac);

// Profiles indexed by Block (no_alcohol, moderate, severe).
using BlockProfiles = std::array<EffectProfile, 3>;

// Named profile sets: "none", "default", "strong", "gaze_events".
BlockProfiles named_profiles(std::string_view name);

struct ParticipantTraits {
  double fixation_scale = 1.0;
  double amplitude_scale = 1.0;
  double jitter_scale = 1.0;
  double head_scale = 1.0;
};

struct GroundTruthEvent {
  events::EventKind kind = events::EventKind::Fixation;
  double onset_s = 0.0;
  double offset_s = 0.0;
  double amplitude = 0.0;
  double peak_velocity = 0.0;
};

struct SyntheticTrip {
  TripRecording trip;
  std::vector<GroundTruthEvent> events;
};

struct TripRequest {
  EffectProfile profile;
  ParticipantTraits traits;
  Scenario scenario = Scenario::Highway;
  double duration_s = 600.0;
  double sample_rate_hz = kNominalGazeRateHz;
  bool with_can = false;
  std::uint64_t seed = 0;
};

// Alternating fixation/saccade process with lognormal fixation durations,
// main-sequence saccade kinematics (minimum-jerk profile), Gaussian gaze
// noise, tracking dropouts and a slow head random walk. Throws BadConfig for
// durations under 120 s or invalid profiles.
SyntheticTrip generate_trip(const TripRequest& req);

struct SynthConfig {
  int n_participants = 10;
  int trips_per_block = 3;
  double trip_duration_s = 600.0;
  double sample_rate_hz = kNominalGazeRateHz;
  double trait_spread = 0.2;
  std::uint64_t seed = 42;
  bool with_can = false;
  BlockProfiles profiles = named_profiles("default");

  void validate() const;
};

ParticipantTraits participant_traits(const SynthConfig& cfg, int participant);

// Manifest entries (and the per-trip seeds behind them) for a study, without
// generating any samples. Blocks run no_alcohol, severe, moderate; scenarios
// cycle highway, rural, urban within each block.
struct PlannedTrip {
  ManifestEntry entry;
  TripRequest request;
};
std::vector<PlannedTrip> plan_study(const SynthConfig& cfg);

// Generates the study, writing trips/<trip_id>.csv (and can/<trip_id>.csv)
// plus manifest.json under out_dir. Output is independent of `jobs`.
StudyManifest generate_study(const SynthConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs = 0);

// Generates a single planned trip in memory with its manifest metadata applied.
SyntheticTrip realize(const PlannedTrip& planned);

}  // namespace gazesense::synth
