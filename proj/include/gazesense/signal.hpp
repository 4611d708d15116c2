#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazesense {

enum class Scenario { Highway, Rural, Urban };
enum class Block { NoAlcohol, Moderate, Severe };

std::string_view to_string(Scenario s);
std::string_view to_string(Block b);
Scenario parse_scenario(std::string_view s);
Block parse_block(std::string_view s);

inline constexpr double kNominalGazeRateHz = 60.0;
inline constexpr double kNominalCanRateHz = 30.0;

struct GazeSample {
  double t = 0.0;
  double gaze_x = 0.0;
  double gaze_y = 0.0;
  double eye_x = 0.0;
  double eye_y = 0.0;
  double eye_z = 0.0;
  bool valid = true;
};

// Uniform carrier for gaze, head and CAN series. t is strictly increasing and
// t, v, valid always have equal length.
struct SignalChannel {
  std::string name;
  std::vector<double> t;
  std::vector<double> v;
  std::vector<bool> valid;

  std::size_t size() const { return t.size(); }
};

// Throws LengthMismatch / NonMonotonicTime when the channel invariants fail.
void check_channel(const SignalChannel& ch);

struct TripRecording {
  std::string participant_id;
  std::string trip_id;
  Scenario scenario = Scenario::Highway;
  Block block = Block::NoAlcohol;
  double bac_gdl = 0.0;
  std::vector<GazeSample> samples;
  std::vector<SignalChannel> can_channels;

  // Covered time from the first sample to one nominal interval past the last.
  double duration_s() const;
  SignalChannel gaze_channel(std::string_view which) const;
};

// BAC / block consistency: no_alcohol => 0, moderate => (0, 0.03], severe => >= 0.05.
bool bac_consistent(Block block, double bac_gdl);

// A CAN signal declared by the manifest; derivatives in {0,1,2} selects whether
// velocity and acceleration of the raw signal also enter the feature set.
struct CanChannelDecl {
  std::string name;
  int derivatives = 0;

  bool operator==(const CanChannelDecl&) const = default;
};

std::vector<CanChannelDecl> default_can_channels();

struct ManifestEntry {
  std::string participant_id;
  std::string trip_id;
  Scenario scenario = Scenario::Highway;
  Block block = Block::NoAlcohol;
  double bac_gdl = 0.0;
  std::string file_path;
  std::string can_file_path;  // empty when no CAN recording exists
};

struct StudyManifest {
  std::vector<ManifestEntry> entries;
  std::vector<CanChannelDecl> can_channels;

  // Checks (participant_id, trip_id) uniqueness.
  void validate() const;
};

struct ValidationReport {
  double nominal_rate_hz = 0.0;
  std::size_t gap_count = 0;
  double invalid_fraction = 0.0;
  double duration_s = 0.0;
  bool rate_ok = true;
};

ValidationReport validate_trip(const TripRecording& trip);

inline constexpr double kDefaultMaxGapS = 0.075;

// Linearly bridges runs of invalid samples whose bracketing valid samples are
// less than max_gap_s apart. Runs touching either end of the channel stay invalid.
SignalChannel interpolate_gaps(const SignalChannel& ch, double max_gap_s = kDefaultMaxGapS);

// Central differences on the actual timestamps, one-sided at the endpoints.
SignalChannel differentiate(const SignalChannel& ch);

// Savitzky-Golay smoothing. Near the ends the window shrinks symmetrically and
// the polynomial order is capped by the available support.
SignalChannel smooth(const SignalChannel& ch, int window_samples = 5, int polyorder = 2);

// Savitzky-Golay weights for the centre sample of a symmetric window of
// 2 * half_width + 1 samples.
std::vector<double> savgol_weights(int half_width, int polyorder);

SignalChannel combine_norm(const std::vector<const SignalChannel*>& chs);
SignalChannel combine_norm(const std::vector<SignalChannel>& chs);

double brac_to_bac(double brac_mg_per_L);

// Gaze geometry for expressing thresholds and amplitudes in degrees of visual
// angle instead of screen millimetres.
struct ScreenGeometry {
  bool enabled = false;
  double center_x_mm = 0.0;
  double center_y_mm = 0.0;
  // <= 0 means "use the per-sample eye_z depth".
  double viewing_distance_mm = 0.0;
};

// Converts gaze positions to visual angle (degrees) relative to the screen
// centre; returns {x_deg, y_deg}.
std::pair<SignalChannel, SignalChannel> to_visual_angle(const TripRecording& trip,
                                                        const ScreenGeometry& geom);

}  // namespace gazesense
