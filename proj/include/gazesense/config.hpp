#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gazesense/evaluation.hpp"
#include "gazesense/model.hpp"
#include "gazesense/synthgen.hpp"
#include "gazesense/windowing.hpp"

namespace gazesense {

// Everything a pipeline run depends on. Defaults mirror the module defaults;
// a JSON config may set any subset of keys, unknown keys are rejected.
struct PipelineConfig {
  windowing::WindowSpec window;
  events::EventDetectorParams detector;
  ScreenGeometry geometry;
  double max_gap_s = kDefaultMaxGapS;
  windowing::Source source = windowing::Source::Camera;
  // Empty: take the channel list from the manifest.
  std::vector<CanChannelDecl> can_channels;
  bool allow_metadata_mismatch = false;

  model::TrainConfig train;
  model::Task task = model::Task::EarlyWarning;
  evaluation::Scheme scheme = evaluation::Scheme::Loso;

  int bootstrap_resamples = 1000;
  double confidence = 0.95;

  // Synthetic study shape; the effect profile is referenced by name.
  int synth_participants = 10;
  int synth_trips_per_block = 3;
  double synth_trip_duration_s = 600.0;
  double synth_trait_spread = 0.2;
  std::string synth_profile = "default";
  bool synth_with_can = false;

  std::string manifest;
  std::string features;
  std::string report;
  std::string out_dir;

  std::uint64_t seed = 42;

  void validate() const;
  windowing::FeatureOptions feature_options() const;
  synth::SynthConfig synth_config() const;
};

std::string config_to_json(const PipelineConfig& c);
// Keys absent from the text keep the values of `base`.
PipelineConfig config_from_json(const std::string& text, const PipelineConfig& base = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace gazesense
