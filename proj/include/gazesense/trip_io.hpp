#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazesense/signal.hpp"

namespace gazesense {

inline constexpr const char* kGazeCsvHeader =
    "t_s,gaze_x_mm,gaze_y_mm,eye_x_mm,eye_y_mm,eye_z_mm,valid";

struct LoadOptions {
  // Accept BAC values that disagree with the block label.
  bool allow_metadata_mismatch = false;
};

// Parses a gaze CSV (and the CAN CSV when the entry names one). Relative
// paths in the entry are resolved against base_dir.
TripRecording load_trip(const std::filesystem::path& path, const ManifestEntry& meta,
                        const std::vector<CanChannelDecl>& can_decl = {},
                        const std::filesystem::path& base_dir = {},
                        const LoadOptions& opts = {});

// Loads the trip named by a manifest entry.
TripRecording load_trip(const ManifestEntry& meta, const std::vector<CanChannelDecl>& can_decl,
                        const std::filesystem::path& base_dir, const LoadOptions& opts = {});

void write_gaze_csv(const std::filesystem::path& path, const std::vector<GazeSample>& samples);
void write_can_csv(const std::filesystem::path& path, const std::vector<SignalChannel>& channels);

StudyManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const StudyManifest& manifest);
std::string manifest_to_json(const StudyManifest& manifest);
StudyManifest manifest_from_json(const std::string& text);

}  // namespace gazesense
