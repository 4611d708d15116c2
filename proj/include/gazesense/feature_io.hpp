#pragma once

#include <filesystem>

#include "gazesense/windowing.hpp"

namespace gazesense::windowing {

// CSV: metadata columns (participant_id, trip_id, scenario, block, bac_gdl,
// window_end_s) followed by one column per feature. Values use the shortest
// representation that round-trips exactly.
void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

// Binary columnar dump, all integers and floats little-endian:
//   "GZFM1" | u32 rows | u32 cols | f64[cols][rows] (column-major)
//   | cols x (u32 byte length, UTF-8 name)
//   | "META" | rows x (u32 len, participant_id, u32 len, trip_id,
//                      u8 scenario, u8 block, f64 bac_gdl, f64 window_end_s)
void write_matrix_binary(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_binary(const std::filesystem::path& path);

// Dispatches on the extension (".csv" or anything else = binary).
FeatureMatrix read_matrix(const std::filesystem::path& path);

}  // namespace gazesense::windowing
