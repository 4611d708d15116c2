#include "gazesense/config.hpp"

#include <json.hpp>

#include "gazesense/error.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace gazesense {

using nlohmann::json;

namespace {

// Calls set(key, value) for every member of the object `j`; set returns false
// for keys it does not know.
template <class Set>
void read_section(const json& j, const std::string& section, Set&& set) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "'" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!set(key, value)) {
      const std::string where = section.empty() ? key : section + "." + key;
      throw Error(ErrorCode::BadConfig, "unknown config key '" + where + "'");
    }
  }
}

json can_json(const std::vector<CanChannelDecl>& decl) {
  json arr = json::array();
  for (const auto& d : decl) arr.push_back({{"name", d.name}, {"derivatives", d.derivatives}});
  return arr;
}

std::vector<CanChannelDecl> can_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::BadConfig, "'extract.can_channels' must be an array");
  std::vector<CanChannelDecl> out;
  for (const auto& item : j) {
    CanChannelDecl d;
    read_section(item, "extract.can_channels[]", [&](const std::string& k, const json& v) {
      if (k == "name") d.name = v.get<std::string>();
      else if (k == "derivatives") d.derivatives = v.get<int>();
      else return false;
      return true;
    });
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    window.validate();
    detector.validate();
    train.validate();
    synth_config().validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  if (!(max_gap_s >= 0.0)) throw Error(ErrorCode::BadConfig, "max_gap_s must be >= 0");
  if (bootstrap_resamples < 1) throw Error(ErrorCode::BadConfig, "decision.resamples must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::BadConfig, "decision.confidence must be in (0, 1)");
  for (const auto& d : can_channels) {
    if (d.name.empty() || d.derivatives < 0 || d.derivatives > 2) {
      throw Error(ErrorCode::BadConfig, "bad CAN channel declaration '" + d.name + "'");
    }
  }
}

windowing::FeatureOptions PipelineConfig::feature_options() const {
  windowing::FeatureOptions o;
  o.window = window;
  o.detector = detector;
  o.geometry = geometry;
  o.max_gap_s = max_gap_s;
  o.source = source;
  o.can_channels = can_channels;
  return o;
}

synth::SynthConfig PipelineConfig::synth_config() const {
  synth::SynthConfig s;
  s.n_participants = synth_participants;
  s.trips_per_block = synth_trips_per_block;
  s.trip_duration_s = synth_trip_duration_s;
  s.trait_spread = synth_trait_spread;
  s.seed = seed;
  s.with_can = synth_with_can;
  s.profiles = synth::named_profiles(synth_profile);
  return s;
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["window"] = {{"length_s", c.window.length_s}, {"shift_s", c.window.shift_s},
                 {"min_valid_fraction", c.window.min_valid_fraction}};
  const auto& d = c.detector;
  j["detector"] = {{"initial_threshold", d.initial_threshold},
                   {"min_fixation_duration_s", d.min_fixation_duration_s},
                   {"min_saccade_duration_s", d.min_saccade_duration_s},
                   {"max_iterations", d.max_iterations},
                   {"convergence_tol", d.convergence_tol},
                   {"min_threshold", d.min_threshold},
                   {"smoothing_window", d.smoothing_window},
                   {"smoothing_polyorder", d.smoothing_polyorder}};
  j["geometry"] = {{"enabled", c.geometry.enabled},
                   {"center_x_mm", c.geometry.center_x_mm},
                   {"center_y_mm", c.geometry.center_y_mm},
                   {"viewing_distance_mm", c.geometry.viewing_distance_mm}};
  j["extract"] = {{"max_gap_s", c.max_gap_s},
                  {"source", windowing::to_string(c.source)},
                  {"can_channels", can_json(c.can_channels)},
                  {"allow_metadata_mismatch", c.allow_metadata_mismatch}};
  j["train"] = detail::train_config_json(c.train);
  j["task"] = model::to_string(c.task);
  j["scheme"] = evaluation::to_string(c.scheme);
  j["decision"] = {{"resamples", c.bootstrap_resamples}, {"confidence", c.confidence}};
  j["synth"] = {{"participants", c.synth_participants},
                {"trips_per_block", c.synth_trips_per_block},
                {"trip_duration_s", c.synth_trip_duration_s},
                {"trait_spread", c.synth_trait_spread},
                {"profile", c.synth_profile},
                {"with_can", c.synth_with_can}};
  j["paths"] = {{"manifest", c.manifest}, {"features", c.features}, {"report", c.report}, {"out_dir", c.out_dir}};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text, const PipelineConfig& base) {
  PipelineConfig c = base;
  try {
    const json j = json::parse(text);
    read_section(j, "", [&](const std::string& key, const json& v) {
      if (key == "window") {
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "length_s") c.window.length_s = x.get<double>();
          else if (k == "shift_s") c.window.shift_s = x.get<double>();
          else if (k == "min_valid_fraction") c.window.min_valid_fraction = x.get<double>();
          else return false;
          return true;
        });
      } else if (key == "detector") {
        auto& d = c.detector;
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "initial_threshold") d.initial_threshold = x.get<double>();
          else if (k == "min_fixation_duration_s") d.min_fixation_duration_s = x.get<double>();
          else if (k == "min_saccade_duration_s") d.min_saccade_duration_s = x.get<double>();
          else if (k == "max_iterations") d.max_iterations = x.get<int>();
          else if (k == "convergence_tol") d.convergence_tol = x.get<double>();
          else if (k == "min_threshold") d.min_threshold = x.get<double>();
          else if (k == "smoothing_window") d.smoothing_window = x.get<int>();
          else if (k == "smoothing_polyorder") d.smoothing_polyorder = x.get<int>();
          else return false;
          return true;
        });
      } else if (key == "geometry") {
        auto& g = c.geometry;
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "enabled") g.enabled = x.get<bool>();
          else if (k == "center_x_mm") g.center_x_mm = x.get<double>();
          else if (k == "center_y_mm") g.center_y_mm = x.get<double>();
          else if (k == "viewing_distance_mm") g.viewing_distance_mm = x.get<double>();
          else return false;
          return true;
        });
      } else if (key == "extract") {
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "max_gap_s") c.max_gap_s = x.get<double>();
          else if (k == "source") c.source = windowing::parse_source(x.get<std::string>());
          else if (k == "can_channels") c.can_channels = can_from_json(x);
          else if (k == "allow_metadata_mismatch") c.allow_metadata_mismatch = x.get<bool>();
          else return false;
          return true;
        });
      } else if (key == "train") {
        c.train = detail::train_config_from_json(v, c.train);
      } else if (key == "task") {
        c.task = model::parse_task(v.get<std::string>());
      } else if (key == "scheme") {
        c.scheme = evaluation::parse_scheme(v.get<std::string>());
      } else if (key == "decision") {
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "resamples") c.bootstrap_resamples = x.get<int>();
          else if (k == "confidence") c.confidence = x.get<double>();
          else return false;
          return true;
        });
      } else if (key == "synth") {
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "participants") c.synth_participants = x.get<int>();
          else if (k == "trips_per_block") c.synth_trips_per_block = x.get<int>();
          else if (k == "trip_duration_s") c.synth_trip_duration_s = x.get<double>();
          else if (k == "trait_spread") c.synth_trait_spread = x.get<double>();
          else if (k == "profile") c.synth_profile = x.get<std::string>();
          else if (k == "with_can") c.synth_with_can = x.get<bool>();
          else return false;
          return true;
        });
      } else if (key == "paths") {
        read_section(v, key, [&](const std::string& k, const json& x) {
          if (k == "manifest") c.manifest = x.get<std::string>();
          else if (k == "features") c.features = x.get<std::string>();
          else if (k == "report") c.report = x.get<std::string>();
          else if (k == "out_dir") c.out_dir = x.get<std::string>();
          else return false;
          return true;
        });
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else {
        return false;
      }
      return true;
    });
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadConfig) throw;
    throw Error(ErrorCode::BadConfig, e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::read_file(path));
}

}  // namespace gazesense
