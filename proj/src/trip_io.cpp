#include "gazesense/trip_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "gazesense/error.hpp"
#include "text_util.hpp"

namespace gazesense {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

double parse_field(std::string_view field, const fs::path& path, std::size_t line_no) {
  double value = 0.0;
  if (!detail::parse_double(field, value)) {
    throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) +
                                             ": cannot parse number '" + std::string(field) + "'");
  }
  return value;
}

std::vector<SignalChannel> load_can_csv(const fs::path& path, const std::vector<CanChannelDecl>& decl) {
  const std::string text = detail::read_file(path);
  detail::LineReader lines(text);
  std::string_view header;
  if (!lines.next(header)) throw Error(ErrorCode::MalformedCsv, path.string() + ": missing header");
  const auto columns = detail::split(header, ',');
  if (columns.empty() || columns[0] != "t_s") {
    throw Error(ErrorCode::MalformedCsv, path.string() + ": CAN header must start with t_s");
  }
  std::vector<std::size_t> col_of(decl.size());
  for (std::size_t d = 0; d < decl.size(); ++d) {
    bool found = false;
    for (std::size_t c = 1; c < columns.size(); ++c) {
      if (columns[c] == decl[d].name) {
        col_of[d] = c;
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::MissingChannel, path.string() + ": no CAN column '" + decl[d].name + "'");
  }

  std::vector<SignalChannel> out(decl.size());
  for (std::size_t d = 0; d < decl.size(); ++d) out[d].name = decl[d].name;

  std::string_view line;
  std::size_t line_no = 1;
  std::vector<std::string_view> fields;
  double prev_t = -1.0;
  while (lines.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::split_into(line, ',', fields);
    if (fields.size() != columns.size()) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(columns.size()) + " fields");
    }
    const double t = parse_field(fields[0], path, line_no);
    if (!(t > prev_t)) {
      throw Error(ErrorCode::NonMonotonicTime, path.string() + ":" + std::to_string(line_no));
    }
    prev_t = t;
    for (std::size_t d = 0; d < decl.size(); ++d) {
      const double v = parse_field(fields[col_of[d]], path, line_no);
      out[d].t.push_back(t);
      out[d].v.push_back(v);
      out[d].valid.push_back(std::isfinite(v));
    }
  }
  return out;
}

json can_decl_to_json(const std::vector<CanChannelDecl>& decl) {
  json arr = json::array();
  for (const auto& d : decl) arr.push_back({{"name", d.name}, {"derivatives", d.derivatives}});
  return arr;
}

}  // namespace

TripRecording load_trip(const fs::path& path, const ManifestEntry& meta,
                        const std::vector<CanChannelDecl>& can_decl, const fs::path& base_dir,
                        const LoadOptions& opts) {
  if (!opts.allow_metadata_mismatch && !bac_consistent(meta.block, meta.bac_gdl)) {
    throw Error(ErrorCode::MetadataMismatch, "trip '" + meta.trip_id + "': block " +
                                                 std::string(to_string(meta.block)) + " with bac_gdl " +
                                                 std::to_string(meta.bac_gdl));
  }

  TripRecording trip;
  trip.participant_id = meta.participant_id;
  trip.trip_id = meta.trip_id;
  trip.scenario = meta.scenario;
  trip.block = meta.block;
  trip.bac_gdl = meta.bac_gdl;

  const std::string text = detail::read_file(path);
  detail::LineReader lines(text);
  std::string_view header;
  if (!lines.next(header) || header != kGazeCsvHeader) {
    throw Error(ErrorCode::MalformedCsv, path.string() + ": header must be '" + kGazeCsvHeader + "'");
  }
  trip.samples.reserve(text.size() / 48);

  std::string_view line;
  std::size_t line_no = 1;
  std::vector<std::string_view> fields;
  while (lines.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::split_into(line, ',', fields);
    if (fields.size() != 7) {
      throw Error(ErrorCode::MalformedCsv,
                  path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    GazeSample s;
    s.t = parse_field(fields[0], path, line_no);
    s.gaze_x = parse_field(fields[1], path, line_no);
    s.gaze_y = parse_field(fields[2], path, line_no);
    s.eye_x = parse_field(fields[3], path, line_no);
    s.eye_y = parse_field(fields[4], path, line_no);
    s.eye_z = parse_field(fields[5], path, line_no);
    if (fields[6] == "1") s.valid = true;
    else if (fields[6] == "0") s.valid = false;
    else throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": valid must be 0 or 1");
    if (s.t < 0.0) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": negative time");
    }
    if (!trip.samples.empty() && !(s.t > trip.samples.back().t)) {
      throw Error(ErrorCode::NonMonotonicTime, path.string() + ":" + std::to_string(line_no) + ": t_s " +
                                                   std::string(fields[0]) + " does not increase");
    }
    trip.samples.push_back(s);
  }

  if (!meta.can_file_path.empty() && !can_decl.empty()) {
    const fs::path base = base_dir.empty() ? path.parent_path() : base_dir;
    trip.can_channels = load_can_csv(resolve(base, meta.can_file_path), can_decl);
  }
  return trip;
}

TripRecording load_trip(const ManifestEntry& meta, const std::vector<CanChannelDecl>& can_decl,
                        const fs::path& base_dir, const LoadOptions& opts) {
  return load_trip(resolve(base_dir, meta.file_path), meta, can_decl, base_dir, opts);
}

void write_gaze_csv(const fs::path& path, const std::vector<GazeSample>& samples) {
  std::string out;
  out.reserve(samples.size() * 56 + 64);
  out += kGazeCsvHeader;
  out += '\n';
  for (const auto& s : samples) {
    detail::append_fixed(out, s.t, 6);
    out += ',';
    detail::append_fixed(out, s.gaze_x, 4);
    out += ',';
    detail::append_fixed(out, s.gaze_y, 4);
    out += ',';
    detail::append_fixed(out, s.eye_x, 4);
    out += ',';
    detail::append_fixed(out, s.eye_y, 4);
    out += ',';
    detail::append_fixed(out, s.eye_z, 4);
    out += s.valid ? ",1\n" : ",0\n";
  }
  detail::write_file(path, out);
}

void write_can_csv(const fs::path& path, const std::vector<SignalChannel>& channels) {
  if (channels.empty()) throw Error(ErrorCode::MissingChannel, "no CAN channels to write");
  std::string out = "t_s";
  for (const auto& ch : channels) {
    check_channel(ch);
    if (ch.t != channels.front().t) throw Error(ErrorCode::LengthMismatch, "CAN channels must share timestamps");
    out += ',' + ch.name;
  }
  out += '\n';
  const auto& t = channels.front().t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    detail::append_fixed(out, t[i], 6);
    for (const auto& ch : channels) {
      out += ',';
      detail::append_fixed(out, ch.v[i], 5);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

std::string manifest_to_json(const StudyManifest& manifest) {
  json j;
  j["format_version"] = 1;
  j["can_channels"] = can_decl_to_json(manifest.can_channels);
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json je = {{"participant_id", e.participant_id}, {"trip_id", e.trip_id},
               {"scenario", to_string(e.scenario)},  {"block", to_string(e.block)},
               {"bac_gdl", e.bac_gdl},               {"file_path", e.file_path}};
    if (!e.can_file_path.empty()) je["can_file_path"] = e.can_file_path;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

StudyManifest manifest_from_json(const std::string& text) {
  StudyManifest m;
  try {
    const json j = json::parse(text);
    if (j.contains("can_channels")) {
      for (const auto& d : j.at("can_channels")) {
        m.can_channels.push_back({d.at("name").get<std::string>(), d.value("derivatives", 0)});
      }
    }
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.participant_id = je.at("participant_id").get<std::string>();
      e.trip_id = je.at("trip_id").get<std::string>();
      e.scenario = parse_scenario(je.at("scenario").get<std::string>());
      e.block = parse_block(je.at("block").get<std::string>());
      e.bac_gdl = je.at("bac_gdl").get<double>();
      e.file_path = je.at("file_path").get<std::string>();
      e.can_file_path = je.value("can_file_path", std::string());
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::BadConfig, std::string("manifest: ") + ex.what());
  }
  m.validate();
  return m;
}

StudyManifest load_manifest(const fs::path& path) { return manifest_from_json(detail::read_file(path)); }

void write_manifest(const fs::path& path, const StudyManifest& manifest) {
  detail::write_file(path, manifest_to_json(manifest));
}

}  // namespace gazesense
