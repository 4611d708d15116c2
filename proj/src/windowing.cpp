#include "gazesense/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>

#include "gazesense/error.hpp"
#include "gazesense/parallel.hpp"
#include "gazesense/trip_io.hpp"

namespace gazesense::windowing {

namespace {

// Slack when comparing window ends against the trip duration; CSV timestamps
// carry microsecond rounding.
constexpr double kTimeSlack = 1e-4;

constexpr std::array<const char*, 8> kEyeSignals = {"pos_x", "pos_y", "vel_x", "vel_y",
                                                    "vel",   "acc_x", "acc_y", "acc"};
constexpr std::array<const char*, 8> kHeadSignals = {"vel_x", "vel_y", "vel_z", "vel",
                                                     "acc_x", "acc_y", "acc_z", "acc"};
constexpr std::array<const char*, 4> kEventAttributes = {"duration", "amplitude", "peak_velocity",
                                                         "mean_velocity"};

void append_stat_names(std::vector<std::string>& out, const std::string& prefix) {
  for (auto stat : kStatNames) out.push_back(prefix + "." + std::string(stat));
}

void append_stats(std::vector<double>& out, const StatSummary& s) {
  const auto a = s.as_array();
  out.insert(out.end(), a.begin(), a.end());
}

std::size_t first_at_or_after(const std::vector<double>& t, double x) {
  return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), x) - t.begin());
}

// Valid values of ch within [start, end), normalised so -0.0 becomes 0.0.
void collect_window(const SignalChannel& ch, double start, double end, std::vector<double>& out) {
  out.clear();
  const std::size_t lo = first_at_or_after(ch.t, start);
  const std::size_t hi = first_at_or_after(ch.t, end);
  for (std::size_t i = lo; i < hi; ++i) {
    if (ch.valid[i] && std::isfinite(ch.v[i])) out.push_back(ch.v[i] + 0.0);
  }
}

std::vector<double> channel_block_features(const std::vector<SignalChannel>& chs, double start, double end) {
  std::vector<double> out;
  out.reserve(chs.size() * 7);
  std::vector<double> buf;
  for (const auto& ch : chs) {
    collect_window(ch, start, end, buf);
    if (buf.empty()) throw Error(ErrorCode::AllInvalid, "no valid '" + ch.name + "' samples in window");
    append_stats(out, aggregate_stats(buf));
  }
  return out;
}

// Sorted multiset of the valid values inside a window that only moves forward.
class SlidingSorted {
 public:
  explicit SlidingSorted(const SignalChannel& ch) : ch_(&ch) {}

  std::span<const double> advance(double start, double end) {
    const auto& t = ch_->t;
    std::size_t new_lo = lo_;
    while (new_lo < t.size() && t[new_lo] < start) ++new_lo;
    std::size_t new_hi = std::max(hi_, new_lo);
    while (new_hi < t.size() && t[new_hi] < end) ++new_hi;

    if (new_lo >= hi_) {
      gather(new_lo, new_hi, sorted_);
    } else {
      gather(lo_, new_lo, outgoing_);
      gather(hi_, new_hi, incoming_);
      merged_.clear();
      merged_.reserve(sorted_.size() + incoming_.size());
      std::size_t o = 0;
      std::size_t in = 0;
      for (double x : sorted_) {
        if (o < outgoing_.size() && x == outgoing_[o]) {
          ++o;
          continue;
        }
        while (in < incoming_.size() && incoming_[in] < x) merged_.push_back(incoming_[in++]);
        merged_.push_back(x);
      }
      while (in < incoming_.size()) merged_.push_back(incoming_[in++]);
      sorted_.swap(merged_);
    }
    lo_ = new_lo;
    hi_ = new_hi;
    return sorted_;
  }

 private:
  void gather(std::size_t a, std::size_t b, std::vector<double>& out) const {
    out.clear();
    for (std::size_t i = a; i < b; ++i) {
      if (ch_->valid[i] && std::isfinite(ch_->v[i])) out.push_back(ch_->v[i] + 0.0);
    }
    std::sort(out.begin(), out.end());
  }

  const SignalChannel* ch_;
  std::size_t lo_ = 0;
  std::size_t hi_ = 0;
  std::vector<double> sorted_;
  std::vector<double> outgoing_;
  std::vector<double> incoming_;
  std::vector<double> merged_;
};

std::vector<SignalChannel> movement_block(const std::vector<SignalChannel>& positions, bool include_positions) {
  std::vector<SignalChannel> vel;
  std::vector<SignalChannel> acc;
  for (const auto& p : positions) {
    vel.push_back(differentiate(p));
    acc.push_back(differentiate(vel.back()));
  }
  std::vector<SignalChannel> out;
  if (include_positions) out.insert(out.end(), positions.begin(), positions.end());
  out.insert(out.end(), vel.begin(), vel.end());
  out.push_back(combine_norm(vel));
  out.insert(out.end(), acc.begin(), acc.end());
  out.push_back(combine_norm(acc));
  return out;
}

}  // namespace

void WindowSpec::validate() const {
  if (!(length_s > 0.0) || !(shift_s > 0.0) || shift_s > length_s) {
    throw Error(ErrorCode::BadParams, "window spec needs 0 < shift_s <= length_s");
  }
  if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0)) {
    throw Error(ErrorCode::BadParams, "min_valid_fraction must lie in [0, 1]");
  }
}

std::vector<Window> sliding_windows(const TripRecording& trip, const WindowSpec& spec) {
  spec.validate();
  const double duration = trip.duration_s();
  if (trip.samples.empty() || duration + kTimeSlack < spec.length_s) {
    throw Error(ErrorCode::TripTooShort, "trip '" + trip.trip_id + "' lasts " + std::to_string(duration) +
                                             " s, shorter than the " + std::to_string(spec.length_s) +
                                             " s window");
  }
  std::vector<double> t(trip.samples.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = trip.samples[i].t;

  std::vector<Window> out;
  for (std::size_t k = 0;; ++k) {
    const double end = spec.length_s + static_cast<double>(k) * spec.shift_s;
    if (end > duration + kTimeSlack) break;
    Window w;
    w.end_s = end;
    w.start_s = end - spec.length_s;
    const std::size_t lo = first_at_or_after(t, w.start_s);
    const std::size_t hi = first_at_or_after(t, w.end_s);
    std::size_t valid = 0;
    for (std::size_t i = lo; i < hi; ++i) valid += trip.samples[i].valid ? 1 : 0;
    w.valid_fraction = hi > lo ? static_cast<double>(valid) / static_cast<double>(hi - lo) : 0.0;
    w.dropped = hi == lo || w.valid_fraction < spec.min_valid_fraction;
    out.push_back(w);
  }
  return out;
}

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Camera: return "camera";
    case Source::Can: return "can";
    case Source::Both: return "both";
  }
  return "camera";
}

Source parse_source(std::string_view s) {
  if (s == "camera") return Source::Camera;
  if (s == "can") return Source::Can;
  if (s == "both") return Source::Both;
  throw Error(ErrorCode::BadConfig, "unknown source '" + std::string(s) + "'");
}

std::vector<std::string> eye_feature_names() {
  std::vector<std::string> out;
  for (auto s : kEyeSignals) append_stat_names(out, std::string("eye.") + s);
  return out;
}

std::vector<std::string> event_feature_names() {
  std::vector<std::string> out;
  for (auto kind : {events::EventKind::Fixation, events::EventKind::Saccade}) {
    for (auto attr : kEventAttributes) {
      append_stat_names(out, "event." + std::string(events::to_string(kind)) + "." + attr);
    }
  }
  out.push_back("event.fixation.count");
  out.push_back("event.saccade.count");
  return out;
}

std::vector<std::string> head_feature_names() {
  std::vector<std::string> out;
  for (auto s : kHeadSignals) append_stat_names(out, std::string("head.") + s);
  return out;
}

std::vector<std::string> can_feature_names(const std::vector<CanChannelDecl>& decl) {
  std::vector<std::string> out;
  for (const auto& d : decl) {
    append_stat_names(out, "can." + d.name);
    if (d.derivatives >= 1) append_stat_names(out, "can." + d.name + "_vel");
    if (d.derivatives >= 2) append_stat_names(out, "can." + d.name + "_acc");
  }
  return out;
}

std::vector<std::string> feature_names(Source source, const std::vector<CanChannelDecl>& decl) {
  std::vector<std::string> out;
  if (source != Source::Can) {
    for (auto&& group : {eye_feature_names(), event_feature_names(), head_feature_names()}) {
      out.insert(out.end(), group.begin(), group.end());
    }
  }
  if (source != Source::Camera) {
    const auto c = can_feature_names(decl);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::string feature_group(std::string_view feature_name) {
  const auto dot = feature_name.find('.');
  return std::string(feature_name.substr(0, dot));
}

void FeatureMatrix::validate() const {
  for (const auto& r : rows) {
    if (r.values.size() != feature_names.size()) {
      throw Error(ErrorCode::LengthMismatch, "feature row width differs from the name list");
    }
    for (double v : r.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::BadParams, "non-finite feature value in trip " + r.trip_id);
    }
  }
}

TripSignals prepare_signals(const TripRecording& trip, const FeatureOptions& opts) {
  TripSignals sig;
  if (opts.source != Source::Can) {
    SignalChannel gx;
    SignalChannel gy;
    if (opts.geometry.enabled) {
      std::tie(gx, gy) = to_visual_angle(trip, opts.geometry);
    } else {
      gx = trip.gaze_channel("gaze_x");
      gy = trip.gaze_channel("gaze_y");
    }
    gx = interpolate_gaps(gx, opts.max_gap_s);
    gy = interpolate_gaps(gy, opts.max_gap_s);
    gx.name = "pos_x";
    gy.name = "pos_y";

    const auto detection = events::run_event_detection(gx, gy, opts.detector);
    sig.events = detection.events;
    sig.threshold = detection.threshold;
    sig.eye = movement_block({gx, gy}, true);

    std::vector<SignalChannel> head;
    for (const char* c : {"eye_x", "eye_y", "eye_z"}) head.push_back(interpolate_gaps(trip.gaze_channel(c), opts.max_gap_s));
    sig.head = movement_block(head, false);
  }
  if (opts.source != Source::Camera) {
    for (const auto& d : opts.can_channels) {
      auto it = std::find_if(trip.can_channels.begin(), trip.can_channels.end(),
                             [&](const SignalChannel& c) { return c.name == d.name; });
      if (it == trip.can_channels.end()) {
        throw Error(ErrorCode::MissingChannel, "trip '" + trip.trip_id + "' has no CAN channel '" + d.name + "'");
      }
      SignalChannel raw = interpolate_gaps(*it, opts.max_gap_s);
      sig.can.push_back(raw);
      if (d.derivatives >= 1) sig.can.push_back(differentiate(raw));
      if (d.derivatives >= 2) sig.can.push_back(differentiate(sig.can.back()));
    }
  }
  return sig;
}

std::vector<double> eye_movement_features(const TripSignals& sig, double start_s, double end_s) {
  if (sig.eye.size() != 8) throw Error(ErrorCode::MissingChannel, "eye-movement signals not prepared");
  return channel_block_features(sig.eye, start_s, end_s);
}

std::vector<double> head_movement_features(const TripSignals& sig, double start_s, double end_s) {
  if (sig.head.size() != 8) throw Error(ErrorCode::MissingChannel, "head-movement signals not prepared");
  return channel_block_features(sig.head, start_s, end_s);
}

std::vector<double> can_features(const TripSignals& sig, double start_s, double end_s) {
  return channel_block_features(sig.can, start_s, end_s);
}

std::vector<double> gaze_event_features(const std::vector<events::GazeEvent>& evs, double start_s,
                                        double end_s) {
  std::vector<double> out;
  out.reserve(kEventFeatureCount);
  std::array<std::size_t, 2> counts{0, 0};
  std::vector<double> attr;
  for (auto kind : {events::EventKind::Fixation, events::EventKind::Saccade}) {
    for (std::size_t a = 0; a < kEventAttributes.size(); ++a) {
      attr.clear();
      for (const auto& e : evs) {
        const double mid = e.midpoint_s();
        if (e.kind != kind || mid < start_s || mid >= end_s) continue;
        switch (a) {
          case 0: attr.push_back(e.duration_s); break;
          case 1: attr.push_back(e.amplitude); break;
          case 2: attr.push_back(e.peak_velocity); break;
          default: attr.push_back(e.mean_velocity); break;
        }
      }
      counts[kind == events::EventKind::Fixation ? 0 : 1] = attr.size();
      if (attr.empty()) out.insert(out.end(), 7, 0.0);
      else append_stats(out, aggregate_stats(attr));
    }
  }
  out.push_back(static_cast<double>(counts[0]));
  out.push_back(static_cast<double>(counts[1]));
  return out;
}

TripFeatures extract_trip_features(const TripRecording& trip, const FeatureOptions& opts) {
  const auto windows = sliding_windows(trip, opts.window);
  const TripSignals sig = prepare_signals(trip, opts);

  TripFeatures out;
  out.threshold = sig.threshold;
  out.window_count = windows.size();

  // Events are time-ordered and non-overlapping, so midpoints are sorted.
  std::vector<events::GazeEvent> window_events;
  auto event_lo = sig.events.begin();

  std::vector<const SignalChannel*> channels;
  if (opts.source != Source::Can) {
    for (const auto& c : sig.eye) channels.push_back(&c);
    for (const auto& c : sig.head) channels.push_back(&c);
  }
  for (const auto& c : sig.can) channels.push_back(&c);

  std::vector<SlidingSorted> sliders;
  sliders.reserve(channels.size());
  for (const auto* c : channels) sliders.emplace_back(*c);

  std::vector<double> scratch;
  for (const auto& w : windows) {
    std::vector<StatSummary> stats(channels.size());
    bool ok = !w.dropped;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      std::span<const double> sorted;
      if (opts.streaming) {
        sorted = sliders[c].advance(w.start_s, w.end_s);
      } else {
        collect_window(*channels[c], w.start_s, w.end_s, scratch);
        std::sort(scratch.begin(), scratch.end());
        sorted = scratch;
      }
      if (!ok) continue;
      if (sorted.empty()) {
        ok = false;
        continue;
      }
      stats[c] = aggregate_sorted(sorted);
    }
    if (!ok) {
      ++out.dropped;
      continue;
    }

    FeatureVector fv;
    fv.participant_id = trip.participant_id;
    fv.trip_id = trip.trip_id;
    fv.scenario = trip.scenario;
    fv.block = trip.block;
    fv.bac_gdl = trip.bac_gdl;
    fv.window_end_s = w.end_s;
    std::size_t c = 0;
    if (opts.source != Source::Can) {
      fv.values.reserve(kCameraFeatureCount + sig.can.size() * 7);
      for (; c < 8; ++c) append_stats(fv.values, stats[c]);
      while (event_lo != sig.events.end() && event_lo->midpoint_s() < w.start_s) ++event_lo;
      window_events.clear();
      for (auto e = event_lo; e != sig.events.end() && e->midpoint_s() < w.end_s; ++e) window_events.push_back(*e);
      const auto ev = gaze_event_features(window_events, w.start_s, w.end_s);
      fv.values.insert(fv.values.end(), ev.begin(), ev.end());
      for (; c < 16; ++c) append_stats(fv.values, stats[c]);
    }
    for (; c < channels.size(); ++c) append_stats(fv.values, stats[c]);
    out.rows.push_back(std::move(fv));
  }
  return out;
}

DatasetBuild build_dataset(const StudyManifest& manifest, const FeatureOptions& opts,
                           const std::filesystem::path& base_dir, unsigned jobs, bool allow_metadata_mismatch) {
  opts.window.validate();
  opts.detector.validate();
  manifest.validate();
  FeatureOptions trip_opts = opts;
  if (trip_opts.can_channels.empty()) trip_opts.can_channels = manifest.can_channels;
  if (trip_opts.source != Source::Camera && trip_opts.can_channels.empty()) {
    throw Error(ErrorCode::MissingChannel, "source needs CAN channels but the manifest declares none");
  }

  std::vector<TripFeatures> per_trip(manifest.entries.size());
  LoadOptions load_opts;
  load_opts.allow_metadata_mismatch = allow_metadata_mismatch;
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const auto trip = load_trip(manifest.entries[i], trip_opts.source == Source::Camera
                                                        ? std::vector<CanChannelDecl>{}
                                                        : trip_opts.can_channels,
                                base_dir, load_opts);
    per_trip[i] = extract_trip_features(trip, trip_opts);
  });

  DatasetBuild out;
  out.matrix.feature_names = feature_names(trip_opts.source, trip_opts.can_channels);
  for (auto& tf : per_trip) {
    out.window_count += tf.window_count;
    out.dropped += tf.dropped;
    for (auto& r : tf.rows) out.matrix.rows.push_back(std::move(r));
  }
  out.matrix.validate();
  return out;
}

}  // namespace gazesense::windowing
