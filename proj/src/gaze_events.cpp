#include "gazesense/gaze_events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gazesense/error.hpp"
#include "text_util.hpp"

namespace gazesense::events {

std::string_view to_string(EventKind k) { return k == EventKind::Fixation ? "fixation" : "saccade"; }

EventDetectorParams EventDetectorParams::degree_defaults() {
  EventDetectorParams p;
  p.initial_threshold = 100.0;
  return p;
}

void EventDetectorParams::validate() const {
  if (!(initial_threshold > 0.0)) throw Error(ErrorCode::BadParams, "initial_threshold must be positive");
  if (!(min_fixation_duration_s > 0.0) || !(min_saccade_duration_s > 0.0)) {
    throw Error(ErrorCode::BadParams, "minimum event durations must be positive");
  }
  if (max_iterations < 1) throw Error(ErrorCode::BadParams, "max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw Error(ErrorCode::BadParams, "convergence_tol must be positive");
  if (min_threshold < 0.0) throw Error(ErrorCode::BadParams, "min_threshold must be >= 0");
}

ThresholdResult adaptive_velocity_threshold(const SignalChannel& speed, const EventDetectorParams& params) {
  params.validate();
  std::vector<double> s;
  s.reserve(speed.size());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    if (speed.valid[i] && std::isfinite(speed.v[i])) s.push_back(speed.v[i]);
  }
  if (s.size() < 100) {
    throw Error(ErrorCode::InsufficientData, "adaptive threshold needs >= 100 valid speed samples, got " +
                                                 std::to_string(s.size()));
  }
  std::sort(s.begin(), s.end());

  ThresholdResult r;
  r.threshold = params.initial_threshold;
  for (int it = 1; it <= params.max_iterations; ++it) {
    r.iterations = it;
    const auto end = std::upper_bound(s.begin(), s.end(), r.threshold);
    const auto n = static_cast<std::size_t>(end - s.begin());
    if (n == 0) break;
    double mean = 0.0;
    for (auto p = s.begin(); p != end; ++p) mean += *p;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (auto p = s.begin(); p != end; ++p) ss += (*p - mean) * (*p - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    const double next = mean + 6.0 * sd;
    const bool done = std::abs(next - r.threshold) < params.convergence_tol;
    r.threshold = next;
    if (done) {
      r.converged = true;
      break;
    }
  }
  return r;
}

namespace {

struct Run {
  EventKind kind;
  std::size_t first;
  std::size_t last;
};

// Event boundaries: a saccade owns exactly its sample instants, the
// neighbouring fixations extend to meet it.
std::size_t onset_index(const std::vector<Run>& runs, std::size_t k) {
  if (k == 0) return runs[0].first;
  return runs[k - 1].kind == EventKind::Saccade ? runs[k - 1].last : runs[k].first;
}

std::size_t offset_index(const std::vector<Run>& runs, std::size_t k) {
  if (k + 1 == runs.size()) return runs[k].last;
  return runs[k].kind == EventKind::Saccade ? runs[k].last : runs[k + 1].first;
}

void coalesce(std::vector<Run>& runs) {
  std::vector<Run> out;
  out.reserve(runs.size());
  for (const auto& r : runs) {
    if (!out.empty() && out.back().kind == r.kind) out.back().last = r.last;
    else out.push_back(r);
  }
  runs.swap(out);
}

void merge_short_runs(std::vector<Run>& runs, const std::vector<double>& t, const EventDetectorParams& p) {
  while (runs.size() > 1) {
    std::size_t worst = runs.size();
    double worst_dur = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const double dur = t[offset_index(runs, k)] - t[onset_index(runs, k)];
      const double min_dur =
          runs[k].kind == EventKind::Fixation ? p.min_fixation_duration_s : p.min_saccade_duration_s;
      if (dur < min_dur && dur < worst_dur) {
        worst = k;
        worst_dur = dur;
      }
    }
    if (worst == runs.size()) return;
    // Neighbours are of the opposite kind, so flipping the short run folds it
    // into the enclosing event.
    runs[worst].kind = runs[worst].kind == EventKind::Fixation ? EventKind::Saccade : EventKind::Fixation;
    coalesce(runs);
  }
}

}  // namespace

EventDetection run_event_detection(const SignalChannel& gaze_x, const SignalChannel& gaze_y,
                                   const EventDetectorParams& params) {
  params.validate();
  check_channel(gaze_x);
  check_channel(gaze_y);
  if (gaze_x.t != gaze_y.t) throw Error(ErrorCode::LengthMismatch, "gaze channels are not aligned");
  if (gaze_x.size() < 3) throw Error(ErrorCode::InsufficientData, "gaze channels too short");

  const SignalChannel vx = differentiate(gaze_x);
  const SignalChannel vy = differentiate(gaze_y);
  const SignalChannel raw_speed = combine_norm(std::vector<const SignalChannel*>{&vx, &vy});
  const SignalChannel svx = smooth(vx, params.smoothing_window, params.smoothing_polyorder);
  const SignalChannel svy = smooth(vy, params.smoothing_window, params.smoothing_polyorder);
  const SignalChannel speed = combine_norm(std::vector<const SignalChannel*>{&svx, &svy});

  EventDetection out;
  out.threshold = adaptive_velocity_threshold(speed, params);
  const double thr = std::max(out.threshold.threshold, params.min_threshold);

  const auto& t = gaze_x.t;
  const std::size_t n = t.size();
  std::size_t i = 0;
  std::vector<Run> runs;
  while (i < n) {
    if (!speed.valid[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && speed.valid[j]) ++j;
    // valid segment [i, j)
    runs.clear();
    for (std::size_t k = i; k < j; ++k) {
      const EventKind kind = speed.v[k] > thr ? EventKind::Saccade : EventKind::Fixation;
      if (!runs.empty() && runs.back().kind == kind) runs.back().last = k;
      else runs.push_back({kind, k, k});
    }
    // Smoothing smears velocity into neighbouring samples; trim saccade
    // edges where the unsmoothed speed is sub-threshold.
    for (auto& r : runs) {
      if (r.kind != EventKind::Saccade) continue;
      std::size_t a = r.first;
      std::size_t b = r.last;
      while (a <= b && !(raw_speed.v[a] > thr)) ++a;
      while (b > a && !(raw_speed.v[b] > thr)) --b;
      if (a > b) {
        r.kind = EventKind::Fixation;
        continue;
      }
      r.first = a;
      r.last = b;
    }
    std::vector<Run> split;
    split.reserve(runs.size() * 3);
    std::size_t cursor = i;
    for (const auto& r : runs) {
      if (r.first > cursor) split.push_back({EventKind::Fixation, cursor, r.first - 1});
      split.push_back(r);
      cursor = r.last + 1;
    }
    if (cursor < j) split.push_back({EventKind::Fixation, cursor, j - 1});
    runs.swap(split);
    coalesce(runs);
    merge_short_runs(runs, t, params);

    for (std::size_t k = 0; k < runs.size(); ++k) {
      const std::size_t on = onset_index(runs, k);
      const std::size_t off = offset_index(runs, k);
      GazeEvent e;
      e.kind = runs[k].kind;
      e.onset_s = t[on];
      e.offset_s = t[off];
      e.duration_s = e.offset_s - e.onset_s;
      const double min_dur =
          e.kind == EventKind::Fixation ? params.min_fixation_duration_s : params.min_saccade_duration_s;
      // Only a lone sub-minimum run can remain here; it is not an event.
      if (!(e.duration_s >= min_dur)) continue;
      // At 60 Hz a short saccade is already under way at its first
      // supra-threshold sample, so its displacement is taken between the
      // bracketing fixation samples.
      std::size_t a = on;
      std::size_t b = off;
      if (e.kind == EventKind::Saccade) {
        a = on > i ? on - 1 : on;
        b = off + 1 < j ? off + 1 : off;
      }
      e.amplitude = std::hypot(gaze_x.v[b] - gaze_x.v[a], gaze_y.v[b] - gaze_y.v[a]);
      double peak = 0.0;
      double sum = 0.0;
      for (std::size_t s = runs[k].first; s <= runs[k].last; ++s) {
        peak = std::max(peak, raw_speed.v[s]);
        sum += raw_speed.v[s];
      }
      e.peak_velocity = peak;
      e.mean_velocity = std::min(peak, sum / static_cast<double>(runs[k].last - runs[k].first + 1));
      out.events.push_back(e);
    }
    i = j;
  }
  return out;
}

std::vector<GazeEvent> detect_events(const SignalChannel& gaze_x, const SignalChannel& gaze_y,
                                     const EventDetectorParams& params) {
  return run_event_detection(gaze_x, gaze_y, params).events;
}

void write_events_csv(const std::filesystem::path& path, const std::vector<GazeEvent>& events) {
  std::string out = "kind,onset_s,offset_s,duration_s,amplitude,peak_velocity,mean_velocity\n";
  for (const auto& e : events) {
    out += to_string(e.kind);
    for (double v : {e.onset_s, e.offset_s, e.duration_s, e.amplitude, e.peak_velocity, e.mean_velocity}) {
      out += ',';
      detail::append_exact(out, v);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

}  // namespace gazesense::events
