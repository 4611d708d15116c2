#include "gazesense/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "gazesense/error.hpp"

namespace gazesense {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Highway: return "highway";
    case Scenario::Rural: return "rural";
    case Scenario::Urban: return "urban";
  }
  return "highway";
}

std::string_view to_string(Block b) {
  switch (b) {
    case Block::NoAlcohol: return "no_alcohol";
    case Block::Moderate: return "moderate";
    case Block::Severe: return "severe";
  }
  return "no_alcohol";
}

Scenario parse_scenario(std::string_view s) {
  if (s == "highway") return Scenario::Highway;
  if (s == "rural") return Scenario::Rural;
  if (s == "urban") return Scenario::Urban;
  throw Error(ErrorCode::BadConfig, "unknown scenario '" + std::string(s) + "'");
}

Block parse_block(std::string_view s) {
  if (s == "no_alcohol") return Block::NoAlcohol;
  if (s == "moderate") return Block::Moderate;
  if (s == "severe") return Block::Severe;
  throw Error(ErrorCode::BadConfig, "unknown block '" + std::string(s) + "'");
}

void check_channel(const SignalChannel& ch) {
  if (ch.v.size() != ch.t.size() || ch.valid.size() != ch.t.size()) {
    throw Error(ErrorCode::LengthMismatch, "channel '" + ch.name + "' has unequal t/v/valid lengths");
  }
  for (std::size_t i = 1; i < ch.t.size(); ++i) {
    if (!(ch.t[i] > ch.t[i - 1])) {
      throw Error(ErrorCode::NonMonotonicTime, "channel '" + ch.name + "' time not increasing at index " +
                                                   std::to_string(i));
    }
  }
}

double TripRecording::duration_s() const {
  if (samples.empty()) return 0.0;
  const double first = samples.front().t;
  const double last = samples.back().t;
  if (samples.size() < 2) return last - first + 1.0 / kNominalGazeRateHz;
  const double rate = static_cast<double>(samples.size() - 1) / (last - first);
  return last + 1.0 / rate;
}

SignalChannel TripRecording::gaze_channel(std::string_view which) const {
  SignalChannel ch;
  ch.name = std::string(which);
  ch.t.reserve(samples.size());
  ch.v.reserve(samples.size());
  ch.valid.reserve(samples.size());
  double GazeSample::*field = nullptr;
  if (which == "gaze_x") field = &GazeSample::gaze_x;
  else if (which == "gaze_y") field = &GazeSample::gaze_y;
  else if (which == "eye_x") field = &GazeSample::eye_x;
  else if (which == "eye_y") field = &GazeSample::eye_y;
  else if (which == "eye_z") field = &GazeSample::eye_z;
  else throw Error(ErrorCode::MissingChannel, "no gaze channel named '" + ch.name + "'");
  for (const auto& s : samples) {
    ch.t.push_back(s.t);
    ch.v.push_back(s.*field);
    ch.valid.push_back(s.valid);
  }
  return ch;
}

bool bac_consistent(Block block, double bac_gdl) {
  if (!(bac_gdl >= 0.0)) return false;
  switch (block) {
    case Block::NoAlcohol: return bac_gdl == 0.0;
    case Block::Moderate: return bac_gdl > 0.0 && bac_gdl <= 0.03;
    case Block::Severe: return bac_gdl >= 0.05;
  }
  return false;
}

std::vector<CanChannelDecl> default_can_channels() {
  return {
      {"steering_angle", 2},         {"gas_pedal", 2},
      {"brake_pedal", 2},            {"lateral_velocity", 0},
      {"longitudinal_velocity", 0},  {"lateral_acceleration", 0},
      {"longitudinal_acceleration", 0}, {"lane_position", 0},
  };
}

void StudyManifest::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    if (!seen.emplace(e.participant_id, e.trip_id).second) {
      throw Error(ErrorCode::BadConfig,
                  "duplicate manifest entry (" + e.participant_id + ", " + e.trip_id + ")");
    }
  }
  for (const auto& d : can_channels) {
    if (d.derivatives < 0 || d.derivatives > 2) {
      throw Error(ErrorCode::BadConfig, "CAN channel '" + d.name + "' derivatives must be 0, 1 or 2");
    }
  }
}

ValidationReport validate_trip(const TripRecording& trip) {
  const auto& s = trip.samples;
  if (s.empty()) throw Error(ErrorCode::EmptyTrip, "trip '" + trip.trip_id + "' has no samples");

  ValidationReport r;
  const std::size_t n = s.size();
  r.duration_s = s.back().t - s.front().t;
  r.nominal_rate_hz = n > 1 && r.duration_s > 0.0 ? static_cast<double>(n - 1) / r.duration_s : 0.0;
  r.rate_ok = std::abs(r.nominal_rate_hz - kNominalGazeRateHz) <= 0.05 * kNominalGazeRateHz;

  // A gap is a maximal stretch of lost tracking: invalid samples, or missing
  // samples showing up as an interval longer than 1.5 nominal periods.
  const double max_step = 1.5 / kNominalGazeRateHz;
  std::size_t invalid = 0;
  bool in_gap = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && s[i].t - s[i - 1].t > max_step) {
      if (!in_gap) ++r.gap_count;
      in_gap = true;
    }
    if (!s[i].valid) {
      ++invalid;
      if (!in_gap) ++r.gap_count;
      in_gap = true;
    } else {
      in_gap = false;
    }
  }
  r.invalid_fraction = static_cast<double>(invalid) / static_cast<double>(n);
  return r;
}

SignalChannel interpolate_gaps(const SignalChannel& ch, double max_gap_s) {
  if (!(max_gap_s > 0.0)) throw Error(ErrorCode::BadParams, "max_gap_s must be positive");
  check_channel(ch);
  SignalChannel out = ch;
  const std::size_t n = ch.size();
  std::size_t i = 0;
  while (i < n) {
    if (ch.valid[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !ch.valid[j]) ++j;
    // invalid run is [i, j)
    if (i > 0 && j < n) {
      const std::size_t a = i - 1;
      const std::size_t b = j;
      const double span = ch.t[b] - ch.t[a];
      if (span < max_gap_s) {
        for (std::size_t k = i; k < j; ++k) {
          const double w = (ch.t[k] - ch.t[a]) / span;
          out.v[k] = ch.v[a] + w * (ch.v[b] - ch.v[a]);
          out.valid[k] = true;
        }
      }
    }
    i = j;
  }
  return out;
}

SignalChannel differentiate(const SignalChannel& ch) {
  check_channel(ch);
  const std::size_t n = ch.size();
  if (n < 3) throw Error(ErrorCode::TooShort, "differentiate needs at least 3 samples");
  SignalChannel out;
  out.name = "d(" + ch.name + ")";
  out.t = ch.t;
  out.v.resize(n);
  out.valid.resize(n);

  out.v[0] = (ch.v[1] - ch.v[0]) / (ch.t[1] - ch.t[0]);
  out.valid[0] = ch.valid[0] && ch.valid[1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out.v[i] = (ch.v[i + 1] - ch.v[i - 1]) / (ch.t[i + 1] - ch.t[i - 1]);
    out.valid[i] = ch.valid[i - 1] && ch.valid[i] && ch.valid[i + 1];
  }
  out.v[n - 1] = (ch.v[n - 1] - ch.v[n - 2]) / (ch.t[n - 1] - ch.t[n - 2]);
  out.valid[n - 1] = ch.valid[n - 2] && ch.valid[n - 1];
  return out;
}

std::vector<double> savgol_weights(int half_width, int polyorder) {
  if (half_width < 0 || polyorder < 0) throw Error(ErrorCode::BadParams, "negative Savitzky-Golay size");
  const int m = half_width;
  const int p = std::min(polyorder, 2 * m);
  const int q = p + 1;

  // Normal equations (A^T A) c = e0 with A[k][j] = k^j, k = -m..m.
  std::vector<double> ata(static_cast<std::size_t>(q * q), 0.0);
  for (int k = -m; k <= m; ++k) {
    for (int r = 0; r < q; ++r) {
      for (int c = 0; c < q; ++c) {
        ata[static_cast<std::size_t>(r * q + c)] += std::pow(static_cast<double>(k), r + c);
      }
    }
  }
  std::vector<double> rhs(static_cast<std::size_t>(q), 0.0);
  rhs[0] = 1.0;
  for (int col = 0; col < q; ++col) {
    int piv = col;
    for (int r = col + 1; r < q; ++r) {
      if (std::abs(ata[static_cast<std::size_t>(r * q + col)]) >
          std::abs(ata[static_cast<std::size_t>(piv * q + col)])) {
        piv = r;
      }
    }
    if (piv != col) {
      for (int c = 0; c < q; ++c) {
        std::swap(ata[static_cast<std::size_t>(col * q + c)], ata[static_cast<std::size_t>(piv * q + c)]);
      }
      std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(piv)]);
    }
    const double d = ata[static_cast<std::size_t>(col * q + col)];
    for (int r = col + 1; r < q; ++r) {
      const double f = ata[static_cast<std::size_t>(r * q + col)] / d;
      for (int c = col; c < q; ++c) {
        ata[static_cast<std::size_t>(r * q + c)] -= f * ata[static_cast<std::size_t>(col * q + c)];
      }
      rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> coef(static_cast<std::size_t>(q), 0.0);
  for (int r = q - 1; r >= 0; --r) {
    double acc = rhs[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < q; ++c) {
      acc -= ata[static_cast<std::size_t>(r * q + c)] * coef[static_cast<std::size_t>(c)];
    }
    coef[static_cast<std::size_t>(r)] = acc / ata[static_cast<std::size_t>(r * q + r)];
  }

  std::vector<double> w(static_cast<std::size_t>(2 * m + 1), 0.0);
  for (int k = -m; k <= m; ++k) {
    double acc = 0.0;
    for (int j = 0; j < q; ++j) acc += coef[static_cast<std::size_t>(j)] * std::pow(static_cast<double>(k), j);
    w[static_cast<std::size_t>(k + m)] = acc;
  }
  return w;
}

SignalChannel smooth(const SignalChannel& ch, int window_samples, int polyorder) {
  if (window_samples < 1 || window_samples % 2 == 0 || polyorder < 0 || polyorder >= window_samples) {
    throw Error(ErrorCode::BadParams, "smooth needs an odd window and polyorder < window");
  }
  check_channel(ch);
  const int half = window_samples / 2;
  const auto n = static_cast<std::ptrdiff_t>(ch.size());

  std::vector<std::vector<double>> weights(static_cast<std::size_t>(half + 1));
  for (int m = 0; m <= half; ++m) weights[static_cast<std::size_t>(m)] = savgol_weights(m, polyorder);

  SignalChannel out;
  out.name = "smooth(" + ch.name + ")";
  out.t = ch.t;
  out.v = ch.v;
  out.valid = ch.valid;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto m = std::min<std::ptrdiff_t>({half, i, n - 1 - i});
    const auto& w = weights[static_cast<std::size_t>(m)];
    bool ok = true;
    double acc = 0.0;
    for (std::ptrdiff_t k = -m; k <= m; ++k) {
      const auto idx = static_cast<std::size_t>(i + k);
      if (!ch.valid[idx]) {
        ok = false;
        break;
      }
      acc += w[static_cast<std::size_t>(k + m)] * ch.v[idx];
    }
    out.valid[static_cast<std::size_t>(i)] = ok;
    if (ok) out.v[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

SignalChannel combine_norm(const std::vector<const SignalChannel*>& chs) {
  if (chs.empty()) throw Error(ErrorCode::LengthMismatch, "combine_norm needs at least one channel");
  const SignalChannel& first = *chs.front();
  check_channel(first);
  std::string name = "norm(";
  for (std::size_t c = 0; c < chs.size(); ++c) {
    check_channel(*chs[c]);
    if (chs[c]->t != first.t) {
      throw Error(ErrorCode::LengthMismatch, "combine_norm channels do not share timestamps");
    }
    name += (c ? "," : "") + chs[c]->name;
  }
  SignalChannel out;
  out.name = name + ")";
  out.t = first.t;
  out.v.assign(first.size(), 0.0);
  out.valid.assign(first.size(), true);
  for (std::size_t i = 0; i < first.size(); ++i) {
    double ss = 0.0;
    bool ok = true;
    for (const auto* ch : chs) {
      ok = ok && ch->valid[i];
      ss += ch->v[i] * ch->v[i];
    }
    out.valid[i] = ok;
    out.v[i] = chs.size() == 1 ? std::abs(first.v[i]) : std::sqrt(ss);
  }
  return out;
}

SignalChannel combine_norm(const std::vector<SignalChannel>& chs) {
  std::vector<const SignalChannel*> ptrs;
  ptrs.reserve(chs.size());
  for (const auto& c : chs) ptrs.push_back(&c);
  return combine_norm(ptrs);
}

double brac_to_bac(double brac_mg_per_L) {
  if (brac_mg_per_L < 0.0) throw Error(ErrorCode::NegativeInput, "breath alcohol must be non-negative");
  // Quantised to 1e-12 g/dL so decimal readings map onto decimal results
  // (0.35 -> 0.07 rather than 0.06999999999999999).
  return std::round(brac_mg_per_L * 0.2 * 1e12) / 1e12;
}

std::pair<SignalChannel, SignalChannel> to_visual_angle(const TripRecording& trip,
                                                        const ScreenGeometry& geom) {
  SignalChannel x = trip.gaze_channel("gaze_x");
  SignalChannel y = trip.gaze_channel("gaze_y");
  constexpr double kDeg = 180.0 / std::numbers::pi;
  for (std::size_t i = 0; i < trip.samples.size(); ++i) {
    const double d = geom.viewing_distance_mm > 0.0 ? geom.viewing_distance_mm : trip.samples[i].eye_z;
    if (!(d > 0.0)) {
      x.valid[i] = y.valid[i] = false;
      continue;
    }
    x.v[i] = std::atan2(x.v[i] - geom.center_x_mm, d) * kDeg;
    y.v[i] = std::atan2(y.v[i] - geom.center_y_mm, d) * kDeg;
  }
  x.name = "gaze_x_deg";
  y.name = "gaze_y_deg";
  return {std::move(x), std::move(y)};
}

}  // namespace gazesense
