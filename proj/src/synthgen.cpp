#include "gazesense/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "gazesense/error.hpp"
#include "gazesense/parallel.hpp"
#include "gazesense/trip_io.hpp"

namespace gazesense::synth {

namespace {

// Screen and baseline behaviour, in millimetres and seconds.
constexpr double kScreenW = 600.0;
constexpr double kScreenH = 340.0;
constexpr double kMargin = 15.0;
constexpr double kViewingDistance = 650.0;

constexpr double kFixationMedianS = 0.25;
constexpr double kFixationSigma = 0.5;
constexpr double kMinFixationS = 0.1;

constexpr double kAmplitudeMedian = 55.0;
constexpr double kAmplitudeSigma = 0.7;
constexpr double kMinAmplitude = 3.0;
constexpr double kMaxAmplitude = 400.0;

// Main sequence: V_peak = Vmax * (1 - exp(-A / C)).
constexpr double kMainSeqVmax = 6000.0;
constexpr double kMainSeqC = 100.0;
// Peak of the minimum-jerk velocity profile relative to A / D.
constexpr double kMinJerkPeak = 1.875;

constexpr double kGazeNoiseMm = 0.3;
constexpr double kHeadNoiseMm = 0.2;
constexpr double kHeadSpreadMm = 15.0;
constexpr double kHeadReversion = 0.05;

constexpr double kBlinkProbability = 0.05;
constexpr double kDropoutProbability = 0.03;

constexpr double kSevereBacMean = 0.062;
constexpr double kSevereBacSd = 0.005;
constexpr double kModerateBacMean = 0.027;
constexpr double kModerateBacSd = 0.003;

struct ScenarioStyle {
  double fixation = 1.0;
  double amplitude = 1.0;
  double head = 1.0;
  double speed_mps = 20.0;
  double curvature = 1.0;
};

ScenarioStyle style(Scenario s) {
  switch (s) {
    case Scenario::Highway: return {1.10, 0.85, 0.9, 30.0, 0.5};
    case Scenario::Rural: return {1.00, 1.00, 1.0, 22.0, 1.0};
    case Scenario::Urban: return {0.90, 1.20, 1.2, 12.0, 1.5};
  }
  return {};
}

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

struct Segment {
  bool saccade = false;
  double t0 = 0.0;
  double t1 = 0.0;
  double x0 = 0.0, y0 = 0.0;
  double x1 = 0.0, y1 = 0.0;
};

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

// Ornstein-Uhlenbeck step with stationary sd `spread` and reversion rate theta.
double ou_step(double x, double mean, double theta, double spread, double dt, double z) {
  const double a = std::exp(-theta * dt);
  return mean + a * (x - mean) + spread * std::sqrt(1.0 - a * a) * z;
}

std::vector<SignalChannel> synth_can(const TripRequest& req, std::mt19937_64& rng) {
  const auto st = style(req.scenario);
  const double dt = 1.0 / kNominalCanRateHz;
  const auto n = static_cast<std::size_t>(std::llround(req.duration_s * kNominalCanRateHz));
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> t(n), speed(n), lane(n), curv(n);
  double v = st.speed_mps;
  double y = 0.0;
  const double lane_spread = 0.15 * req.profile.lane_scale * req.traits.head_scale;
  const double phase = unit(rng) * 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(i) * dt;
    v = ou_step(v, st.speed_mps, 0.05, 1.5, dt, z(rng));
    y = ou_step(y, 0.0, 0.2, lane_spread, dt, z(rng));
    speed[i] = v;
    lane[i] = y;
    curv[i] = st.curvature * std::sin(2.0 * std::numbers::pi * t[i] / 45.0 + phase);
  }

  auto deriv = [&](const std::vector<double>& x) {
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
      if (hi > lo) d[i] = (x[hi] - x[lo]) / (static_cast<double>(hi - lo) * dt);
    }
    return d;
  };
  const auto lon_acc = deriv(speed);
  const auto lat_vel = deriv(lane);
  const auto lat_acc = deriv(lat_vel);

  auto make = [&](std::string name) {
    SignalChannel ch;
    ch.name = std::move(name);
    ch.t = t;
    ch.v.resize(n);
    ch.valid.assign(n, true);
    return ch;
  };
  std::vector<SignalChannel> out;
  for (const auto& d : default_can_channels()) out.push_back(make(d.name));
  double gas_noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gas_noise = ou_step(gas_noise, 0.0, 0.5, 0.05, dt, z(rng));
    const double steering = 2.0 * curv[i] - 4.0 * lane[i] + 0.5 * lat_acc[i] + 0.2 * z(rng);
    const double gas = std::clamp(0.25 + 0.08 * (st.speed_mps - speed[i]) + gas_noise, 0.0, 1.0);
    const double brake = lon_acc[i] < -0.3 ? std::min(1.0, -lon_acc[i] / 3.0) : 0.0;
    out[0].v[i] = steering;
    out[1].v[i] = gas;
    out[2].v[i] = brake;
    out[3].v[i] = lat_vel[i];
    out[4].v[i] = speed[i];
    out[5].v[i] = lat_acc[i] + 0.01 * z(rng);
    out[6].v[i] = lon_acc[i] + 0.05 * z(rng);
    out[7].v[i] = lane[i];
  }
  return out;
}

std::string two_digit(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

void EffectProfile::validate() const {
  for (double v : {fixation_duration_scale, saccade_rate_scale, saccade_amplitude_scale, jitter_scale,
                   head_drift_scale, lane_scale}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::BadConfig, "effect multipliers must be > 0");
  }
  if (saccade_rate_scale > 1.0) throw Error(ErrorCode::BadConfig, "saccade_rate_scale must be <= 1");
}

EffectProfile interpolate_profile(const EffectProfile& anchor, double anchor_bac, double bac) {
  if (!(anchor_bac > 0.0)) throw Error(ErrorCode::BadConfig, "anchor BAC must be > 0");
  const double f = bac / anchor_bac;
  auto lerp = [f](double s) { return 1.0 + (s - 1.0) * f; };
  return {lerp(anchor.fixation_duration_scale), lerp(anchor.saccade_rate_scale),
          lerp(anchor.saccade_amplitude_scale), lerp(anchor.jitter_scale),
          lerp(anchor.head_drift_scale),        lerp(anchor.lane_scale)};
}

BlockProfiles named_profiles(std::string_view name) {
  const EffectProfile sober;
  if (name == "none") return {sober, sober, sober};
  if (name == "default") {
    return {sober, EffectProfile{1.15, 0.95, 0.95, 1.10, 1.10, 1.15},
            EffectProfile{1.30, 0.90, 0.90, 1.20, 1.20, 1.30}};
  }
  if (name == "strong") {
    return {sober, EffectProfile{1.35, 0.85, 0.85, 1.30, 1.30, 1.30},
            EffectProfile{1.70, 0.70, 0.70, 1.60, 1.60, 1.60}};
  }
  if (name == "gaze_events") {
    // Moderate scales with BAC; a moderate block as strong as "strong"'s lets head features soak up weight.
    const EffectProfile severe{1.70, 0.70, 0.70, 1.0, 1.0, 1.0};
    return {sober, interpolate_profile(severe, kSevereBacMean, kModerateBacMean), severe};
  }
  throw Error(ErrorCode::BadConfig, "unknown effect profile '" + std::string(name) + "'");
}

SyntheticTrip generate_trip(const TripRequest& req) {
  if (!(req.duration_s >= 120.0)) throw Error(ErrorCode::BadConfig, "synthetic trips must last at least 120 s");
  if (!(req.sample_rate_hz > 0.0)) throw Error(ErrorCode::BadConfig, "sample rate must be > 0");
  req.profile.validate();

  std::mt19937_64 rng = substream(req.seed, 0x9e37, 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto st = style(req.scenario);
  const auto& p = req.profile;

  const double fix_mu = std::log(kFixationMedianS * req.traits.fixation_scale * st.fixation *
                                 p.fixation_duration_scale);
  const double amp_mu =
      std::log(kAmplitudeMedian * req.traits.amplitude_scale * st.amplitude * p.saccade_amplitude_scale);
  const double saccade_p = std::min(1.0, p.saccade_rate_scale);

  auto fixation_draw = [&] {
    double d = 0.0;
    do {
      d = std::exp(fix_mu + kFixationSigma * z(rng));
    } while (d < kMinFixationS);
    return d;
  };

  // Continuous-time event timeline.
  std::vector<Segment> segs;
  double x = kScreenW / 2.0;
  double y = kScreenH / 2.0;
  double t = 0.0;
  const double end = req.duration_s;
  while (t < end) {
    double dur = fixation_draw();
    while (unit(rng) >= saccade_p) dur += fixation_draw();
    segs.push_back({false, t, t + dur, x, y, x, y});
    t += dur;
    if (t >= end) break;

    double amp = 0.0, nx = x, ny = y;
    for (int attempt = 0; attempt < 50; ++attempt) {
      amp = std::clamp(std::exp(amp_mu + kAmplitudeSigma * z(rng)), kMinAmplitude, kMaxAmplitude);
      const double dir = unit(rng) * 2.0 * std::numbers::pi;
      nx = x + amp * std::cos(dir);
      ny = y + amp * std::sin(dir);
      if (nx >= kMargin && nx <= kScreenW - kMargin && ny >= kMargin && ny <= kScreenH - kMargin) break;
      // Fall back to a saccade toward the screen centre.
      const double cx = kScreenW / 2.0 - x;
      const double cy = kScreenH / 2.0 - y;
      const double cn = std::hypot(cx, cy);
      if (attempt == 49 && cn > 0.0) {
        amp = std::min(amp, cn);
        nx = x + amp * cx / cn;
        ny = y + amp * cy / cn;
      }
    }
    nx = std::clamp(nx, kMargin, kScreenW - kMargin);
    ny = std::clamp(ny, kMargin, kScreenH - kMargin);
    amp = std::hypot(nx - x, ny - y);
    if (amp < kMinAmplitude) {
      nx = x > kScreenW / 2.0 ? x - kMinAmplitude : x + kMinAmplitude;
      ny = y;
      amp = kMinAmplitude;
    }
    const double vpeak = kMainSeqVmax * (1.0 - std::exp(-amp / kMainSeqC));
    const double sd = kMinJerkPeak * amp / vpeak;
    segs.push_back({true, t, t + sd, x, y, nx, ny});
    t += sd;
    x = nx;
    y = ny;
  }

  SyntheticTrip out;
  for (const auto& s : segs) {
    GroundTruthEvent e;
    e.kind = s.saccade ? events::EventKind::Saccade : events::EventKind::Fixation;
    e.onset_s = s.t0;
    e.offset_s = std::min(s.t1, end);
    if (s.saccade) {
      e.amplitude = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
      e.peak_velocity = kMinJerkPeak * e.amplitude / (s.t1 - s.t0);
    }
    out.events.push_back(e);
  }

  // Sampling.
  const auto n = static_cast<std::size_t>(std::llround(req.duration_s * req.sample_rate_hz));
  auto& samples = out.trip.samples;
  samples.resize(n);
  const double jitter = kGazeNoiseMm * req.traits.jitter_scale * p.jitter_scale;
  const double head_spread = kHeadSpreadMm * req.traits.head_scale * st.head * p.head_drift_scale;
  const double dt = 1.0 / req.sample_rate_hz;
  double hx = head_spread * z(rng);
  double hy = head_spread * z(rng);
  double hz = head_spread * z(rng);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) * dt;
    while (k + 1 < segs.size() && segs[k].t1 <= ti) ++k;
    const auto& s = segs[k];
    double gx = s.x0;
    double gy = s.y0;
    if (s.saccade) {
      const double f = min_jerk((ti - s.t0) / (s.t1 - s.t0));
      gx = s.x0 + f * (s.x1 - s.x0);
      gy = s.y0 + f * (s.y1 - s.y0);
    }
    hx = ou_step(hx, 0.0, kHeadReversion, head_spread, dt, z(rng));
    hy = ou_step(hy, 0.0, kHeadReversion, head_spread, dt, z(rng));
    hz = ou_step(hz, 0.0, kHeadReversion, head_spread, dt, z(rng));
    auto& smp = samples[i];
    smp.t = ti;
    smp.gaze_x = gx + jitter * z(rng);
    smp.gaze_y = gy + jitter * z(rng);
    smp.eye_x = hx + kHeadNoiseMm * z(rng);
    smp.eye_y = hy + kHeadNoiseMm * z(rng);
    smp.eye_z = kViewingDistance + hz + kHeadNoiseMm * z(rng);
  }

  // Tracking loss, kept inside fixations and away from their edges: blinks
  // (100-250 ms, longer than the interpolation limit) and 1-3 sample dropouts.
  auto invalidate = [&](double from, double to) {
    auto i0 = static_cast<std::size_t>(std::ceil(from * req.sample_rate_hz));
    for (std::size_t i = i0; i < n && samples[i].t < to; ++i) {
      auto& smp = samples[i];
      smp.valid = false;
      smp.gaze_x = smp.gaze_y = smp.eye_x = smp.eye_y = smp.eye_z = 0.0;
    }
  };
  for (const auto& s : segs) {
    if (s.saccade) continue;
    const double len = std::min(s.t1, end) - s.t0;
    if (len > 0.6 && unit(rng) < kBlinkProbability) {
      const double blink = 0.1 + 0.15 * unit(rng);
      const double start = s.t0 + 0.15 + unit(rng) * (len - 0.3 - blink);
      invalidate(start, start + blink);
    } else if (len > 0.3 && unit(rng) < kDropoutProbability) {
      const double drop = dt * (0.5 + std::floor(unit(rng) * 3.0));
      const double start = s.t0 + 0.1 + unit(rng) * (len - 0.2 - drop);
      invalidate(start, start + drop);
    }
  }

  out.trip.scenario = req.scenario;
  if (req.with_can) out.trip.can_channels = synth_can(req, rng);
  return out;
}

void SynthConfig::validate() const {
  if (n_participants < 1) throw Error(ErrorCode::BadConfig, "n_participants must be >= 1");
  if (trips_per_block < 1) throw Error(ErrorCode::BadConfig, "trips_per_block must be >= 1");
  if (!(trip_duration_s >= 120.0)) throw Error(ErrorCode::BadConfig, "trip_duration_s must be >= 120");
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::BadConfig, "sample_rate_hz must be > 0");
  if (!(trait_spread >= 0.0 && trait_spread < 1.0)) {
    throw Error(ErrorCode::BadConfig, "trait_spread must be in [0, 1)");
  }
  for (const auto& p : profiles) p.validate();
}

ParticipantTraits participant_traits(const SynthConfig& cfg, int participant) {
  auto rng = substream(cfg.seed, static_cast<std::uint64_t>(participant), 0xA11CE);
  std::uniform_real_distribution<double> u(-cfg.trait_spread, cfg.trait_spread);
  ParticipantTraits tr;
  tr.fixation_scale = 1.0 + u(rng);
  tr.amplitude_scale = 1.0 + u(rng);
  tr.jitter_scale = 1.0 + u(rng);
  tr.head_scale = 1.0 + u(rng);
  return tr;
}

std::vector<PlannedTrip> plan_study(const SynthConfig& cfg) {
  cfg.validate();
  static constexpr std::array kBlockOrder = {Block::NoAlcohol, Block::Severe, Block::Moderate};
  static constexpr std::array kScenarios = {Scenario::Highway, Scenario::Rural, Scenario::Urban};
  std::vector<PlannedTrip> plan;
  for (int p = 0; p < cfg.n_participants; ++p) {
    const auto traits = participant_traits(cfg, p);
    const std::string pid = "P" + two_digit(p + 1);
    int trip_index = 0;
    for (Block block : kBlockOrder) {
      for (int k = 0; k < cfg.trips_per_block; ++k, ++trip_index) {
        const Scenario sc = kScenarios[static_cast<std::size_t>(k) % kScenarios.size()];
        auto rng = substream(cfg.seed, static_cast<std::uint64_t>(p),
                             0x10000u + static_cast<std::uint64_t>(trip_index));
        std::normal_distribution<double> z(0.0, 1.0);
        double bac = 0.0;
        if (block == Block::Severe) bac = std::max(0.05, kSevereBacMean + kSevereBacSd * z(rng));
        if (block == Block::Moderate) {
          bac = std::clamp(kModerateBacMean + kModerateBacSd * z(rng), 0.001, 0.03);
        }
        bac = std::round(bac * 1e6) / 1e6;

        PlannedTrip pt;
        auto& e = pt.entry;
        e.participant_id = pid;
        e.trip_id = pid + "_" + std::string(to_string(block)) + "_" + std::string(to_string(sc));
        if (cfg.trips_per_block > 3) e.trip_id += "_" + std::to_string(k / 3 + 1);
        e.scenario = sc;
        e.block = block;
        e.bac_gdl = bac;
        e.file_path = "trips/" + e.trip_id + ".csv";
        if (cfg.with_can) e.can_file_path = "can/" + e.trip_id + ".csv";

        auto& r = pt.request;
        r.profile = cfg.profiles[static_cast<std::size_t>(block)];
        r.traits = traits;
        r.scenario = sc;
        r.duration_s = cfg.trip_duration_s;
        r.sample_rate_hz = cfg.sample_rate_hz;
        r.with_can = cfg.with_can;
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(trip_index)};
        std::array<std::uint32_t, 2> words{};
        seq.generate(words.begin(), words.end());
        r.seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
        plan.push_back(std::move(pt));
      }
    }
  }
  return plan;
}

SyntheticTrip realize(const PlannedTrip& planned) {
  auto out = generate_trip(planned.request);
  auto& trip = out.trip;
  trip.participant_id = planned.entry.participant_id;
  trip.trip_id = planned.entry.trip_id;
  trip.scenario = planned.entry.scenario;
  trip.block = planned.entry.block;
  trip.bac_gdl = planned.entry.bac_gdl;
  return out;
}

StudyManifest generate_study(const SynthConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs) {
  const auto plan = plan_study(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());

  parallel_for(plan.size(), jobs, [&](std::size_t i) {
    const auto trip = realize(plan[i]);
    write_gaze_csv(out_dir / plan[i].entry.file_path, trip.trip.samples);
    if (cfg.with_can) write_can_csv(out_dir / plan[i].entry.can_file_path, trip.trip.can_channels);
  });

  StudyManifest manifest;
  if (cfg.with_can) manifest.can_channels = default_can_channels();
  for (const auto& pt : plan) manifest.entries.push_back(pt.entry);
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace gazesense::synth
