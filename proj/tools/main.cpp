#include <CLI11.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gazesense/config.hpp"
#include "gazesense/decision.hpp"
#include "gazesense/error.hpp"
#include "gazesense/evaluation.hpp"
#include "gazesense/feature_io.hpp"
#include "gazesense/synthgen.hpp"
#include "gazesense/trip_io.hpp"
#include "gazesense/windowing.hpp"

namespace fs = std::filesystem;
using namespace gazesense;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

std::string require(const std::string& value, const char* what) {
  if (value.empty()) throw Error(ErrorCode::BadConfig, std::string("no ") + what + " given (flag or config paths)");
  return value;
}

fs::path sibling(const std::string& path, const char* ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("GAZESENSE_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || *end != '\0' || *s == '-') {
    throw Error(ErrorCode::BadConfig, std::string("GAZESENSE_SEED is not an unsigned integer: '") + s + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Values given on the command line; each overrides the config when set.
struct Flags {
  std::string config;
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;
  bool print_config = false;

  std::string out_dir, participants_profile;
  std::optional<int> participants, trips_per_block;
  std::optional<double> duration, trait_spread;
  bool with_can = false;

  std::string manifest, features_out, features_csv, source;
  bool allow_mismatch = false;

  std::string features, task, scheme, report_out, report_csv, penalty;
  std::optional<double> C, alpha;
  bool permute = false;

  std::string report, decision_dir;
  std::optional<int> resamples;

  std::string format = "text";
};

PipelineConfig resolve(const Flags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (auto s = env_seed()) c.seed = *s;
  if (f.seed) c.seed = *f.seed;

  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  if (!f.participants_profile.empty()) c.synth_profile = f.participants_profile;
  if (f.participants) c.synth_participants = *f.participants;
  if (f.trips_per_block) c.synth_trips_per_block = *f.trips_per_block;
  if (f.duration) c.synth_trip_duration_s = *f.duration;
  if (f.trait_spread) c.synth_trait_spread = *f.trait_spread;
  if (f.with_can) c.synth_with_can = true;

  if (!f.manifest.empty()) c.manifest = f.manifest;
  if (!f.features_out.empty()) c.features = f.features_out;
  if (!f.source.empty()) c.source = windowing::parse_source(f.source);
  if (f.allow_mismatch) c.allow_metadata_mismatch = true;

  if (!f.features.empty()) c.features = f.features;
  if (!f.task.empty()) c.task = model::parse_task(f.task);
  if (!f.scheme.empty()) c.scheme = evaluation::parse_scheme(f.scheme);
  if (!f.report_out.empty()) c.report = f.report_out;
  if (!f.penalty.empty()) c.train.penalty = model::parse_penalty(f.penalty);
  if (f.C) c.train.C = *f.C;
  if (f.alpha) c.train.alpha = *f.alpha;

  if (!f.report.empty()) c.report = f.report;
  if (!f.decision_dir.empty()) c.out_dir = f.decision_dir;
  if (f.resamples) c.bootstrap_resamples = *f.resamples;

  c.train.seed = c.seed;
  c.validate();
  return c;
}

int cmd_synth(const PipelineConfig& c, unsigned jobs) {
  const fs::path out = require(c.out_dir, "output directory");
  const auto manifest = synth::generate_study(c.synth_config(), out, jobs);
  std::cout << "trips " << manifest.entries.size() << "\n"
            << "manifest " << (out / "manifest.json").string() << "\n";
  return 0;
}

int cmd_extract(const PipelineConfig& c, const Flags& f, unsigned jobs) {
  const fs::path manifest_path = require(c.manifest, "manifest");
  const std::string out = require(c.features, "feature output path");
  const auto manifest = load_manifest(manifest_path);
  const auto build = windowing::build_dataset(manifest, c.feature_options(), manifest_path.parent_path(), jobs,
                                              c.allow_metadata_mismatch);
  const fs::path bin = out;
  const fs::path csv = f.features_csv.empty() ? sibling(out, ".csv") : fs::path(f.features_csv);
  if (bin == csv) throw Error(ErrorCode::BadConfig, "binary and CSV outputs must differ");
  if (bin.has_parent_path()) fs::create_directories(bin.parent_path());
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  windowing::write_matrix_binary(bin, build.matrix);
  windowing::write_matrix_csv(csv, build.matrix);
  std::cout << "rows " << build.matrix.rows.size() << "\n"
            << "cols " << build.matrix.feature_names.size() << "\n"
            << "windows " << build.window_count << "\n"
            << "dropped " << build.dropped << "\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& c, const Flags& f, unsigned jobs) {
  const auto matrix = windowing::read_matrix(require(c.features, "feature matrix"));
  const std::string out = require(c.report, "report output path");
  evaluation::EvaluateOptions opts;
  opts.scheme = c.scheme;
  opts.task = c.task;
  opts.config = c.train;
  opts.permute_labels = f.permute;
  opts.seed = c.seed;
  opts.jobs = jobs;
  const auto report = evaluation::evaluate(matrix, opts);
  evaluation::save_report(out, report);
  write_text(f.report_csv.empty() ? sibling(out, ".csv") : fs::path(f.report_csv), evaluation::report_to_csv(report));
  std::cout << evaluation::report_summary(report);
  for (const auto& fold : report.folds) {
    if (!fold.converged) {
      std::cerr << "warning: fold " << fold.participant << " did not converge in " << fold.iterations
                << " iterations\n";
    }
  }
  return 0;
}

int cmd_decision(const PipelineConfig& c) {
  const fs::path report_path = require(c.report, "report");
  const auto report = evaluation::load_report(report_path);
  const auto series = decision::trip_series(report);
  std::vector<decision::TripScoreSeries> cma;
  cma.reserve(series.size());
  for (const auto& s : series) cma.push_back(decision::cumulative_moving_average(s));
  decision::CurveOptions copts;
  copts.resamples = c.bootstrap_resamples;
  copts.confidence = c.confidence;
  copts.seed = c.seed;
  const auto curve = decision::decision_time_curve(cma, copts);
  const auto sweep = decision::majority_vote_sweep(series);

  const fs::path dir = c.out_dir.empty() ? report_path.parent_path() : fs::path(c.out_dir);
  write_text(dir / "decision_curve.csv", decision::curve_to_csv(curve));
  write_text(dir / "majority_vote.csv", decision::sweep_to_csv(sweep));
  write_text(dir / "decision.json", decision::decision_to_json(curve, sweep));

  std::cout << "decision curve: " << curve.size() << " points, t = " << fmt(curve.front().t_s) << " .. "
            << fmt(curve.back().t_s) << " s\n";
  std::cout << "  first  " << fmt(curve.front().balanced_accuracy) << " [" << fmt(curve.front().ci_low) << ", "
            << fmt(curve.front().ci_high) << "]\n";
  std::cout << "  last   " << fmt(curve.back().balanced_accuracy) << " [" << fmt(curve.back().ci_low) << ", "
            << fmt(curve.back().ci_high) << "]\n\n";
  std::cout << "group  ";
  for (auto name : evaluation::kMetricNames) std::cout << "  " << name;
  std::cout << "\n";
  for (const auto& row : sweep) {
    char head[16];
    std::snprintf(head, sizeof head, "%5d", row.group_size);
    std::cout << head;
    for (auto name : evaluation::kMetricNames) {
      const auto& m = row.macro.at(std::string(name));
      std::cout << "  " << fmt(m.mean) << " ± " << fmt(m.sd);
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_report(const PipelineConfig& c, const Flags& f) {
  const auto report = evaluation::load_report(require(c.report, "report"));
  if (f.format == "json") std::cout << evaluation::report_to_json(report) << "\n";
  else if (f.format == "csv") std::cout << evaluation::report_to_csv(report);
  else std::cout << evaluation::report_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-based impairment detection pipeline"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Flags f;
  std::uint64_t seed_flag = 0;
  app.add_option("--config", f.config, "JSON pipeline config; command-line flags override it");
  app.add_option("--jobs,-j", f.jobs, "Worker threads (0 = all cores)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "Master seed (overrides config and GAZESENSE_SEED)");
  app.add_flag("--print-config", f.print_config, "Print the effective config as JSON and exit");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic study");
  synth->add_option("--out", f.out_dir, "Output directory");
  synth->add_option("--participants", f.participants, "Number of participants");
  synth->add_option("--trips-per-block", f.trips_per_block, "Trips per block");
  synth->add_option("--duration", f.duration, "Trip duration in seconds");
  synth->add_option("--trait-spread", f.trait_spread, "Per-participant trait spread");
  synth->add_option("--profile", f.participants_profile, "Effect profile: none, default, strong, gaze_events");
  synth->add_flag("--with-can", f.with_can, "Also write CAN lane-position files");

  auto* extract = app.add_subcommand("extract", "Extract window features from a study manifest");
  extract->add_option("--manifest", f.manifest, "Study manifest JSON");
  extract->add_option("--out", f.features_out, "Binary feature matrix output");
  extract->add_option("--csv", f.features_csv, "CSV feature matrix output (default: --out with .csv)");
  extract->add_option("--source", f.source, "camera, can or both");
  extract->add_flag("--allow-metadata-mismatch", f.allow_mismatch, "Accept block/BAC inconsistencies");

  auto* eval = app.add_subcommand("evaluate", "Cross-validated evaluation of a feature matrix");
  eval->add_option("--features", f.features, "Feature matrix (.bin or .csv)");
  eval->add_option("--task", f.task, "early_warning, above_limit or multiclass");
  eval->add_option("--scheme", f.scheme, "loso or loso_lodso");
  eval->add_option("--out", f.report_out, "Report JSON output");
  eval->add_option("--csv", f.report_csv, "Per-fold CSV output (default: --out with .csv)");
  eval->add_option("--penalty", f.penalty, "l1, l2 or elastic_net");
  eval->add_option("--C", f.C, "Inverse regularization strength");
  eval->add_option("--alpha", f.alpha, "L1 share for elastic_net");
  eval->add_flag("--permute-labels", f.permute, "Shuffle labels before training (null model)");

  auto* dec = app.add_subcommand("decision", "Decision-time curve and majority-vote sweep");
  dec->add_option("--report", f.report, "Evaluation report JSON");
  dec->add_option("--out-dir", f.decision_dir, "Output directory (default: next to the report)");
  dec->add_option("--resamples", f.resamples, "Bootstrap resamples");

  auto* rep = app.add_subcommand("report", "Print an evaluation report");
  rep->add_option("--report", f.report, "Evaluation report JSON");
  rep->add_option("--format", f.format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  if (*seed_opt) f.seed = seed_flag;

  try {
    const PipelineConfig cfg = resolve(f);
    if (f.print_config) {
      std::cout << config_to_json(cfg);
      return 0;
    }
    if (*synth) return cmd_synth(cfg, f.jobs);
    if (*extract) return cmd_extract(cfg, f, f.jobs);
    if (*eval) return cmd_evaluate(cfg, f, f.jobs);
    if (*dec) return cmd_decision(cfg);
    if (*rep) return cmd_report(cfg, f);
    std::cout << app.help();
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
