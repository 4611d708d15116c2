#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gazesense/error.hpp"
#include "gazesense/trip_io.hpp"

namespace fs = std::filesystem;
using namespace gazesense;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

ManifestEntry entry(const std::string& file, Block block = Block::NoAlcohol, double bac = 0.0) {
  ManifestEntry e;
  e.participant_id = "P01";
  e.trip_id = "T1";
  e.scenario = Scenario::Rural;
  e.block = block;
  e.bac_gdl = bac;
  e.file_path = file;
  return e;
}

ErrorCode load_error(const fs::path& p, const ManifestEntry& e) {
  try {
    load_trip(p, e);
  } catch (const Error& err) {
    return err.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

const std::string kHeader = std::string(kGazeCsvHeader) + "\n";

}  // namespace

TEST_CASE("load_trip parses a well-formed gaze CSV") {
  TempDir dir("gazesense_io_ok");
  write(dir.path / "a.csv", kHeader +
                                "0.000000,10.5,20.25,1,2,650,1\n"
                                "0.016667,11,21,1,2,651,0\r\n"
                                "0.033333,12,22,1.5,2.5,652,1\n");
  const auto trip = load_trip(dir.path / "a.csv", entry("a.csv"));
  REQUIRE(trip.samples.size() == 3);
  CHECK(trip.samples[0].gaze_x == 10.5);
  CHECK(trip.samples[1].eye_z == 651.0);
  CHECK_FALSE(trip.samples[1].valid);
  CHECK(trip.samples[2].eye_x == 1.5);
  CHECK(trip.participant_id == "P01");
  CHECK(trip.scenario == Scenario::Rural);
}

TEST_CASE("load_trip rejects malformed input") {
  TempDir dir("gazesense_io_bad");
  write(dir.path / "order.csv", kHeader +
                                    "0.0,1,1,0,0,650,1\n"
                                    "0.0166,1,1,0,0,650,1\n"
                                    "0.0150,1,1,0,0,650,1\n");
  CHECK(load_error(dir.path / "order.csv", entry("order.csv")) == ErrorCode::NonMonotonicTime);

  write(dir.path / "header.csv", "t,x,y\n0,1,2\n");
  CHECK(load_error(dir.path / "header.csv", entry("header.csv")) == ErrorCode::MalformedCsv);

  write(dir.path / "arity.csv", kHeader + "0.0,1,1,0,0,650\n");
  CHECK(load_error(dir.path / "arity.csv", entry("arity.csv")) == ErrorCode::MalformedCsv);

  write(dir.path / "number.csv", kHeader + "0.0,abc,1,0,0,650,1\n");
  CHECK(load_error(dir.path / "number.csv", entry("number.csv")) == ErrorCode::MalformedCsv);

  write(dir.path / "flag.csv", kHeader + "0.0,1,1,0,0,650,yes\n");
  CHECK(load_error(dir.path / "flag.csv", entry("flag.csv")) == ErrorCode::MalformedCsv);

  CHECK(load_error(dir.path / "missing.csv", entry("missing.csv")) == ErrorCode::IoError);
  CHECK(category(ErrorCode::IoError) == ErrorCategory::Io);
}

TEST_CASE("BAC inconsistent with the block is rejected unless overridden") {
  TempDir dir("gazesense_io_meta");
  write(dir.path / "a.csv", kHeader + "0.0,1,1,0,0,650,1\n");
  const auto e = entry("a.csv", Block::NoAlcohol, 0.02);
  CHECK(load_error(dir.path / "a.csv", e) == ErrorCode::MetadataMismatch);
  LoadOptions opts;
  opts.allow_metadata_mismatch = true;
  CHECK(load_trip(dir.path / "a.csv", e, {}, {}, opts).samples.size() == 1);
}

TEST_CASE("gaze CSV write/read round-trip and CAN loading") {
  TempDir dir("gazesense_io_rt");
  std::vector<GazeSample> samples;
  for (int i = 0; i < 50; ++i) {
    samples.push_back({i / 60.0, 100.0 + i * 0.25, 50.0 - i * 0.5, 1.25, -2.5, 650.0 + i, i % 7 != 3});
  }
  write_gaze_csv(dir.path / "trips" / "g.csv", samples);

  SignalChannel steer;
  steer.name = "steering_angle";
  SignalChannel lane = steer;
  lane.name = "lane_position";
  for (int i = 0; i < 20; ++i) {
    for (auto* ch : {&steer, &lane}) {
      ch->t.push_back(i / 30.0);
      ch->v.push_back(ch == &steer ? i * 0.5 : -i * 0.125);
      ch->valid.push_back(true);
    }
  }
  write_can_csv(dir.path / "can" / "g.csv", {steer, lane});

  auto e = entry("trips/g.csv");
  e.can_file_path = "can/g.csv";
  const auto trip = load_trip(e, {{"lane_position", 0}}, dir.path);
  REQUIRE(trip.samples.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(trip.samples[i].t == doctest::Approx(samples[i].t).epsilon(1e-6));
    CHECK(trip.samples[i].gaze_x == samples[i].gaze_x);
    CHECK(trip.samples[i].gaze_y == samples[i].gaze_y);
    CHECK(trip.samples[i].eye_z == samples[i].eye_z);
    CHECK(trip.samples[i].valid == samples[i].valid);
  }
  REQUIRE(trip.can_channels.size() == 1);
  CHECK(trip.can_channels[0].name == "lane_position");
  CHECK(trip.can_channels[0].v[4] == -0.5);

  try {
    load_trip(e, {{"brake_pedal", 2}}, dir.path);
    FAIL("expected MissingChannel");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::MissingChannel);
  }
}

TEST_CASE("manifest JSON round-trip and validation") {
  StudyManifest m;
  m.can_channels = default_can_channels();
  m.entries.push_back(entry("trips/a.csv"));
  auto e2 = entry("trips/b.csv", Block::Severe, 0.061);
  e2.trip_id = "T2";
  e2.can_file_path = "can/b.csv";
  m.entries.push_back(e2);

  const auto text = manifest_to_json(m);
  const auto back = manifest_from_json(text);
  CHECK(manifest_to_json(back) == text);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].bac_gdl == 0.061);
  CHECK(back.entries[1].can_file_path == "can/b.csv");
  CHECK(back.can_channels == m.can_channels);

  m.entries.push_back(m.entries[0]);
  CHECK_THROWS_AS(m.validate(), Error);
  CHECK_THROWS_AS(manifest_from_json("{not json"), Error);
}
