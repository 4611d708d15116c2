#include "gazesense/feature_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>

#include "gazesense/error.hpp"
#include "text_util.hpp"

namespace gazesense::windowing {

namespace {

constexpr std::string_view kMagic = "GZFM1";
constexpr std::string_view kMetaMagic = "META";
constexpr std::size_t kMetaColumns = 6;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(std::string_view data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string get_string() { return std::string(bytes(get<std::uint32_t>())); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorCode::MalformedCsv, path_ + ": truncated binary matrix");
  }

  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  std::string out = "participant_id,trip_id,scenario,block,bac_gdl,window_end_s";
  for (const auto& n : m.feature_names) out += "," + n;
  out += '\n';
  for (const auto& r : m.rows) {
    out += r.participant_id;
    out += ',';
    out += r.trip_id;
    out += ',';
    out += to_string(r.scenario);
    out += ',';
    out += to_string(r.block);
    out += ',';
    detail::append_exact(out, r.bac_gdl);
    out += ',';
    detail::append_exact(out, r.window_end_s);
    for (double v : r.values) {
      out += ',';
      detail::append_exact(out, v);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  detail::LineReader lines(text);
  std::string_view header;
  if (!lines.next(header)) throw Error(ErrorCode::MalformedCsv, path.string() + ": empty matrix file");
  const auto cols = detail::split(header, ',');
  static constexpr std::array<std::string_view, kMetaColumns> kMeta = {
      "participant_id", "trip_id", "scenario", "block", "bac_gdl", "window_end_s"};
  if (cols.size() < kMetaColumns || !std::equal(kMeta.begin(), kMeta.end(), cols.begin())) {
    throw Error(ErrorCode::MalformedCsv, path.string() + ": matrix header must start with metadata columns");
  }
  FeatureMatrix m;
  for (std::size_t c = kMetaColumns; c < cols.size(); ++c) m.feature_names.emplace_back(cols[c]);

  std::string_view line;
  std::vector<std::string_view> f;
  std::size_t line_no = 1;
  while (lines.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::split_into(line, ',', f);
    if (f.size() != cols.size()) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": wrong field count");
    }
    FeatureVector r;
    r.participant_id = std::string(f[0]);
    r.trip_id = std::string(f[1]);
    try {
      r.scenario = parse_scenario(f[2]);
      r.block = parse_block(f[3]);
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": bad label");
    }
    auto num = [&](std::string_view s) {
      double v = 0.0;
      if (!detail::parse_double(s, v)) {
        throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": bad number");
      }
      return v;
    };
    r.bac_gdl = num(f[4]);
    r.window_end_s = num(f[5]);
    r.values.reserve(m.feature_names.size());
    for (std::size_t c = kMetaColumns; c < f.size(); ++c) r.values.push_back(num(f[c]));
    m.rows.push_back(std::move(r));
  }
  return m;
}

void write_matrix_binary(const std::filesystem::path& path, const FeatureMatrix& m) {
  const std::size_t rows = m.rows.size();
  const std::size_t cols = m.feature_names.size();
  std::string out;
  out.reserve(16 + rows * cols * 8 + cols * 32 + rows * 48);
  out.append(kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rows));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) put<double>(out, m.rows[r].values.at(c));
  }
  for (const auto& n : m.feature_names) put_string(out, n);
  out.append(kMetaMagic);
  for (const auto& r : m.rows) {
    put_string(out, r.participant_id);
    put_string(out, r.trip_id);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.scenario));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.block));
    put<double>(out, r.bac_gdl);
    put<double>(out, r.window_end_s);
  }
  detail::write_file(path, out);
}

FeatureMatrix read_matrix_binary(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  Reader in(data, path.string());
  if (in.bytes(kMagic.size()) != kMagic) throw Error(ErrorCode::MalformedCsv, path.string() + ": bad magic");
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  FeatureMatrix m;
  m.rows.resize(rows);
  for (auto& r : m.rows) r.values.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) m.rows[r].values[c] = in.get<double>();
  }
  for (std::size_t c = 0; c < cols; ++c) m.feature_names.push_back(in.get_string());
  if (in.bytes(kMetaMagic.size()) != kMetaMagic) {
    throw Error(ErrorCode::MalformedCsv, path.string() + ": missing metadata section");
  }
  for (auto& r : m.rows) {
    r.participant_id = in.get_string();
    r.trip_id = in.get_string();
    const auto sc = in.get<std::uint8_t>();
    const auto bl = in.get<std::uint8_t>();
    if (sc > 2 || bl > 2) throw Error(ErrorCode::MalformedCsv, path.string() + ": bad label code");
    r.scenario = static_cast<Scenario>(sc);
    r.block = static_cast<Block>(bl);
    r.bac_gdl = in.get<double>();
    r.window_end_s = in.get<double>();
  }
  return m;
}

FeatureMatrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_binary(path);
}

}  // namespace gazesense::windowing
