#include "scalemart/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "scalemart/error.hpp"

namespace scalemart::io {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'C', 'L', 'M', 'A', 'R', 'T', '1'};
constexpr std::uint32_t kBinaryVersion = 1;
constexpr std::uint32_t kKindEnsemble = 1;

static_assert(std::endian::native == std::endian::little,
              "binary I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    fail(ErrorKind::Format, "binary ensemble is truncated");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::vector<double> parse_row(std::string_view line, std::size_t expected, std::size_t line_no) {
  const auto fields = split_csv_line(line);
  if (fields.size() != expected) {
    fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": expected " +
                                std::to_string(expected) + " fields");
  }
  std::vector<double> row;
  for (auto f : fields) {
    auto v = parse_number(f);
    if (!v) fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": bad number");
    row.push_back(*v);
  }
  return row;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json numbers(const std::vector<double>& v) {
  auto arr = nlohmann::ordered_json::array();
  for (double x : v) arr.push_back(number_or_null(x));
  return arr;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), end);
}

std::optional<double> parse_number(std::string_view field) {
  field = trim(field);
  if (field == "nan" || field == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_ensemble_csv(std::ostream& out, const PathEnsemble& ensemble) {
  out << "time";
  for (std::size_t i = 0; i < ensemble.n_paths(); ++i) out << ",p" << i;
  out << '\n';
  for (std::size_t j = 0; j < ensemble.n_times(); ++j) {
    out << format_number(ensemble.sample_times()[j]);
    for (std::size_t i = 0; i < ensemble.n_paths(); ++i) out << ',' << format_number(ensemble.at(i, j));
    out << '\n';
  }
}

PathEnsemble read_ensemble_csv(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line)) fail(ErrorKind::Format, "ensemble CSV has no header");
  const std::size_t cols = split_csv_line(line).size();
  if (cols < 2) fail(ErrorKind::Format, "ensemble CSV needs a time column and at least one path");
  const std::size_t n_paths = cols - 1;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto row = parse_row(line, cols, line_no);
    times.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::Format, "ensemble CSV has no rows");
  std::vector<double> values(n_paths * times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (std::size_t i = 0; i < n_paths; ++i) values[i * times.size() + j] = rows[j][i + 1];
  }
  return PathEnsemble(std::move(times), n_paths, std::move(values), "csv");
}

void write_ensemble_binary(std::ostream& out, const PathEnsemble& ensemble) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kBinaryVersion);
  put(out, kKindEnsemble);
  put<std::uint64_t>(out, ensemble.n_times());
  put<std::uint64_t>(out, ensemble.n_paths());
  for (double t : ensemble.sample_times()) put(out, t);
  out.write(reinterpret_cast<const char*>(ensemble.values().data()),
            static_cast<std::streamsize>(ensemble.values().size() * sizeof(double)));
}

PathEnsemble read_ensemble_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    fail(ErrorKind::Format, "not a scalemart binary ensemble");
  }
  if (get<std::uint32_t>(in) != kBinaryVersion) fail(ErrorKind::Format, "unsupported binary version");
  if (get<std::uint32_t>(in) != kKindEnsemble) fail(ErrorKind::Format, "binary file is not an ensemble");
  const auto n_times = get<std::uint64_t>(in);
  const auto n_paths = get<std::uint64_t>(in);
  std::vector<double> times(n_times);
  for (auto& t : times) t = get<double>(in);
  std::vector<double> values(n_times * n_paths);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    fail(ErrorKind::Format, "binary ensemble is truncated");
  }
  return PathEnsemble(std::move(times), n_paths, std::move(values), "binary");
}

void write_series_csv(std::ostream& out, const TimeSeries& series) {
  out << "time,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_number(series.timestamps[i]) << ',' << format_number(series.values[i]) << '\n';
  }
}

TimeSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line)) fail(ErrorKind::Format, "series CSV has no header");
  TimeSeries s;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto row = parse_row(line, 2, line_no);
    s.timestamps.push_back(row[0]);
    s.values.push_back(row[1]);
  }
  if (s.empty()) fail(ErrorKind::Format, "series CSV has no rows");
  s.validate();
  return s;
}

void write_density_csv(std::ostream& out, const DensityEstimate& density) {
  out << "bin_left,bin_right,density\n";
  for (std::size_t i = 0; i < density.bins(); ++i) {
    out << format_number(density.bin_edges[i]) << ',' << format_number(density.bin_edges[i + 1])
        << ',' << format_number(density.probability_density[i]) << '\n';
  }
}

void write_scaling_density_csv(std::ostream& out, const ScalingDensity& density) {
  out << "u,F\n";
  for (std::size_t i = 0; i < density.grid.size(); ++i) {
    out << format_number(density.grid[i]) << ',' << format_number(density.values[i]) << '\n';
  }
}

TabulatedShape read_tabulated_shape(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line)) fail(ErrorKind::Format, "shape table has no header");
  std::vector<double> u, d;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto row = parse_row(line, 2, line_no);
    u.push_back(row[0]);
    d.push_back(row[1]);
  }
  return TabulatedShape(std::move(u), std::move(d));
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open input file " + path.string());
  return in;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

nlohmann::ordered_json to_json(const HurstFit& fit) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(fit.kind);
  j["exponent"] = fit.exponent;
  j["log_intercept"] = fit.log_intercept;
  j["r_squared"] = fit.r_squared;
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : fit.points) {
    pts.push_back({{"log_abscissa", p.log_abscissa},
                   {"log_ordinate", p.log_ordinate},
                   {"residual", p.residual}});
  }
  j["points"] = pts;
  return j;
}

nlohmann::ordered_json to_json(const AutocorrReport& r) {
  return {{"raw", r.raw},
          {"normalized", r.normalized},
          {"sample_count", r.sample_count},
          {"three_sigma_band", r.three_sigma_band},
          {"within_band", r.within_band()},
          {"pooled_over_time", r.pooled_over_time}};
}

nlohmann::ordered_json to_json(const MsfProfile& p) {
  return {{"lag", p.lag},
          {"t_grid", numbers(p.t_grid)},
          {"msf", numbers(p.msf)},
          {"standard_errors", numbers(p.standard_errors)},
          {"sample_counts", p.sample_counts},
          {"pooled_kurtosis", p.pooled_kurtosis},
          {"wide_error_warning", p.wide_error_warning}};
}

nlohmann::ordered_json to_json(const StationarityResult& r) {
  return {{"verdict", to_string(r.verdict)},
          {"chi_square", r.chi_square},
          {"dof", r.dof},
          {"p_value", r.p_value},
          {"weighted_mean", r.weighted_mean}};
}

nlohmann::ordered_json to_json(const ConditionalMeanReport& r) {
  return {{"bin_centers", numbers(r.bin_centers)},
          {"conditional_means", numbers(r.conditional_means)},
          {"counts", r.counts},
          {"max_abs_deviation", r.max_abs_deviation},
          {"max_z", r.max_z},
          {"z_threshold", r.z_threshold},
          {"populated_bins", r.populated_bins},
          {"within_bands", r.within_bands()}};
}

nlohmann::ordered_json to_json(const TailReport& r) {
  return {{"excess_kurtosis", r.excess_kurtosis},
          {"kurtosis_from_samples", r.kurtosis_from_samples},
          {"semilog_r2", r.semilog_r2},
          {"loglog_r2", r.loglog_r2},
          {"exponential_tail", r.exponential_tail()},
          {"tail_region", {r.tail_region.u_lo, r.tail_region.u_hi}}};
}

nlohmann::ordered_json to_json(const DensityEstimate& d) {
  nlohmann::ordered_json j = {{"bin_edges", numbers(d.bin_edges)},
                              {"probability_density", numbers(d.probability_density)},
                              {"counts", d.counts},
                              {"sample_count", d.sample_count},
                              {"total_count", d.total_count}};
  if (d.rescale_tag) j["rescale"] = {{"h", d.rescale_tag->h}, {"scale_time", d.rescale_tag->scale_time}};
  if (d.sample_variance) j["sample_variance"] = *d.sample_variance;
  if (d.sample_excess_kurtosis) j["sample_excess_kurtosis"] = *d.sample_excess_kurtosis;
  return j;
}

}  // namespace scalemart::io
