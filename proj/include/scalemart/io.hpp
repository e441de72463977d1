#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scalemart/estimators.hpp"
#include "scalemart/scaling_models.hpp"
#include "scalemart/series.hpp"

namespace scalemart::io {

/// 17 significant digits: parses back to the same double. NaN prints as "nan".
std::string format_number(double value);

/// Strict decimal parse of the whole field; nullopt on any trailing junk.
std::optional<double> parse_number(std::string_view field);

/// Splits one CSV line on commas, trimming blanks and surrounding quotes.
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Header "time,p0,p1,..." then one row per sample time.
void write_ensemble_csv(std::ostream& out, const PathEnsemble& ensemble);
PathEnsemble read_ensemble_csv(std::istream& in);

/// Binary layout, little-endian:
///   8 bytes  magic "SCLMART1"
///   u32      format version (1)
///   u32      kind (1 = ensemble)
///   u64      n_times, u64 n_paths
///   f64      sample times [n_times]
///   f64      values, path-major [n_paths * n_times]
void write_ensemble_binary(std::ostream& out, const PathEnsemble& ensemble);
PathEnsemble read_ensemble_binary(std::istream& in);

/// Header "time,value".
void write_series_csv(std::ostream& out, const TimeSeries& series);
TimeSeries read_series_csv(std::istream& in);

/// Header "bin_left,bin_right,density".
void write_density_csv(std::ostream& out, const DensityEstimate& density);

/// Header "u,F".
void write_scaling_density_csv(std::ostream& out, const ScalingDensity& density);

/// Two-column CSV (u, D) with a header row.
TabulatedShape read_tabulated_shape(std::istream& in);

std::ifstream open_input(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

nlohmann::ordered_json to_json(const HurstFit& fit);
nlohmann::ordered_json to_json(const AutocorrReport& report);
nlohmann::ordered_json to_json(const MsfProfile& profile);
nlohmann::ordered_json to_json(const StationarityResult& result);
nlohmann::ordered_json to_json(const ConditionalMeanReport& report);
nlohmann::ordered_json to_json(const TailReport& report);
nlohmann::ordered_json to_json(const DensityEstimate& density);

}  // namespace scalemart::io
