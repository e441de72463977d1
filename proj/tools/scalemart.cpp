// scalemart command-line front end. Every run writes its data files plus a
// manifest.json into --out; `replay` re-executes a manifest's argv.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scalemart/error.hpp"
#include "scalemart/estimators.hpp"
#include "scalemart/io.hpp"
#include "scalemart/market_ingest.hpp"
#include "scalemart/scaling_models.hpp"
#include "scalemart/simulator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace scalemart;

namespace {

constexpr const char* kVersion = "1.0.0";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Resource:
      return 3;
    case ErrorKind::Data:
    case ErrorKind::Format:
    case ErrorKind::Coverage:
    case ErrorKind::Io:
    case ErrorKind::Numeric:
      return 2;
    default:
      return 1;
  }
}

std::uint64_t env_budget(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  try {
    std::size_t pos = 0;
    const auto parsed = std::stoull(v, &pos);
    if (pos != std::string(v).size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    fail(ErrorKind::Argument, std::string("environment variable ") + name + " is not an integer");
  }
}

DiffusionShape parse_shape(const std::string& spec, double d0) {
  if (spec == "constant") return ConstantShape{d0};
  if (spec == "exp-eq34") return AffineShape{AffineConvention::ExponentialDensity};
  if (spec == "exp-fig2a") return AffineShape{AffineConvention::UnitSlope};
  if (spec == "exp-inverse-h") return AffineShape{AffineConvention::InverseHurst};
  if (spec.rfind("table:", 0) == 0) {
    auto in = io::open_input(spec.substr(6));
    return io::read_tabulated_shape(in);
  }
  fail(ErrorKind::Argument, "unknown shape '" + spec + "'");
}

struct Run {
  fs::path out_dir = ".";
  std::vector<std::string> outputs;

  void emit(const std::string& name, const std::string& contents) {
    io::write_file(out_dir / name, contents);
    outputs.push_back(name);
  }
  void emit_json(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }
  template <class Writer>
  void emit_with(const std::string& name, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    emit(name, os.str());
  }
};

struct Common {
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string out = ".";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed; paths draw from independent streams")
      ->capture_default_str();
  sub->add_option("--out", c.out, "Output directory (created if absent)")->capture_default_str();
}

void add_format(CLI::App* sub, Common& c, std::vector<std::string> choices) {
  sub->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember(std::move(choices)))
      ->capture_default_str();
}

SimConfig sim_config(std::uint64_t seed, int steps_per_unit) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.steps_per_unit_time = steps_per_unit;
  cfg.max_path_steps = env_budget("SCALEMART_MAX_PATH_STEPS", cfg.max_path_steps);
  cfg.max_ensemble_cells = env_budget("SCALEMART_MAX_ENSEMBLE_CELLS", cfg.max_ensemble_cells);
  cfg.max_series_length = env_budget("SCALEMART_MAX_SERIES_LENGTH", cfg.max_series_length);
  return cfg;
}

PathEnsemble load_ensemble(const fs::path& path) {
  auto in = io::open_input(path);
  if (path.extension() == ".bin") return io::read_ensemble_binary(in);
  return io::read_ensemble_csv(in);
}

TimeSeries load_series(const fs::path& path) {
  auto in = io::open_input(path);
  return io::read_series_csv(in);
}

void write_ensemble(Run& run, const PathEnsemble& ens, const std::string& format) {
  if (format == "binary") {
    run.emit_with("ensemble.bin", [&](std::ostream& os) { io::write_ensemble_binary(os, ens); });
  } else if (format == "json") {
    json j;
    j["model"] = ens.model_tag();
    j["times"] = ens.sample_times();
    auto paths = json::array();
    for (std::size_t i = 0; i < ens.n_paths(); ++i) {
      auto p = ens.path(i);
      paths.push_back(std::vector<double>(p.begin(), p.end()));
    }
    j["paths"] = paths;
    run.emit_json("ensemble.json", j);
  } else {
    run.emit_with("ensemble.csv", [&](std::ostream& os) { io::write_ensemble_csv(os, ens); });
  }
}

void write_series(Run& run, const TimeSeries& s, const std::string& format) {
  if (format == "json") {
    run.emit_json("series.json", {{"origin", to_string(s.origin)},
                                  {"time", s.timestamps},
                                  {"value", s.values}});
  } else {
    run.emit_with("series.csv", [&](std::ostream& os) { io::write_series_csv(os, s); });
  }
}

void write_density(Run& run, const std::string& stem, const DensityEstimate& d,
                   const std::string& format) {
  if (format == "json") {
    run.emit_json(stem + ".json", io::to_json(d));
  } else {
    run.emit_with(stem + ".csv", [&](std::ostream& os) { io::write_density_csv(os, d); });
  }
}

BinSpec bin_count(std::size_t n) {
  BinSpec b;
  b.count = n;
  return b;
}

std::string time_label(double t) {
  auto s = io::format_number(t);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

// Parses "360:0.35:exp-eq34,360:0.5" into consecutive intervals.
DailySchedule parse_schedule(const std::vector<std::string>& segments, double d0) {
  DailySchedule schedule;
  double start = 0.0;
  for (const auto& seg : segments) {
    std::vector<std::string> parts;
    std::stringstream ss(seg);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) {
      fail(ErrorKind::Argument, "segment '" + seg + "' must be LENGTH:HURST[:SHAPE]");
    }
    const auto len = io::parse_number(parts[0]);
    const auto h = io::parse_number(parts[1]);
    if (!len || !h || !(*len > 0.0)) fail(ErrorKind::Argument, "bad segment '" + seg + "'");
    const auto shape = parse_shape(parts.size() == 3 ? parts[2] : "constant", d0);
    schedule.intervals.push_back({start, start + *len, HurstExponent(*h), shape});
    start += *len;
  }
  schedule.t_day = start;
  schedule.validate();
  return schedule;
}

json capture_parameters(const CLI::App* sub) {
  json params;
  for (const CLI::Option* opt : sub->get_options()) {
    const auto name = opt->get_name();
    if (name.empty() || name == "--help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      params[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      params[name] = opt->get_default_str();
    }
  }
  return params;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"scalemart: scaling martingale simulation and diagnostics", "scalemart"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Budgets (environment): SCALEMART_MAX_PATH_STEPS, SCALEMART_MAX_ENSEMBLE_CELLS,\n"
      "SCALEMART_MAX_SERIES_LENGTH. Exit codes: 0 ok, 1 argument, 2 data, 3 resource.");

  Common c;
  Run run;
  std::function<void()> action;

  // Shared model flags.
  double hurst = 0.35;
  std::string shape_spec = "exp-eq34";
  double d0 = 1.0;
  int steps_per_unit = 100;
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--hurst", hurst, "Hurst exponent H in (0,1)")->capture_default_str();
    sub->add_option("--shape", shape_spec,
                    "Diffusion shape: constant | exp-eq34 | exp-fig2a | exp-inverse-h | table:FILE")
        ->capture_default_str();
    sub->add_option("--d0", d0, "Diffusion constant for --shape constant")->capture_default_str();
    sub->add_option("--steps-per-unit", steps_per_unit,
                    "Euler steps per unit of transformed time t^{2H}")
        ->capture_default_str();
  };

  // simulate-ensemble
  std::size_t paths = 1000;
  std::vector<double> times{10.0, 100.0, 1000.0};
  auto* sim_ens = app.add_subcommand("simulate-ensemble", "Simulate independent paths");
  add_common(sim_ens, c);
  add_model(sim_ens);
  add_format(sim_ens, c, {"csv", "json", "binary"});
  sim_ens->add_option("--paths", paths, "Number of paths")->capture_default_str();
  sim_ens->add_option("--times", times, "Sample times")->delimiter(',')->capture_default_str();
  sim_ens->callback([&] {
    action = [&] {
      const ScalingModel model{HurstExponent(hurst), parse_shape(shape_spec, d0), std::nullopt};
      const auto ens = simulate_ensemble(model, paths, times, sim_config(c.seed, steps_per_unit));
      write_ensemble(run, ens, c.format);
    };
  });

  // simulate-path
  double length = 1e6;
  double dt = 1.0;
  auto* sim_path = app.add_subcommand("simulate-path", "Simulate one long path");
  add_common(sim_path, c);
  add_model(sim_path);
  add_format(sim_path, c, {"csv", "json"});
  sim_path->add_option("--length", length, "Path duration t_max")->capture_default_str();
  sim_path->add_option("--dt", dt, "Sampling interval")->capture_default_str();
  sim_path->callback([&] {
    action = [&] {
      const ScalingModel model{HurstExponent(hurst), parse_shape(shape_spec, d0), std::nullopt};
      write_series(run, simulate_path(model, length, dt, sim_config(c.seed, steps_per_unit)),
                   c.format);
    };
  });

  // simulate-fbm
  std::size_t fbm_n = 4096;
  double prefactor = 1.0;
  std::size_t fbm_paths = 1;
  auto* sim_fbm = app.add_subcommand("simulate-fbm", "Exact fractional Brownian motion");
  add_common(sim_fbm, c);
  add_format(sim_fbm, c, {"csv", "json", "binary"});
  sim_fbm->add_option("--hurst", hurst, "Hurst exponent H in (0,1)")->capture_default_str();
  sim_fbm->add_option("--n", fbm_n, "Number of increments (at most 8192)")->capture_default_str();
  sim_fbm->add_option("--dt", dt, "Time step")->capture_default_str();
  sim_fbm->add_option("--prefactor", prefactor, "Variance prefactor c in <x^2> = c t^{2H}")
      ->capture_default_str();
  sim_fbm->add_option("--paths", fbm_paths, "Number of paths; 1 writes a series")
      ->capture_default_str();
  sim_fbm->callback([&] {
    action = [&] {
      const auto cfg = sim_config(c.seed, steps_per_unit);
      if (fbm_paths == 1) {
        require(c.format != "binary", "binary format needs --paths > 1");
        write_series(run, simulate_fbm(HurstExponent(hurst), fbm_n, dt, prefactor, cfg), c.format);
      } else {
        write_ensemble(run,
                       simulate_fbm_ensemble(HurstExponent(hurst), fbm_paths, fbm_n, dt, prefactor, cfg),
                       c.format);
      }
    };
  });

  // simulate-daily
  std::vector<std::string> segments{"360:0.35", "360:0.5", "360:0.6", "360:0.4"};
  std::size_t n_days = 200;
  double price_base = 100.0;
  std::int64_t epoch_base = 1577836800;
  double seconds_per_unit = 60.0;
  bool price_csv = false;
  auto* sim_daily = app.add_subcommand("simulate-daily", "Simulate repeated intraday patterns");
  add_common(sim_daily, c);
  add_format(sim_daily, c, {"csv", "json"});
  sim_daily->add_option("--segments", segments, "Day pieces LENGTH:HURST[:SHAPE], in order")
      ->delimiter(',')
      ->capture_default_str();
  sim_daily->add_option("--d0", d0, "Diffusion constant for constant segments")->capture_default_str();
  sim_daily->add_option("--days", n_days, "Number of days")->capture_default_str();
  sim_daily->add_option("--dt", dt, "Sampling interval")->capture_default_str();
  sim_daily->add_option("--steps-per-unit", steps_per_unit, "Euler steps per unit transformed time")
      ->capture_default_str();
  sim_daily->add_flag("--price-csv", price_csv,
                      "Also write prices.csv (timestamp,price) ready for ingest");
  sim_daily->add_option("--epoch-base", epoch_base, "Epoch second of the first day start")
      ->capture_default_str();
  sim_daily->add_option("--seconds-per-unit", seconds_per_unit, "Seconds per model time unit")
      ->capture_default_str();
  sim_daily->add_option("--price-base", price_base, "Opening price of every day")
      ->capture_default_str();
  sim_daily->callback([&] {
    action = [&] {
      const auto schedule = parse_schedule(segments, d0);
      const auto series =
          simulate_daily_pattern(schedule, n_days, dt, sim_config(c.seed, steps_per_unit));
      write_series(run, series, c.format);
      if (price_csv) {
        run.emit_with("prices.csv", [&](std::ostream& os) {
          os << "timestamp,price\n";
          for (std::size_t i = 0; i < series.size(); ++i) {
            const auto ts = epoch_base + std::llround(series.timestamps[i] * seconds_per_unit);
            os << ts << ',' << io::format_number(price_base * std::exp(series.values[i])) << '\n';
          }
        });
      }
    };
  });

  // ingest
  std::string input;
  std::string ts_col = "timestamp";
  std::string px_col = "price";
  bool iso = false;
  std::int64_t day_start = 0;
  std::int64_t grid = 600;
  double fill = 0.5;
  auto* ingest = app.add_subcommand("ingest", "Parse a price CSV and align it by time of day");
  add_common(ingest, c);
  ingest->add_option("--input", input, "Price CSV with a header row")->required();
  ingest->add_option("--timestamp-column", ts_col, "Column name or zero-based index")
      ->capture_default_str();
  ingest->add_option("--price-column", px_col, "Column name or zero-based index")
      ->capture_default_str();
  ingest->add_flag("--iso8601", iso, "Timestamps are ISO-8601 instead of epoch seconds");
  ingest->add_option("--day-start", day_start, "Seconds after UTC midnight where days begin")
      ->capture_default_str();
  ingest->add_option("--grid", grid, "Slot width in seconds; must divide 86400")
      ->capture_default_str();
  ingest->add_option("--min-fill", fill, "Minimum fraction of filled slots per day")
      ->capture_default_str();
  ingest->callback([&] {
    action = [&] {
      auto column = [](const std::string& s) -> ColumnRef {
        if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
          return static_cast<std::size_t>(std::stoull(s));
        }
        return s;
      };
      IngestConfig cfg;
      cfg.timestamp_column = column(ts_col);
      cfg.price_column = column(px_col);
      cfg.timestamp_format = iso ? TimestampFormat::Iso8601 : TimestampFormat::EpochSeconds;
      cfg.day_start_seconds = day_start;
      cfg.grid_interval = grid;
      cfg.min_fill_fraction = fill;
      cfg.validate();
      const auto parsed = parse_csv_file(input, cfg);
      const auto days = day_align(log_returns(parsed.ticks, cfg), cfg);
      run.emit_with("aligned.csv", [&](std::ostream& os) { write_aligned_csv(os, days); });
      run.emit_json("ingest_report.json", {{"ticks", parsed.ticks.size()},
                                           {"duplicates", parsed.duplicate_count},
                                           {"failed_lines", parsed.failed_lines},
                                           {"days_retained", days.n_days()},
                                           {"days_dropped", days.dropped_days},
                                           {"slots_per_day", days.n_slots()}});
    };
  });

  // analyze-ensemble
  std::vector<std::string> analyses{"density", "collapse", "hurst", "conditional-mean"};
  std::size_t bins = 101;
  std::size_t cm_bins = 21;
  auto* an_ens = app.add_subcommand("analyze-ensemble", "Fixed-t densities, collapse, ensemble H");
  add_common(an_ens, c);
  add_format(an_ens, c, {"csv", "json"});
  an_ens->add_option("--input", input, "Ensemble file (.csv or .bin)")->required();
  an_ens->add_option("--analyses", analyses, "density, collapse, hurst, conditional-mean")
      ->delimiter(',')
      ->check(CLI::IsMember({"density", "collapse", "hurst", "conditional-mean"}))
      ->capture_default_str();
  an_ens->add_option("--hurst", hurst, "H used to rescale for the collapse")->capture_default_str();
  an_ens->add_option("--bins", bins, "Histogram bins")->capture_default_str();
  an_ens->add_option("--cm-bins", cm_bins, "Conditioning bins for the conditional mean")
      ->capture_default_str();
  an_ens->callback([&] {
    action = [&] {
      const auto ens = load_ensemble(input);
      const BinSpec spec = bin_count(bins);
      auto wants = [&](const char* a) {
        return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
      };
      if (wants("density")) {
        for (std::size_t j = 0; j < ens.n_times(); ++j) {
          write_density(run, "density_t" + time_label(ens.sample_times()[j]),
                        ensemble_density(ens, j, spec), c.format);
        }
      }
      if (wants("collapse")) {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < ens.n_times(); ++j) {
          if (ens.sample_times()[j] > 0.0) idx.push_back(j);
        }
        const auto col = collapse(ens, idx, HurstExponent(hurst), spec);
        for (std::size_t k = 0; k < col.rescaled.size(); ++k) {
          write_density(run, "collapse_t" + time_label(ens.sample_times()[idx[k]]),
                        col.rescaled[k], c.format);
        }
        write_density(run, "collapse_pooled", col.pooled, c.format);
        run.emit_json("collapse.json", {{"h", hurst},
                                        {"collapse_score", col.collapse_score},
                                        {"max_z", col.max_z},
                                        {"z_threshold", col.z_threshold},
                                        {"within_band", col.within_band()}});
      }
      if (wants("hurst")) run.emit_json("hurst_fit.json", io::to_json(fit_hurst_variance(ens)));
      if (wants("conditional-mean")) {
        json reports = json::array();
        for (std::size_t j = 0; j + 1 < ens.n_times(); ++j) {
          auto r = io::to_json(conditional_mean_test(ens, j, j + 1, bin_count(cm_bins)));
          r["t"] = ens.sample_times()[j];
          r["t_later"] = ens.sample_times()[j + 1];
          reports.push_back(r);
        }
        run.emit_json("conditional_mean.json", reports);
      }
    };
  });

  // analyze-sliding
  std::vector<double> lags{10, 20, 40, 80, 160};
  double density_lag = 10.0;
  double tail_lo = 1.5, tail_hi = 6.0;
  auto* an_sl = app.add_subcommand("analyze-sliding", "Sliding-window density, H_s and tails");
  add_common(an_sl, c);
  add_format(an_sl, c, {"csv", "json"});
  an_sl->add_option("--input", input, "Series CSV (time,value)")->required();
  an_sl->add_option("--lags", lags, "Lags for the H_s fit")->delimiter(',')->capture_default_str();
  an_sl->add_option("--lag", density_lag, "Lag of the sliding density")->capture_default_str();
  an_sl->add_option("--bins", bins, "Histogram bins")->capture_default_str();
  an_sl->add_option("--tail-lo", tail_lo, "Tail region lower |u|, in units of the sample SD")
      ->capture_default_str();
  an_sl->add_option("--tail-hi", tail_hi, "Tail region upper |u|, in units of the sample SD")
      ->capture_default_str();
  an_sl->callback([&] {
    action = [&] {
      const auto series = load_series(input);
      const auto fit = fit_hurst_sliding(series, lags);
      run.emit_json("hurst_sliding.json", io::to_json(fit));
      const auto d = sliding_density(series, density_lag, HurstExponent(fit.exponent), bin_count(bins));
      write_density(run, "sliding_density", d, c.format);
      const double sd = std::sqrt(d.sample_variance.value_or(1.0));
      run.emit_json("tails.json", io::to_json(tail_diagnostics(d, {tail_lo * sd, tail_hi * sd})));
    };
  });

  // diagnose
  double lag = 1.0;
  double at_t = 0.0;
  double t_day = 0.0;
  std::string aligned;
  std::string ensemble_path;
  auto* diag = app.add_subcommand("diagnose", "Increment autocorrelation, MSF profile, verdict");
  add_common(diag, c);
  auto* diag_in = diag->add_option("--input", input, "Series CSV (time,value)");
  auto* diag_ens = diag->add_option("--ensemble", ensemble_path, "Ensemble file (.csv or .bin)");
  auto* diag_al = diag->add_option("--aligned", aligned, "Day-aligned CSV from ingest");
  diag_in->excludes(diag_ens)->excludes(diag_al);
  diag_ens->excludes(diag_al);
  diag->add_option("--lag", lag, "Lag T (slots for --aligned)")->capture_default_str();
  diag->add_option("--t", at_t, "Time t of the ensemble autocorrelation")->capture_default_str();
  diag->add_option("--t-day", t_day, "Day length for stacking a series into days")
      ->capture_default_str();
  diag->callback([&] {
    action = [&] {
      json report;
      if (diag_ens->count()) {
        const auto ens = load_ensemble(ensemble_path);
        report["autocorr"] = io::to_json(increment_autocorr(ens, at_t, lag));
        const auto profile = msf_profile(ens, lag);
        report["msf"] = io::to_json(profile);
        if (profile.msf.size() >= 10) report["verdict"] = io::to_json(stationarity_verdict(profile));
      } else if (diag_al->count()) {
        auto in = io::open_input(aligned);
        const auto days = read_aligned_csv(in);
        const auto profile = msf_profile(days, static_cast<std::size_t>(std::llround(lag)));
        report["msf"] = io::to_json(profile);
        report["verdict"] = io::to_json(stationarity_verdict(profile));
      } else {
        require(diag_in->count() > 0, "one of --input, --ensemble, --aligned is required");
        const auto series = load_series(input);
        report["autocorr"] = io::to_json(increment_autocorr(series, lag));
        if (t_day > 0.0) {
          const auto days = align_days(series, t_day);
          const auto slots =
              static_cast<std::size_t>(std::llround(lag / series.sampling_interval()));
          const auto profile = msf_profile(days, slots);
          report["msf"] = io::to_json(profile);
          report["verdict"] = io::to_json(stationarity_verdict(profile));
        }
      }
      run.emit_json("diagnose.json", report);
    };
  });

  // demo-fig2
  bool full = false;
  std::size_t demo_paths = 100000;
  double demo_length = 1e6;
  auto* demo = app.add_subcommand(
      "demo-fig2", "Ensemble H and collapse versus sliding-window H_s and fat tails, one model");
  add_common(demo, c);
  demo->add_option("--hurst", hurst, "Hurst exponent")->capture_default_str();
  demo->add_option("--shape", shape_spec, "Diffusion shape")->capture_default_str();
  demo->add_option("--paths", demo_paths, "Ensemble size")->capture_default_str();
  demo->add_option("--length", demo_length, "Length of the single path")->capture_default_str();
  demo->add_option("--lags", lags, "Sliding lags")->delimiter(',')->capture_default_str();
  demo->add_option("--bins", bins, "Histogram bins")->capture_default_str();
  demo->add_flag("--full", full, "Use 5,000,000 paths");
  demo->callback([&] {
    action = [&] {
      const ScalingModel model{HurstExponent(hurst), parse_shape(shape_spec, 1.0), std::nullopt};
      const auto cfg = sim_config(c.seed, steps_per_unit);
      const std::vector<double> demo_times{10.0, 100.0, 1000.0};
      const auto ens = simulate_ensemble(model, full ? 5000000 : demo_paths, demo_times, cfg);
      const std::vector<std::size_t> idx{0, 1, 2};
      const auto col = collapse(ens, idx, model.h, bin_count(bins));
      run.emit_with("F_u.csv", [&](std::ostream& os) { io::write_density_csv(os, col.pooled); });
      run.emit_json("hurst_ensemble.json", io::to_json(fit_hurst_variance(ens)));

      const auto series = simulate_path(model, demo_length, 1.0, cfg);
      const auto fit = fit_hurst_sliding(series, lags);
      const auto d = sliding_density(series, lags.front(), HurstExponent(fit.exponent), bin_count(bins));
      run.emit_with("F_s.csv", [&](std::ostream& os) { io::write_density_csv(os, d); });
      run.emit_json("hurst_sliding.json", io::to_json(fit));
    };
  });

  // replay
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the argv recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--out", c.out, "Output directory for the re-run")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  if (replay->parsed()) {
    try {
      auto in = io::open_input(manifest_path);
      const auto m = nlohmann::json::parse(in);
      auto argv = m.at("argv").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < argv.size(); ++i) {
        if (argv[i] == "--out" && i + 1 < argv.size()) argv[i + 1] = c.out;
      }
      return run_cli(std::move(argv));
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: malformed manifest: " << e.what() << '\n';
      return 2;
    }
  }

  const CLI::App* sub = app.get_subcommands().front();
  const auto started = std::chrono::steady_clock::now();
  const auto started_utc = utc_now();
  try {
    run.out_dir = c.out;
    fs::create_directories(run.out_dir);
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

  json manifest;
  manifest["command"] = sub->get_name();
  manifest["argv"] = args;
  manifest["parameters"] = capture_parameters(sub);
  manifest["versions"] = {{"scalemart", kVersion},
                          {"compiler", __VERSION__},
                          {"cxx_standard", static_cast<long>(__cplusplus)}};
  manifest["outputs"] = run.outputs;
  manifest["started_utc"] = started_utc;
  manifest["duration_seconds"] = elapsed.count();
  try {
    io::write_file(run.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  return 0;
}

int main(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}
