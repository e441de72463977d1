#include "scalemart/market_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "scalemart/error.hpp"
#include "scalemart/io.hpp"

namespace scalemart {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string_view>& header) {
  if (const auto* index = std::get_if<std::size_t>(&ref)) {
    if (*index >= header.size()) {
      fail(ErrorKind::Format, "column index " + std::to_string(*index) + " is beyond the header");
    }
    return *index;
  }
  const auto& name = std::get<std::string>(ref);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorKind::Format, "column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

std::optional<std::int64_t> parse_epoch(std::string_view s) {
  std::int64_t v = 0;
  if (parse_int(s, v)) return v;
  return std::nullopt;
}

// YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|±HH:MM|±HHMM]; fractional seconds are truncated.
std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
      !parse_int(s.substr(8, 2), d) || !parse_int(s.substr(11, 2), hh) ||
      !parse_int(s.substr(14, 2), mm) || !parse_int(s.substr(17, 2), ss)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;

  auto rest = s.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    std::size_t n = 1;
    while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
    if (n == 1) return std::nullopt;
    rest.remove_prefix(n);
  }
  std::int64_t offset = 0;
  if (rest == "Z" || rest.empty()) {
  } else if (rest.front() == '+' || rest.front() == '-') {
    const int sign = rest.front() == '-' ? -1 : 1;
    rest.remove_prefix(1);
    unsigned oh = 0, om = 0;
    if (rest.size() == 5 && rest[2] == ':') {
      if (!parse_int(rest.substr(0, 2), oh) || !parse_int(rest.substr(3, 2), om)) return std::nullopt;
    } else if (rest.size() == 4) {
      if (!parse_int(rest.substr(0, 2), oh) || !parse_int(rest.substr(2, 2), om)) return std::nullopt;
    } else {
      return std::nullopt;
    }
    offset = sign * static_cast<std::int64_t>(oh * 3600 + om * 60);
  } else {
    return std::nullopt;
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kSecondsPerDay + hh * 3600 + mm * 60 + ss - offset;
}

}  // namespace

void IngestConfig::validate() const {
  require(day_start_seconds >= 0 && day_start_seconds < kSecondsPerDay,
          "day start must lie in [0, 86400)");
  require(grid_interval > 0 && kSecondsPerDay % grid_interval == 0,
          "grid interval must divide 86400 seconds");
  require(min_fill_fraction >= 0.0 && min_fill_fraction <= 1.0,
          "fill threshold must lie in [0, 1]");
}

ParseResult parse_csv(std::istream& source, const IngestConfig& config) {
  std::string line;
  if (!std::getline(source, line)) fail(ErrorKind::Format, "CSV has no header row");
  const auto header = io::split_csv_line(line);
  const std::size_t ts_col = resolve_column(config.timestamp_column, header);
  const std::size_t px_col = resolve_column(config.price_column, header);
  const std::size_t need = std::max(ts_col, px_col) + 1;

  struct Row {
    std::int64_t ts;
    double price;
  };
  std::vector<Row> rows;
  ParseResult result;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    const auto fields = io::split_csv_line(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() < need) {
      result.failed_lines.push_back(line_no);
      continue;
    }
    const auto ts = config.timestamp_format == TimestampFormat::EpochSeconds
                        ? parse_epoch(fields[ts_col])
                        : parse_iso8601(fields[ts_col]);
    const auto price = io::parse_number(fields[px_col]);
    if (!ts || !price || !std::isfinite(*price)) {
      result.failed_lines.push_back(line_no);
      continue;
    }
    if (*price <= 0.0) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": nonpositive price " +
                                std::string(fields[px_col]));
    }
    rows.push_back({*ts, *price});
  }
  if (rows.empty()) fail(ErrorKind::Format, "CSV has no parseable rows");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i + 1 < rows.size() && rows[i + 1].ts == rows[i].ts) {
      ++result.duplicate_count;
      continue;
    }
    result.ticks.push_back({rows[i].ts, rows[i].price});
  }
  return result;
}

ParseResult parse_csv_file(const std::filesystem::path& path, const IngestConfig& config) {
  auto in = io::open_input(path);
  return parse_csv(in, config);
}

std::int64_t day_of(std::int64_t timestamp, const IngestConfig& config) {
  return floor_div(timestamp - config.day_start_seconds, kSecondsPerDay);
}

TimeSeries log_returns(const std::vector<TickRecord>& ticks, const IngestConfig& config,
                       ReturnReference) {
  require(!ticks.empty(), "no ticks to convert");
  TimeSeries s;
  s.origin = SeriesOrigin::Ingested;
  s.timestamps.reserve(ticks.size());
  s.values.reserve(ticks.size());
  std::int64_t day = std::numeric_limits<std::int64_t>::min();
  double open = 0.0;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    require(ticks[i].price > 0.0, "price must be positive");
    if (i > 0) require(ticks[i].timestamp > ticks[i - 1].timestamp, "ticks must be sorted and unique");
    const auto d = day_of(ticks[i].timestamp, config);
    if (d != day) {
      day = d;
      open = ticks[i].price;
    }
    s.timestamps.push_back(static_cast<double>(ticks[i].timestamp));
    s.values.push_back(std::log(ticks[i].price / open));
  }
  return s;
}

DailyAlignedSeries day_align(const TimeSeries& series, const IngestConfig& config) {
  config.validate();
  series.validate();
  require(!series.empty(), "cannot align an empty series");
  const auto slots = static_cast<std::size_t>(kSecondsPerDay / config.grid_interval);
  const auto min_filled =
      static_cast<std::size_t>(std::ceil(config.min_fill_fraction * static_cast<double>(slots)));

  auto day_index = [&](double t) {
    return static_cast<std::int64_t>(
        std::floor((t - static_cast<double>(config.day_start_seconds)) / kSecondsPerDay));
  };

  DailyAlignedSeries out;
  for (std::size_t k = 0; k < slots; ++k) {
    out.slot_times.push_back(static_cast<double>(k) * static_cast<double>(config.grid_interval));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::int64_t first_day = day_index(series.timestamps.front());
  const std::int64_t last_day = day_index(series.timestamps.back());

  std::size_t i = 0;
  std::vector<double> row(slots);
  std::vector<std::uint8_t> flags(slots);
  for (std::int64_t d = first_day; d <= last_day; ++d) {
    const double base =
        static_cast<double>(d * kSecondsPerDay + config.day_start_seconds);
    const double next = base + kSecondsPerDay;
    std::size_t filled = 0;
    bool have = false;
    double last = 0.0;
    for (std::size_t k = 0; k < slots; ++k) {
      const double slot_t = base + out.slot_times[k];
      bool fresh = false;
      while (i < series.size() && series.timestamps[i] <= slot_t) {
        last = series.values[i];
        have = fresh = true;
        ++i;
      }
      row[k] = have ? last : nan;
      flags[k] = have ? 0 : 1;
      // stale carried-forward values do not count toward the fill threshold
      filled += fresh ? 1 : 0;
    }
    while (i < series.size() && series.timestamps[i] < next) ++i;

    if (filled == 0 || filled < min_filled) {
      out.dropped_days.push_back(d);
      continue;
    }
    const auto first = static_cast<std::size_t>(std::find(flags.begin(), flags.end(), 0) - flags.begin());
    const double ref = row[first];
    for (std::size_t k = 0; k < slots; ++k) {
      if (!flags[k]) row[k] -= ref;
    }
    out.day_ids.push_back(d);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.missing.insert(out.missing.end(), flags.begin(), flags.end());
  }
  if (out.day_ids.empty()) fail(ErrorKind::Coverage, "no day meets the slot fill threshold");
  return out;
}

TimeSeries detrend(const TimeSeries& series, const DriftRate& drift) {
  series.validate();
  TimeSeries out = series;
  double integral = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double t0 = series.timestamps[i - 1];
    const double t1 = series.timestamps[i];
    integral += 0.5 * (drift.rate(t0) + drift.rate(t1)) * (t1 - t0);
    out.values[i] = series.values[i] - integral;
  }
  return out;
}

void write_aligned_csv(std::ostream& out, const DailyAlignedSeries& days) {
  out << "day_id,slot_seconds,log_return,missing_flag\n";
  for (std::size_t d = 0; d < days.n_days(); ++d) {
    for (std::size_t k = 0; k < days.n_slots(); ++k) {
      out << days.day_ids[d] << ',' << io::format_number(days.slot_times[k]) << ','
          << io::format_number(days.at(d, k)) << ',' << (days.is_missing(d, k) ? 1 : 0) << '\n';
    }
  }
}

DailyAlignedSeries read_aligned_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, "aligned CSV has no header");
  DailyAlignedSeries days;
  std::vector<double> first_day_slots;
  std::size_t line_no = 1;
  std::size_t slot = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = io::split_csv_line(line);
    if (f.size() == 1 && f[0].empty()) continue;
    std::int64_t day = 0;
    int flag = 0;
    const auto t = f.size() == 4 ? io::parse_number(f[1]) : std::nullopt;
    const auto v = f.size() == 4 ? io::parse_number(f[2]) : std::nullopt;
    if (f.size() != 4 || !parse_int(f[0], day) || !t || !v || !parse_int(f[3], flag) ||
        (flag != 0 && flag != 1)) {
      fail(ErrorKind::Format, "aligned CSV line " + std::to_string(line_no) + " is malformed");
    }
    if (days.day_ids.empty() || day != days.day_ids.back()) {
      if (days.day_ids.size() == 1) days.slot_times = first_day_slots;
      if (!days.day_ids.empty() && slot != days.slot_times.size()) {
        fail(ErrorKind::Format, "aligned CSV day " + std::to_string(days.day_ids.back()) +
                                    " has a different slot count");
      }
      days.day_ids.push_back(day);
      slot = 0;
    }
    if (days.day_ids.size() == 1) {
      first_day_slots.push_back(*t);
    } else if (slot >= days.slot_times.size() || days.slot_times[slot] != *t) {
      fail(ErrorKind::Format, "aligned CSV line " + std::to_string(line_no) + " breaks the slot grid");
    }
    days.values.push_back(flag ? std::numeric_limits<double>::quiet_NaN() : *v);
    days.missing.push_back(static_cast<std::uint8_t>(flag));
    ++slot;
  }
  if (days.day_ids.empty()) fail(ErrorKind::Format, "aligned CSV has no rows");
  if (days.day_ids.size() == 1) days.slot_times = first_day_slots;
  if (slot != days.slot_times.size()) fail(ErrorKind::Format, "aligned CSV ends mid-day");
  return days;
}

}  // namespace scalemart
