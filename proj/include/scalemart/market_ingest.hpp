#pragma once

// Price CSV ingestion and day alignment. Prices enter only through log
// returns referenced to each day's opening price; every diagnostic downstream
// uses increments, so the reference cancels.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "scalemart/scaling_models.hpp"
#include "scalemart/series.hpp"

namespace scalemart {

struct TickRecord {
  std::int64_t timestamp;  // seconds since epoch
  double price;
};

enum class TimestampFormat { EpochSeconds, Iso8601 };

/// Column name, or zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct IngestConfig {
  ColumnRef timestamp_column = std::string("timestamp");
  ColumnRef price_column = std::string("price");
  TimestampFormat timestamp_format = TimestampFormat::EpochSeconds;
  /// Offset of the daily clock reset within a UTC day.
  std::int64_t day_start_seconds = 0;
  std::int64_t grid_interval = 600;
  /// Days with fewer filled slots than this fraction are dropped.
  double min_fill_fraction = 0.5;

  void validate() const;
};

struct ParseResult {
  std::vector<TickRecord> ticks;
  /// Rows replaced by a later row with the same timestamp.
  std::size_t duplicate_count = 0;
  /// 1-based line numbers (header is line 1) that could not be parsed.
  std::vector<std::size_t> failed_lines;
};

/// Reads a headed CSV. Output is sorted by timestamp, last row wins per timestamp.
ParseResult parse_csv(std::istream& source, const IngestConfig& config);

/// Io error naming the file when it cannot be opened.
ParseResult parse_csv_file(const std::filesystem::path& path, const IngestConfig& config);

enum class ReturnReference { DayOpen };

/// x(t) = ln(p(t) / p_open), p_open the first price of t's day.
TimeSeries log_returns(const std::vector<TickRecord>& ticks, const IngestConfig& config,
                       ReturnReference reference = ReturnReference::DayOpen);

/// Day index of a timestamp under the config's day start.
std::int64_t day_of(std::int64_t timestamp, const IngestConfig& config);

/// Snaps each day to the slot grid (last tick at or before the slot time, same
/// day only), re-references it to its first filled slot and drops days below
/// the fill threshold. A slot counts toward the threshold only when a tick
/// arrived since the previous slot. Slot times are seconds after the day start.
DailyAlignedSeries day_align(const TimeSeries& series, const IngestConfig& config);

/// x(t) - ∫_{t0}^{t} R, trapezoid rule on the series grid.
TimeSeries detrend(const TimeSeries& series, const DriftRate& drift);

/// Columns day_id, slot_seconds, log_return, missing_flag.
void write_aligned_csv(std::ostream& out, const DailyAlignedSeries& days);
DailyAlignedSeries read_aligned_csv(std::istream& in);

}  // namespace scalemart
