#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "scalemart/error.hpp"
#include "scalemart/io.hpp"
#include "scalemart/rng.hpp"

using namespace scalemart;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Argument;
}

PathEnsemble sample_ensemble() {
  PathStream s(3, 0, PathStream::kTest);
  std::vector<double> v(4 * 3);
  for (auto& x : v) x = s.normal() * 1e3;
  v[5] = -0.0;
  v[7] = 1e-300;
  return PathEnsemble({0.5, 10.0, 1e4 / 3.0}, 4, v, "sample");
}

void expect_same(const PathEnsemble& a, const PathEnsemble& b) {
  EXPECT_EQ(a.sample_times(), b.sample_times());
  ASSERT_EQ(a.n_paths(), b.n_paths());
  EXPECT_EQ(a.values(), b.values());
}

int cli(const std::string& args, const std::string& env = "") {
  const auto cmd = env + " " + SCALEMART_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("scalemart_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Numbers, RoundTripExactly) {
  PathStream s(1, 0, PathStream::kTest);
  for (int i = 0; i < 2000; ++i) {
    const double x = s.normal() * std::pow(10.0, (i % 40) - 20);
    EXPECT_EQ(io::parse_number(io::format_number(x)), x);
  }
  for (double x : {0.1, 1.0 / 3.0, 5e-324, std::numeric_limits<double>::max(), -2.5}) {
    EXPECT_EQ(io::parse_number(io::format_number(x)), x);
  }
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
  EXPECT_TRUE(std::isnan(*io::parse_number("nan")));
}

TEST(Numbers, StrictParse) {
  EXPECT_EQ(io::parse_number("+1.5"), 1.5);
  EXPECT_EQ(io::parse_number("2e3"), 2000.0);
  EXPECT_FALSE(io::parse_number(""));
  EXPECT_FALSE(io::parse_number("1.5x"));
  EXPECT_FALSE(io::parse_number("abc"));
  EXPECT_FALSE(io::parse_number("1,5"));
}

TEST(Csv, SplitTrimsAndUnquotes) {
  const auto f = io::split_csv_line(" a , \"b\",c ,");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[1], "b");
  EXPECT_EQ(f[2], "c");
  EXPECT_EQ(f[3], "");
}

TEST(EnsembleCsv, RoundTrip) {
  const auto e = sample_ensemble();
  std::stringstream buf;
  io::write_ensemble_csv(buf, e);
  EXPECT_EQ(buf.str().substr(0, 17), "time,p0,p1,p2,p3\n");
  expect_same(e, io::read_ensemble_csv(buf));
}

TEST(EnsembleCsv, RaggedRowIsFormatError) {
  std::istringstream in("time,p0,p1\n1,2,3\n2,4\n");
  EXPECT_EQ(kind_of([&] { io::read_ensemble_csv(in); }), ErrorKind::Format);
}

TEST(EnsembleBinary, RoundTripAndLayout) {
  const auto e = sample_ensemble();
  std::stringstream buf;
  io::write_ensemble_binary(buf, e);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.size(), 8u + 4 + 4 + 8 + 8 + 8 * (3 + 12));
  EXPECT_EQ(bytes.substr(0, 8), "SCLMART1");
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 1);
  EXPECT_EQ(bytes[16], 3);
  EXPECT_EQ(bytes[24], 4);
  expect_same(e, io::read_ensemble_binary(buf));
}

TEST(EnsembleBinary, Rejections) {
  std::istringstream junk("NOTMAGIC........");
  EXPECT_EQ(kind_of([&] { io::read_ensemble_binary(junk); }), ErrorKind::Format);
  std::stringstream buf;
  io::write_ensemble_binary(buf, sample_ensemble());
  std::istringstream cut(buf.str().substr(0, buf.str().size() - 3));
  EXPECT_EQ(kind_of([&] { io::read_ensemble_binary(cut); }), ErrorKind::Format);
}

TEST(SeriesCsv, RoundTrip) {
  TimeSeries s;
  for (int k = 1; k <= 50; ++k) {
    s.timestamps.push_back(k * 0.1);
    s.values.push_back(std::sin(k) / 7.0);
  }
  std::stringstream buf;
  io::write_series_csv(buf, s);
  const auto back = io::read_series_csv(buf);
  EXPECT_EQ(back.timestamps, s.timestamps);
  EXPECT_EQ(back.values, s.values);
}

TEST(SeriesCsv, NonincreasingTimesRejected) {
  std::istringstream in("time,value\n1,0\n1,2\n");
  EXPECT_EQ(kind_of([&] { io::read_series_csv(in); }), ErrorKind::Argument);
}

TEST(TabulatedShapeCsv, Reads) {
  std::istringstream in("u,D\n-2,3\n0,1\n2,3\n");
  const auto t = io::read_tabulated_shape(in);
  EXPECT_EQ(t.u(), (std::vector<double>{-2, 0, 2}));
  EXPECT_EQ(t.interpolate(1.0), 2.0);
  std::istringstream bad("u,D\n0,1\n-1,1\n");
  EXPECT_EQ(kind_of([&] { io::read_tabulated_shape(bad); }), ErrorKind::Argument);
}

TEST(Files, MissingInputIsIoError) {
  EXPECT_EQ(kind_of([] { io::open_input("/nonexistent/x.csv"); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([] { io::write_file("/nonexistent/dir/x.csv", "a"); }), ErrorKind::Io);
}

TEST(Json, FitAndVerdictFields) {
  HurstFit fit;
  fit.exponent = 0.35;
  fit.points.push_back({1.0, 2.0, 0.0});
  const auto j = io::to_json(fit);
  EXPECT_EQ(j["exponent"], 0.35);
  EXPECT_EQ(j["points"].size(), 1u);
  StationarityResult r;
  r.verdict = Stationarity::NonstationaryIncrements;
  EXPECT_EQ(io::to_json(r)["verdict"], "NonstationaryIncrements");
}

TEST(CliExitCodes, SuccessAndErrorCategories) {
  const auto out = scratch("cli");
  const std::string o = " --out " + out.string();
  EXPECT_EQ(cli("simulate-ensemble --paths 10 --times 1,2 --seed 3" + o), 0);
  EXPECT_TRUE(fs::exists(out / "ensemble.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_EQ(cli("simulate-ensemble --no-such-flag" + o), 1);
  EXPECT_EQ(cli("simulate-ensemble --hurst 1.5" + o), 1);
  EXPECT_EQ(cli("ingest --input /nonexistent/prices.csv" + o), 2);
  {
    std::ofstream f(out / "zero.csv");
    f << "timestamp,price\n1,1\n2,0\n";
  }
  EXPECT_EQ(cli("ingest --input " + (out / "zero.csv").string() + o), 2);
  EXPECT_EQ(cli("simulate-ensemble --paths 1000 --times 1000" + o, "SCALEMART_MAX_PATH_STEPS=10"), 3);
  fs::remove_all(out);
}
