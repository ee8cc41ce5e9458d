#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sthcss/data.hpp"

using namespace sthcss;
using namespace sthcss::testing;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

SensorSeries ramp_series(std::size_t t, std::size_t d) {
  SensorSeries s;
  for (std::size_t c = 0; c < d; ++c) s.names.push_back("s" + std::to_string(c + 1));
  s.target_name = "y";
  s.values = Tensor({t, d});
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t c = 0; c < d; ++c) s.values.at(r, c) = static_cast<double>(r * 10 + c);
    s.target.push_back(static_cast<double>(r + 1));
  }
  return s;
}

}  // namespace

TEST_CASE("load_csv parses a small file and extracts the target") {
  const auto path = write_temp("sthcss_small.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  SensorSeries s = load_csv(path, "y");
  CHECK(s.length() == 3);
  CHECK(s.sensors() == 2);
  CHECK(s.names[0] == "a");
  CHECK(s.values.at(1, 1) == 5.0);
  CHECK(s.target[2] == 9.0);
  std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects header-only files") {
  const auto path = write_temp("sthcss_empty.csv", "a,b,y\n");
  CHECK_THROWS_AS(load_csv(path, "y"), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("load_csv reports row and column of bad cells") {
  const auto path = write_temp("sthcss_bad.csv", "a,y\n1,2\n1,oops\n");
  try {
    load_csv(path, "y");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects a missing target column") {
  const auto path = write_temp("sthcss_notarget.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(path, "y"), SchemaError);
  std::filesystem::remove(path);
}

TEST_CASE("24 sensor columns plus a target parse to D=24") {
  std::string header;
  for (int i = 1; i <= 24; ++i) header += "v" + std::to_string(i) + ",";
  header += "y\n";
  std::string row;
  for (int i = 0; i < 24; ++i) row += "0.5,";
  row += "1\n";
  const auto path = write_temp("sthcss_24.csv", header + row + row);
  SensorSeries s = load_csv(path, "y");
  CHECK(s.sensors() == 24);
  std::filesystem::remove(path);
}

TEST_CASE("series CSV write/read round trip preserves every value") {
  SynthConfig cfg;
  cfg.length = 50;
  cfg.sensors = 4;
  cfg.group_sizes = {2, 2};
  SensorSeries s = synth_generate(cfg);
  const auto path = std::filesystem::temp_directory_path() / "sthcss_rt.csv";
  write_csv(path, s);
  SensorSeries back = load_csv(path, cfg.target_name);
  REQUIRE(back.length() == s.length());
  REQUIRE(back.sensors() == s.sensors());
  for (std::size_t i = 0; i < s.values.size(); ++i) CHECK(back.values.at(i) == s.values.at(i));
  for (std::size_t i = 0; i < s.target.size(); ++i) CHECK(back.target[i] == s.target[i]);
  std::filesystem::remove(path);
}

TEST_CASE("chronological split lands on floor boundaries") {
  SensorSeries s = ramp_series(10, 2);
  SplitSeries sp = split_chronological(s);
  CHECK(sp.train.length() == 6);
  CHECK(sp.val.length() == 2);
  CHECK(sp.test.length() == 2);
  // chronology: all training timestamps precede validation precede test
  CHECK(sp.train.target.back() < sp.val.target.front());
  CHECK(sp.val.target.back() < sp.test.target.front());
}

TEST_CASE("split rejects segments shorter than the window") {
  SensorSeries s = ramp_series(5, 1);
  CHECK_THROWS_AS(split_chronological(s, {0.6, 0.2, 0.2}, 3), InsufficientDataError);
}

TEST_CASE("split validates ratios") {
  SensorSeries s = ramp_series(10, 1);
  CHECK_THROWS_AS(split_chronological(s, {0.5, 0.2, 0.2}, 1), InvalidArgumentError);
  CHECK_THROWS_AS(split_chronological(s, {-0.2, 0.6, 0.6}, 1), InvalidArgumentError);
}

TEST_CASE("concatenated splits reconstruct the original series") {
  SensorSeries s = ramp_series(23, 3);
  SplitSeries sp = split_chronological(s);
  std::vector<double> rebuilt;
  for (const SensorSeries* seg : {&sp.train, &sp.val, &sp.test}) {
    rebuilt.insert(rebuilt.end(), seg->target.begin(), seg->target.end());
  }
  REQUIRE(rebuilt.size() == s.target.size());
  for (std::size_t i = 0; i < rebuilt.size(); ++i) CHECK(rebuilt[i] == s.target[i]);
  CHECK(sp.train.values.at(0, 0) == s.values.at(0, 0));
  CHECK(sp.test.values.at(sp.test.length() - 1, 2) == s.values.at(22, 2));
}

TEST_CASE("standardization gives the training split zero mean and unit std") {
  SynthConfig cfg;
  cfg.length = 200;
  cfg.sensors = 3;
  cfg.group_sizes = {3};
  SensorSeries s = synth_generate(cfg);
  SplitSeries sp = split_chronological(s);
  standardize(sp);
  const std::size_t t = sp.train.length();
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < t; ++r) mean += sp.train.values.at(r, c);
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (std::size_t r = 0; r < t; ++r) {
      const double d = sp.train.values.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(t);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-12);
  }
}

TEST_CASE("constant sensors standardize to zeros under the std floor") {
  SensorSeries s = ramp_series(20, 2);
  for (std::size_t r = 0; r < 20; ++r) s.values.at(r, 1) = 4.2;
  SplitSeries sp = split_chronological(s);
  StandardizationStats stats = standardize(sp);
  REQUIRE(stats.constant_sensors.size() == 1);
  CHECK(stats.constant_sensors[0] == "s2");
  for (std::size_t r = 0; r < sp.train.length(); ++r) CHECK(sp.train.values.at(r, 1) == 0.0);
}

TEST_CASE("target de-standardization is an exact affine inverse") {
  SensorSeries s = ramp_series(30, 1);
  SplitSeries sp = split_chronological(s);
  const std::vector<double> original = s.target;
  StandardizationStats stats = standardize(sp);
  for (std::size_t i = 0; i < sp.train.length(); ++i) {
    CHECK(destandardize_target(sp.train.target[i], stats) ==
          doctest::Approx(original[i]).epsilon(1e-12));
  }
}

TEST_CASE("window count and alignment follow the sliding rule") {
  SensorSeries s = ramp_series(5, 2);
  WindowedSplit w = make_windows(s, 3);
  CHECK(w.windows.size() == 3);

  // scalar series 1,2,3,4 with W=2: windows (1,2),(2,3),(3,4), targets y2,y3,y4
  SensorSeries tiny;
  tiny.names = {"a"};
  tiny.target_name = "y";
  tiny.values = Tensor({4, 1}, {1, 2, 3, 4});
  tiny.target = {10, 20, 30, 40};
  WindowedSplit tw = make_windows(tiny, 2);
  REQUIRE(tw.windows.size() == 3);
  CHECK(tw.windows[0].at(0, 0) == 1.0);
  CHECK(tw.windows[0].at(0, 1) == 2.0);
  CHECK(tw.windows[2].at(0, 0) == 3.0);
  CHECK(tw.windows[2].at(0, 1) == 4.0);
  CHECK(tw.targets == std::vector<double>{20, 30, 40});

  CHECK_THROWS_AS(make_windows(tiny, 5), InsufficientDataError);
}

TEST_CASE("window arithmetic at the reference scale") {
  SynthConfig cfg;  // defaults: D=12, T=6000
  SensorSeries s = synth_generate(cfg);
  WindowedSplit w = make_windows(s, 85);
  CHECK(w.windows.size() == 6000 - 85 + 1);  // 5916
  CHECK(w.windows.size() == 5916);

  SplitSeries sp = split_chronological(s);
  CHECK(make_windows(sp.train, 85).windows.size() == 3600 - 85 + 1);
  CHECK(make_windows(sp.val, 85).windows.size() == 1200 - 85 + 1);
}

TEST_CASE("windows transpose rows into D x W matrices with aligned targets") {
  SensorSeries s = ramp_series(6, 3);
  WindowedSplit w = make_windows(s, 4);
  REQUIRE(w.windows.size() == 3);
  // window 1 covers rows 1..4; entry (sensor 2, column 3) is row 4 sensor 2
  CHECK(w.windows[1].shape() == std::vector<std::size_t>{3, 4});
  CHECK(w.windows[1].at(2, 3) == s.values.at(4, 2));
  CHECK(w.targets[1] == s.target[4]);
}

TEST_CASE("synthetic generation is bit-identical for equal seeds") {
  SynthConfig cfg;
  cfg.length = 300;
  SensorSeries a = synth_generate(cfg);
  SensorSeries b = synth_generate(cfg);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values.at(i) == b.values.at(i));
  for (std::size_t i = 0; i < a.target.size(); ++i) CHECK(a.target[i] == b.target[i]);

  cfg.seed = 43;
  SensorSeries c = synth_generate(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.values.size() && !any_diff; ++i) {
    any_diff = a.values.at(i) != c.values.at(i);
  }
  CHECK(any_diff);
}

TEST_CASE("noiseless identity sensors in one group are equal columns") {
  SynthConfig cfg;
  cfg.sensors = 2;
  cfg.group_sizes = {2};
  cfg.length = 120;
  cfg.noise_std = 0.0;
  cfg.identity_sensors = true;
  SensorSeries s = synth_generate(cfg);
  for (std::size_t t = 0; t < s.length(); ++t) CHECK(s.values.at(t, 0) == s.values.at(t, 1));
}

TEST_CASE("default synthetic data has dominant within-group correlation") {
  SynthConfig cfg;  // D=12, 3 groups of 4, T=6000
  SensorSeries s = synth_generate(cfg);
  const std::size_t d = s.sensors();
  const std::size_t t = s.length();

  std::vector<std::vector<double>> cols(d, std::vector<double>(t));
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < t; ++r) cols[c][r] = s.values.at(r, c);

  auto group_of = [](std::size_t sensor) { return sensor / 4; };
  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const double r = std::abs(pearson(cols[a], cols[b]));
      if (group_of(a) == group_of(b)) {
        within += r;
        ++n_within;
      } else {
        cross += r;
        ++n_cross;
      }
    }
  }
  within /= static_cast<double>(n_within);
  cross /= static_cast<double>(n_cross);
  CHECK(within > cross + 0.2);
}

TEST_CASE("synthetic config validation") {
  SynthConfig cfg;
  cfg.group_sizes = {4, 4};  // sums to 8, not 12
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg = SynthConfig{};
  cfg.noise_std = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg = SynthConfig{};
  cfg.segments = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
}

TEST_CASE("multi-segment mode changes the regime but stays deterministic") {
  SynthConfig cfg;
  cfg.length = 400;
  cfg.segments = 2;
  SensorSeries a = synth_generate(cfg);
  SensorSeries b = synth_generate(cfg);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values.at(i) == b.values.at(i));
}
