#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "soilwave/error.hpp"
#include "soilwave/preprocess.hpp"
#include "soilwave/rng.hpp"
#include "soilwave/simulator.hpp"

namespace prep = soilwave::preprocess;
namespace sim = soilwave::sim;
using soilwave::AlignmentError;
using soilwave::ArgumentError;
using soilwave::DegenerateInputError;

namespace {

prep::Dataset toy_dataset(Eigen::Index n) {
  prep::Dataset ds;
  ds.feature_names = {"a", "b"};
  ds.features.resize(n, 2);
  ds.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.features(i, 0) = static_cast<double>(i);
    ds.features(i, 1) = static_cast<double>(2 * i + 1);
    ds.targets(i) = static_cast<double>(10 + i);
    ds.ts.push_back(1735689600 + i * 300);
  }
  return ds;
}

std::vector<double> rssi_like_series(std::size_t n, std::uint64_t seed) {
  soilwave::rng::SplitMix64 gen(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = gen.next_normal(-95.0, 2.0);
  return out;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("decompose: constant series has zero short term") {
    std::vector<double> raw(48, -95.0);
    auto dec = prep::decompose_fading(raw, 24);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(dec.long_term[i] == -95.0);
      CHECK(dec.short_term[i] == 0.0);
    }
  }

  TEST_CASE("decompose: two-point trailing mean") {
    auto dec = prep::decompose_fading({0.0, 2.0}, 2);
    CHECK(dec.long_term[0] == 0.0);
    CHECK(dec.long_term[1] == 1.0);
    CHECK(dec.short_term[0] == 0.0);
    CHECK(dec.short_term[1] == 1.0);
  }

  TEST_CASE("decompose: reconstruction is exact and means match the brute-force oracle") {
    auto raw = rssi_like_series(4096, 17);
    auto dec = prep::decompose_fading(raw, 24);
    auto expect = oracle::trailing_mean_brute(raw, 24);
    for (std::size_t t = 0; t < raw.size(); ++t) {
      CHECK(dec.long_term[t] + dec.short_term[t] == raw[t]);  // bitwise
      CHECK(dec.long_term[t] == doctest::Approx(expect[t]).epsilon(1e-12));
    }
  }

  TEST_CASE("decompose: window residuals about the long-term value sum to zero") {
    auto raw = rssi_like_series(512, 23);
    const std::size_t w = 24;
    auto dec = prep::decompose_fading(raw, w);
    for (std::size_t t = w - 1; t < raw.size(); ++t) {
      double resid = 0.0;
      for (std::size_t i = t + 1 - w; i <= t; ++i) resid += raw[i] - dec.long_term[t];
      CHECK(std::abs(resid / static_cast<double>(w)) < 1e-9);
    }
  }

  TEST_CASE("decompose: zero window is an argument error") {
    CHECK_THROWS_AS(prep::decompose_fading({1.0}, 0), ArgumentError);
  }

  TEST_CASE("aggregate: single class mean") {
    auto rows = prep::aggregate_classes({29.1, 29.4}, {-90.0, -92.0}, 29.0, 39.0, 0.5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].class_low == 29.0);
    CHECK(rows[0].class_high == 29.5);
    CHECK(rows[0].mean_rssi == -91.0);
    CHECK(rows[0].count == 2);
  }

  TEST_CASE("aggregate: boundary value lands in the next class") {
    auto rows = prep::aggregate_classes({29.1, 29.6}, {-90.0, -92.0}, 29.0, 39.0, 0.5);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].count == 1);
    CHECK(rows[1].class_low == 29.5);
    CHECK(rows[1].class_high == 30.0);
    CHECK(rows[1].count == 1);
  }

  TEST_CASE("aggregate: out-of-range samples are ignored, empty classes omitted") {
    auto rows = prep::aggregate_classes({28.9, 39.0, 31.0}, {-1.0, -2.0, -90.0}, 29.0, 39.0, 0.5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].class_low == 31.0);
    CHECK(rows[0].mean_rssi == -90.0);
  }

  TEST_CASE("aggregate: mismatched lengths error") {
    CHECK_THROWS_AS(prep::aggregate_classes({1.0}, {2.0, 3.0}, 0.0, 10.0, 0.5), ArgumentError);
  }

  TEST_CASE("aggregate: noiseless simulator output has strictly decreasing class means") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.seed = 42;
    for (auto& [id, ch] : cfg.gateways) {
      ch.noise_sigma = 0.0;
      ch.snr_sigma = 0.0;
    }
    auto h = sim::simulate_humidity(cfg.humidity, 2880, cfg.sample_period, cfg.seed);
    auto set = sim::simulate_uplinks(h, cfg);
    std::vector<double> hum, rssi;
    for (const auto& rec : set.records()) {
      if (rec.gateway_id != "gw1") continue;
      hum.push_back(*rec.soil_humidity);
      rssi.push_back(rec.rssi);
    }
    auto rows = prep::aggregate_classes(hum, rssi, 25.0, 40.0, 0.5);
    REQUIRE(rows.size() >= 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].mean_rssi < rows[i - 1].mean_rssi);
    }
    // Direct recomputation of one class mean.
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < hum.size(); ++i) {
      if (hum[i] >= rows[0].class_low && hum[i] < rows[0].class_high) {
        sum += rssi[i];
        ++count;
      }
    }
    CHECK(rows[0].count == count);
    CHECK(rows[0].mean_rssi == doctest::Approx(sum / count).epsilon(1e-12));
  }

  TEST_CASE("pearson: perfect negative linear relation") {
    CHECK(prep::pearson({1, 2, 3}, {-2, -4, -6}) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  TEST_CASE("pearson: zero variance is a degenerate-input error") {
    CHECK_THROWS_AS(prep::pearson({1, 2, 3}, {5, 5, 5}), DegenerateInputError);
    CHECK_THROWS_AS(prep::pearson({7, 7}, {1, 2}), DegenerateInputError);
  }

  TEST_CASE("pearson: matches the two-pass textbook oracle on seeded data") {
    soilwave::rng::SplitMix64 gen(31);
    std::vector<double> x(3000), y(3000);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = gen.next_normal(0.0, 1.0);
      y[i] = 0.6 * x[i] + gen.next_normal(0.0, 0.8);
    }
    CHECK(prep::pearson(x, y) == doctest::Approx(oracle::pearson_two_pass(x, y)).epsilon(1e-12));
  }

  TEST_CASE("pearson: symmetry and scale invariance") {
    soilwave::rng::SplitMix64 gen(77);
    std::vector<double> x(500), y(500);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = gen.next_normal(5.0, 2.0);
      y[i] = gen.next_normal(-1.0, 3.0) + 0.3 * x[i];
    }
    double r = prep::pearson(x, y);
    CHECK(prep::pearson(y, x) == doctest::Approx(r).epsilon(1e-12));

    std::vector<double> ax(x.size()), nx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ax[i] = 2.5 * x[i] + 7.0;
      nx[i] = -2.5 * x[i] + 7.0;
    }
    CHECK(prep::pearson(ax, y) == doctest::Approx(r).epsilon(1e-9));
    CHECK(prep::pearson(nx, y) == doctest::Approx(-r).epsilon(1e-9));
    CHECK(std::abs(prep::pearson(x, y)) <= 1.0);
  }

  TEST_CASE("normalize: endpoints map to 0 and 1") {
    prep::Dataset ds;
    ds.feature_names = {"col"};
    ds.features.resize(2, 1);
    ds.features << -100.0, -90.0;
    ds.targets.resize(2);
    ds.targets << 1.0, 2.0;
    auto norm = prep::normalize_minmax(ds);
    CHECK(norm.features(0, 0) == 0.0);
    CHECK(norm.features(1, 0) == 1.0);
    CHECK(norm.norm->features[0].min == -100.0);
    CHECK(norm.norm->features[0].max == -90.0);
  }

  TEST_CASE("denormalize: midpoint maps back") {
    prep::ColumnRange r{-100.0, -90.0};
    CHECK(prep::denormalize(0.5, r) == doctest::Approx(-95.0).epsilon(1e-15));
  }

  TEST_CASE("normalize/denormalize round-trip within 1e-12") {
    soilwave::rng::SplitMix64 gen(3);
    prep::Dataset ds;
    ds.feature_names = {"x"};
    ds.features.resize(200, 1);
    ds.targets.resize(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      ds.features(i, 0) = gen.next_normal(-92.0, 4.0);
      ds.targets(i) = gen.next_normal(31.0, 3.0);
    }
    auto norm = prep::normalize_minmax(ds);
    for (Eigen::Index i = 0; i < 200; ++i) {
      CHECK(prep::denormalize(norm.features(i, 0), norm.norm->features[0]) ==
            doctest::Approx(ds.features(i, 0)).epsilon(1e-12));
      CHECK(norm.features(i, 0) >= 0.0);
      CHECK(norm.features(i, 0) <= 1.0);
    }
  }

  TEST_CASE("normalize: constant column error names the column") {
    prep::Dataset ds;
    ds.feature_names = {"flat"};
    ds.features = Eigen::MatrixXd::Constant(5, 1, 3.0);
    ds.targets.resize(5);
    ds.targets << 1, 2, 3, 4, 5;
    try {
      prep::fit_minmax(ds);
      FAIL("expected DegenerateInputError");
    } catch (const DegenerateInputError& e) {
      CHECK(std::string(e.what()).find("flat") != std::string::npos);
    }
  }

  TEST_CASE("split: floor rule and the documented sample counts") {
    auto big = toy_dataset(13900);
    auto [train, test] = prep::chronological_split(big, 0.8);
    CHECK(train.rows() == 11120);
    CHECK(test.rows() == 2780);

    auto ten = toy_dataset(10);
    auto [t8, t2] = prep::chronological_split(ten, 0.8);
    CHECK(t8.rows() == 8);
    CHECK(t2.rows() == 2);

    auto five = toy_dataset(5);
    auto [f2, f3] = prep::chronological_split(five, 0.5);
    CHECK(f2.rows() == 2);
    CHECK(f3.rows() == 3);
  }

  TEST_CASE("split: conservation, order, and train-only normalization") {
    auto ds = toy_dataset(50);
    auto [raw_train, raw_test] = prep::split_rows(ds, 0.8);
    CHECK(raw_train.rows() + raw_test.rows() == ds.rows());
    // concatenation in order reproduces the input bitwise
    for (Eigen::Index i = 0; i < raw_train.rows(); ++i) {
      CHECK(raw_train.features.row(i) == ds.features.row(i));
    }
    for (Eigen::Index i = 0; i < raw_test.rows(); ++i) {
      CHECK(raw_test.features.row(i) == ds.features.row(raw_train.rows() + i));
    }

    auto [train, test] = prep::chronological_split(ds, 0.8);
    CHECK(train.norm.has_value());
    CHECK(*train.norm == *test.norm);
    CHECK(train.features.minCoeff() >= 0.0);
    CHECK(train.features.maxCoeff() <= 1.0);
    // test rows normalized with train parameters may exceed [0, 1]
    CHECK(test.features.maxCoeff() > 1.0);
  }

  TEST_CASE("split: degenerate sizes are argument errors") {
    CHECK_THROWS_AS(prep::chronological_split(toy_dataset(1), 0.8), ArgumentError);
    CHECK_THROWS_AS(prep::chronological_split(toy_dataset(10), 0.0), ArgumentError);
    CHECK_THROWS_AS(prep::chronological_split(toy_dataset(10), 1.0), ArgumentError);
  }

  TEST_CASE("lag features: definition, shape, and target alignment") {
    prep::Dataset ds;
    ds.feature_names = {"v"};
    ds.features.resize(3, 1);
    ds.features << 1.0, 2.0, 3.0;  // a, b, c
    ds.targets.resize(3);
    ds.targets << 10.0, 11.0, 12.0;  // y0, y1, y2
    auto lag = prep::make_lag_features(ds);
    REQUIRE(lag.rows() == 2);
    REQUIRE(lag.cols() == 2);
    CHECK(lag.features(0, 0) == 2.0);  // [b, a]
    CHECK(lag.features(0, 1) == 1.0);
    CHECK(lag.features(1, 0) == 3.0);  // [c, b]
    CHECK(lag.features(1, 1) == 2.0);
    CHECK(lag.targets(0) == 11.0);
    CHECK(lag.targets(1) == 12.0);
    CHECK(lag.feature_names[1] == "v_lag1");
    CHECK_THROWS_AS(prep::make_lag_features(toy_dataset(1)), ArgumentError);
  }

  TEST_CASE("windows: counts, boundary, and target alignment") {
    auto ds100 = toy_dataset(100);
    CHECK(prep::make_windows(ds100, 18).size() == 83);

    auto ds18 = toy_dataset(18);
    auto one = prep::make_windows(ds18, 18);
    REQUIRE(one.size() == 1);
    CHECK(one.targets(0) == ds18.targets(17));

    auto ds20 = toy_dataset(20);
    auto w = prep::make_windows(ds20, 18);
    REQUIRE(w.size() == 3);
    CHECK(w.targets(0) == ds20.targets(17));
    CHECK(w.targets(1) == ds20.targets(18));
    CHECK(w.targets(2) == ds20.targets(19));

    CHECK_THROWS_AS(prep::make_windows(toy_dataset(10), 18), ArgumentError);
  }

  TEST_CASE("windows: property m = n - steps + 1 over random shapes") {
    soilwave::rng::SplitMix64 gen(8);
    for (int rep = 0; rep < 30; ++rep) {
      auto steps = 1 + gen.next_below(30);
      auto n = steps + gen.next_below(100);
      auto ds = toy_dataset(static_cast<Eigen::Index>(n));
      auto w = prep::make_windows(ds, steps);
      CHECK(w.size() == n - steps + 1);
      CHECK(w.windows[0].rows() == static_cast<Eigen::Index>(steps));
    }
  }

  TEST_CASE("align: full overlap produces one row per timestamp and no fills") {
    std::vector<soilwave::telemetry::UplinkRecord> recs;
    for (int t = 0; t < 5; ++t) {
      std::int64_t ts = 1735689600 + t * 300;
      recs.push_back({ts, "gw1", -95.0 - t, 5.0, 30.0 + t, std::nullopt});
      recs.push_back({ts, "gw2", -88.0 - t, 7.0, 30.0 + t, std::nullopt});
    }
    auto ds = prep::align_gateways(soilwave::telemetry::RecordSet(std::move(recs)));
    CHECK(ds.rows() == 5);
    CHECK(ds.cols() == 4);
    CHECK(ds.feature_names[0] == "gw1_rssi");
    CHECK(ds.feature_names[3] == "gw2_snr");
    CHECK(ds.features(2, 2) == -90.0);
    CHECK(ds.targets(2) == 32.0);
  }

  TEST_CASE("align: interior gap carries the previous observation forward") {
    std::vector<soilwave::telemetry::UplinkRecord> recs;
    for (int t = 0; t < 4; ++t) {
      std::int64_t ts = 1735689600 + t * 300;
      recs.push_back({ts, "gw1", -95.0 - t, 5.0, 30.0, std::nullopt});
      if (t != 2) recs.push_back({ts, "gw2", -80.0 - t, 7.0, 30.0, std::nullopt});
    }
    auto ds = prep::align_gateways(soilwave::telemetry::RecordSet(std::move(recs)));
    REQUIRE(ds.rows() == 4);
    CHECK(ds.features(2, 2) == -81.0);  // gw2 value from t=1
    CHECK(ds.features(3, 2) == -83.0);  // fresh observation at t=3
  }

  TEST_CASE("align: leading gap drops rows until every gateway reports") {
    std::vector<soilwave::telemetry::UplinkRecord> recs;
    for (int t = 0; t < 10; ++t) {
      std::int64_t ts = 1735689600 + t * 300;
      recs.push_back({ts, "gw1", -95.0, 5.0, 30.0, std::nullopt});
      if (t >= 5) recs.push_back({ts, "gw2", -80.0, 7.0, 30.0, std::nullopt});
    }
    auto ds = prep::align_gateways(soilwave::telemetry::RecordSet(std::move(recs)));
    CHECK(ds.rows() == 5);
    CHECK(ds.ts.front() == 1735689600 + 5 * 300);
  }

  TEST_CASE("align: no overlap at all is an alignment error") {
    std::vector<soilwave::telemetry::UplinkRecord> recs;
    recs.push_back({1000, "gw1", -95.0, 5.0, 30.0, std::nullopt});
    recs.push_back({2000, "gw2", -80.0, 7.0, 30.0, std::nullopt});
    // gw2 never observed at or before any gw1 timestamp
    CHECK_THROWS_AS(
        prep::align_gateways(soilwave::telemetry::RecordSet(std::move(recs))),
        AlignmentError);
  }

  TEST_CASE("dataset pair json round-trip") {
    auto ds = toy_dataset(40);
    auto [train, test] = prep::chronological_split(ds, 0.8);
    auto text = prep::dataset_pair_to_json(train, test);
    auto [t2, e2] = prep::dataset_pair_from_json(text);
    CHECK(t2.features == train.features);
    CHECK(e2.features == test.features);
    CHECK(t2.targets == train.targets);
    CHECK(*t2.norm == *train.norm);
    CHECK(t2.ts == train.ts);
  }

  TEST_CASE("decomposed feature substitution doubles the columns") {
    auto ds = toy_dataset(30);
    auto sub = prep::substitute_decomposed(ds, 4);
    CHECK(sub.cols() == 4);
    CHECK(sub.feature_names[0] == "a_long");
    CHECK(sub.feature_names[1] == "a_short");
    for (Eigen::Index i = 0; i < sub.rows(); ++i) {
      CHECK(sub.features(i, 0) + sub.features(i, 1) == ds.features(i, 0));
    }
  }
}
