#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "soilwave/telemetry.hpp"

namespace soilwave::preprocess {

/// A dB series split into a slow (trailing-mean) and a fast (residual)
/// component; raw[i] == long_term[i] + short_term[i] element-wise.
struct FadingDecomposition {
  std::vector<double> raw;
  std::vector<double> long_term;
  std::vector<double> short_term;
  std::size_t window_len = 24;
};

/// long_term[t] = mean of raw over the trailing window ending at t; prefix
/// positions (t < window_len-1) average all samples available so far.
FadingDecomposition decompose_fading(const std::vector<double>& raw, std::size_t window_len = 24);

struct HumidityClassRow {
  double class_low = 0.0;
  double class_high = 0.0;
  double mean_rssi = 0.0;
  double mean_snr = 0.0;
  std::size_t count = 0;
};

/// Bins samples into half-open humidity classes [low + k*width, low +
/// (k+1)*width) and reports the per-class mean of each signal. Samples with
/// humidity outside [low, high) are ignored; empty classes are omitted.
std::vector<HumidityClassRow> aggregate_classes(const std::vector<double>& humidity,
                                                const std::vector<double>& rssi,
                                                const std::vector<double>& snr, double low,
                                                double high, double width = 0.5);

/// Single-signal form; the snr column of the rows is zero.
std::vector<HumidityClassRow> aggregate_classes(const std::vector<double>& humidity,
                                                const std::vector<double>& signal, double low,
                                                double high, double width = 0.5);

/// Sample Pearson correlation, one-pass co-moment accumulation, clamped into
/// [-1, 1]. Throws DegenerateInputError when either series has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ColumnRange {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

struct NormParams {
  std::vector<ColumnRange> features;  // one range per feature column
  ColumnRange target;
  friend bool operator==(const NormParams&, const NormParams&) = default;
};

/// Chronologically ordered feature matrix with scalar targets. `norm` is set
/// once values have been min-max mapped; `ts` carries per-row timestamps when
/// the rows came from telemetry (may be empty for synthetic datasets).
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXd targets;   // n
  std::vector<std::int64_t> ts;
  std::optional<NormParams> norm;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index cols() const noexcept { return features.cols(); }
};

/// Per-column (min, max) over the dataset; throws DegenerateInputError naming
/// the offending column when any feature column or the target is constant.
NormParams fit_minmax(const Dataset& ds);

/// v -> (v - min) / (max - min), column-wise, targets included.
Dataset apply_minmax(const Dataset& ds, const NormParams& params);

/// fit_minmax + apply_minmax on the same data.
Dataset normalize_minmax(const Dataset& ds);

inline double normalize(double v, const ColumnRange& r) { return (v - r.min) / (r.max - r.min); }
inline double denormalize(double v, const ColumnRange& r) { return v * (r.max - r.min) + r.min; }

/// Row split only: first floor(n * train_fraction) rows vs the rest, no
/// normalization, no shuffling.
std::pair<Dataset, Dataset> split_rows(const Dataset& ds, double train_fraction);

/// Chronological split with min-max parameters fitted on the train part and
/// applied to both parts. Train values land in [0, 1]; test values may not.
std::pair<Dataset, Dataset> chronological_split(const Dataset& ds, double train_fraction);

/// Concatenates each row with its predecessor: row t (t >= 1) becomes
/// [features[t], features[t-1]] with the target at time t. Output has n-1
/// rows and 2d columns (lagged copies named "<col>_lag1").
Dataset make_lag_features(const Dataset& ds);

struct WindowedDataset {
  std::vector<Eigen::MatrixXd> windows;  // m entries, each steps x d
  Eigen::VectorXd targets;               // m, target at each window's last row
  std::size_t steps = 18;

  std::size_t size() const noexcept { return windows.size(); }
};

/// Stride-1 sliding windows: m = n - steps + 1, window k covers rows
/// [k, k+steps) and takes the target of row k+steps-1.
WindowedDataset make_windows(const Dataset& ds, std::size_t steps = 18);

struct AlignPolicy {
  /// Gateway whose timestamps define the rows; empty selects the first
  /// (lexicographically smallest) gateway in the set.
  std::string primary_gateway;
};

/// One feature row per primary-gateway timestamp with columns
/// (<gw>_rssi, <gw>_snr) for every gateway in sorted order. A gateway missing
/// at a timestamp is filled with its last observed values; rows before any
/// observation of some gateway (or without ground-truth humidity on the
/// primary record) are dropped. Targets are the primary records' humidity.
Dataset align_gateways(const telemetry::RecordSet& set, const AlignPolicy& policy = {});

/// Replaces every feature column by its long- and short-term components
/// ("<col>_long", "<col>_short") using the given trailing window.
Dataset substitute_decomposed(const Dataset& ds, std::size_t window_len = 24);

/// Versioned JSON document holding a train/test pair plus the normalization
/// parameters fitted on train.
std::string dataset_pair_to_json(const Dataset& train, const Dataset& test);
std::pair<Dataset, Dataset> dataset_pair_from_json(const std::string& text);

}  // namespace soilwave::preprocess
