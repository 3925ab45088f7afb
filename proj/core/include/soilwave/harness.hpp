#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "soilwave/lstm.hpp"
#include "soilwave/preprocess.hpp"
#include "soilwave/svr.hpp"

namespace soilwave::harness {

/// mse follows the (1/2m) * sum((pred-target)^2) convention so the training
/// loss and the reported metric coincide; conventional_mse() is the plain
/// (1/m) mean of squares.
struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;

  double conventional_mse() const noexcept { return 2.0 * mse; }
};

double mse(const Eigen::Ref<const Eigen::VectorXd>& pred,
           const Eigen::Ref<const Eigen::VectorXd>& target);
double mae(const Eigen::Ref<const Eigen::VectorXd>& pred,
           const Eigen::Ref<const Eigen::VectorXd>& target);
Metrics compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& pred,
                        const Eigen::Ref<const Eigen::VectorXd>& target);

Eigen::VectorXd predictions(const svr::SvrModel& model, const preprocess::Dataset& data);
Eigen::VectorXd predictions(const lstm::LstmModel& model, const preprocess::WindowedDataset& data);

/// Metrics on the normalized scale; predictions run in eval mode.
Metrics evaluate(const svr::SvrModel& model, const preprocess::Dataset& test);
Metrics evaluate(const lstm::LstmModel& model, const preprocess::WindowedDataset& test);

struct SweepGrid {
  std::vector<std::size_t> layer1 = {32};
  std::vector<std::size_t> layer2 = {16, 32};
  std::vector<double> lr = {0.0001, 0.001};
  std::vector<std::size_t> epochs = {50, 100, 150, 200, 250};

  std::size_t size() const noexcept {
    return layer1.size() * layer2.size() * lr.size() * epochs.size();
  }
};

struct SweepRow {
  std::size_t layer1 = 0;
  std::size_t layer2 = 0;
  double lr = 0.0;
  std::size_t epochs = 0;
  double mse = 0.0;
  double mae = 0.0;
  double wall_seconds = 0.0;
};

struct SweepData {
  preprocess::WindowedDataset train;
  preprocess::WindowedDataset val;
  preprocess::WindowedDataset test;
};

/// Trains and evaluates every grid combination in layer1-major, then layer2,
/// then lr, then epochs order (the default grid yields 20 rows). Row k runs
/// with the derived seed rng::SplitMix64::stream_seed(seed, k), so a row
/// re-run standalone with that seed reproduces its model and metrics
/// bit-for-bit. Rows may be evaluated concurrently (`jobs`); output order is
/// always grid order.
std::vector<SweepRow> sweep_lstm(const SweepData& data, const SweepGrid& grid, std::uint64_t seed,
                                 std::size_t batch_size = 32, double dropout_p = 0.2,
                                 std::size_t jobs = 1);

/// Index of the lowest-mse row; ties keep the earliest grid position.
std::size_t argmin_mse(const std::vector<SweepRow>& rows);

/// CSV in grid order: layer1,layer2,lr,epochs,mse,mae,wall_seconds.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Metrics report JSON; includes a denormalized block when a target range is
/// supplied.
std::string metrics_to_json(const Metrics& normalized,
                            const preprocess::ColumnRange* target_range = nullptr,
                            const Metrics* denormalized = nullptr);

/// Predictions dump CSV: idx,prediction,target.
std::string predictions_to_csv(const Eigen::Ref<const Eigen::VectorXd>& pred,
                               const Eigen::Ref<const Eigen::VectorXd>& target);

}  // namespace soilwave::harness
