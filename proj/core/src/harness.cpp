#include "soilwave/harness.hpp"

#include <atomic>
#include <chrono>
#include <nlohmann/json.hpp>
#include <thread>

#include "soilwave/error.hpp"
#include "soilwave/rng.hpp"
#include "soilwave/detail/text_util.hpp"

namespace soilwave::harness {

namespace {

using nlohmann::json;

void check_lengths(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw ArgumentError("prediction and target lengths differ");
  if (a == 0) throw ArgumentError("metrics need at least one sample");
}

}  // namespace

double mse(const Eigen::Ref<const Eigen::VectorXd>& pred,
           const Eigen::Ref<const Eigen::VectorXd>& target) {
  check_lengths(pred.size(), target.size());
  return (pred - target).squaredNorm() / (2.0 * static_cast<double>(pred.size()));
}

double mae(const Eigen::Ref<const Eigen::VectorXd>& pred,
           const Eigen::Ref<const Eigen::VectorXd>& target) {
  check_lengths(pred.size(), target.size());
  return (pred - target).cwiseAbs().sum() / static_cast<double>(pred.size());
}

Metrics compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& pred,
                        const Eigen::Ref<const Eigen::VectorXd>& target) {
  return {mse(pred, target), mae(pred, target), static_cast<std::size_t>(pred.size())};
}

Eigen::VectorXd predictions(const svr::SvrModel& model, const preprocess::Dataset& data) {
  return svr::svr_predict_all(model, data.features);
}

Eigen::VectorXd predictions(const lstm::LstmModel& model,
                            const preprocess::WindowedDataset& data) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = lstm::predict(model, data.windows[k]);
  }
  return out;
}

Metrics evaluate(const svr::SvrModel& model, const preprocess::Dataset& test) {
  if (test.rows() == 0) throw ArgumentError("test set must not be empty");
  return compute_metrics(predictions(model, test), test.targets);
}

Metrics evaluate(const lstm::LstmModel& model, const preprocess::WindowedDataset& test) {
  if (test.size() == 0) throw ArgumentError("test set must not be empty");
  return compute_metrics(predictions(model, test), test.targets);
}

std::vector<SweepRow> sweep_lstm(const SweepData& data, const SweepGrid& grid, std::uint64_t seed,
                                 std::size_t batch_size, double dropout_p, std::size_t jobs) {
  if (grid.layer1.empty() || grid.layer2.empty() || grid.lr.empty() || grid.epochs.empty()) {
    throw ArgumentError("sweep grid must not be empty");
  }
  if (data.train.size() == 0 || data.test.size() == 0) {
    throw ArgumentError("sweep needs nonempty train and test sets");
  }

  struct Point {
    std::size_t layer1, layer2;
    double lr;
    std::size_t epochs;
  };
  std::vector<Point> points;
  for (std::size_t l1 : grid.layer1) {
    for (std::size_t l2 : grid.layer2) {
      for (double lr : grid.lr) {
        for (std::size_t ep : grid.epochs) points.push_back({l1, l2, lr, ep});
      }
    }
  }

  Eigen::Index width = data.train.windows[0].cols();
  std::vector<SweepRow> rows(points.size());

  auto run_row = [&](std::size_t k) {
    const Point& pt = points[k];
    lstm::ModelSpec spec;
    spec.input_width = width;
    spec.layer1_units = static_cast<Eigen::Index>(pt.layer1);
    spec.layer2_units = static_cast<Eigen::Index>(pt.layer2);
    spec.dropout_p = dropout_p;
    lstm::TrainConfig cfg;
    cfg.lr = pt.lr;
    cfg.epochs = pt.epochs;
    cfg.batch_size = batch_size;
    cfg.seed = rng::SplitMix64::stream_seed(seed, k);

    auto start = std::chrono::steady_clock::now();
    auto [model, history] = lstm::train_lstm(data.train, data.val, spec, cfg);
    Metrics metrics = evaluate(model, data.test);
    std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;

    rows[k] = {pt.layer1, pt.layer2, pt.lr, pt.epochs, metrics.mse, metrics.mae, wall.count()};
  };

  if (jobs <= 1 || points.size() <= 1) {
    for (std::size_t k = 0; k < points.size(); ++k) run_row(k);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t k = next.fetch_add(1);
        if (k >= points.size()) break;
        run_row(k);
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, points.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

std::size_t argmin_mse(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ArgumentError("no sweep rows");
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].mse < rows[best].mse) best = k;
  }
  return best;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "layer1,layer2,lr,epochs,mse,mae,wall_seconds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.layer1);
    out.push_back(',');
    out += std::to_string(r.layer2);
    out.push_back(',');
    out += detail::format_double(r.lr);
    out.push_back(',');
    out += std::to_string(r.epochs);
    out.push_back(',');
    out += detail::format_double(r.mse);
    out.push_back(',');
    out += detail::format_double(r.mae);
    out.push_back(',');
    out += detail::format_double(r.wall_seconds);
    out.push_back('\n');
  }
  return out;
}

std::string metrics_to_json(const Metrics& normalized, const preprocess::ColumnRange* target_range,
                            const Metrics* denormalized) {
  json obj{{"n", normalized.n},
           {"mse", normalized.mse},
           {"mse_conventional", normalized.conventional_mse()},
           {"mae", normalized.mae}};
  if (target_range != nullptr) {
    obj["target_range"] = {{"min", target_range->min}, {"max", target_range->max}};
  }
  if (denormalized != nullptr) {
    obj["denormalized"] = {{"mse", denormalized->mse},
                           {"mse_conventional", denormalized->conventional_mse()},
                           {"mae", denormalized->mae}};
  }
  return obj.dump(2);
}

std::string predictions_to_csv(const Eigen::Ref<const Eigen::VectorXd>& pred,
                               const Eigen::Ref<const Eigen::VectorXd>& target) {
  check_lengths(pred.size(), target.size());
  std::string out = "idx,prediction,target\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    out += std::to_string(i);
    out.push_back(',');
    out += detail::format_double(pred(i));
    out.push_back(',');
    out += detail::format_double(target(i));
    out.push_back('\n');
  }
  return out;
}

}  // namespace soilwave::harness
