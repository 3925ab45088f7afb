#include "soilwave/svr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>
#include <tuple>

#include "soilwave/error.hpp"
#include "soilwave/rng.hpp"
#include "soilwave/detail/text_util.hpp"

namespace soilwave::svr {

namespace {

using nlohmann::json;

// Coefficients closer to a box edge than this are treated as sitting on it.
constexpr double kBoundTol = 1e-9;

struct KernelCache {
  KernelCache(const Eigen::MatrixXd& X, double gamma) : X_(X), gamma_(gamma) {
    auto n = static_cast<std::size_t>(X.rows());
    rows_.resize(n);
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    auto& r = rows_[static_cast<std::size_t>(i)];
    if (r.size() == 0) {
      r.resize(X_.rows());
      for (Eigen::Index j = 0; j < X_.rows(); ++j) {
        r(j) = std::exp(-gamma_ * (X_.row(i) - X_.row(j)).squaredNorm());
      }
    }
    return r;
  }

  double diag(Eigen::Index) const { return 1.0; }  // RBF: K(x, x) = 1

 private:
  const Eigen::MatrixXd& X_;
  double gamma_;
  std::vector<Eigen::VectorXd> rows_;
};

// Violation of the optimality conditions for one coefficient, given the
// residual e = y - f0(x) - b.
double coefficient_violation(double beta, double e, double c, double eps) {
  if (std::abs(beta) <= kBoundTol * c) return std::max(0.0, std::abs(e) - eps);
  if (beta >= c * (1.0 - kBoundTol)) return std::max(0.0, eps - e);
  if (beta <= -c * (1.0 - kBoundTol)) return std::max(0.0, e + eps);
  if (beta > 0.0) return std::abs(e - eps);
  return std::abs(e + eps);
}

double bias_from_residuals(const Eigen::VectorXd& duals, const Eigen::VectorXd& e0,
                           const SvrHyper& hyper) {
  // e0 holds y - f0(x); free coefficients pin the bias exactly, otherwise the
  // box-edge and interior conditions only bound it and the midpoint is used.
  double sum = 0.0;
  std::size_t free_count = 0;
  for (Eigen::Index i = 0; i < duals.size(); ++i) {
    double beta = duals(i);
    if (std::abs(beta) > kBoundTol * hyper.c && std::abs(beta) < hyper.c * (1.0 - kBoundTol)) {
      sum += e0(i) - (beta > 0.0 ? hyper.epsilon : -hyper.epsilon);
      ++free_count;
    }
  }
  if (free_count > 0) return sum / static_cast<double>(free_count);

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < duals.size(); ++i) {
    double beta = duals(i);
    if (std::abs(beta) <= kBoundTol * hyper.c) {
      lo = std::max(lo, e0(i) - hyper.epsilon);
      hi = std::min(hi, e0(i) + hyper.epsilon);
    } else if (beta > 0.0) {  // at +C: e >= eps
      hi = std::min(hi, e0(i) - hyper.epsilon);
    } else {  // at -C: e <= -eps
      lo = std::max(lo, e0(i) + hyper.epsilon);
    }
  }
  if (!std::isfinite(lo) && !std::isfinite(hi)) return 0.0;
  if (!std::isfinite(lo)) return hi;
  if (!std::isfinite(hi)) return lo;
  return 0.5 * (lo + hi);
}

class SmoSolver {
 public:
  SmoSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrHyper& hyper, double tol,
            std::size_t max_passes, std::uint64_t seed)
      : X_(X),
        y_(y),
        hyper_(hyper),
        tol_(tol),
        max_passes_(max_passes),
        gen_(seed),
        kernel_(X, hyper.gamma),
        duals_(Eigen::VectorXd::Zero(X.rows())),
        f0_(Eigen::VectorXd::Zero(X.rows())) {}

  TrainReport solve() {
    auto n = X_.rows();
    TrainReport report;
    report.reason = StopReason::kMaxPasses;
    for (std::size_t pass = 1; pass <= max_passes_; ++pass) {
      report.passes = pass;
      double b = bias_from_residuals(duals_, residuals(), hyper_);
      for (Eigen::Index i = 0; i < n; ++i) {
        double e_i = y_(i) - f0_(i) - b;
        if (coefficient_violation(duals_(i), e_i, hyper_.c, hyper_.epsilon) <= tol_) continue;
        Eigen::Index j = random_partner(i, n);
        if (!optimize_pair(i, j)) {
          // Deterministic fallback: the point with the largest residual gap.
          Eigen::Index best = i;
          double best_gap = -1.0;
          for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            double gap = std::abs((y_(i) - f0_(i)) - (y_(k) - f0_(k)));
            if (gap > best_gap) {
              best_gap = gap;
              best = k;
            }
          }
          if (best != i && best != j) optimize_pair(i, best);
        }
      }
      b = bias_from_residuals(duals_, residuals(), hyper_);
      double max_violation = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double e_i = y_(i) - f0_(i) - b;
        max_violation =
            std::max(max_violation, coefficient_violation(duals_(i), e_i, hyper_.c, hyper_.epsilon));
      }
      report.max_kkt_violation = max_violation;
      report.bias = b;
      if (max_violation < tol_) {
        report.reason = StopReason::kConverged;
        break;
      }
    }
    report.duals = duals_;
    return report;
  }

 private:
  Eigen::VectorXd residuals() const { return y_ - f0_; }

  Eigen::Index random_partner(Eigen::Index i, Eigen::Index n) {
    auto j = static_cast<Eigen::Index>(gen_.next_below(static_cast<std::uint64_t>(n - 1)));
    return j >= i ? j + 1 : j;
  }

  // Exact maximization of the pair subproblem along beta_i += delta,
  // beta_j -= delta. The objective piece is
  //   g(delta) = delta*gap - eps*(|bi+delta| - |bi|) - eps*(|bj-delta| - |bj|)
  //              - 0.5*eta*delta^2
  // which is concave and piecewise quadratic; the maximum is at a box edge,
  // a kink (beta hitting zero) or one of the four sign-combination vertices.
  bool optimize_pair(Eigen::Index i, Eigen::Index j) {
    if (i == j) return false;
    const Eigen::VectorXd& ki = kernel_.row(i);
    const Eigen::VectorXd& kj = kernel_.row(j);
    double eta = kernel_.diag(i) + kernel_.diag(j) - 2.0 * ki(j);
    double gap = (y_(i) - f0_(i)) - (y_(j) - f0_(j));
    double bi = duals_(i);
    double bj = duals_(j);
    double c = hyper_.c;
    double eps = hyper_.epsilon;

    double lo = std::max(-c - bi, bj - c);
    double hi = std::min(c - bi, bj + c);
    if (hi <= lo) return false;

    double candidates[8];
    int count = 0;
    candidates[count++] = lo;
    candidates[count++] = hi;
    auto push_clamped = [&](double d) {
      if (d > lo && d < hi) candidates[count++] = d;
    };
    push_clamped(-bi);
    push_clamped(bj);
    if (eta > 0.0) {
      for (double si : {-1.0, 1.0}) {
        for (double sj : {-1.0, 1.0}) {
          push_clamped((gap - eps * si + eps * sj) / eta);
        }
      }
    }

    auto value = [&](double d) {
      return d * gap - eps * (std::abs(bi + d) - std::abs(bi)) -
             eps * (std::abs(bj - d) - std::abs(bj)) - 0.5 * eta * d * d;
    };
    double best_d = 0.0;
    double best_v = 0.0;
    for (int k = 0; k < count; ++k) {
      double v = value(candidates[k]);
      if (v > best_v) {
        best_v = v;
        best_d = candidates[k];
      }
    }
    if (best_v <= 1e-14) return false;

    duals_(i) = std::min(c, std::max(-c, bi + best_d));
    duals_(j) = std::min(c, std::max(-c, bj - best_d));
    double di = duals_(i) - bi;
    double dj = duals_(j) - bj;
    f0_ += di * ki + dj * kj;
    return true;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  SvrHyper hyper_;
  double tol_;
  std::size_t max_passes_;
  rng::SplitMix64 gen_;
  KernelCache kernel_;
  Eigen::VectorXd duals_;
  Eigen::VectorXd f0_;
};

}  // namespace

void validate(const SvrHyper& hyper) {
  if (!(hyper.c > 0.0)) throw ArgumentError("C must be > 0");
  if (!(hyper.epsilon >= 0.0)) throw ArgumentError("epsilon must be >= 0");
  if (!(hyper.gamma > 0.0)) throw ArgumentError("gamma must be > 0");
}

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, double gamma) {
  if (x.size() != y.size()) throw ArgumentError("kernel arguments must have equal dimensions");
  return std::exp(-gamma * (x - y).squaredNorm());
}

SvrModel svr_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrHyper& hyper,
                   double tol, std::size_t max_passes, std::uint64_t seed, TrainReport* report) {
  validate(hyper);
  if (X.rows() < 2) throw ArgumentError("training needs at least 2 samples");
  if (X.rows() != y.size()) throw ArgumentError("X and y disagree on sample count");
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("training data must be finite");
  if (!(tol > 0.0)) throw ArgumentError("tol must be > 0");
  if (max_passes == 0) throw ArgumentError("max_passes must be >= 1");

  SmoSolver solver(X, y, hyper, tol, max_passes, seed);
  TrainReport local = solver.solve();

  SvrModel model;
  model.hyper = hyper;
  model.bias = local.bias;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < local.duals.size(); ++i) {
    if (std::abs(local.duals(i)) > 1e-12) kept.push_back(i);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(kept.size()), X.cols());
  model.coeffs.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    model.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(kept[k]);
    model.coeffs(static_cast<Eigen::Index>(k)) = local.duals(kept[k]);
  }
  if (report != nullptr) *report = std::move(local);
  return model;
}

double svr_predict(const SvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.support_vectors.rows() > 0 && x.size() != model.support_vectors.cols()) {
    throw ArgumentError("input dimension does not match the support vectors");
  }
  double out = model.bias;
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i) {
    out += model.coeffs(i) *
           std::exp(-model.hyper.gamma * (x - model.support_vectors.row(i).transpose()).squaredNorm());
  }
  return out;
}

Eigen::VectorXd svr_predict_all(const SvrModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    Eigen::VectorXd x = X.row(r).transpose();
    out(r) = svr_predict(model, x);
  }
  return out;
}

double bias_from_duals(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& duals, const SvrHyper& hyper) {
  KernelCache kernel(X, hyper.gamma);
  Eigen::VectorXd e0(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) e0(i) = y(i) - kernel.row(i).dot(duals);
  return bias_from_residuals(duals, e0, hyper);
}

double kkt_max_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& duals, double bias, const SvrHyper& hyper) {
  KernelCache kernel(X, hyper.gamma);
  double max_violation = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double e = y(i) - kernel.row(i).dot(duals) - bias;
    max_violation =
        std::max(max_violation, coefficient_violation(duals(i), e, hyper.c, hyper.epsilon));
  }
  return max_violation;
}

double svr_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& duals, const SvrHyper& hyper) {
  validate(hyper);
  if (duals.size() != X.rows()) throw ArgumentError("dual vector length must match sample count");
  for (Eigen::Index i = 0; i < duals.size(); ++i) {
    if (std::abs(duals(i)) > hyper.c * (1.0 + kBoundTol)) {
      throw ValidationError("dual coefficient outside the [-C, C] box");
    }
  }

  KernelCache kernel(X, hyper.gamma);
  Eigen::VectorXd f0(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) f0(i) = kernel.row(i).dot(duals);
  double bias = bias_from_residuals(duals, (y - f0).eval(), hyper);

  double weight_norm_sq = duals.dot(f0);  // |w|^2 = beta^T K beta
  double slack_sum = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double f = f0(i) + bias;
    slack_sum += std::max(0.0, (y(i) - f) - hyper.epsilon);  // xi
    slack_sum += std::max(0.0, (f - y(i)) - hyper.epsilon);  // xi*
  }
  return hyper.c * slack_sum + 0.5 * weight_norm_sq;
}

GridSearchResult grid_search_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 std::span<const double> gamma_grid,
                                 std::span<const double> c_grid, std::span<const double> eps_grid,
                                 std::size_t folds, double tol, std::size_t max_passes,
                                 std::uint64_t seed, std::size_t jobs) {
  if (gamma_grid.empty() || c_grid.empty() || eps_grid.empty()) {
    throw ArgumentError("hyperparameter grids must not be empty");
  }
  if (folds < 2) throw ArgumentError("grid search needs at least 2 folds");
  auto n = static_cast<std::size_t>(X.rows());
  if (n < 2 * folds) throw ArgumentError("too few samples for the requested fold count");

  std::vector<SvrHyper> points;
  for (double gamma : gamma_grid) {
    for (double c : c_grid) {
      for (double eps : eps_grid) points.push_back({c, eps, gamma});
    }
  }

  // Contiguous chronological folds: block f validates, the rest trains.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  for (std::size_t f = 0; f < folds; ++f) {
    std::size_t begin = f * n / folds;
    std::size_t end = (f + 1) * n / folds;
    blocks.emplace_back(begin, end);
  }

  auto score_point = [&](std::size_t index) {
    const SvrHyper& hyper = points[index];
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      auto [begin, end] = blocks[f];
      std::size_t val_n = end - begin;
      std::size_t train_n = n - val_n;
      Eigen::MatrixXd xt(train_n, X.cols());
      Eigen::VectorXd yt(train_n);
      Eigen::Index w = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (r >= begin && r < end) continue;
        xt.row(w) = X.row(static_cast<Eigen::Index>(r));
        yt(w) = y(static_cast<Eigen::Index>(r));
        ++w;
      }
      std::uint64_t fold_seed =
          rng::SplitMix64::stream_seed(rng::SplitMix64::stream_seed(seed, index), f);
      SvrModel model = svr_train(xt, yt, hyper, tol, max_passes, fold_seed);
      double sq = 0.0;
      for (std::size_t r = begin; r < end; ++r) {
        Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(r)).transpose();
        double diff = svr_predict(model, x) - y(static_cast<Eigen::Index>(r));
        sq += diff * diff;
      }
      total += sq / (2.0 * static_cast<double>(val_n));
    }
    return total / static_cast<double>(folds);
  };

  std::vector<double> scores(points.size(), 0.0);
  if (jobs <= 1 || points.size() <= 1) {
    for (std::size_t p = 0; p < points.size(); ++p) scores[p] = score_point(p);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t p = next.fetch_add(1);
        if (p >= points.size()) break;
        scores[p] = score_point(p);
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, points.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  GridSearchResult result;
  for (std::size_t p = 0; p < points.size(); ++p) {
    result.table.push_back({points[p], scores[p]});
  }
  // Ties break toward smaller C, then smaller gamma, then larger epsilon.
  std::size_t best = 0;
  for (std::size_t p = 1; p < points.size(); ++p) {
    const auto& a = result.table[p];
    const auto& b = result.table[best];
    auto key = [](const GridPoint& g) {
      return std::make_tuple(g.mean_mse, g.hyper.c, g.hyper.gamma, -g.hyper.epsilon);
    };
    if (key(a) < key(b)) best = p;
  }
  result.best = result.table[best].hyper;
  return result;
}

std::string to_json(const SvrModel& model) {
  json sv = json::array();
  for (Eigen::Index r = 0; r < model.support_vectors.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.support_vectors.cols(); ++c) {
      row.push_back(model.support_vectors(r, c));
    }
    sv.push_back(std::move(row));
  }
  json coeffs = json::array();
  for (Eigen::Index i = 0; i < model.coeffs.size(); ++i) coeffs.push_back(model.coeffs(i));
  json obj{{"format", "soilwave-svr"},
           {"version", 1},
           {"hyper", {{"c", model.hyper.c}, {"epsilon", model.hyper.epsilon}, {"gamma", model.hyper.gamma}}},
           {"bias", model.bias},
           {"support_vectors", std::move(sv)},
           {"coeffs", std::move(coeffs)}};
  return obj.dump();
}

SvrModel svr_model_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed model document: ") + e.what());
  }
  if (obj.value("format", "") != "soilwave-svr") throw FormatError("not an svr model document");
  if (obj.value("version", 0) != 1) throw FormatError("unsupported svr model version");

  SvrModel model;
  model.hyper.c = obj.at("hyper").at("c").get<double>();
  model.hyper.epsilon = obj.at("hyper").at("epsilon").get<double>();
  model.hyper.gamma = obj.at("hyper").at("gamma").get<double>();
  model.bias = obj.at("bias").get<double>();
  const auto& sv = obj.at("support_vectors");
  const auto& coeffs = obj.at("coeffs");
  if (sv.size() != coeffs.size()) throw DecodeError("support vector and coefficient counts differ");
  Eigen::Index s = static_cast<Eigen::Index>(sv.size());
  Eigen::Index d = s > 0 ? static_cast<Eigen::Index>(sv[0].size()) : 0;
  model.support_vectors.resize(s, d);
  model.coeffs.resize(s);
  for (Eigen::Index r = 0; r < s; ++r) {
    const auto& row = sv[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw DecodeError("support vector rows have inconsistent widths");
    }
    for (Eigen::Index c = 0; c < d; ++c) model.support_vectors(r, c) = row[static_cast<std::size_t>(c)];
    model.coeffs(r) = coeffs[static_cast<std::size_t>(r)].get<double>();
  }
  validate(model.hyper);
  return model;
}

std::string grid_table_to_csv(const GridSearchResult& result) {
  std::string out = "gamma,c,epsilon,mean_mse\n";
  for (const auto& row : result.table) {
    out += detail::format_double(row.hyper.gamma);
    out.push_back(',');
    out += detail::format_double(row.hyper.c);
    out.push_back(',');
    out += detail::format_double(row.hyper.epsilon);
    out.push_back(',');
    out += detail::format_double(row.mean_mse);
    out.push_back('\n');
  }
  return out;
}

}  // namespace soilwave::svr
