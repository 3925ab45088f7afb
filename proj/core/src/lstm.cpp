#include "soilwave/lstm.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "soilwave/error.hpp"
#include "soilwave/detail/text_util.hpp"

namespace soilwave::lstm {

namespace {

using nlohmann::json;

Eigen::VectorXd logistic(const Eigen::VectorXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

LstmLayerParams zero_layer(Eigen::Index units, Eigen::Index input_width) {
  LstmLayerParams p;
  for (int q = 0; q < 4; ++q) {
    p.w_x[q] = Eigen::MatrixXd::Zero(units, input_width);
    p.w_h[q] = Eigen::MatrixXd::Zero(units, units);
    p.b[q] = Eigen::VectorXd::Zero(units);
  }
  return p;
}

template <typename F>
void zip_layer(LstmLayerParams& a, const LstmLayerParams& g, LstmLayerParams& s, F&& f) {
  for (int q = 0; q < 4; ++q) f(a.w_x[q], g.w_x[q], s.w_x[q]);
  for (int q = 0; q < 4; ++q) f(a.w_h[q], g.w_h[q], s.w_h[q]);
  for (int q = 0; q < 4; ++q) f(a.b[q], g.b[q], s.b[q]);
}

void check_layer_shapes(const LstmLayerParams& p) {
  Eigen::Index u = p.w_x[0].rows();
  Eigen::Index d = p.w_x[0].cols();
  for (int q = 0; q < 4; ++q) {
    if (p.w_x[q].rows() != u || p.w_x[q].cols() != d || p.w_h[q].rows() != u ||
        p.w_h[q].cols() != u || p.b[q].size() != u) {
      throw ArgumentError("inconsistent gate shapes in layer parameters");
    }
    if (!p.w_x[q].allFinite() || !p.w_h[q].allFinite() || !p.b[q].allFinite()) {
      throw ValidationError("layer parameters must be finite");
    }
  }
}

// Draws one inverted-dropout factor vector: 0 with probability p, else 1/(1-p).
Eigen::VectorXd draw_mask(Eigen::Index units, double p, rng::SplitMix64& gen) {
  Eigen::VectorXd mask(units);
  double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < units; ++j) {
    mask(j) = gen.next_double() < p ? 0.0 : keep_scale;
  }
  return mask;
}

// One cell step that also records the backward cache entry.
void cell_step(const LstmLayerParams& params, const Eigen::VectorXd& x, LstmState& state,
               ForwardCache::Step& step) {
  step.x = x;
  step.h_prev = state.h;
  step.c_prev = state.c;
  auto pre = [&](int q) {
    return (params.w_x[q] * x + params.w_h[q] * state.h + params.b[q]).eval();
  };
  step.gates.i = logistic(pre(kInput));
  step.gates.f = logistic(pre(kForget));
  step.gates.o = logistic(pre(kOutput));
  step.gates.g = pre(kCell).array().tanh().matrix();
  step.c = step.gates.f.cwiseProduct(state.c) + step.gates.i.cwiseProduct(step.gates.g);
  step.tanh_c = step.c.array().tanh().matrix();
  step.h = step.gates.o.cwiseProduct(step.tanh_c);
  state.h = step.h;
  state.c = step.c;
}

// Shared forward path. When `frozen` is non-null its recorded dropout factors
// are reused; otherwise train mode draws fresh ones from `gen`.
double run_forward(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window,
                   Mode mode, rng::SplitMix64* gen, const ForwardCache* frozen,
                   ForwardCache* cache) {
  check_layer_shapes(model.layer1);
  check_layer_shapes(model.layer2);
  if (model.layer2.input_width() != model.layer1.units()) {
    throw ArgumentError("layer 2 input width must equal layer 1 units");
  }
  if (model.head_w.size() != model.layer2.units()) {
    throw ArgumentError("head width must equal layer 2 units");
  }
  if (window.cols() != model.input_width()) {
    throw ArgumentError("window width does not match layer 1 input width");
  }
  auto steps = static_cast<std::size_t>(window.rows());
  if (steps == 0) throw ArgumentError("window must have at least one timestep");
  if (!window.allFinite()) throw ValidationError("window values must be finite");

  bool dropping = frozen != nullptr
                      ? !frozen->mask1.empty()
                      : (mode == Mode::kTrain && model.dropout_p > 0.0);

  // Copied up front so `cache` may alias `frozen`.
  std::vector<Eigen::VectorXd> frozen_mask1;
  Eigen::VectorXd frozen_mask2;
  if (frozen != nullptr && dropping) {
    if (frozen->mask1.size() != steps) {
      throw ArgumentError("frozen dropout factors do not match the window length");
    }
    frozen_mask1 = frozen->mask1;
    frozen_mask2 = frozen->mask2;
  }

  ForwardCache local;
  ForwardCache& cc = cache != nullptr ? *cache : local;
  cc = ForwardCache{};
  cc.mode = mode;
  cc.layer1.resize(steps);
  cc.layer2.resize(steps);
  if (dropping) cc.mask1.resize(steps);

  LstmState s1 = LstmState::zero(model.layer1.units());
  std::vector<Eigen::VectorXd> h1(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    cell_step(model.layer1, window.row(static_cast<Eigen::Index>(t)).transpose(), s1,
              cc.layer1[t]);
    if (dropping) {
      cc.mask1[t] = frozen != nullptr ? frozen_mask1[t]
                                      : draw_mask(model.layer1.units(), model.dropout_p, *gen);
      h1[t] = cc.layer1[t].h.cwiseProduct(cc.mask1[t]);
    } else {
      h1[t] = cc.layer1[t].h;
    }
  }

  LstmState s2 = LstmState::zero(model.layer2.units());
  for (std::size_t t = 0; t < steps; ++t) cell_step(model.layer2, h1[t], s2, cc.layer2[t]);

  Eigen::VectorXd h2 = cc.layer2.back().h;
  if (dropping) {
    cc.mask2 = frozen != nullptr ? frozen_mask2
                                 : draw_mask(model.layer2.units(), model.dropout_p, *gen);
    h2 = h2.cwiseProduct(cc.mask2);
  }
  cc.head_in = h2;
  cc.head_act = h2.cwiseMax(0.0);
  cc.prediction = model.head_w.dot(cc.head_act) + model.head_b;
  return cc.prediction;
}

// Reverse pass over one layer; dh_inject[t] is the loss gradient arriving at
// h[t] from above. Returns the gradients with respect to the layer inputs.
std::vector<Eigen::VectorXd> bptt_layer(const LstmLayerParams& params,
                                        const std::vector<ForwardCache::Step>& steps,
                                        const std::vector<Eigen::VectorXd>& dh_inject,
                                        LstmLayerParams& grads) {
  Eigen::Index u = params.units();
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(u);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(u);
  std::vector<Eigen::VectorXd> dx(steps.size());

  for (std::size_t t = steps.size(); t-- > 0;) {
    const auto& s = steps[t];
    if (dh_inject[t].size() > 0) dh += dh_inject[t];

    Eigen::VectorXd d_o = dh.cwiseProduct(s.tanh_c);
    dc += dh.cwiseProduct(s.gates.o)
              .cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
    Eigen::VectorXd d_i = dc.cwiseProduct(s.gates.g);
    Eigen::VectorXd d_g = dc.cwiseProduct(s.gates.i);
    Eigen::VectorXd d_f = dc.cwiseProduct(s.c_prev);
    Eigen::VectorXd dc_prev = dc.cwiseProduct(s.gates.f);

    std::array<Eigen::VectorXd, 4> dz;
    dz[kInput] = d_i.cwiseProduct(s.gates.i.cwiseProduct((1.0 - s.gates.i.array()).matrix()));
    dz[kForget] = d_f.cwiseProduct(s.gates.f.cwiseProduct((1.0 - s.gates.f.array()).matrix()));
    dz[kOutput] = d_o.cwiseProduct(s.gates.o.cwiseProduct((1.0 - s.gates.o.array()).matrix()));
    dz[kCell] = d_g.cwiseProduct((1.0 - s.gates.g.array().square()).matrix());

    Eigen::VectorXd dx_t = Eigen::VectorXd::Zero(params.input_width());
    Eigen::VectorXd dh_prev = Eigen::VectorXd::Zero(u);
    for (int q = 0; q < 4; ++q) {
      grads.w_x[q].noalias() += dz[q] * s.x.transpose();
      grads.w_h[q].noalias() += dz[q] * s.h_prev.transpose();
      grads.b[q] += dz[q];
      dx_t.noalias() += params.w_x[q].transpose() * dz[q];
      dh_prev.noalias() += params.w_h[q].transpose() * dz[q];
    }
    dx[t] = std::move(dx_t);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return dx;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index r_want, Eigen::Index c_want) {
  if (static_cast<Eigen::Index>(rows.size()) != r_want) {
    throw DecodeError("weight matrix has wrong row count");
  }
  Eigen::MatrixXd m(r_want, c_want);
  for (Eigen::Index r = 0; r < r_want; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != c_want) {
      throw DecodeError("weight matrix has wrong column count");
    }
    for (Eigen::Index c = 0; c < c_want; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

json layer_to_json(const LstmLayerParams& p) {
  json wx, wh, b;
  for (int q = 0; q < 4; ++q) {
    wx[kGateNames[q]] = matrix_to_json(p.w_x[q]);
    wh[kGateNames[q]] = matrix_to_json(p.w_h[q]);
    json bias = json::array();
    for (Eigen::Index i = 0; i < p.b[q].size(); ++i) bias.push_back(p.b[q](i));
    b[kGateNames[q]] = std::move(bias);
  }
  return json{{"units", p.units()}, {"input_width", p.input_width()},
              {"w_x", std::move(wx)}, {"w_h", std::move(wh)}, {"b", std::move(b)}};
}

LstmLayerParams layer_from_json(const json& obj) {
  auto u = obj.at("units").get<Eigen::Index>();
  auto d = obj.at("input_width").get<Eigen::Index>();
  LstmLayerParams p;
  for (int q = 0; q < 4; ++q) {
    p.w_x[q] = matrix_from_json(obj.at("w_x").at(kGateNames[q]), u, d);
    p.w_h[q] = matrix_from_json(obj.at("w_h").at(kGateNames[q]), u, u);
    const auto& bias = obj.at("b").at(kGateNames[q]);
    if (static_cast<Eigen::Index>(bias.size()) != u) throw DecodeError("bias has wrong length");
    p.b[q].resize(u);
    for (Eigen::Index i = 0; i < u; ++i) p.b[q](i) = bias[static_cast<std::size_t>(i)];
  }
  return p;
}

}  // namespace

LstmState LstmState::zero(Eigen::Index units) {
  return {Eigen::VectorXd::Zero(units), Eigen::VectorXd::Zero(units)};
}

void validate(const ModelSpec& spec) {
  if (spec.input_width < 1) throw ArgumentError("input_width must be >= 1");
  if (spec.layer1_units < 1 || spec.layer2_units < 1) throw ArgumentError("units must be >= 1");
  if (!(spec.dropout_p >= 0.0 && spec.dropout_p < 1.0)) {
    throw ArgumentError("dropout_p must be in [0, 1)");
  }
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (cfg.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(cfg.rms_decay >= 0.0 && cfg.rms_decay < 1.0)) {
    throw ArgumentError("rms_decay must be in [0, 1)");
  }
  if (!(cfg.rms_eps > 0.0)) throw ArgumentError("rms_eps must be > 0");
}

std::pair<LstmState, GateActivations> lstm_cell_forward(const LstmLayerParams& params,
                                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                                        const LstmState& prev) {
  check_layer_shapes(params);
  if (x.size() != params.input_width()) throw ArgumentError("input width mismatch");
  if (prev.h.size() != params.units() || prev.c.size() != params.units()) {
    throw ArgumentError("state size mismatch");
  }
  if (!x.allFinite() || !prev.h.allFinite() || !prev.c.allFinite()) {
    throw ValidationError("cell inputs must be finite");
  }
  ForwardCache::Step step;
  LstmState state = prev;
  cell_step(params, x, state, step);
  return {state, step.gates};
}

double lstm_forward(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window,
                    Mode mode, rng::SplitMix64& gen, ForwardCache* cache) {
  return run_forward(model, window, mode, &gen, nullptr, cache);
}

double lstm_forward_frozen(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window,
                           const ForwardCache& masks, ForwardCache* cache) {
  return run_forward(model, window, Mode::kTrain, nullptr, &masks, cache);
}

LstmGradients LstmGradients::zero_like(const LstmModel& model) {
  LstmGradients g;
  g.layer1 = zero_layer(model.layer1.units(), model.layer1.input_width());
  g.layer2 = zero_layer(model.layer2.units(), model.layer2.input_width());
  g.head_w = Eigen::VectorXd::Zero(model.head_w.size());
  g.head_b = 0.0;
  return g;
}

void LstmGradients::add(const LstmGradients& other) {
  for (int q = 0; q < 4; ++q) {
    layer1.w_x[q] += other.layer1.w_x[q];
    layer1.w_h[q] += other.layer1.w_h[q];
    layer1.b[q] += other.layer1.b[q];
    layer2.w_x[q] += other.layer2.w_x[q];
    layer2.w_h[q] += other.layer2.w_h[q];
    layer2.b[q] += other.layer2.b[q];
  }
  head_w += other.head_w;
  head_b += other.head_b;
}

double LstmGradients::squared_norm() const {
  double s = 0.0;
  for (int q = 0; q < 4; ++q) {
    s += layer1.w_x[q].squaredNorm() + layer1.w_h[q].squaredNorm() + layer1.b[q].squaredNorm();
    s += layer2.w_x[q].squaredNorm() + layer2.w_h[q].squaredNorm() + layer2.b[q].squaredNorm();
  }
  s += head_w.squaredNorm() + head_b * head_b;
  return s;
}

void LstmGradients::scale(double factor) {
  for (int q = 0; q < 4; ++q) {
    layer1.w_x[q] *= factor;
    layer1.w_h[q] *= factor;
    layer1.b[q] *= factor;
    layer2.w_x[q] *= factor;
    layer2.w_h[q] *= factor;
    layer2.b[q] *= factor;
  }
  head_w *= factor;
  head_b *= factor;
}

LstmGradients lstm_backward(const LstmModel& model, const ForwardCache& cache,
                            double d_prediction) {
  if (cache.layer1.empty() || cache.layer1.size() != cache.layer2.size()) {
    throw ArgumentError("cache does not hold a forward pass");
  }
  if (cache.layer1[0].x.size() != model.input_width() ||
      cache.layer1[0].h.size() != model.layer1.units() ||
      cache.layer2[0].h.size() != model.layer2.units()) {
    throw ArgumentError("cache does not match the model shapes");
  }

  LstmGradients grads = LstmGradients::zero_like(model);
  std::size_t steps = cache.layer1.size();

  grads.head_b = d_prediction;
  grads.head_w = d_prediction * cache.head_act;

  Eigen::VectorXd d_act = d_prediction * model.head_w;
  Eigen::VectorXd d_head_in =
      (cache.head_in.array() > 0.0).select(d_act.array(), 0.0).matrix();
  Eigen::VectorXd d_h2_last =
      cache.mask2.size() > 0 ? d_head_in.cwiseProduct(cache.mask2).eval() : d_head_in;

  std::vector<Eigen::VectorXd> inject2(steps);
  inject2.back() = d_h2_last;
  std::vector<Eigen::VectorXd> d_h1 = bptt_layer(model.layer2, cache.layer2, inject2, grads.layer2);

  if (!cache.mask1.empty()) {
    for (std::size_t t = 0; t < steps; ++t) d_h1[t] = d_h1[t].cwiseProduct(cache.mask1[t]);
  }
  bptt_layer(model.layer1, cache.layer1, d_h1, grads.layer1);
  return grads;
}

RmsState RmsState::zero_like(const LstmModel& model) {
  RmsState s;
  s.layer1 = zero_layer(model.layer1.units(), model.layer1.input_width());
  s.layer2 = zero_layer(model.layer2.units(), model.layer2.input_width());
  s.head_w = Eigen::VectorXd::Zero(model.head_w.size());
  s.head_b = 0.0;
  return s;
}

void rmsprop_step(LstmModel& params, const LstmGradients& grads, RmsState& state,
                  const TrainConfig& cfg) {
  validate(cfg);
  if (params.layer1.units() != grads.layer1.units() ||
      params.layer2.units() != grads.layer2.units() ||
      params.head_w.size() != grads.head_w.size()) {
    throw ArgumentError("gradient shapes do not match the parameters");
  }
  double rho = cfg.rms_decay;
  auto update = [&](auto& theta, const auto& g, auto& s) {
    s = rho * s.array() + (1.0 - rho) * g.array().square();
    theta.array() -= cfg.lr * g.array() / (s.array().sqrt() + cfg.rms_eps);
  };
  zip_layer(params.layer1, grads.layer1, state.layer1, update);
  zip_layer(params.layer2, grads.layer2, state.layer2, update);
  update(params.head_w, grads.head_w, state.head_w);
  state.head_b = rho * state.head_b + (1.0 - rho) * grads.head_b * grads.head_b;
  params.head_b -= cfg.lr * grads.head_b / (std::sqrt(state.head_b) + cfg.rms_eps);
}

LstmModel init_model(const ModelSpec& spec, rng::SplitMix64& gen) {
  validate(spec);
  auto uniform_fill = [&gen](Eigen::MatrixXd& m, double bound) {
    // column-major element order, one draw per coefficient
    for (double* p = m.data(); p != m.data() + m.size(); ++p) {
      *p = (2.0 * gen.next_double() - 1.0) * bound;
    }
  };
  auto init_layer = [&](Eigen::Index units, Eigen::Index width) {
    LstmLayerParams p = zero_layer(units, width);
    double bound_x = std::sqrt(6.0 / static_cast<double>(width + units));
    double bound_h = std::sqrt(6.0 / static_cast<double>(units + units));
    for (int q = 0; q < 4; ++q) uniform_fill(p.w_x[q], bound_x);
    for (int q = 0; q < 4; ++q) uniform_fill(p.w_h[q], bound_h);
    p.b[kForget].setOnes();
    return p;
  };

  LstmModel model;
  model.layer1 = init_layer(spec.layer1_units, spec.input_width);
  model.layer2 = init_layer(spec.layer2_units, spec.layer1_units);
  model.head_w.resize(spec.layer2_units);
  double bound_head = std::sqrt(6.0 / static_cast<double>(spec.layer2_units + 1));
  for (Eigen::Index i = 0; i < model.head_w.size(); ++i) {
    model.head_w(i) = (2.0 * gen.next_double() - 1.0) * bound_head;
  }
  model.head_b = 0.0;
  model.dropout_p = spec.dropout_p;
  return model;
}

std::pair<LstmModel, TrainHistory> train_lstm(const preprocess::WindowedDataset& train,
                                              const preprocess::WindowedDataset& val,
                                              const ModelSpec& spec, const TrainConfig& cfg) {
  validate(spec);
  validate(cfg);
  if (train.size() == 0) throw ArgumentError("training set must not be empty");
  if (train.windows[0].cols() != spec.input_width) {
    throw ArgumentError("window width does not match the model spec");
  }

  rng::SplitMix64 gen(cfg.seed);
  LstmModel model = init_model(spec, gen);
  RmsState rms = RmsState::zero_like(model);
  TrainHistory history;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::shuffle(order, gen);
    double loss_sum = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t bm = std::min(cfg.batch_size, order.size() - start);
      LstmGradients grads = LstmGradients::zero_like(model);
      double sq = 0.0;
      for (std::size_t k = start; k < start + bm; ++k) {
        std::size_t idx = order[k];
        ForwardCache cache;
        double pred = lstm_forward(model, train.windows[idx], Mode::kTrain, gen, &cache);
        double err = pred - train.targets(static_cast<Eigen::Index>(idx));
        sq += err * err;
        grads.add(lstm_backward(model, cache, err / static_cast<double>(bm)));
      }
      double batch_loss = sq / (2.0 * static_cast<double>(bm));
      if (!std::isfinite(batch_loss)) throw TrainingError("training loss diverged", epoch);

      if (cfg.clip_norm > 0.0) {
        double norm = std::sqrt(grads.squared_norm());
        if (norm > cfg.clip_norm) {
          grads.scale(cfg.clip_norm / norm);
          ++history.clipped_batches;
        }
      }
      rmsprop_step(model, grads, rms, cfg);
      loss_sum += batch_loss;
      ++batches;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(batches);
    if (val.size() > 0) {
      double sq = 0.0;
      for (std::size_t k = 0; k < val.size(); ++k) {
        double err = predict(model, val.windows[k]) - val.targets(static_cast<Eigen::Index>(k));
        sq += err * err;
      }
      stats.val_loss = sq / (2.0 * static_cast<double>(val.size()));
      if (!std::isfinite(stats.val_loss)) throw TrainingError("validation loss diverged", epoch);
    } else {
      stats.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    history.epochs.push_back(stats);
  }
  return {std::move(model), std::move(history)};
}

double predict(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window) {
  rng::SplitMix64 unused(0);  // eval mode draws nothing
  return run_forward(model, window, Mode::kEval, &unused, nullptr, nullptr);
}

std::string to_json(const LstmModel& model, const TrainConfig& cfg) {
  json obj{{"format", "soilwave-lstm"},
           {"version", 1},
           {"input_width", model.input_width()},
           {"layer1", layer_to_json(model.layer1)},
           {"layer2", layer_to_json(model.layer2)},
           {"head_b", model.head_b},
           {"dropout_p", model.dropout_p},
           {"train_config",
            {{"lr", cfg.lr},
             {"epochs", cfg.epochs},
             {"batch_size", cfg.batch_size},
             {"seed", cfg.seed},
             {"rms_decay", cfg.rms_decay},
             {"rms_eps", cfg.rms_eps},
             {"clip_norm", cfg.clip_norm}}}};
  json head = json::array();
  for (Eigen::Index i = 0; i < model.head_w.size(); ++i) head.push_back(model.head_w(i));
  obj["head_w"] = std::move(head);
  return obj.dump();
}

std::pair<LstmModel, TrainConfig> lstm_model_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed model document: ") + e.what());
  }
  if (obj.value("format", "") != "soilwave-lstm") throw FormatError("not an lstm model document");
  if (obj.value("version", 0) != 1) throw FormatError("unsupported lstm model version");

  LstmModel model;
  model.layer1 = layer_from_json(obj.at("layer1"));
  model.layer2 = layer_from_json(obj.at("layer2"));
  const auto& head = obj.at("head_w");
  model.head_w.resize(static_cast<Eigen::Index>(head.size()));
  for (Eigen::Index i = 0; i < model.head_w.size(); ++i) {
    model.head_w(i) = head[static_cast<std::size_t>(i)].get<double>();
  }
  model.head_b = obj.at("head_b").get<double>();
  model.dropout_p = obj.at("dropout_p").get<double>();
  if (model.layer2.input_width() != model.layer1.units()) {
    throw DecodeError("layer 2 input width does not match layer 1 units");
  }
  if (model.head_w.size() != model.layer2.units()) {
    throw DecodeError("head width does not match layer 2 units");
  }

  TrainConfig cfg;
  if (obj.contains("train_config")) {
    const auto& t = obj.at("train_config");
    cfg.lr = t.value("lr", cfg.lr);
    cfg.epochs = t.value("epochs", cfg.epochs);
    cfg.batch_size = t.value("batch_size", cfg.batch_size);
    cfg.seed = t.value("seed", cfg.seed);
    cfg.rms_decay = t.value("rms_decay", cfg.rms_decay);
    cfg.rms_eps = t.value("rms_eps", cfg.rms_eps);
    cfg.clip_norm = t.value("clip_norm", cfg.clip_norm);
  }
  return {std::move(model), cfg};
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    out += std::to_string(e + 1);
    out.push_back(',');
    out += detail::format_double(history.epochs[e].train_loss);
    out.push_back(',');
    out += detail::format_double(history.epochs[e].val_loss);
    out.push_back('\n');
  }
  return out;
}

}  // namespace soilwave::lstm
