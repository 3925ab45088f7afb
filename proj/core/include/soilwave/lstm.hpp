#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "soilwave/preprocess.hpp"
#include "soilwave/rng.hpp"

namespace soilwave::lstm {

/// Gate index used everywhere a gate set is stored: input, forget, output,
/// candidate ("main") layer.
enum Gate : int { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};

/// Weights of one recurrent layer: per gate, an input matrix (units x
/// input_width), a recurrent matrix (units x units) and a bias vector.
struct LstmLayerParams {
  std::array<Eigen::MatrixXd, 4> w_x;
  std::array<Eigen::MatrixXd, 4> w_h;
  std::array<Eigen::VectorXd, 4> b;

  Eigen::Index units() const noexcept { return w_x[0].rows(); }
  Eigen::Index input_width() const noexcept { return w_x[0].cols(); }
};

struct LstmState {
  Eigen::VectorXd h;  // short-term state, each component in (-1, 1)
  Eigen::VectorXd c;  // long-term state

  static LstmState zero(Eigen::Index units);
};

struct GateActivations {
  Eigen::VectorXd i, f, o, g;
};

/// i, f, o = logistic(Wx x + Wh h + b); g = tanh(...);
/// c = f (*) c_prev + i (*) g; h = o (*) tanh(c).
/// Gate values are returned for backpropagation caching.
std::pair<LstmState, GateActivations> lstm_cell_forward(const LstmLayerParams& params,
                                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                                        const LstmState& prev);

/// Two stacked recurrent layers, a rectified-linear squeeze on the second
/// layer's final state and a scalar affine head.
struct LstmModel {
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  Eigen::VectorXd head_w;
  double head_b = 0.0;
  double dropout_p = 0.2;  // in [0, 1)

  Eigen::Index input_width() const noexcept { return layer1.input_width(); }
};

struct ModelSpec {
  Eigen::Index input_width = 1;
  Eigen::Index layer1_units = 32;
  Eigen::Index layer2_units = 32;
  double dropout_p = 0.2;
};

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
};

void validate(const ModelSpec& spec);
void validate(const TrainConfig& cfg);

enum class Mode { kTrain, kEval };

/// Everything the backward pass needs: per-step inputs, gates and states for
/// both layers, the inverted-dropout factors that were applied, and the head
/// intermediates. Masks hold multiplicative factors (0 or 1/(1-p)).
struct ForwardCache {
  struct Step {
    Eigen::VectorXd x, h_prev, c_prev;
    GateActivations gates;
    Eigen::VectorXd c, h, tanh_c;
  };
  std::vector<Step> layer1;
  std::vector<Step> layer2;
  std::vector<Eigen::VectorXd> mask1;  // per step, empty in eval mode or p == 0
  Eigen::VectorXd mask2;               // final layer-2 output, empty likewise
  Eigen::VectorXd head_in;             // layer-2 final h after dropout
  Eigen::VectorXd head_act;            // rectified head input
  double prediction = 0.0;
  Mode mode = Mode::kEval;
};

/// Unrolls both layers over the window (steps x input_width, one row per
/// timestep) from zero initial state. In train mode with dropout_p > 0, a
/// fresh mask is drawn per timestep for layer 1 (right after h1[t]) and one
/// mask for the final layer-2 output; eval mode draws nothing and applies
/// identity. Returns the scalar prediction.
double lstm_forward(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window,
                    Mode mode, rng::SplitMix64& gen, ForwardCache* cache = nullptr);

/// Same forward math but reusing the dropout factors recorded in `masks`
/// instead of drawing; used by the finite-difference checks.
double lstm_forward_frozen(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window,
                           const ForwardCache& masks, ForwardCache* cache = nullptr);

/// Gradient container, same shapes as the model.
struct LstmGradients {
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  Eigen::VectorXd head_w;
  double head_b = 0.0;

  static LstmGradients zero_like(const LstmModel& model);
  void add(const LstmGradients& other);
  double squared_norm() const;
  void scale(double factor);
};

/// Exact reverse-mode gradients of d_prediction * prediction with respect to
/// every parameter, propagated through the cached activations and dropout
/// factors.
LstmGradients lstm_backward(const LstmModel& model, const ForwardCache& cache,
                            double d_prediction);

/// Squared-gradient running averages, same shapes as the model.
struct RmsState {
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  Eigen::VectorXd head_w;
  double head_b = 0.0;

  static RmsState zero_like(const LstmModel& model);
};

/// s <- decay*s + (1-decay)*g^2; theta <- theta - lr*g/(sqrt(s) + eps),
/// element-wise.
void rmsprop_step(LstmModel& params, const LstmGradients& grads, RmsState& state,
                  const TrainConfig& cfg);

/// Uniform +-sqrt(6/(fan_in+fan_out)) weights from the seeded stream, in a
/// pinned draw order (layer 1 then 2; per gate i,f,o,g: w_x, then w_h, then
/// head_w; column-major element order). Forget-gate biases start at 1, every
/// other bias at 0.
LstmModel init_model(const ModelSpec& spec, rng::SplitMix64& gen);

struct EpochStats {
  double train_loss = 0.0;  // mean of (1/2m)-convention batch losses
  double val_loss = 0.0;    // same convention on the validation windows
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t clipped_batches = 0;
};

/// Mini-batch training: seeded shuffle per epoch, one optimizer step per
/// batch with d_loss/d_pred = (pred - y)/m, optional global-norm clipping.
/// Deterministic for a fixed (data, spec, cfg, seed). Throws TrainingError
/// (with the epoch) when the loss stops being finite.
std::pair<LstmModel, TrainHistory> train_lstm(const preprocess::WindowedDataset& train,
                                              const preprocess::WindowedDataset& val,
                                              const ModelSpec& spec, const TrainConfig& cfg);

double predict(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& window);

/// Versioned JSON model document: shapes, row-major weight arrays, dropout
/// probability and the training config used.
std::string to_json(const LstmModel& model, const TrainConfig& cfg);
std::pair<LstmModel, TrainConfig> lstm_model_from_json(const std::string& text);

std::string history_to_csv(const TrainHistory& history);

}  // namespace soilwave::lstm
