#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lidkit/manifolds.hpp"
#include "lidkit/score_field.hpp"

namespace lidkit {

enum class Activation : std::uint32_t { kSilu = 0, kTanh = 1, kIdentity = 2 };
enum class SigmaEmbedding : std::uint32_t { kScalar = 0, kSinusoidal = 1 };
enum class Target : std::uint32_t { kEpsilon = 0, kVelocity = 1 };

struct MlpConfig {
  Eigen::Index input_dim = 1;  // ambient dimension n
  Eigen::Index width = 256;
  int depth = 4;
  Activation activation = Activation::kSilu;
  SigmaEmbedding embedding = SigmaEmbedding::kSinusoidal;
  int frequencies = 16;
  Target target = Target::kEpsilon;

  void validate() const;
  Eigen::Index embed_dim() const;
  /// Width of the network input: point coordinates followed by the sigma embedding.
  Eigen::Index in_dim() const { return input_dim + embed_dim(); }
};

/// Features of log(sigma) appended to the network input.
Vector sigma_features(const MlpConfig& cfg, double sigma);

/// Skip-connection MLP. With u = [x~; emb(sigma)]:
///   h_0 = act(W_0 u + b_0)
///   h_l = act(W_l h_{l-1} + b_l) + S_l u      (l = 1 .. depth-1)
///   out = W_out h_{depth-1} + b_out
/// All parameters live in one flat vector, laid out layer by layer as
/// W_l, b_l, S_l (col-major) followed by W_out, b_out.
class MlpModel {
 public:
  explicit MlpModel(MlpConfig cfg);

  /// Fan-in scaled Gaussian weights, zero biases, zero output layer.
  static MlpModel initialized(const MlpConfig& cfg, std::uint64_t seed);

  const MlpConfig& config() const { return cfg_; }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  /// Noise-level range seen in training; forward() warns outside it.
  double trained_sigma_min = 0.0;
  double trained_sigma_max = 0.0;

  /// Raw predictions (target parameterization) for the columns of `noised`,
  /// column j conditioned on sigmas[j].
  Matrix forward(const Matrix& noised, const Vector& sigmas) const;
  Vector forward(const Vector& noised, double sigma) const;

  /// Mean over columns of |target - prediction|^2 and, if grad is non-null,
  /// its exact gradient with respect to params().
  double regression_loss(const Matrix& noised, const Vector& sigmas, const Matrix& targets, Vector* grad) const;

  /// Forward-mode directional derivatives of the prediction with respect to
  /// the point coordinates, one per column of dirs.
  Matrix input_jvp(const Vector& noised, double sigma, const Matrix& dirs) const;

  // Parameter views.
  struct Block {
    Eigen::Index offset = -1;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };
  struct Layer {
    Block weight, bias, skip;  // skip.offset == -1 on layer 0
  };
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& output_layer() const { return out_; }
  Eigen::Map<const Matrix> view(const Block& b) const { return {params_.data() + b.offset, b.rows, b.cols}; }
  Eigen::Map<Matrix> view(const Block& b) { return {params_.data() + b.offset, b.rows, b.cols}; }

 private:
  struct Tape;
  Matrix inputs(const Matrix& noised, const Vector& sigmas) const;
  Matrix run(const Matrix& u, Tape* tape) const;

  MlpConfig cfg_;
  std::vector<Layer> layers_;
  Layer out_;
  Vector params_;
};

/// Converts a velocity prediction to a noise prediction for the rectified
/// flow path x~ = (1 - sigma) x + sigma eps: eps = (1 - sigma) v + x~.
Vector to_epsilon(const MlpConfig& cfg, const Vector& velocity, const Vector& noised, double sigma);

/// One training example per column: clean point, injected noise, noise level.
struct DenoisingBatch {
  Matrix clean;  // n x B
  Matrix noise;  // n x B
  Vector sigma;  // B
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Denoising loss of the batch (mean over members) and its exact parameter
/// gradient. Epsilon target: |eps - eps_theta(x + sigma eps)|^2. Velocity
/// target: |(eps - x) - v_theta((1 - sigma) x + sigma eps)|^2.
LossGrad loss_and_grad(const MlpModel& model, const DenoisingBatch& batch, int threads = 1);

struct TrainConfig {
  int batches = 20000;
  int batch_size = 100;
  double learning_rate = 1e-3;
  double final_learning_rate = 1e-5;
  double sigma_min = 0.005;
  double sigma_max = 1.0;
  std::uint64_t seed = 0;
  int threads = 0;
  double divergence_threshold = 1e6;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;
  std::vector<double> lr_trace;
  double initial_window_mean = 0.0;
  double final_window_mean = 0.0;
};

/// Learning rate at step t of `total` under cosine annealing.
double cosine_lr(const TrainConfig& cfg, int step);

/// Adam on the denoising loss with log-uniform sigma per batch member.
/// Throws Error(kDiverged) when the batch loss exceeds the threshold or
/// stops being finite.
TrainResult train(MlpModel model, const PointCloud& cloud, const TrainConfig& cfg);

/// ScoreField over a trained model; converts velocity predictions when needed.
class MlpField final : public ScoreField {
 public:
  explicit MlpField(MlpModel model) : model_(std::move(model)) {}
  const MlpModel& model() const { return model_; }

  Eigen::Index dim() const override { return model_.config().input_dim; }
  std::string name() const override { return "mlp"; }
  bool has_jvp() const override { return true; }
  Vector epsilon(const Vector& noised, double sigma) const override;
  Matrix epsilon_batch(const Matrix& noised, double sigma) const override;
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const override;
  double signal_scale(double sigma) const override {
    return model_.config().target == Target::kVelocity ? 1.0 - sigma : 1.0;
  }

 private:
  MlpModel model_;
};

// Checkpoint: "LIDM1", config block, trained sigma range, u64 parameter count,
// f64 parameters in layer order; all little-endian.
void write_checkpoint(const MlpModel& model, const std::string& path);
MlpModel read_checkpoint(const std::string& path);

}  // namespace lidkit
