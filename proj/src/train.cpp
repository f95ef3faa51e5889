#include <algorithm>
#include <cmath>
#include <numbers>

#include "lidkit/mlp.hpp"

namespace lidkit {

void TrainConfig::validate() const {
  require(batches >= 1, ErrorKind::kParam, "train: batches must be >= 1");
  require(batch_size >= 1, ErrorKind::kParam, "train: batch size must be >= 1");
  require(sigma_min > 0 && sigma_max >= sigma_min, ErrorKind::kParam, "train: need 0 < sigma_min <= sigma_max");
  require(learning_rate > 0 && final_learning_rate >= 0, ErrorKind::kParam, "train: learning rates must be positive");
}

double cosine_lr(const TrainConfig& cfg, int step) {
  const double t = cfg.batches > 1 ? static_cast<double>(step) / (cfg.batches - 1) : 1.0;
  return cfg.final_learning_rate +
         0.5 * (cfg.learning_rate - cfg.final_learning_rate) * (1.0 + std::cos(std::numbers::pi * t));
}

TrainResult train(MlpModel model, const PointCloud& cloud, const TrainConfig& cfg) {
  cfg.validate();
  require(cloud.size() > 0, ErrorKind::kParam, "train: empty point cloud");
  require(cloud.dim() == model.config().input_dim, ErrorKind::kShape, "train: cloud dimension does not match model");

  double sigma_hi = cfg.sigma_max;
  if (model.config().target == Target::kVelocity) sigma_hi = std::min(sigma_hi, 0.999);
  const double log_lo = std::log(cfg.sigma_min);
  const double log_hi = std::log(sigma_hi);
  const Eigen::Index n = cloud.dim();

  // Adam moments.
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Vector m1 = Vector::Zero(model.param_count());
  Vector m2 = Vector::Zero(model.param_count());

  TrainResult result{model, {}, {}, 0.0, 0.0};
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.batches));
  DenoisingBatch batch{Matrix(n, cfg.batch_size), Matrix(n, cfg.batch_size), Vector(cfg.batch_size)};

  for (int step = 0; step < cfg.batches; ++step) {
    RngStream rng(cfg.seed, make_stream(stream_tag::kBatch, static_cast<std::uint64_t>(step)));
    for (int j = 0; j < cfg.batch_size; ++j) {
      const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(cloud.size())));
      batch.clean.col(j) = cloud.points.row(idx).transpose();
      batch.sigma[j] = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
      for (Eigen::Index i = 0; i < n; ++i) batch.noise(i, j) = rng.normal();
    }
    const LossGrad lg = loss_and_grad(result.model, batch, cfg.threads);
    if (!std::isfinite(lg.loss) || lg.loss > cfg.divergence_threshold)
      fail(ErrorKind::kDiverged, "training diverged at batch " + std::to_string(step) +
                                     " (loss=" + std::to_string(lg.loss) + ")");

    const double lr = cosine_lr(cfg, step);
    m1 = kBeta1 * m1 + (1 - kBeta1) * lg.grad;
    m2 = kBeta2 * m2 + (1 - kBeta2) * lg.grad.cwiseAbs2();
    const double c1 = 1 - std::pow(kBeta1, step + 1);
    const double c2 = 1 - std::pow(kBeta2, step + 1);
    result.model.params().array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);

    result.loss_trace.push_back(lg.loss);
    result.lr_trace.push_back(lr);
  }

  const auto window = static_cast<std::ptrdiff_t>(std::max(1, std::min(500, cfg.batches / 2)));
  const auto& tr = result.loss_trace;
  double head = 0, tail = 0;
  for (std::ptrdiff_t i = 0; i < window; ++i) {
    head += tr[static_cast<std::size_t>(i)];
    tail += tr[tr.size() - 1 - static_cast<std::size_t>(i)];
  }
  result.initial_window_mean = head / static_cast<double>(window);
  result.final_window_mean = tail / static_cast<double>(window);
  result.model.trained_sigma_min = cfg.sigma_min;
  result.model.trained_sigma_max = sigma_hi;
  return result;
}

}  // namespace lidkit
