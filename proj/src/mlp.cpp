#include "lidkit/mlp.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "lidkit/parallel.hpp"

namespace lidkit {

namespace {

using Array = Eigen::ArrayXXd;

Array activate(Activation act, const Matrix& a) {
  switch (act) {
    case Activation::kSilu:
      return a.array() / (1.0 + (-a.array()).exp());
    case Activation::kTanh:
      return a.array().tanh();
    case Activation::kIdentity:
      return a.array();
  }
  return a.array();
}

Array activate_grad(Activation act, const Matrix& a) {
  switch (act) {
    case Activation::kSilu: {
      const Array sig = 1.0 / (1.0 + (-a.array()).exp());
      return sig * (1.0 + a.array() * (1.0 - sig));
    }
    case Activation::kTanh:
      return 1.0 - a.array().tanh().square();
    case Activation::kIdentity:
      return Array::Ones(a.rows(), a.cols());
  }
  return Array::Ones(a.rows(), a.cols());
}

void warn_sigma_range(const MlpModel& m, double sigma) {
  static std::atomic<bool> warned{false};
  if (m.trained_sigma_max <= 0) return;
  if (sigma < m.trained_sigma_min * (1 - 1e-12) || sigma > m.trained_sigma_max * (1 + 1e-12)) {
    if (!warned.exchange(true))
      std::cerr << "warning: sigma=" << sigma << " outside trained range [" << m.trained_sigma_min << ", "
                << m.trained_sigma_max << "]\n";
  }
}

}  // namespace

void MlpConfig::validate() const {
  require(input_dim >= 1, ErrorKind::kParam, "mlp: input dimension must be >= 1");
  require(width >= 1 && depth >= 1, ErrorKind::kParam, "mlp: width and depth must be >= 1");
  require(embedding == SigmaEmbedding::kScalar || frequencies >= 1, ErrorKind::kParam,
          "mlp: sinusoidal embedding needs at least one frequency");
}

Eigen::Index MlpConfig::embed_dim() const {
  return embedding == SigmaEmbedding::kScalar ? 1 : 2 * static_cast<Eigen::Index>(frequencies);
}

Vector sigma_features(const MlpConfig& cfg, double sigma) {
  require(sigma > 0 && std::isfinite(sigma), ErrorKind::kDomain, "sigma must be positive and finite");
  const double t = std::log(sigma);
  if (cfg.embedding == SigmaEmbedding::kScalar) return Vector::Constant(1, t);
  // Frequencies spaced geometrically from 0.1 to 10 radians per unit log-sigma.
  const int k = cfg.frequencies;
  Vector f(2 * k);
  for (int i = 0; i < k; ++i) {
    const double freq = k == 1 ? 1.0 : 0.1 * std::pow(100.0, static_cast<double>(i) / (k - 1));
    f[i] = std::sin(freq * t);
    f[k + i] = std::cos(freq * t);
  }
  return f;
}

MlpModel::MlpModel(MlpConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Eigen::Index off = 0;
  auto take = [&](Eigen::Index rows, Eigen::Index cols) {
    Block b{off, rows, cols};
    off += rows * cols;
    return b;
  };
  const Eigen::Index in = cfg_.in_dim();
  for (int l = 0; l < cfg_.depth; ++l) {
    Layer layer;
    layer.weight = take(cfg_.width, l == 0 ? in : cfg_.width);
    layer.bias = take(cfg_.width, 1);
    if (l > 0) layer.skip = take(cfg_.width, in);
    layers_.push_back(layer);
  }
  out_.weight = take(cfg_.input_dim, cfg_.width);
  out_.bias = take(cfg_.input_dim, 1);
  params_ = Vector::Zero(off);
}

MlpModel MlpModel::initialized(const MlpConfig& cfg, std::uint64_t seed) {
  MlpModel m(cfg);
  std::uint64_t block = 0;
  auto fill = [&](const Block& b) {
    RngStream rng(seed, make_stream(stream_tag::kInit, block++));
    m.view(b) = gaussian_matrix(rng, b.rows, b.cols) / std::sqrt(static_cast<double>(b.cols));
  };
  for (const auto& layer : m.layers_) {
    fill(layer.weight);
    if (layer.skip.offset >= 0) fill(layer.skip);
  }
  return m;
}

struct MlpModel::Tape {
  Matrix u;
  std::vector<Matrix> pre;     // a_l
  std::vector<Matrix> hidden;  // h_l
};

Matrix MlpModel::inputs(const Matrix& noised, const Vector& sigmas) const {
  require(noised.rows() == cfg_.input_dim, ErrorKind::kShape, "mlp: input dimension mismatch");
  require(noised.cols() == sigmas.size(), ErrorKind::kShape, "mlp: one sigma per column required");
  require(noised.allFinite(), ErrorKind::kDomain, "mlp: non-finite input");
  Matrix u(cfg_.in_dim(), noised.cols());
  u.topRows(cfg_.input_dim) = noised;
  for (Eigen::Index j = 0; j < noised.cols(); ++j) u.col(j).tail(cfg_.embed_dim()) = sigma_features(cfg_, sigmas[j]);
  return u;
}

Matrix MlpModel::run(const Matrix& u, Tape* tape) const {
  Matrix h;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    Matrix a = view(layer.weight) * (l == 0 ? u : h);
    a.colwise() += view(layer.bias).col(0);
    Matrix next = activate(cfg_.activation, a).matrix();
    if (layer.skip.offset >= 0) next.noalias() += view(layer.skip) * u;
    if (tape) {
      tape->pre.push_back(std::move(a));
      tape->hidden.push_back(next);
    }
    h = std::move(next);
  }
  Matrix out = view(out_.weight) * h;
  out.colwise() += view(out_.bias).col(0);
  return out;
}

Matrix MlpModel::forward(const Matrix& noised, const Vector& sigmas) const { return run(inputs(noised, sigmas), nullptr); }

Vector MlpModel::forward(const Vector& noised, double sigma) const {
  return forward(Matrix(noised), Vector::Constant(1, sigma)).col(0);
}

double MlpModel::regression_loss(const Matrix& noised, const Vector& sigmas, const Matrix& targets, Vector* grad) const {
  require(targets.rows() == noised.rows() && targets.cols() == noised.cols(), ErrorKind::kShape,
          "mlp: target shape mismatch");
  const auto batch = static_cast<double>(noised.cols());
  require(batch > 0, ErrorKind::kParam, "mlp: empty batch");
  Tape tape;
  tape.u = inputs(noised, sigmas);
  const Matrix out = run(tape.u, grad ? &tape : nullptr);
  const Matrix resid = targets - out;
  const double loss = resid.squaredNorm() / batch;
  if (!grad) return loss;

  grad->setZero(params_.size());
  auto g = [&](const Block& b) { return Eigen::Map<Matrix>(grad->data() + b.offset, b.rows, b.cols); };

  const Matrix d_out = (-2.0 / batch) * resid;
  const std::size_t last = layers_.size() - 1;
  g(out_.weight).noalias() = d_out * tape.hidden[last].transpose();
  g(out_.bias) = d_out.rowwise().sum();
  Matrix dh = view(out_.weight).transpose() * d_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    if (layer.skip.offset >= 0) g(layer.skip).noalias() = dh * tape.u.transpose();
    const Matrix da = (dh.array() * activate_grad(cfg_.activation, tape.pre[l])).matrix();
    g(layer.weight).noalias() = da * (l == 0 ? tape.u : tape.hidden[l - 1]).transpose();
    g(layer.bias) = da.rowwise().sum();
    if (l > 0) dh.noalias() = view(layer.weight).transpose() * da;
  }
  return loss;
}

Matrix MlpModel::input_jvp(const Vector& noised, double sigma, const Matrix& dirs) const {
  require(dirs.rows() == cfg_.input_dim, ErrorKind::kShape, "mlp: direction dimension mismatch");
  const Matrix u = inputs(Matrix(noised), Vector::Constant(1, sigma));
  const Eigen::Index n = cfg_.input_dim;
  Vector h;
  Matrix dh;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const auto w = view(layer.weight);
    Vector a = (l == 0 ? Matrix(w * u) : Matrix(w * h)).col(0) + view(layer.bias).col(0);
    Matrix da = l == 0 ? Matrix(w.leftCols(n) * dirs) : Matrix(w * dh);
    const Vector slope = activate_grad(cfg_.activation, a).matrix().col(0);
    Vector next = activate(cfg_.activation, a).matrix().col(0);
    Matrix dnext = slope.asDiagonal() * da;
    if (layer.skip.offset >= 0) {
      const auto s = view(layer.skip);
      next += s * u.col(0);
      dnext.noalias() += s.leftCols(n) * dirs;
    }
    h = std::move(next);
    dh = std::move(dnext);
  }
  return view(out_.weight) * dh;
}

Vector to_epsilon(const MlpConfig& cfg, const Vector& velocity, const Vector& noised, double sigma) {
  require(cfg.target == Target::kVelocity, ErrorKind::kParam, "to_epsilon: model does not predict velocity");
  require(sigma > 0 && sigma < 1, ErrorKind::kDomain, "to_epsilon: sigma must lie in (0, 1)");
  return (1.0 - sigma) * velocity + noised;
}

LossGrad loss_and_grad(const MlpModel& model, const DenoisingBatch& batch, int threads) {
  const Eigen::Index size = batch.clean.cols();
  require(size > 0, ErrorKind::kParam, "loss_and_grad: empty batch");
  require(batch.noise.cols() == size && batch.sigma.size() == size, ErrorKind::kShape,
          "loss_and_grad: batch members disagree in count");
  const bool velocity = model.config().target == Target::kVelocity;

  Matrix noised(batch.clean.rows(), size);
  Matrix target(batch.clean.rows(), size);
  for (Eigen::Index j = 0; j < size; ++j) {
    const double s = batch.sigma[j];
    if (velocity) {
      noised.col(j) = (1.0 - s) * batch.clean.col(j) + s * batch.noise.col(j);
      target.col(j) = batch.noise.col(j) - batch.clean.col(j);
    } else {
      noised.col(j) = batch.clean.col(j) + s * batch.noise.col(j);
      target.col(j) = batch.noise.col(j);
    }
  }

  // Fixed-size chunks reduced in index order: the sum does not depend on how
  // many threads evaluate the chunks.
  constexpr Eigen::Index kChunk = 50;
  const std::size_t chunks = static_cast<std::size_t>((size + kChunk - 1) / kChunk);
  std::vector<LossGrad> parts(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const Eigen::Index start = static_cast<Eigen::Index>(c) * kChunk;
        const Eigen::Index len = std::min(kChunk, size - start);
        parts[c].loss = model.regression_loss(noised.middleCols(start, len), batch.sigma.segment(start, len),
                                              target.middleCols(start, len), &parts[c].grad);
        const double w = static_cast<double>(len) / static_cast<double>(size);
        parts[c].loss *= w;
        parts[c].grad *= w;
      },
      threads);
  LossGrad out{0.0, Vector::Zero(model.param_count())};
  for (const auto& p : parts) {
    out.loss += p.loss;
    out.grad += p.grad;
  }
  return out;
}

Vector MlpField::epsilon(const Vector& noised, double sigma) const {
  warn_sigma_range(model_, sigma);
  const Vector raw = model_.forward(noised, sigma);
  return model_.config().target == Target::kVelocity ? to_epsilon(model_.config(), raw, noised, sigma) : raw;
}

Matrix MlpField::epsilon_batch(const Matrix& noised, double sigma) const {
  warn_sigma_range(model_, sigma);
  Matrix raw = model_.forward(noised, Vector::Constant(noised.cols(), sigma));
  if (model_.config().target == Target::kVelocity) {
    require(sigma > 0 && sigma < 1, ErrorKind::kDomain, "to_epsilon: sigma must lie in (0, 1)");
    raw = (1.0 - sigma) * raw + noised;
  }
  return raw;
}

Matrix MlpField::epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const {
  warn_sigma_range(model_, sigma);
  Matrix j = model_.input_jvp(noised, sigma, dirs);
  if (model_.config().target == Target::kVelocity) j = (1.0 - sigma) * j + dirs;
  return j;
}

}  // namespace lidkit
