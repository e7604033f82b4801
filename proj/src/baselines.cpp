#include "rkmp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rkmp/errors.hpp"
#include "rkmp/rng.hpp"
#include "rkmp/svd.hpp"

namespace rkmp {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void validate_config(const TrainConfig& cfg) {
  if (cfg.rank < 1) throw ContractError("TrainConfig: rank must be >= 1");
  if (cfg.epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
  if (cfg.learning_rate < 0.0) throw ContractError("TrainConfig: learning rate must be >= 0");
}

void require_pair(const DataSet& d, const char* where) {
  if (!d.Y.has_value()) throw ContractError(std::string(where) + ": dataset needs X and Y");
  if (d.Y->cols() != d.X.cols())
    throw DimensionError(std::string(where) + ": X and Y sample counts differ");
}

DenseMatrix fan_in_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  DenseMatrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return m;
}

// First-order update state shared by both optimizers.
struct ParamState {
  std::vector<double> m;
  std::vector<double> v;

  explicit ParamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

  void apply(std::span<double> theta, std::span<const double> grad, const TrainConfig& cfg,
             std::size_t t) {
    if (cfg.optimizer == Optimizer::plain_gd) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.learning_rate * grad[i];
      return;
    }
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  }
};

DenseMatrix take_columns(const DenseMatrix& m, const std::vector<std::size_t>& idx,
                         std::size_t begin, std::size_t end) {
  DenseMatrix out(m.rows(), end - begin);
  for (std::size_t c = begin; c < end; ++c) {
    const double* src = m.col(idx[c]);
    double* dst = out.col(c - begin);
    for (std::size_t i = 0; i < m.rows(); ++i) dst[i] = src[i];
  }
  return out;
}

double mse_loss(const DenseMatrix& pred, const DenseMatrix& target) {
  const double r = frobenius_norm(subtract(pred, target));
  return r * r / static_cast<double>(target.cols());
}

DenseMatrix forward_pass(const DenseMatrix& encoder, const DenseMatrix& decoder,
                         const std::optional<Vector>& bias, const DenseMatrix& x) {
  DenseMatrix pred = multiply(decoder, multiply(encoder, x));
  if (bias) {
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      double* pj = pred.col(j);
      for (std::size_t i = 0; i < pred.rows(); ++i) pj[i] += (*bias)[i];
    }
  }
  return pred;
}

struct Gradients {
  DenseMatrix d_encoder;
  DenseMatrix d_decoder;
  Vector d_bias;
};

Gradients mse_gradients(const DenseMatrix& encoder, const DenseMatrix& decoder,
                        const std::optional<Vector>& bias, const DenseMatrix& x,
                        const DenseMatrix& y) {
  const double j = static_cast<double>(x.cols());
  const DenseMatrix z = multiply(encoder, x);
  DenseMatrix resid = multiply(decoder, z);
  for (std::size_t c = 0; c < resid.cols(); ++c) {
    double* rc = resid.col(c);
    const double* yc = y.col(c);
    for (std::size_t i = 0; i < resid.rows(); ++i) {
      rc[i] += (bias ? (*bias)[i] : 0.0) - yc[i];
      rc[i] *= 2.0 / j;
    }
  }
  Gradients g{DenseMatrix(), DenseMatrix(), Vector()};
  g.d_decoder = multiply(resid, transpose(z));
  g.d_encoder = multiply(multiply(transpose(decoder), resid), transpose(x));
  if (bias) {
    g.d_bias.assign(resid.rows(), 0.0);
    for (std::size_t c = 0; c < resid.cols(); ++c) {
      const double* rc = resid.col(c);
      for (std::size_t i = 0; i < resid.rows(); ++i) g.d_bias[i] += rc[i];
    }
  }
  return g;
}

}  // namespace

TrainedMap train_encoder_decoder(const DataSet& d, const TrainConfig& cfg) {
  validate_config(cfg);
  require_pair(d, "train_encoder_decoder");
  const std::size_t n = d.X.rows();
  const std::size_t m = d.Y->rows();
  const std::size_t j = d.sample_count();

  Rng rng(cfg.seed);
  TrainedMap map;
  map.encoder = fan_in_init(cfg.rank, n, n, rng);
  map.decoder = fan_in_init(m, cfg.rank, cfg.rank, rng);
  if (cfg.affine) map.bias = Vector(m, 0.0);

  ParamState enc_state(map.encoder.data().size());
  ParamState dec_state(map.decoder.data().size());
  ParamState bias_state(cfg.affine ? m : 0);

  const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size >= j) ? j : cfg.batch_size;
  std::vector<std::size_t> idx(j);
  std::iota(idx.begin(), idx.end(), 0);

  std::size_t step = 0;
  map.loss_history.reserve(cfg.epochs + 1);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = mse_loss(forward_pass(map.encoder, map.decoder, map.bias, d.X), *d.Y);
    if (!std::isfinite(loss))
      throw DivergenceError("train_encoder_decoder: loss diverged at epoch " +
                            std::to_string(epoch));
    map.loss_history.push_back(loss);

    if (batch < j) {
      for (std::size_t i = j; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_u64() % i]);
    }
    for (std::size_t start = 0; start < j; start += batch) {
      const std::size_t stop = std::min(start + batch, j);
      const DenseMatrix xb = batch < j ? take_columns(d.X, idx, start, stop) : d.X;
      const DenseMatrix yb = batch < j ? take_columns(*d.Y, idx, start, stop) : *d.Y;
      const Gradients g = mse_gradients(map.encoder, map.decoder, map.bias, xb, yb);
      ++step;
      enc_state.apply(map.encoder.data(), g.d_encoder.data(), cfg, step);
      dec_state.apply(map.decoder.data(), g.d_decoder.data(), cfg, step);
      if (cfg.affine) bias_state.apply(*map.bias, g.d_bias, cfg, step);
    }
  }
  const double final_loss =
      mse_loss(forward_pass(map.encoder, map.decoder, map.bias, d.X), *d.Y);
  if (!std::isfinite(final_loss))
    throw DivergenceError("train_encoder_decoder: loss diverged at final epoch");
  map.loss_history.push_back(final_loss);
  if (final_loss > map.loss_history.front() && cfg.learning_rate > 0.0)
    throw DivergenceError("train_encoder_decoder: final loss exceeds initial loss");
  return map;
}

GradientCheckReport gradient_check(const TrainConfig& cfg, const DataSet& d) {
  require_pair(d, "gradient_check");
  const std::size_t n = d.X.rows();
  const std::size_t m = d.Y->rows();
  if (n > 6 || m > 6 || d.sample_count() > 10)
    throw ContractError("gradient_check: use small dims (n,m <= 6, J <= 10)");

  Rng rng(cfg.seed);
  DenseMatrix encoder = fan_in_init(cfg.rank, n, n, rng);
  DenseMatrix decoder = fan_in_init(m, cfg.rank, cfg.rank, rng);
  std::optional<Vector> bias;
  if (cfg.affine) {
    bias = Vector(m);
    for (double& b : *bias) b = rng.uniform(-0.5, 0.5);
  }

  const Gradients g = mse_gradients(encoder, decoder, bias, d.X, *d.Y);
  const double h = 1e-6;
  GradientCheckReport report;

  auto probe = [&](std::span<double> theta, std::span<const double> analytic,
                   const char* label) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = mse_loss(forward_pass(encoder, decoder, bias, d.X), *d.Y);
      theta[i] = saved - h;
      const double down = mse_loss(forward_pass(encoder, decoder, bias, d.X), *d.Y);
      theta[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-8});
      const double rel = std::fabs(fd - analytic[i]) / denom;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_coordinate = std::string(label) + "[" + std::to_string(i) + "]";
      }
    }
  };
  probe(encoder.data(), g.d_encoder.data(), "encoder");
  probe(decoder.data(), g.d_decoder.data(), "decoder");
  if (bias) probe(*bias, g.d_bias, "bias");

  report.passed = report.max_relative_error <= 1e-5;
  return report;
}

OptimalMap pca_baseline(const DataSet& d, std::size_t r) {
  if (d.sample_count() < 2) throw InsufficientSamplesError("pca_baseline: need J >= 2");
  ProblemSpec spec;
  spec.kind = {Task::autoencode, Form::affine};
  spec.signal = empirical_covariance(d, 0.0);
  spec.rank = r;
  OptimalMap map = optimal_autoencoder(spec);
  // Report the training-set reconstruction error, matching how the trained
  // baselines are scored.
  DenseMatrix pred = multiply(map.A, d.X);
  for (std::size_t c = 0; c < pred.cols(); ++c) {
    double* pc = pred.col(c);
    for (std::size_t i = 0; i < pred.rows(); ++i) pc[i] += (*map.bias)[i];
  }
  map.risk = mse_loss(pred, d.X);
  return map;
}

DenseMatrix TrainedNonlinearMap::apply(const DenseMatrix& x) const {
  DenseMatrix z = multiply(encoder, x);
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double* zj = z.col(j);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      zj[i] += encoder_bias[i];
      if (zj[i] < 0.0) zj[i] *= leaky_slope;
    }
  }
  DenseMatrix pred = multiply(decoder, z);
  for (std::size_t j = 0; j < pred.cols(); ++j) {
    double* pj = pred.col(j);
    for (std::size_t i = 0; i < pred.rows(); ++i) pj[i] += decoder_bias[i];
  }
  return pred;
}

TrainedNonlinearMap train_nonlinear_encoder_decoder(const DataSet& d, const NonlinearConfig& cfg) {
  validate_config(cfg.base);
  require_pair(d, "train_nonlinear_encoder_decoder");
  const std::size_t n = d.X.rows();
  const std::size_t m = d.Y->rows();
  const std::size_t j = d.sample_count();
  const std::size_t r = cfg.base.rank;

  Rng rng(cfg.base.seed);
  TrainedNonlinearMap map;
  map.leaky_slope = cfg.leaky_slope;
  map.encoder = fan_in_init(r, n, n, rng);
  map.encoder_bias.assign(r, 0.0);
  map.decoder = fan_in_init(m, r, r, rng);
  map.decoder_bias.assign(m, 0.0);

  ParamState enc_state(map.encoder.data().size());
  ParamState enc_bias_state(r);
  ParamState dec_state(map.decoder.data().size());
  ParamState dec_bias_state(m);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.base.epochs; ++epoch) {
    const double loss = mse_loss(map.apply(d.X), *d.Y);
    if (!std::isfinite(loss))
      throw DivergenceError("train_nonlinear_encoder_decoder: loss diverged at epoch " +
                            std::to_string(epoch));
    map.loss_history.push_back(loss);

    DenseMatrix z = multiply(map.encoder, d.X);
    DenseMatrix act = z;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      double* zc = z.col(c);
      double* ac = act.col(c);
      for (std::size_t i = 0; i < r; ++i) {
        zc[i] += map.encoder_bias[i];
        ac[i] = zc[i] < 0.0 ? cfg.leaky_slope * zc[i] : zc[i];
      }
    }
    DenseMatrix resid = multiply(map.decoder, act);
    for (std::size_t c = 0; c < resid.cols(); ++c) {
      double* rc = resid.col(c);
      const double* yc = d.Y->col(c);
      for (std::size_t i = 0; i < m; ++i) {
        rc[i] += map.decoder_bias[i] - yc[i];
        rc[i] *= 2.0 / static_cast<double>(j);
      }
    }
    const DenseMatrix d_dec = multiply(resid, transpose(act));
    Vector d_dec_bias(m, 0.0);
    for (std::size_t c = 0; c < resid.cols(); ++c) {
      const double* rc = resid.col(c);
      for (std::size_t i = 0; i < m; ++i) d_dec_bias[i] += rc[i];
    }
    DenseMatrix d_act = multiply(transpose(map.decoder), resid);
    for (std::size_t c = 0; c < d_act.cols(); ++c) {
      double* dc = d_act.col(c);
      const double* zc = z.col(c);
      for (std::size_t i = 0; i < r; ++i)
        if (zc[i] < 0.0) dc[i] *= cfg.leaky_slope;
    }
    const DenseMatrix d_enc = multiply(d_act, transpose(d.X));
    Vector d_enc_bias(r, 0.0);
    for (std::size_t c = 0; c < d_act.cols(); ++c) {
      const double* dc = d_act.col(c);
      for (std::size_t i = 0; i < r; ++i) d_enc_bias[i] += dc[i];
    }

    ++step;
    enc_state.apply(map.encoder.data(), d_enc.data(), cfg.base, step);
    enc_bias_state.apply(map.encoder_bias, d_enc_bias, cfg.base, step);
    dec_state.apply(map.decoder.data(), d_dec.data(), cfg.base, step);
    dec_bias_state.apply(map.decoder_bias, d_dec_bias, cfg.base, step);
  }
  map.loss_history.push_back(mse_loss(map.apply(d.X), *d.Y));
  return map;
}

}  // namespace rkmp
