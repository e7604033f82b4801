#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rkmp/dense.hpp"
#include "rkmp/empirical.hpp"
#include "rkmp/mappings.hpp"

namespace rkmp {

enum class Optimizer { adam_style, plain_gd };

struct TrainConfig {
  std::size_t rank = 1;
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam_style;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  bool affine = false;
};

// Encoder/decoder pair trained by first-order updates on the MSE loss
// (1/J)‖D E X + b 1ᵀ − Y‖_F². composed() has rank ≤ rank by construction.
struct TrainedMap {
  DenseMatrix encoder;  // r×n
  DenseMatrix decoder;  // m×r
  std::optional<Vector> bias;
  std::vector<double> loss_history;  // entry 0 is the initial loss

  DenseMatrix composed() const { return multiply(decoder, encoder); }
  double final_loss() const { return loss_history.back(); }
};

TrainedMap train_encoder_decoder(const DataSet& d, const TrainConfig& cfg);

// Analytic-vs-central-finite-difference check of the MSE gradients on a
// small instance. Passes at 1e-5 relative error.
struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_coordinate;
  bool passed = false;
};
GradientCheckReport gradient_check(const TrainConfig& cfg, const DataSet& d);

// Centered rank-r principal-component reconstruction; coincides with the
// affine optimal autoencoder built from the empirical covariance.
OptimalMap pca_baseline(const DataSet& d, std::size_t r);

// Single-hidden-layer variant with a leaky-rectifier latent activation:
// y = D · leaky(E x + c) + b. Excluded from acceptance; results depend on
// initialization.
struct NonlinearConfig {
  TrainConfig base;
  double leaky_slope = 0.01;
};
struct TrainedNonlinearMap {
  DenseMatrix encoder;
  Vector encoder_bias;
  DenseMatrix decoder;
  Vector decoder_bias;
  std::vector<double> loss_history;
  double leaky_slope = 0.01;

  DenseMatrix apply(const DenseMatrix& x) const;
};
TrainedNonlinearMap train_nonlinear_encoder_decoder(const DataSet& d, const NonlinearConfig& cfg);

}  // namespace rkmp
