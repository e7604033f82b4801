#pragma once

#include <cstddef>
#include <cstdint>

#include "rkmp/dense.hpp"

namespace rkmp {

// Gaussian blur acting on vectorized side×side images with zero padding.
// The operator column j is the vectorized blur of basis image j.
struct BlurSpec {
  std::size_t image_side = 28;
  std::size_t kernel_side = 5;  // odd
  double kernel_std = 1.5;
};

DenseMatrix build_blur_operator(const BlurSpec& spec);

// Normalized discrete Gaussian kernel sampled at integer offsets.
DenseMatrix gaussian_kernel(std::size_t side, double std_dev);

// Adds seeded N(0, std²) entries; deterministic given the seed.
DenseMatrix add_white_noise(const DenseMatrix& ydata, double std_dev, std::uint64_t seed);

// Smooth seeded random fields clamped to [0,1], vectorized one per column.
// Stand-in image corpus for the imaging experiments.
DenseMatrix synthetic_images(std::size_t side, std::size_t count, std::uint64_t seed);

// GARCH(1,1)/factor-model synthetic market of Appendix-style daily returns.
// Factor paths are AR(1) (coefficient ar1_coeff) with marginal standard
// deviations in the ratio 5:2:1 scaled by factor_base_std, so the first
// factor is market-like. Noise is P ⊙ Q with P the per-asset GARCH variance
// paths and Q standard normal, scaled by noise_scale.
struct SyntheticMarketSpec {
  std::size_t days = 2000;
  std::size_t assets = 10;
  std::size_t factors = 3;
  double garch_omega = 0.01;
  double garch_alpha = 0.1;
  double garch_beta = 0.85;
  std::uint64_t seed = 0;
  double factor_base_std = 0.5;
  double ar1_coeff = 0.2;
  double noise_scale = 1.0;
};

// Conditional-variance path v²_t = ω + α ε²_{t−1} + β v²_{t−1}, started at
// the unconditional variance ω/(1−α−β).
Vector garch_volatility_path(const SyntheticMarketSpec& spec, std::size_t length,
                             std::uint64_t seed);

struct SyntheticMarket {
  DenseMatrix returns;        // T×A
  DenseMatrix true_factors;   // T×r
  DenseMatrix true_loadings;  // A×r
};

SyntheticMarket synthetic_market(const SyntheticMarketSpec& spec);

}  // namespace rkmp
