#include "rkmp/datagen.hpp"

#include <cmath>
#include <cstdlib>

#include "rkmp/errors.hpp"
#include "rkmp/rng.hpp"

namespace rkmp {

DenseMatrix gaussian_kernel(std::size_t side, double std_dev) {
  if (side % 2 == 0) throw ContractError("gaussian_kernel: side must be odd");
  if (std_dev <= 0.0) throw ContractError("gaussian_kernel: std must be > 0");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(side) / 2;
  DenseMatrix k(side, side);
  double sum = 0.0;
  for (std::ptrdiff_t dj = -half; dj <= half; ++dj)
    for (std::ptrdiff_t di = -half; di <= half; ++di) {
      const double v = std::exp(-static_cast<double>(di * di + dj * dj) /
                                (2.0 * std_dev * std_dev));
      k(di + half, dj + half) = v;
      sum += v;
    }
  for (double& v : k.data()) v /= sum;
  return k;
}

DenseMatrix build_blur_operator(const BlurSpec& spec) {
  if (spec.kernel_side % 2 == 0) throw ContractError("build_blur_operator: kernel side must be odd");
  if (spec.kernel_side > spec.image_side)
    throw ContractError("build_blur_operator: kernel larger than image");
  const std::size_t side = spec.image_side;
  const std::size_t n = side * side;
  const DenseMatrix k = gaussian_kernel(spec.kernel_side, spec.kernel_std);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(spec.kernel_side) / 2;

  // Pixel (i, j) vectorizes to index i + j·side. Entry (p, q) of the operator
  // is the kernel weight moving mass from pixel q to pixel p; zero padding
  // simply drops out-of-frame weights.
  DenseMatrix f(n, n);
  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(side);
  for (std::ptrdiff_t qj = 0; qj < s; ++qj)
    for (std::ptrdiff_t qi = 0; qi < s; ++qi) {
      const std::size_t q = static_cast<std::size_t>(qi + qj * s);
      for (std::ptrdiff_t dj = -half; dj <= half; ++dj)
        for (std::ptrdiff_t di = -half; di <= half; ++di) {
          const std::ptrdiff_t pi = qi + di;
          const std::ptrdiff_t pj = qj + dj;
          if (pi < 0 || pi >= s || pj < 0 || pj >= s) continue;
          const std::size_t p = static_cast<std::size_t>(pi + pj * s);
          f(p, q) = k(di + half, dj + half);
        }
    }
  return f;
}

DenseMatrix add_white_noise(const DenseMatrix& ydata, double std_dev, std::uint64_t seed) {
  if (std_dev < 0.0) throw ContractError("add_white_noise: std must be >= 0");
  DenseMatrix out = ydata;
  if (std_dev == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.data()) v += std_dev * rng.normal();
  return out;
}

DenseMatrix synthetic_images(std::size_t side, std::size_t count, std::uint64_t seed) {
  const std::size_t coarse = side / 4 + 2;
  DenseMatrix out(side * side, count);
  Rng base(seed);
  for (std::size_t img = 0; img < count; ++img) {
    Rng rng = base.split(img);
    DenseMatrix grid(coarse, coarse);
    for (double& v : grid.data()) v = rng.normal();
    // Bilinear upsample of the coarse field, then a per-image min-max rescale
    // onto [0,1]. The rescale is affine, so every image stays inside the
    // (coarse² + 1)-dimensional linear span of the upsampling basis and the
    // corpus has a crisp effective rank.
    const double scale = static_cast<double>(coarse - 1) / static_cast<double>(side - 1);
    double* col = out.col(img);
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < side; ++j)
      for (std::size_t i = 0; i < side; ++i) {
        const double gi = static_cast<double>(i) * scale;
        const double gj = static_cast<double>(j) * scale;
        const std::size_t i0 = static_cast<std::size_t>(gi);
        const std::size_t j0 = static_cast<std::size_t>(gj);
        const std::size_t i1 = std::min(i0 + 1, coarse - 1);
        const std::size_t j1 = std::min(j0 + 1, coarse - 1);
        const double ti = gi - static_cast<double>(i0);
        const double tj = gj - static_cast<double>(j0);
        const double v = (1 - ti) * (1 - tj) * grid(i0, j0) + ti * (1 - tj) * grid(i1, j0) +
                         (1 - ti) * tj * grid(i0, j1) + ti * tj * grid(i1, j1);
        col[i + j * side] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double range = hi - lo;
    for (std::size_t k = 0; k < side * side; ++k)
      col[k] = range > 0.0 ? (col[k] - lo) / range : 0.5;
  }
  return out;
}

Vector garch_volatility_path(const SyntheticMarketSpec& spec, std::size_t length,
                             std::uint64_t seed) {
  if (spec.garch_alpha + spec.garch_beta >= 1.0)
    throw ContractError("garch_volatility_path: alpha + beta must be < 1");
  if (spec.garch_omega <= 0.0) throw ContractError("garch_volatility_path: omega must be > 0");
  Rng rng(seed);
  Vector var(length);
  double v = spec.garch_omega / (1.0 - spec.garch_alpha - spec.garch_beta);
  for (std::size_t t = 0; t < length; ++t) {
    var[t] = v;
    const double eps = std::sqrt(v) * rng.normal();
    v = spec.garch_omega + spec.garch_alpha * eps * eps + spec.garch_beta * v;
  }
  return var;
}

SyntheticMarket synthetic_market(const SyntheticMarketSpec& spec) {
  if (spec.factors < 1 || spec.assets < 1 || spec.days < 2)
    throw ContractError("synthetic_market: need days >= 2, assets >= 1, factors >= 1");
  const std::size_t t_len = spec.days;
  const std::size_t a = spec.assets;
  const std::size_t r = spec.factors;
  Rng base(spec.seed);

  // Factor strengths decay 5:2:1 (then geometrically halving past three).
  Vector strength(r);
  for (std::size_t f = 0; f < r; ++f) {
    const double ratio = f == 0 ? 5.0 : (f == 1 ? 2.0 : std::pow(0.5, static_cast<double>(f - 2)));
    strength[f] = spec.factor_base_std * ratio;
  }

  SyntheticMarket out;
  out.true_factors = DenseMatrix(t_len, r);
  Rng factor_rng = base.split(1);
  const double rho = spec.ar1_coeff;
  const double innov_scale = std::sqrt(1.0 - rho * rho);
  for (std::size_t f = 0; f < r; ++f) {
    double prev = factor_rng.normal();
    out.true_factors(0, f) = strength[f] * prev;
    for (std::size_t t = 1; t < t_len; ++t) {
      prev = rho * prev + innov_scale * factor_rng.normal();
      out.true_factors(t, f) = strength[f] * prev;
    }
  }

  out.true_loadings = DenseMatrix(a, r);
  Rng loading_rng = base.split(2);
  for (std::size_t i = 0; i < a; ++i) {
    out.true_loadings(i, 0) = loading_rng.uniform(0.75, 1.25);  // market factor
    for (std::size_t f = 1; f < r; ++f) out.true_loadings(i, f) = loading_rng.uniform(-1.0, 1.0);
  }

  out.returns = multiply(out.true_factors, transpose(out.true_loadings));
  if (spec.noise_scale != 0.0) {
    Rng noise_rng = base.split(3);
    for (std::size_t asset = 0; asset < a; ++asset) {
      const Vector var_path = garch_volatility_path(spec, t_len, base.split(100 + asset).next_u64());
      for (std::size_t t = 0; t < t_len; ++t)
        out.returns(t, asset) += spec.noise_scale * var_path[t] * noise_rng.normal();
    }
  }
  return out;
}

}  // namespace rkmp
