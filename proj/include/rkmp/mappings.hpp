#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "rkmp/dense.hpp"
#include "rkmp/svd.hpp"

namespace rkmp {

enum class Task { forward, inverse, autoencode, denoise };
enum class Form { linear, affine };

struct MapKind {
  Task task = Task::forward;
  Form form = Form::linear;
};

// Second moment (centered = false) or covariance (centered = true) together
// with the symmetric factor actually used by the closed forms. `moment` is
// the ridged matrix, so factor.L · factor.Lᵀ reproduces it.
struct MomentModel {
  DenseMatrix moment;
  SymmetricFactor factor;
  std::optional<Vector> mean;
  bool centered = false;
  double ridge = 0.0;

  std::size_t dim() const { return moment.rows(); }
};

MomentModel make_second_moment_model(const DenseMatrix& gamma,
                                     FactorStrategy strategy = FactorStrategy::psd_eigendecomposition,
                                     double ridge = 0.0);
MomentModel make_covariance_model(const DenseMatrix& s, Vector mean,
                                  FactorStrategy strategy = FactorStrategy::psd_eigendecomposition,
                                  double ridge = 0.0);

// Problem description for the closed-form solvers. forward_op absent means
// the identity (autoencoding and denoising kinds). noise absent means
// noiseless. obs_strategy/obs_ridge control how the internally assembled
// observation moment Γ_Y is factored for the inverse and denoise kinds.
struct ProblemSpec {
  MapKind kind;
  std::optional<DenseMatrix> forward_op;
  MomentModel signal;
  std::optional<MomentModel> noise;
  std::size_t rank = 1;
  FactorStrategy obs_strategy = FactorStrategy::psd_eigendecomposition;
  double obs_ridge = 0.0;
};

// Which simplification produced the map, plus clamp/uniqueness signals.
struct ConstructionTrace {
  std::string branch;
  std::size_t requested_rank = 0;
  std::size_t achieved_rank = 0;
  bool clamped = false;
  bool unique = true;
};

struct OptimalMap {
  DenseMatrix A;
  std::optional<Vector> bias;
  std::size_t rank = 0;  // achieved rank (requested rank clamps to the spectrum)
  MapKind kind;
  double risk = 0.0;
  ConstructionTrace trace;
};

OptimalMap optimal_forward(const ProblemSpec& spec);
OptimalMap optimal_forward_affine(const ProblemSpec& spec);
OptimalMap optimal_inverse(const ProblemSpec& spec);
OptimalMap optimal_inverse_affine(const ProblemSpec& spec);
OptimalMap optimal_autoencoder(const ProblemSpec& spec);
OptimalMap optimal_denoiser(const ProblemSpec& spec);

// Dispatch on spec.kind.
OptimalMap solve(const ProblemSpec& spec);

// Closed-form expected squared error of (map.A, map.bias) under the spec's
// moments. Never samples.
double bayes_risk(const OptimalMap& map, const ProblemSpec& spec);

// (cross · L^{†ᵀ})_r · L†, the inverse-style plug-in map assembled from a
// supplied cross moment E[X Yᵀ] and an observation factor with L Lᵀ = Γ_Y.
// Triangular factors are inverted by substitution instead of a full SVD.
DenseMatrix rank_constrained_map_from_moments(const DenseMatrix& cross,
                                              const SymmetricFactor& obs_factor, std::size_t r);

}  // namespace rkmp
