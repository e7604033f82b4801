#include "rkmp/mappings.hpp"

#include <cmath>
#include <string>

#include "rkmp/errors.hpp"

namespace rkmp {

namespace {

constexpr double kTieTolerance = 1e-12;  // relative gap below which sigma_r ties sigma_{r+1}

void require_symmetric_shape(const DenseMatrix& s, const char* what) {
  if (s.rows() != s.cols()) throw DimensionError(std::string(what) + " must be square");
}

void validate_common(const ProblemSpec& spec) {
  if (spec.rank < 1) throw ContractError("ProblemSpec: rank must be >= 1");
  const bool needs_operator = spec.kind.task == Task::forward || spec.kind.task == Task::inverse;
  if (needs_operator && !spec.forward_op.has_value())
    throw ContractError("ProblemSpec: forward operator required for forward/inverse kinds");
  if (!needs_operator && spec.forward_op.has_value())
    throw ContractError("ProblemSpec: forward operator must be absent for autoencode/denoise");
  if (spec.forward_op && spec.forward_op->cols() != spec.signal.dim())
    throw DimensionError("ProblemSpec: forward operator columns must match signal dimension");
  if (spec.noise) {
    const std::size_t obs_dim = spec.forward_op ? spec.forward_op->rows() : spec.signal.dim();
    if (spec.noise->dim() != obs_dim)
      throw DimensionError("ProblemSpec: noise dimension must match observation dimension");
  }
  if (spec.kind.form == Form::affine) {
    if (!spec.signal.centered)
      throw ContractError("ProblemSpec: affine kinds need a centered (covariance) signal model");
    if (!spec.signal.mean.has_value())
      throw ContractError("ProblemSpec: affine kinds need the signal mean");
  } else if (spec.signal.centered) {
    throw ContractError("ProblemSpec: linear kinds need an uncentered (second moment) model");
  }
  if (spec.kind.task == Task::denoise && !spec.noise.has_value())
    throw ContractError("ProblemSpec: denoise kind needs a noise model");
}

bool tie_at_cut(const SvdFactors& f, std::size_t r) {
  if (r >= f.effective_rank || r == 0) return false;
  const double top = f.sigma.front();
  if (top == 0.0) return false;
  return (f.sigma[r - 1] - f.sigma[r]) <= kTieTolerance * top;
}

DenseMatrix factor_pinv(const SymmetricFactor& f) {
  if (f.source_kind == FactorStrategy::cholesky_with_ridge)
    return solve_lower(f.L, DenseMatrix::identity(f.L.rows()));
  return pseudoinverse(f.L);
}

DenseMatrix assemble_obs_moment(const ProblemSpec& spec) {
  DenseMatrix gy;
  if (spec.forward_op) {
    const DenseMatrix& f = *spec.forward_op;
    gy = multiply(multiply(f, spec.signal.moment), transpose(f));
  } else {
    gy = spec.signal.moment;
  }
  if (spec.noise) gy = add(gy, spec.noise->moment);
  return gy;
}

double noise_trace(const ProblemSpec& spec) {
  return spec.noise ? trace(spec.noise->moment) : 0.0;
}

double squared_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// E‖A X + b − (F X + ε)‖² = ‖(A − F) L‖_F² + tr(Γ_ε) + ‖b − (F − A)μ‖².
double forward_style_risk(const DenseMatrix& a, const std::optional<Vector>& bias,
                          const DenseMatrix& f, const MomentModel& signal, double noise_tr) {
  double risk = std::pow(frobenius_norm(multiply(subtract(a, f), signal.factor.L)), 2) + noise_tr;
  if (bias) risk += squared_distance(*bias, multiply(subtract(f, a), *signal.mean));
  return risk;
}

// E‖A Y + b − X‖² = ‖A L_Y‖_F² − 2 tr(A F Γ_X) + tr(Γ_X) + ‖b − (I − A F)μ‖².
double inverse_style_risk(const DenseMatrix& a, const std::optional<Vector>& bias,
                          const DenseMatrix& f, const MomentModel& signal,
                          const SymmetricFactor& obs_factor) {
  const DenseMatrix af = multiply(a, f);
  double risk = std::pow(frobenius_norm(multiply(a, obs_factor.L)), 2) -
                2.0 * trace_product(af, signal.moment) + trace(signal.moment);
  if (bias) {
    const Vector target =
        multiply(subtract(DenseMatrix::identity(signal.dim()), af), *signal.mean);
    risk += squared_distance(*bias, target);
  }
  return risk;
}

struct TruncatedProduct {
  DenseMatrix matrix;
  ConstructionTrace trace;
  std::size_t spectrum_rank = 0;
};

// (M)_r with clamp/uniqueness bookkeeping.
TruncatedProduct truncate_product(const DenseMatrix& m, std::size_t r) {
  TruncatedProduct out;
  const SvdFactors f = svd(m);
  out.spectrum_rank = f.effective_rank;
  out.trace.requested_rank = r;
  out.trace.achieved_rank = std::min(r, f.effective_rank);
  out.trace.clamped = r > f.effective_rank;
  out.trace.unique = !tie_at_cut(f, r);
  out.matrix = truncate(f, r).reconstruct();
  return out;
}

// Shared core of the inverse-style solvers: Â = (cross · L^{†ᵀ})_r · L†.
OptimalMap inverse_core(const ProblemSpec& spec, const DenseMatrix& f_for_risk,
                        const DenseMatrix& cross, const SymmetricFactor& obs_factor,
                        const char* full_rank_branch) {
  const DenseMatrix lp = factor_pinv(obs_factor);
  TruncatedProduct tp = truncate_product(multiply(cross, transpose(lp)), spec.rank);
  OptimalMap map;
  map.A = multiply(tp.matrix, lp);
  map.kind = spec.kind;
  map.rank = tp.trace.achieved_rank;
  map.trace = tp.trace;
  map.trace.branch = spec.rank >= tp.spectrum_rank ? full_rank_branch : "general";
  if (spec.kind.form == Form::affine)
    map.bias = multiply(
        subtract(DenseMatrix::identity(spec.signal.dim()), multiply(map.A, f_for_risk)),
        *spec.signal.mean);
  map.risk = inverse_style_risk(map.A, map.bias, f_for_risk, spec.signal, obs_factor);
  return map;
}

// Shared core of the forward solvers: Â = (F L)_r L†.
OptimalMap forward_core(const ProblemSpec& spec) {
  const DenseMatrix& f = *spec.forward_op;
  const DenseMatrix& l = spec.signal.factor.L;
  TruncatedProduct tp = truncate_product(multiply(f, l), spec.rank);
  const SvdFactors fl = svd(l);

  OptimalMap map;
  map.A = multiply(tp.matrix, pseudoinverse(fl));
  map.kind = spec.kind;
  map.rank = tp.trace.achieved_rank;
  map.trace = tp.trace;
  if (spec.rank >= tp.spectrum_rank) {
    map.trace.branch = fl.effective_rank == spec.signal.dim() ? "full-rank-recovery"
                                                              : "column-space-projection";
  } else {
    map.trace.branch = "general";
  }
  if (spec.kind.form == Form::affine) map.bias = multiply(subtract(f, map.A), *spec.signal.mean);
  map.risk = forward_style_risk(map.A, map.bias, f, spec.signal, noise_trace(spec));
  return map;
}

}  // namespace

MomentModel make_second_moment_model(const DenseMatrix& gamma, FactorStrategy strategy,
                                     double ridge) {
  require_symmetric_shape(gamma, "second moment");
  MomentModel m;
  m.factor = symmetric_factor(gamma, strategy, ridge);
  m.moment = gamma;
  for (std::size_t i = 0; i < gamma.rows(); ++i) m.moment(i, i) += ridge;
  m.centered = false;
  m.ridge = ridge;
  return m;
}

MomentModel make_covariance_model(const DenseMatrix& s, Vector mean, FactorStrategy strategy,
                                  double ridge) {
  require_symmetric_shape(s, "covariance");
  if (mean.size() != s.rows()) throw DimensionError("covariance model: mean length mismatch");
  MomentModel m;
  m.factor = symmetric_factor(s, strategy, ridge);
  m.moment = s;
  for (std::size_t i = 0; i < s.rows(); ++i) m.moment(i, i) += ridge;
  m.mean = std::move(mean);
  m.centered = true;
  m.ridge = ridge;
  return m;
}

OptimalMap optimal_forward(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::forward || spec.kind.form != Form::linear)
    throw ContractError("optimal_forward: kind must be forward/linear");
  return forward_core(spec);
}

OptimalMap optimal_forward_affine(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::forward || spec.kind.form != Form::affine)
    throw ContractError("optimal_forward_affine: kind must be forward/affine");
  return forward_core(spec);
}

OptimalMap optimal_inverse(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::inverse || spec.kind.form != Form::linear)
    throw ContractError("optimal_inverse: kind must be inverse/linear");
  const SymmetricFactor ly =
      symmetric_factor(assemble_obs_moment(spec), spec.obs_strategy, spec.obs_ridge);
  const DenseMatrix cross = multiply(spec.signal.moment, transpose(*spec.forward_op));
  return inverse_core(spec, *spec.forward_op, cross, ly, "full-rank-simplification");
}

OptimalMap optimal_inverse_affine(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::inverse || spec.kind.form != Form::affine)
    throw ContractError("optimal_inverse_affine: kind must be inverse/affine");
  const SymmetricFactor ky =
      symmetric_factor(assemble_obs_moment(spec), spec.obs_strategy, spec.obs_ridge);
  const DenseMatrix cross = multiply(spec.signal.moment, transpose(*spec.forward_op));
  return inverse_core(spec, *spec.forward_op, cross, ky, "foster-full-rank");
}

OptimalMap optimal_autoencoder(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::autoencode)
    throw ContractError("optimal_autoencoder: kind must be autoencode");
  if (spec.noise.has_value())
    throw ContractError("optimal_autoencoder: autoencoding is noiseless; use denoise instead");
  const std::size_t n = spec.signal.dim();
  const SvdFactors fl = svd(spec.signal.factor.L);
  const std::size_t keep = std::min(spec.rank, fl.effective_rank);

  DenseMatrix ur(n, keep);
  for (std::size_t j = 0; j < keep; ++j)
    for (std::size_t i = 0; i < n; ++i) ur(i, j) = fl.U(i, j);
  OptimalMap map;
  map.A = multiply(ur, transpose(ur));
  map.kind = spec.kind;
  map.rank = keep;
  map.trace.requested_rank = spec.rank;
  map.trace.achieved_rank = keep;
  map.trace.clamped = spec.rank > fl.effective_rank;
  map.trace.unique = !tie_at_cut(fl, spec.rank);
  map.trace.branch = (spec.rank >= fl.effective_rank && fl.effective_rank == n)
                         ? "identity-recovery"
                         : "projector";
  if (spec.kind.form == Form::affine)
    map.bias = multiply(subtract(DenseMatrix::identity(n), map.A), *spec.signal.mean);
  map.risk = forward_style_risk(map.A, map.bias, DenseMatrix::identity(n), spec.signal, 0.0);
  return map;
}

OptimalMap optimal_denoiser(const ProblemSpec& spec) {
  validate_common(spec);
  if (spec.kind.task != Task::denoise)
    throw ContractError("optimal_denoiser: kind must be denoise");
  const SymmetricFactor ly =
      symmetric_factor(assemble_obs_moment(spec), spec.obs_strategy, spec.obs_ridge);
  const DenseMatrix eye = DenseMatrix::identity(spec.signal.dim());
  return inverse_core(spec, eye, spec.signal.moment, ly, "wiener");
}

OptimalMap solve(const ProblemSpec& spec) {
  switch (spec.kind.task) {
    case Task::forward:
      return spec.kind.form == Form::linear ? optimal_forward(spec) : optimal_forward_affine(spec);
    case Task::inverse:
      return spec.kind.form == Form::linear ? optimal_inverse(spec) : optimal_inverse_affine(spec);
    case Task::autoencode:
      return optimal_autoencoder(spec);
    case Task::denoise:
      return optimal_denoiser(spec);
  }
  throw ContractError("solve: unknown kind");
}

double bayes_risk(const OptimalMap& map, const ProblemSpec& spec) {
  validate_common(spec);
  if (map.kind.task != spec.kind.task || map.kind.form != spec.kind.form)
    throw ContractError("bayes_risk: map and spec kinds differ");
  if (spec.kind.form == Form::affine && !map.bias.has_value())
    throw ContractError("bayes_risk: affine map is missing its bias");

  switch (spec.kind.task) {
    case Task::forward:
      return forward_style_risk(map.A, map.bias, *spec.forward_op, spec.signal, noise_trace(spec));
    case Task::autoencode:
      return forward_style_risk(map.A, map.bias, DenseMatrix::identity(spec.signal.dim()),
                                spec.signal, 0.0);
    case Task::inverse: {
      const SymmetricFactor ly =
          symmetric_factor(assemble_obs_moment(spec), spec.obs_strategy, spec.obs_ridge);
      return inverse_style_risk(map.A, map.bias, *spec.forward_op, spec.signal, ly);
    }
    case Task::denoise: {
      const SymmetricFactor ly =
          symmetric_factor(assemble_obs_moment(spec), spec.obs_strategy, spec.obs_ridge);
      return inverse_style_risk(map.A, map.bias, DenseMatrix::identity(spec.signal.dim()),
                                spec.signal, ly);
    }
  }
  throw ContractError("bayes_risk: unknown kind");
}

DenseMatrix rank_constrained_map_from_moments(const DenseMatrix& cross,
                                              const SymmetricFactor& obs_factor, std::size_t r) {
  if (obs_factor.source_kind == FactorStrategy::cholesky_with_ridge) {
    const DenseMatrix c = transpose(solve_lower(obs_factor.L, transpose(cross)));
    TruncatedProduct tp = truncate_product(c, r);
    return transpose(solve_lower_transposed(obs_factor.L, transpose(tp.matrix)));
  }
  const DenseMatrix lp = factor_pinv(obs_factor);
  TruncatedProduct tp = truncate_product(multiply(cross, transpose(lp)), r);
  return multiply(tp.matrix, lp);
}

}  // namespace rkmp
