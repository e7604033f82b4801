#include <cmath>
#include <optional>

#include "doctest.h"
#include "rkmp/dense.hpp"
#include "rkmp/errors.hpp"
#include "rkmp/mappings.hpp"
#include "rkmp/rng.hpp"
#include "rkmp/svd.hpp"
#include "test_helpers.hpp"

using namespace rkmp;
using rkmp::testing::random_low_rank;
using rkmp::testing::random_matrix;
using rkmp::testing::random_spd;
using rkmp::testing::relative_frobenius_gap;

namespace {

Vector sample_vec(const DenseMatrix& factor, Rng& rng) {
  Vector z(factor.cols());
  for (double& x : z) x = rng.normal();
  return multiply(factor, z);
}

// Monte-Carlo estimate of E‖A·in + b − out‖² for the four problem kinds.
struct McEstimate {
  double mean;
  double stderr_;
};

McEstimate monte_carlo_risk(const DenseMatrix& a, const std::optional<Vector>& bias,
                            const ProblemSpec& spec, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = spec.signal.dim();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    Vector x = sample_vec(spec.signal.factor.L, rng);
    if (spec.signal.mean)
      for (std::size_t i = 0; i < n; ++i) x[i] += (*spec.signal.mean)[i];
    Vector y = spec.forward_op ? multiply(*spec.forward_op, x) : x;
    if (spec.noise) {
      const Vector e = sample_vec(spec.noise->factor.L, rng);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += e[i];
    }
    const bool inverse_direction =
        spec.kind.task == Task::inverse || spec.kind.task == Task::denoise;
    const Vector& input = inverse_direction ? y : x;
    const Vector& target = inverse_direction ? x : y;
    Vector pred = multiply(a, input);
    if (bias)
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += (*bias)[i];
    double err = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double diff = pred[i] - target[i];
      err += diff * diff;
    }
    sum += err;
    sum_sq += err * err;
  }
  const double mean = sum / static_cast<double>(draws);
  const double var = sum_sq / static_cast<double>(draws) - mean * mean;
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(draws))};
}

ProblemSpec forward_spec(const DenseMatrix& f, const DenseMatrix& gamma_x,
                         std::optional<DenseMatrix> gamma_e, std::size_t r) {
  ProblemSpec spec;
  spec.kind = {Task::forward, Form::linear};
  spec.forward_op = f;
  spec.signal = make_second_moment_model(gamma_x);
  if (gamma_e) spec.noise = make_second_moment_model(*gamma_e);
  spec.rank = r;
  return spec;
}

OptimalMap wrap_candidate(const DenseMatrix& a, MapKind kind,
                          std::optional<Vector> bias = std::nullopt) {
  OptimalMap m;
  m.A = a;
  m.bias = std::move(bias);
  m.kind = kind;
  return m;
}

}  // namespace

TEST_SUITE("test_mappings") {

TEST_CASE("forward: full-rank recovery of the operator") {
  const DenseMatrix f = random_matrix(5, 5, 10);
  const DenseMatrix gx = random_spd(5, 11);
  ProblemSpec spec = forward_spec(f, gx, std::nullopt, 5);
  const OptimalMap map = optimal_forward(spec);
  CHECK(relative_frobenius_gap(f, map.A) < 1e-8);
  CHECK(map.trace.branch == "full-rank-recovery");
  CHECK(std::fabs(map.risk) < 1e-8);
}

TEST_CASE("forward: rank-deficient signal projects the operator") {
  const std::size_t n = 6, k = 3;
  const DenseMatrix f = random_matrix(4, n, 20);
  DenseMatrix low = random_matrix(n, k, 21);
  const DenseMatrix gx = multiply(low, transpose(low));  // PSD of rank k
  ProblemSpec spec = forward_spec(f, gx, std::nullopt, n);
  const OptimalMap map = optimal_forward(spec);

  const SvdFactors fl = svd(spec.signal.factor.L);
  REQUIRE(fl.effective_rank == k);
  DenseMatrix uk(n, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) uk(i, j) = fl.U(i, j);
  const DenseMatrix expect = multiply(f, multiply(uk, transpose(uk)));
  CHECK(relative_frobenius_gap(expect, map.A) < 1e-8);
  CHECK(map.trace.branch == "column-space-projection");
}

TEST_CASE("forward: closed form beats random rank-2 maps") {
  const DenseMatrix f = random_matrix(5, 5, 30);
  const DenseMatrix gx = random_spd(5, 31);
  DenseMatrix ge(5, 5);
  for (std::size_t i = 0; i < 5; ++i) ge(i, i) = 0.01;
  ProblemSpec spec = forward_spec(f, gx, ge, 2);
  const OptimalMap map = optimal_forward(spec);

  const McEstimate opt = monte_carlo_risk(map.A, std::nullopt, spec, 10000, 999);
  CHECK(std::fabs(opt.mean - map.risk) < 4.0 * opt.stderr_);

  Rng rng(1000);
  for (int t = 0; t < 500; ++t) {
    DenseMatrix d(5, 2), e(2, 5);
    for (double& x : d.data()) x = rng.normal();
    for (double& x : e.data()) x = rng.normal();
    const DenseMatrix cand = multiply(d, e);
    const double cand_risk = bayes_risk(wrap_candidate(cand, spec.kind), spec);
    CHECK(map.risk <= cand_risk + 1e-9);
  }
}

TEST_CASE("forward affine: zero mean reduces to the linear solution") {
  const DenseMatrix f = random_matrix(4, 4, 40);
  const DenseMatrix sx = random_spd(4, 41);
  ProblemSpec affine;
  affine.kind = {Task::forward, Form::affine};
  affine.forward_op = f;
  affine.signal = make_covariance_model(sx, Vector(4, 0.0));
  affine.rank = 2;
  const OptimalMap am = optimal_forward_affine(affine);
  REQUIRE(am.bias.has_value());
  for (double b : *am.bias) CHECK(std::fabs(b) < 1e-10);

  ProblemSpec linear = forward_spec(f, sx, std::nullopt, 2);
  const OptimalMap lm = optimal_forward(linear);
  CHECK(relative_frobenius_gap(lm.A, am.A) < 1e-8);
}

TEST_CASE("forward affine: invertible covariance at full rank recovers F with zero bias") {
  const DenseMatrix f = random_matrix(4, 4, 50);
  const DenseMatrix sx = random_spd(4, 51);
  Rng rng(52);
  Vector mu(4);
  for (double& x : mu) x = rng.normal();
  ProblemSpec spec;
  spec.kind = {Task::forward, Form::affine};
  spec.forward_op = f;
  spec.signal = make_covariance_model(sx, mu);
  spec.rank = 4;
  const OptimalMap map = optimal_forward_affine(spec);
  CHECK(relative_frobenius_gap(f, map.A) < 1e-8);
  for (double b : *map.bias) CHECK(std::fabs(b) < 1e-7);
}

TEST_CASE("forward affine: optimal bias beats perturbed biases") {
  const DenseMatrix f = random_matrix(4, 4, 60);
  const DenseMatrix sx = random_spd(4, 61);
  Rng rng(62);
  Vector mu(4);
  for (double& x : mu) x = rng.normal();
  ProblemSpec spec;
  spec.kind = {Task::forward, Form::affine};
  spec.forward_op = f;
  spec.signal = make_covariance_model(sx, mu);
  spec.rank = 2;
  const OptimalMap map = optimal_forward_affine(spec);
  for (int t = 0; t < 100; ++t) {
    Vector perturbed = *map.bias;
    for (double& b : perturbed) b += 0.1 * rng.normal();
    const double risk = bayes_risk(wrap_candidate(map.A, spec.kind, perturbed), spec);
    CHECK(map.risk <= risk + 1e-12);
  }
}

TEST_CASE("inverse: identity operator without noise is the autoencoder projector") {
  const DenseMatrix gx = random_spd(5, 70);
  ProblemSpec spec;
  spec.kind = {Task::inverse, Form::linear};
  spec.forward_op = DenseMatrix::identity(5);
  spec.signal = make_second_moment_model(gx);
  spec.rank = 3;
  const OptimalMap inv = optimal_inverse(spec);

  ProblemSpec ae = spec;
  ae.kind = {Task::autoencode, Form::linear};
  ae.forward_op.reset();
  const OptimalMap proj = optimal_autoencoder(ae);
  CHECK(relative_frobenius_gap(proj.A, inv.A) < 1e-8);
}

TEST_CASE("inverse: full-rank simplification matches the directly assembled map") {
  const DenseMatrix f = random_matrix(4, 4, 80);
  const DenseMatrix gx = random_spd(4, 81);
  const DenseMatrix ge = random_spd(4, 82, 0.1);
  ProblemSpec spec;
  spec.kind = {Task::inverse, Form::linear};
  spec.forward_op = f;
  spec.signal = make_second_moment_model(gx);
  spec.noise = make_second_moment_model(ge);
  spec.rank = 4;
  const OptimalMap map = optimal_inverse(spec);
  CHECK(map.trace.branch == "full-rank-simplification");

  const DenseMatrix gy =
      add(multiply(multiply(f, spec.signal.moment), transpose(f)), spec.noise->moment);
  const DenseMatrix oracle =
      multiply(multiply(spec.signal.moment, transpose(f)), pseudoinverse(gy));
  CHECK(relative_frobenius_gap(oracle, map.A) < 1e-8);
}

TEST_CASE("inverse: rank-1 signal, closed form beats random candidates") {
  const DenseMatrix f = random_matrix(4, 4, 90);
  DenseMatrix v = random_matrix(4, 1, 91);
  const DenseMatrix gx = multiply(v, transpose(v));
  const DenseMatrix ge = random_spd(4, 92, 0.2);
  ProblemSpec spec;
  spec.kind = {Task::inverse, Form::linear};
  spec.forward_op = f;
  spec.signal = make_second_moment_model(gx);
  spec.noise = make_second_moment_model(ge);
  spec.rank = 1;
  const OptimalMap map = optimal_inverse(spec);
  Rng rng(93);
  for (int t = 0; t < 500; ++t) {
    DenseMatrix d(4, 1), e(1, 4);
    for (double& x : d.data()) x = rng.normal();
    for (double& x : e.data()) x = rng.normal();
    const double risk = bayes_risk(wrap_candidate(multiply(d, e), spec.kind), spec);
    CHECK(map.risk <= risk + 1e-9);
  }
}

TEST_CASE("inverse affine: zero mean gives zero bias") {
  const DenseMatrix f = random_matrix(3, 3, 100);
  const DenseMatrix sx = random_spd(3, 101);
  const DenseMatrix se = random_spd(3, 102, 0.1);
  ProblemSpec spec;
  spec.kind = {Task::inverse, Form::affine};
  spec.forward_op = f;
  spec.signal = make_covariance_model(sx, Vector(3, 0.0));
  spec.noise = make_second_moment_model(se);
  spec.rank = 2;
  const OptimalMap map = optimal_inverse_affine(spec);
  for (double b : *map.bias) CHECK(std::fabs(b) < 1e-10);
}

TEST_CASE("inverse affine: full rank recovers the Foster estimator") {
  const DenseMatrix f = random_matrix(4, 4, 110);
  const DenseMatrix sx = random_spd(4, 111);
  const DenseMatrix se = random_spd(4, 112, 0.1);
  Rng rng(113);
  Vector mu(4);
  for (double& x : mu) x = rng.normal();
  ProblemSpec spec;
  spec.kind = {Task::inverse, Form::affine};
  spec.forward_op = f;
  spec.signal = make_covariance_model(sx, mu);
  spec.noise = make_second_moment_model(se);
  spec.rank = 4;
  const OptimalMap map = optimal_inverse_affine(spec);
  CHECK(map.trace.branch == "foster-full-rank");

  const DenseMatrix sy =
      add(multiply(multiply(f, spec.signal.moment), transpose(f)), spec.noise->moment);
  const DenseMatrix foster =
      multiply(multiply(spec.signal.moment, transpose(f)), pseudoinverse(sy));
  CHECK(relative_frobenius_gap(foster, map.A) < 1e-8);
  const Vector expect_bias = multiply(subtract(DenseMatrix::identity(4), multiply(map.A, f)), mu);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK((*map.bias)[i] == doctest::Approx(expect_bias[i]).epsilon(1e-10));
}

TEST_CASE("inverse affine risk is at most the linear risk on the same distribution") {
  const DenseMatrix f = random_matrix(4, 4, 120);
  const DenseMatrix sx = random_spd(4, 121);
  const DenseMatrix se = random_spd(4, 122, 0.2);
  Rng rng(123);
  Vector mu(4);
  for (double& x : mu) x = rng.normal(0.0, 2.0);

  ProblemSpec affine;
  affine.kind = {Task::inverse, Form::affine};
  affine.forward_op = f;
  affine.signal = make_covariance_model(sx, mu);
  affine.noise = make_second_moment_model(se);
  affine.rank = 2;
  const OptimalMap am = optimal_inverse_affine(affine);

  // Linear solver sees the uncentered moment Γ = S + μμᵀ of the same variable.
  DenseMatrix gx = sx;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) gx(i, j) += mu[i] * mu[j];
  ProblemSpec linear;
  linear.kind = {Task::inverse, Form::linear};
  linear.forward_op = f;
  linear.signal = make_second_moment_model(gx);
  linear.noise = make_second_moment_model(se);
  linear.rank = 2;
  const OptimalMap lm = optimal_inverse(linear);

  const McEstimate mc_aff = monte_carlo_risk(am.A, am.bias, affine, 20000, 400);
  const McEstimate mc_lin = monte_carlo_risk(lm.A, std::nullopt, affine, 20000, 400);
  CHECK(mc_aff.mean <= mc_lin.mean + 3.0 * (mc_aff.stderr_ + mc_lin.stderr_));
}

TEST_CASE("autoencoder: identity recovery, projector algebra, factor split") {
  const DenseMatrix gx = random_spd(5, 130);
  ProblemSpec spec;
  spec.kind = {Task::autoencode, Form::linear};
  spec.signal = make_second_moment_model(gx);
  spec.rank = 5;
  const OptimalMap full = optimal_autoencoder(spec);
  CHECK(relative_frobenius_gap(DenseMatrix::identity(5), full.A) < 1e-8);
  CHECK(full.trace.branch == "identity-recovery");

  spec.rank = 2;
  const OptimalMap map = optimal_autoencoder(spec);
  CHECK(frobenius_norm(subtract(multiply(map.A, map.A), map.A)) < 1e-8);
  CHECK(frobenius_norm(subtract(map.A, transpose(map.A))) < 1e-8);

  // Encoder/decoder split is only unique up to an invertible latent transform.
  const SvdFactors fl = svd(spec.signal.factor.L);
  DenseMatrix ur(5, 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 5; ++i) ur(i, j) = fl.U(i, j);
  const DenseMatrix q = random_matrix(2, 2, 131);
  const DenseMatrix split = multiply(multiply(ur, q), multiply(pseudoinverse(q), transpose(ur)));
  CHECK(relative_frobenius_gap(map.A, split) < 1e-8);
}

TEST_CASE("denoiser: scalar Wiener case and SPD oracle") {
  ProblemSpec spec;
  spec.kind = {Task::denoise, Form::linear};
  spec.signal = make_second_moment_model(DenseMatrix::identity(4));
  spec.noise = make_second_moment_model(DenseMatrix::identity(4));
  spec.rank = 4;
  const OptimalMap map = optimal_denoiser(spec);
  CHECK(relative_frobenius_gap(scale(DenseMatrix::identity(4), 0.5), map.A) < 1e-10);
  CHECK(map.trace.branch == "wiener");

  const DenseMatrix gx = random_spd(5, 140);
  const DenseMatrix ge = random_spd(5, 141);
  ProblemSpec spd;
  spd.kind = {Task::denoise, Form::linear};
  spd.signal = make_second_moment_model(gx);
  spd.noise = make_second_moment_model(ge);
  spd.rank = 5;
  const OptimalMap wiener = optimal_denoiser(spd);
  const DenseMatrix oracle =
      multiply(spd.signal.moment, pseudoinverse(add(spd.signal.moment, spd.noise->moment)));
  CHECK(relative_frobenius_gap(oracle, wiener.A) < 1e-8);
}

TEST_CASE("denoiser with zero noise equals the autoencoder") {
  const DenseMatrix gx = random_spd(4, 150);
  ProblemSpec spec;
  spec.kind = {Task::denoise, Form::linear};
  spec.signal = make_second_moment_model(gx);
  spec.noise = make_second_moment_model(DenseMatrix(4, 4));
  spec.rank = 2;
  const OptimalMap den = optimal_denoiser(spec);

  ProblemSpec ae = spec;
  ae.kind = {Task::autoencode, Form::linear};
  ae.noise.reset();
  const OptimalMap proj = optimal_autoencoder(ae);
  CHECK(relative_frobenius_gap(proj.A, den.A) < 1e-8);
}

TEST_CASE("bayes_risk exact values and Monte-Carlo agreement") {
  const DenseMatrix f = random_matrix(4, 4, 160);
  const DenseMatrix gx = random_spd(4, 161);
  ProblemSpec clean = forward_spec(f, gx, std::nullopt, 4);
  CHECK(std::fabs(bayes_risk(wrap_candidate(f, clean.kind), clean)) < 1e-9);

  const DenseMatrix ge = random_spd(4, 162, 0.1);
  ProblemSpec noisy = forward_spec(f, gx, ge, 4);
  CHECK(bayes_risk(wrap_candidate(f, noisy.kind), noisy) ==
        doctest::Approx(trace(noisy.noise->moment)).epsilon(1e-10));

  ProblemSpec random_case = forward_spec(f, gx, ge, 2);
  const OptimalMap map = optimal_forward(random_case);
  const McEstimate mc = monte_carlo_risk(map.A, std::nullopt, random_case, 100000, 164);
  CHECK(std::fabs(mc.mean - map.risk) <= 3.0 * mc.stderr_);
}

TEST_CASE("risk is nonincreasing in rank for every kind") {
  const DenseMatrix f = random_matrix(5, 5, 170);
  const DenseMatrix gx = random_spd(5, 171);
  const DenseMatrix ge = random_spd(5, 172, 0.1);
  for (Task task : {Task::forward, Task::inverse, Task::autoencode, Task::denoise}) {
    ProblemSpec spec;
    spec.kind = {task, Form::linear};
    if (task == Task::forward || task == Task::inverse) spec.forward_op = f;
    spec.signal = make_second_moment_model(gx);
    if (task != Task::autoencode) spec.noise = make_second_moment_model(ge);
    double prev = 0.0;
    for (std::size_t r = 1; r <= 5; ++r) {
      spec.rank = r;
      const OptimalMap map = solve(spec);
      CHECK(map.risk >= -1e-10);
      if (r > 1) CHECK(map.risk <= prev + 1e-10);
      prev = map.risk;
    }
  }
}

TEST_CASE("forward/inverse duality: identity operator, no noise, same projector") {
  const DenseMatrix gx = random_spd(4, 180);
  const DenseMatrix eye = DenseMatrix::identity(4);
  const std::size_t r = 2;

  ProblemSpec fwd = forward_spec(eye, gx, std::nullopt, r);
  ProblemSpec inv = fwd;
  inv.kind = {Task::inverse, Form::linear};
  ProblemSpec ae;
  ae.kind = {Task::autoencode, Form::linear};
  ae.signal = make_second_moment_model(gx);
  ae.rank = r;
  ProblemSpec den = ae;
  den.kind = {Task::denoise, Form::linear};
  den.noise = make_second_moment_model(DenseMatrix(4, 4));

  const DenseMatrix a_fwd = optimal_forward(fwd).A;
  const DenseMatrix a_inv = optimal_inverse(inv).A;
  const DenseMatrix a_ae = optimal_autoencoder(ae).A;
  const DenseMatrix a_den = optimal_denoiser(den).A;
  CHECK(relative_frobenius_gap(a_ae, a_fwd) < 1e-8);
  CHECK(relative_frobenius_gap(a_ae, a_inv) < 1e-8);
  CHECK(relative_frobenius_gap(a_ae, a_den) < 1e-8);
}

TEST_CASE("affine centering: affine map on centered data equals linear map plus bias") {
  const DenseMatrix f = random_matrix(4, 4, 185);
  const DenseMatrix sx = random_spd(4, 186);
  Rng rng(187);
  Vector mu(4);
  for (double& x : mu) x = rng.normal();

  ProblemSpec affine;
  affine.kind = {Task::forward, Form::affine};
  affine.forward_op = f;
  affine.signal = make_covariance_model(sx, mu);
  affine.rank = 2;
  const OptimalMap am = optimal_forward_affine(affine);

  ProblemSpec linear = forward_spec(f, sx, std::nullopt, 2);
  const OptimalMap lm = optimal_forward(linear);
  CHECK(relative_frobenius_gap(lm.A, am.A) < 1e-8);

  // On a centered draw x̄ the affine prediction is A x̄ + A μ + b.
  Vector xbar(4);
  for (double& v : xbar) v = rng.normal();
  Vector affine_pred = multiply(am.A, xbar);
  const Vector shift = multiply(am.A, mu);
  for (std::size_t i = 0; i < 4; ++i) affine_pred[i] += shift[i] + (*am.bias)[i];
  Vector linear_pred = multiply(lm.A, xbar);
  const Vector fmu = multiply(f, mu);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(affine_pred[i] == doctest::Approx(linear_pred[i] + fmu[i]).epsilon(1e-8));
}

TEST_CASE("clamping past the spectrum is recorded, not an error") {
  DenseMatrix low = random_matrix(4, 2, 190);
  const DenseMatrix gx = multiply(low, transpose(low));
  ProblemSpec spec;
  spec.kind = {Task::autoencode, Form::linear};
  spec.signal = make_second_moment_model(gx);
  spec.rank = 4;
  const OptimalMap map = optimal_autoencoder(spec);
  CHECK(map.trace.clamped);
  CHECK(map.rank == 2);
}

TEST_CASE("uniqueness flag drops on tied spectra") {
  ProblemSpec spec;
  spec.kind = {Task::autoencode, Form::linear};
  spec.signal = make_second_moment_model(DenseMatrix::identity(4));
  spec.rank = 2;
  const OptimalMap map = optimal_autoencoder(spec);
  CHECK_FALSE(map.trace.unique);
}

TEST_CASE("contract violations raise errors") {
  const DenseMatrix gx = random_spd(3, 200);
  ProblemSpec spec;
  spec.kind = {Task::forward, Form::linear};
  spec.signal = make_second_moment_model(gx);
  spec.rank = 1;
  CHECK_THROWS_AS(optimal_forward(spec), ContractError);  // missing operator

  spec.forward_op = random_matrix(3, 3, 201);
  spec.kind = {Task::forward, Form::affine};
  CHECK_THROWS_AS(optimal_forward_affine(spec), ContractError);  // uncentered for affine

  ProblemSpec bad_dims;
  bad_dims.kind = {Task::forward, Form::linear};
  bad_dims.forward_op = random_matrix(3, 4, 202);
  bad_dims.signal = make_second_moment_model(gx);
  bad_dims.rank = 1;
  CHECK_THROWS_AS(optimal_forward(bad_dims), DimensionError);

  const OptimalMap ok = optimal_forward(forward_spec(random_matrix(3, 3, 203), gx, {}, 2));
  ProblemSpec mismatched = forward_spec(random_matrix(3, 3, 203), gx, {}, 2);
  mismatched.kind = {Task::inverse, Form::linear};
  CHECK_THROWS_AS(bayes_risk(ok, mismatched), ContractError);
}

}  // TEST_SUITE
