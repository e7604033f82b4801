#include "rkmp/swe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rkmp/datagen.hpp"
#include "rkmp/errors.hpp"
#include "rkmp/kernels.hpp"

namespace rkmp {

namespace {

void step_columns(const SweState& s, const SweParams& p, SweState& out, DenseMatrix& flux_x,
                  DenseMatrix& flux_y, bool parallel) {
  const std::ptrdiff_t n1 = static_cast<std::ptrdiff_t>(p.n1);
  const std::ptrdiff_t n2 = static_cast<std::ptrdiff_t>(p.n2);
  const double dt = cfl_timestep(p);
  const double gx = p.g * dt / p.dx1();
  const double gy = p.g * dt / p.dx2();
  const double half_len = 0.5 * p.domain_len;

  // Phase 1: provisional velocities from forward η differences, then the
  // Coriolis correction using the provisional pair. Walls pin the normal
  // component.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t j = 0; j < n2; ++j) {
    const double f_cor = p.f0 + p.beta * (static_cast<double>(j) * p.dx2() - half_len);
    for (std::ptrdiff_t i = 0; i < n1; ++i) {
      const double ustar =
          i < n1 - 1 ? s.u(i, j) - gx * (s.eta(i + 1, j) - s.eta(i, j)) : 0.0;
      const double vstar =
          j < n2 - 1 ? s.v(i, j) - gy * (s.eta(i, j + 1) - s.eta(i, j)) : 0.0;
      out.u(i, j) = i < n1 - 1 ? ustar + dt * f_cor * vstar : 0.0;
      out.v(i, j) = j < n2 - 1 ? vstar - dt * f_cor * ustar : 0.0;
    }
  }

  // Phase 2: upwind fluxes of the total depth at cell faces.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t j = 0; j < n2; ++j) {
    for (std::ptrdiff_t i = 0; i < n1; ++i) {
      if (i < n1 - 1) {
        const double uf = out.u(i, j);
        const double h = p.depth + (uf > 0.0 ? s.eta(i, j) : s.eta(i + 1, j));
        flux_x(i, j) = uf * h;
      }
      if (j < n2 - 1) {
        const double vf = out.v(i, j);
        const double h = p.depth + (vf > 0.0 ? s.eta(i, j) : s.eta(i, j + 1));
        flux_y(i, j) = vf * h;
      }
    }
  }

  // Phase 3: continuity update; boundary faces carry zero flux.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t j = 0; j < n2; ++j) {
    for (std::ptrdiff_t i = 0; i < n1; ++i) {
      const double fe = i < n1 - 1 ? flux_x(i, j) : 0.0;
      const double fw = i > 0 ? flux_x(i - 1, j) : 0.0;
      const double fn = j < n2 - 1 ? flux_y(i, j) : 0.0;
      const double fs = j > 0 ? flux_y(i, j - 1) : 0.0;
      out.eta(i, j) = s.eta(i, j) - dt * ((fe - fw) / p.dx1() + (fn - fs) / p.dx2());
    }
  }
}

SweState step_impl(const SweState& s, const SweParams& p, bool parallel) {
  if (s.u.rows() != p.n1 || s.u.cols() != p.n2 || s.v.rows() != p.n1 || s.eta.rows() != p.n1)
    throw DimensionError("swe_step: state grids do not match the parameter grid");
  SweState out;
  out.u = DenseMatrix(p.n1, p.n2);
  out.v = DenseMatrix(p.n1, p.n2);
  out.eta = DenseMatrix(p.n1, p.n2);
  out.time_step = s.time_step + 1;
  DenseMatrix flux_x(p.n1, p.n2), flux_y(p.n1, p.n2);
  step_columns(s, p, out, flux_x, flux_y, parallel);
  return out;
}

double fraction_to_x(double frac, const SweParams& p) { return frac * p.domain_len; }

}  // namespace

SweParams desk_swe_params() {
  SweParams p;
  p.n1 = 16;
  p.n2 = 16;
  return p;
}

void validate(const SweParams& p) {
  if (p.g <= 0.0 || p.depth <= 0.0 || p.domain_len <= 0.0)
    throw ContractError("SweParams: physical constants must be positive");
  if (p.n1 < 2 || p.n2 < 2) throw ContractError("SweParams: grid must be at least 2x2");
  if (p.cfl_fraction <= 0.0 || p.cfl_fraction > 1.0)
    throw ContractError("SweParams: cfl_fraction must lie in (0, 1]");
  if (p.f0 < 0.0 || p.beta < 0.0) throw ContractError("SweParams: Coriolis terms must be >= 0");
}

double cfl_timestep(const SweParams& p) {
  validate(p);
  const double dx = std::min(p.dx1(), p.dx2());
  return p.cfl_fraction * dx / std::sqrt(p.g * p.depth);
}

SweState flat_state(const SweParams& p) {
  SweState s;
  s.u = DenseMatrix(p.n1, p.n2);
  s.v = DenseMatrix(p.n1, p.n2);
  s.eta = DenseMatrix(p.n1, p.n2);
  return s;
}

SweState swe_step(const SweState& s, const SweParams& p) {
  return step_impl(s, p, kernels::parallel_enabled());
}

SweState swe_step_serial(const SweState& s, const SweParams& p) {
  return step_impl(s, p, false);
}

bool is_out_of_distribution(IcFamily family) {
  return family == IcFamily::ring_wave || family == IcFamily::step_wave;
}

SweState make_initial_state(const InitialConditionSpec& ic, const SweParams& p) {
  validate(p);
  SweState s = flat_state(p);
  const double cx = fraction_to_x(ic.center_x, p);
  const double cy = fraction_to_x(ic.center_y, p);
  const double w = std::max(ic.width * p.domain_len, 1e-6 * p.domain_len);
  const double a = ic.amplitude;

  auto bump = [&](double x, double y, double bx, double by) {
    const double dx = x - bx;
    const double dy = y - by;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
  };

  for (std::size_t j = 0; j < p.n2; ++j) {
    const double y = static_cast<double>(j) * p.dx2();
    for (std::size_t i = 0; i < p.n1; ++i) {
      const double x = static_cast<double>(i) * p.dx1();
      switch (ic.family) {
        case IcFamily::gaussian_bump_eta:
          s.eta(i, j) = a * bump(x, y, cx, cy);
          break;
        case IcFamily::gaussian_dipole_eta:
          s.eta(i, j) = a * (bump(x, y, cx - 1.5 * w, cy) - bump(x, y, cx + 1.5 * w, cy));
          break;
        case IcFamily::velocity_jet:
          s.u(i, j) = 0.3 * a * std::exp(-(y - cy) * (y - cy) / (2.0 * w * w));
          break;
        case IcFamily::mixed_uv_eta:
          s.eta(i, j) = a * bump(x, y, cx, cy);
          s.u(i, j) = 0.2 * a * bump(x, y, cx - 1.5 * w, cy + 1.5 * w);
          s.v(i, j) = -0.15 * a * bump(x, y, cx + 1.5 * w, cy - 1.5 * w);
          break;
        case IcFamily::ring_wave: {
          const double rho = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
          const double r0 = 2.5 * w;
          s.eta(i, j) = a * std::exp(-(rho - r0) * (rho - r0) / (2.0 * w * w));
          break;
        }
        case IcFamily::step_wave: {
          const double edge = (cx - x) / (0.5 * w);
          s.eta(i, j) = 0.5 * a * (1.0 + std::tanh(edge));
          break;
        }
      }
    }
  }
  // Solid walls: pin the normal components.
  for (std::size_t j = 0; j < p.n2; ++j) s.u(p.n1 - 1, j) = 0.0;
  for (std::size_t i = 0; i < p.n1; ++i) s.v(i, p.n2 - 1) = 0.0;
  return s;
}

InitialConditionSpec random_initial_condition(IcFamily family, Rng& rng) {
  InitialConditionSpec ic;
  ic.family = family;
  ic.amplitude = rng.uniform(0.5, 1.5);
  // The unseen families cover a far larger area per unit amplitude; scale
  // them down so their state energy stays in the range of the training set.
  if (family == IcFamily::ring_wave) ic.amplitude *= 0.5;
  if (family == IcFamily::step_wave) ic.amplitude *= 0.25;
  ic.center_x = rng.uniform(0.3, 0.7);
  ic.center_y = rng.uniform(0.3, 0.7);
  ic.width = rng.uniform(0.05, 0.09);
  return ic;
}

std::vector<SweState> simulate(const InitialConditionSpec& ic, const SweParams& p,
                               const std::vector<std::size_t>& extract_steps) {
  for (std::size_t i = 1; i < extract_steps.size(); ++i)
    if (extract_steps[i] <= extract_steps[i - 1])
      throw ContractError("simulate: extract_steps must be sorted ascending");

  std::vector<SweState> snapshots;
  SweState state = make_initial_state(ic, p);
  std::size_t next = 0;
  if (next < extract_steps.size() && extract_steps[next] == 0) {
    snapshots.push_back(state);
    ++next;
  }
  const std::size_t last = extract_steps.empty() ? 0 : extract_steps.back();
  for (std::size_t step = 1; step <= last; ++step) {
    state = swe_step(state, p);
    if (!state.eta.all_finite() || !state.u.all_finite() || !state.v.all_finite())
      throw InstabilityError("simulate: non-finite state at step " + std::to_string(step));
    if (next < extract_steps.size() && extract_steps[next] == step) {
      snapshots.push_back(state);
      ++next;
    }
  }
  return snapshots;
}

Vector vectorize_state(const SweState& s) {
  const std::size_t n = s.u.rows() * s.u.cols();
  Vector out(3 * n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = s.u.data()[k];
    out[n + k] = s.v.data()[k];
    out[2 * n + k] = s.eta.data()[k];
  }
  return out;
}

SweDataset build_swe_dataset(std::size_t count_per_family, const std::vector<IcFamily>& families,
                             const SweParams& p, std::size_t final_step, double noise_std,
                             std::uint64_t seed) {
  if (families.empty()) throw ContractError("build_swe_dataset: families must be nonempty");
  if (count_per_family < 1) throw ContractError("build_swe_dataset: count_per_family must be >= 1");
  validate(p);

  const std::size_t n = p.n1 * p.n2;
  const std::size_t total = count_per_family * families.size();
  SweDataset out;
  out.n1 = p.n1;
  out.n2 = p.n2;
  out.u_begin = 0;
  out.u_end = n;
  out.v_begin = n;
  out.v_end = 2 * n;
  out.eta_begin = 2 * n;
  out.eta_end = 3 * n;

  DenseMatrix x(3 * n, total);
  DenseMatrix y(3 * n, total);
  Rng base(seed);
  std::size_t col = 0;
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    for (std::size_t c = 0; c < count_per_family; ++c, ++col) {
      Rng rng = base.split(col);
      const InitialConditionSpec ic = random_initial_condition(families[fi], rng);
      const std::vector<SweState> snaps = simulate(ic, p, {0, final_step});
      const Vector x0 = vectorize_state(snaps.front());
      const Vector x1 = vectorize_state(snaps.back());
      for (std::size_t i = 0; i < 3 * n; ++i) {
        x(i, col) = x0[i];
        y(i, col) = x1[i];
      }
    }
  }
  if (noise_std > 0.0) y = add_white_noise(y, noise_std, base.split(0xC0FFEE).next_u64());
  out.data = DataSet{std::move(x), std::move(y)};
  return out;
}

}  // namespace rkmp
