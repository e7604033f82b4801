#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rkmp/dense.hpp"
#include "rkmp/empirical.hpp"
#include "rkmp/rng.hpp"

namespace rkmp {

// Physical and numerical parameters of the simplified shallow-water system.
// Grid nodes sit at x_i = i·Δx with Δx = domain_len/(n−1); the reference
// 64×64 grid over 10⁶ m gives Δx = 15873.02 m.
struct SweParams {
  double g = 9.8;            // m/s²
  double depth = 100.0;      // mean depth H, m
  double f0 = 1e-4;          // 1/s
  double beta = 2e-11;       // 1/(m·s)
  double domain_len = 1e6;   // m per axis
  std::size_t n1 = 64;
  std::size_t n2 = 64;
  double cfl_fraction = 0.1;

  double dx1() const { return domain_len / static_cast<double>(n1 - 1); }
  double dx2() const { return domain_len / static_cast<double>(n2 - 1); }
};

// Desk-scale preset used by tests: 16×16 grid, reference constants otherwise.
SweParams desk_swe_params();

void validate(const SweParams& p);

// cfl_fraction · min(Δx₁, Δx₂) / √(g·H).
double cfl_timestep(const SweParams& p);

struct SweState {
  DenseMatrix u;    // m/s, n1×n2
  DenseMatrix v;    // m/s
  DenseMatrix eta;  // m, deviation from mean depth
  std::size_t time_step = 0;
};

SweState flat_state(const SweParams& p);

// One Δt advance: provisional u,v by forward-time/forward-space pressure
// gradients (no Coriolis), Coriolis correction from the provisional pair
// with f = f0 + β·(y − L/2), then the continuity update in flux form with
// upwind total depth (η + H) at cell faces. Solid walls: normal velocity
// pinned to zero, zero flux through the boundary.
SweState swe_step(const SweState& s, const SweParams& p);
// Serial reference; the OpenMP path must match it bitwise.
SweState swe_step_serial(const SweState& s, const SweParams& p);

enum class IcFamily {
  gaussian_bump_eta,
  gaussian_dipole_eta,
  velocity_jet,
  mixed_uv_eta,
  ring_wave,   // out of distribution
  step_wave,   // out of distribution
};

bool is_out_of_distribution(IcFamily family);

// Geometry is expressed as fractions of the domain length.
struct InitialConditionSpec {
  IcFamily family = IcFamily::gaussian_bump_eta;
  double amplitude = 1.0;  // meters for η families, scaled for velocity fields
  double center_x = 0.5;
  double center_y = 0.5;
  double width = 0.06;
  std::uint64_t seed = 0;
};

SweState make_initial_state(const InitialConditionSpec& ic, const SweParams& p);

// Randomized spec with centers in the middle of the domain and documented
// amplitude/width ranges.
InitialConditionSpec random_initial_condition(IcFamily family, Rng& rng);

// Snapshots at the requested (sorted ascending) steps. Raises
// InstabilityError naming the step if the state stops being finite.
std::vector<SweState> simulate(const InitialConditionSpec& ic, const SweParams& p,
                               const std::vector<std::size_t>& extract_steps);

// Vectorized dataset: X columns are initial states, Y columns are (noisy)
// final states, rows ordered [u; v; η] with the recorded ranges.
struct SweDataset {
  DataSet data;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t u_begin = 0, u_end = 0;
  std::size_t v_begin = 0, v_end = 0;
  std::size_t eta_begin = 0, eta_end = 0;
};

SweDataset build_swe_dataset(std::size_t count_per_family, const std::vector<IcFamily>& families,
                             const SweParams& p, std::size_t final_step, double noise_std,
                             std::uint64_t seed);

Vector vectorize_state(const SweState& s);

}  // namespace rkmp
