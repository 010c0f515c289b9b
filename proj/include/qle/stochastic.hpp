// stochastic.hpp: Monte Carlo route: colored complex Gaussian noise z_t with
// M{z_t conj(z_s)} = alpha(t - s), M{z_t z_s} = 0, and trajectories of
//
//   dA/dt = [-i H + L z_t + L Q_0(t)] A
//
// whose ensemble mean reproduces the noiseless Bloch equation.

#pragma once

#include "qle/correlations.hpp"
#include "qle/hierarchy.hpp"
#include "qle/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qle {

struct TimeGrid {
    double step = 0.05;
    std::size_t points = 601;

    double at(std::size_t i) const noexcept { return step * static_cast<double>(i); }
    double end() const noexcept { return points == 0 ? 0.0 : at(points - 1); }
};

struct NoisePath {
    TimeGrid grid;
    std::vector<cplx> z;
    std::uint64_t seed = 0;
};

// splitmix64 finalizer of (master + index): the sub-seed for trajectory
// `index` of an ensemble started from `master`.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

// Cholesky factor of C_ij = alpha(t_i - t_j), computed once and reused for
// every path on the same grid. Immutable after construction.
class NoiseGenerator {
public:
    // Throws ConfigError for an empty grid or more than 10^4 points and
    // KernelError if C is not positive definite even after 1e-12 jitter.
    NoiseGenerator(const ExponentialKernel& kernel, const TimeGrid& grid);

    const TimeGrid& grid() const noexcept { return grid_; }
    bool jittered() const noexcept { return jittered_; }

    // z = F u with u_i = (n1 + i n2) / sqrt(2), n ~ N(0, 1) from mt19937_64(seed).
    NoisePath generate(std::uint64_t seed) const;
    void generate_into(std::uint64_t seed, std::vector<cplx>& z, std::vector<cplx>& scratch) const;

private:
    TimeGrid grid_;
    Eigen::MatrixXcd factor_; // lower triangular
    bool jittered_ = false;
};

NoisePath generate_noise(const ExponentialKernel& kernel, const TimeGrid& grid, std::uint64_t seed);

// Q_0 sampled at half the noise step, as produced by propagate with
// q0_stride chosen so q0_time spacing is grid.step / 2.
struct Q0Series {
    double step = 0.0;
    std::vector<Mat3> values;

    static Q0Series from(const Propagation& p);
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec3> bloch; // complex per-trajectory A(t)

    TimeSeries real_part() const;
};

// RK4 with the noise step; z is linearly interpolated to the midpoint.
// Throws ConfigError if q0 does not cover the path grid at half spacing.
Trajectory trajectory(const SystemSpec& sys, const NoisePath& path, const Q0Series& q0);

struct EnsembleOptions {
    std::size_t n_traj = 10'000;
    std::uint64_t seed = 1;
    int order = 10;          // hierarchy order used for Q_0
    double noise_step = 0.05;
    double t_max = 30.0;
    double hierarchy_dt = 1e-3;
    bool parallel = true;
};

struct EnsembleResult {
    TimeSeries series;            // mean of Re A with standard errors
    std::vector<Vec3r> mean_imag; // mean of Im A, diagnostic only
    Propagation hierarchy;        // the run that supplied Q_0
};

// Trajectories are grouped in fixed blocks of 64; each block is reduced in
// index order and block statistics are merged pairwise in block order, so
// serial and parallel results are bit-identical.
EnsembleResult ensemble_mean(const SystemSpec& sys, const EnsembleOptions& opts);

} // namespace qle
