// stochastic.cpp: noise generation, trajectories and the ensemble mean

#include "qle/stochastic.hpp"
#include "qle/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace qle {

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t x = master + index;
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

NoiseGenerator::NoiseGenerator(const ExponentialKernel& kernel, const TimeGrid& grid)
    : grid_(grid)
{
    if (grid.points == 0) throw ConfigError("noise grid has no points");
    if (grid.points > 10'000) throw ConfigError("noise grid limited to 10^4 points (dense covariance)");
    if (!(grid.step > 0.0) || !std::isfinite(grid.step)) throw ConfigError("noise grid step must be > 0");

    const auto n = static_cast<Eigen::Index>(grid.points);
    Eigen::MatrixXcd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            c(i, j) = kernel(grid.step * static_cast<double>(i - j));

    Eigen::LLT<Eigen::MatrixXcd> llt(c);
    if (llt.info() != Eigen::Success) {
        c.diagonal().array() += 1e-12 * kernel.amplitude();
        llt.compute(c);
        jittered_ = true;
        if (llt.info() != Eigen::Success)
            throw KernelError("noise covariance is not positive definite even with 1e-12 jitter");
    }
    factor_ = llt.matrixL();
}

void NoiseGenerator::generate_into(std::uint64_t seed, std::vector<cplx>& z, std::vector<cplx>& scratch) const
{
    const std::size_t n = grid_.points;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double s = std::sqrt(0.5);
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        scratch[i] = cplx(s * re, s * im);
    }
    z.resize(n);
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::Map<Eigen::VectorXcd> out(z.data(), m);
    const Eigen::Map<const Eigen::VectorXcd> u(scratch.data(), m);
    out.noalias() = factor_.triangularView<Eigen::Lower>() * u;
}

NoisePath NoiseGenerator::generate(std::uint64_t seed) const
{
    NoisePath path;
    path.grid = grid_;
    path.seed = seed;
    std::vector<cplx> scratch;
    generate_into(seed, path.z, scratch);
    return path;
}

NoisePath generate_noise(const ExponentialKernel& kernel, const TimeGrid& grid, std::uint64_t seed)
{
    return NoiseGenerator(kernel, grid).generate(seed);
}

Q0Series Q0Series::from(const Propagation& p)
{
    if (p.q0.size() < 2) throw ConfigError("propagation recorded fewer than two Q_0 samples");
    Q0Series out;
    out.step = p.q0_time[1] - p.q0_time[0];
    out.values = p.q0;
    return out;
}

TimeSeries Trajectory::real_part() const
{
    TimeSeries out;
    for (std::size_t i = 0; i < t.size(); ++i)
        out.push(t[i], bloch[i].real(), bloch[i].imag().cwiseAbs().maxCoeff());
    return out;
}

namespace {

// Trajectory stepping without per-call allocation; the ensemble loop calls
// this once per trajectory.
void integrate(const SystemSpec& sys, const TimeGrid& grid, const std::vector<cplx>& z,
               const Q0Series& q0, std::vector<Vec3>& out)
{
    const std::size_t n = grid.points;
    const double h = grid.step;
    const Mat3 l = generator_l();
    const bool freeze = sys.correction == Correction::sigma_x_freeze && !sys.kernel.is_real();

    auto generator = [&](double t, cplx zt, const Mat3& q) {
        Mat3 g = -cplx(0.0, 1.0) * generator_h(sys.splitting) + l * zt + l * q;
        if (freeze) g += -cplx(0.0, 1.0) * generator_v(hamiltonian_shift(sys.kernel, t));
        return g;
    };

    out.resize(n);
    Vec3 a = sys.initial.cast<cplx>();
    out[0] = a;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t0 = grid.at(i);
        const cplx zm = 0.5 * (z[i] + z[i + 1]);
        const Mat3 g0 = generator(t0, z[i], q0.values[2 * i]);
        const Mat3 gm = generator(t0 + 0.5 * h, zm, q0.values[2 * i + 1]);
        const Mat3 g1 = generator(t0 + h, z[i + 1], q0.values[2 * i + 2]);
        const Vec3 k1 = g0 * a;
        const Vec3 k2 = gm * (a + 0.5 * h * k1);
        const Vec3 k3 = gm * (a + 0.5 * h * k2);
        const Vec3 k4 = g1 * (a + h * k3);
        a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out[i + 1] = a;
    }
}

void check_cover(const TimeGrid& grid, const Q0Series& q0)
{
    const double want = 0.5 * grid.step;
    if (std::abs(q0.step - want) > 1e-9 * want) {
        std::ostringstream msg;
        msg << "Q_0 series spacing " << q0.step << " does not match half the noise step " << want;
        throw ConfigError(msg.str());
    }
    if (grid.points == 0 || q0.values.size() < 2 * (grid.points - 1) + 1)
        throw ConfigError("Q_0 series does not cover the noise grid");
}

struct BlockStats {
    double count = 0.0;
    std::vector<Vec3r> mean, m2, mean_im;

    void resize(std::size_t points)
    {
        mean.assign(points, Vec3r::Zero());
        m2.assign(points, Vec3r::Zero());
        mean_im.assign(points, Vec3r::Zero());
    }

    void add(const std::vector<Vec3>& a)
    {
        count += 1.0;
        for (std::size_t p = 0; p < a.size(); ++p) {
            const Vec3r x = a[p].real();
            const Vec3r delta = x - mean[p];
            mean[p] += delta / count;
            m2[p] += delta.cwiseProduct(x - mean[p]);
            mean_im[p] += (a[p].imag() - mean_im[p]) / count;
        }
    }
};

BlockStats merge(const BlockStats& a, const BlockStats& b)
{
    BlockStats out;
    out.count = a.count + b.count;
    out.resize(a.mean.size());
    const double wa = a.count / out.count;
    const double wb = b.count / out.count;
    for (std::size_t p = 0; p < a.mean.size(); ++p) {
        const Vec3r delta = b.mean[p] - a.mean[p];
        out.mean[p] = wa * a.mean[p] + wb * b.mean[p];
        out.m2[p] = a.m2[p] + b.m2[p] + delta.cwiseProduct(delta) * (a.count * wb);
        out.mean_im[p] = wa * a.mean_im[p] + wb * b.mean_im[p];
    }
    return out;
}

BlockStats reduce_pairwise(std::vector<BlockStats>& blocks, std::size_t lo, std::size_t hi)
{
    if (hi - lo == 1) return std::move(blocks[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    const BlockStats left = reduce_pairwise(blocks, lo, mid);
    const BlockStats right = reduce_pairwise(blocks, mid, hi);
    return merge(left, right);
}

constexpr std::size_t kBlock = 64;

} // namespace

Trajectory trajectory(const SystemSpec& sys, const NoisePath& path, const Q0Series& q0)
{
    sys.validate();
    if (path.z.size() != path.grid.points) throw ConfigError("noise path length does not match its grid");
    check_cover(path.grid, q0);
    Trajectory out;
    integrate(sys, path.grid, path.z, q0, out.bloch);
    out.t.resize(path.grid.points);
    for (std::size_t i = 0; i < out.t.size(); ++i) out.t[i] = path.grid.at(i);
    return out;
}

EnsembleResult ensemble_mean(const SystemSpec& sys, const EnsembleOptions& opts)
{
    sys.validate();
    if (opts.n_traj < 1) throw ConfigError("n_traj must be >= 1");
    if (!(opts.noise_step > 0.0) || !(opts.hierarchy_dt > 0.0))
        throw InputError("noise_step and hierarchy_dt must be > 0");
    if (!(opts.t_max > 0.0) || !std::isfinite(opts.t_max)) throw InputError("t_max must be > 0");

    const double intervals = opts.t_max / opts.noise_step;
    const double q0_ratio = 0.5 * opts.noise_step / opts.hierarchy_dt;
    if (std::abs(intervals - std::round(intervals)) > 1e-9 * intervals)
        throw ConfigError("t_max must be a whole number of noise steps");
    if (std::abs(q0_ratio - std::round(q0_ratio)) > 1e-9 * q0_ratio || std::round(q0_ratio) < 1)
        throw ConfigError("half the noise step must be a whole number of hierarchy steps");

    TimeGrid grid{opts.noise_step, static_cast<std::size_t>(std::llround(intervals)) + 1};

    PropagateOptions popts;
    popts.order = opts.order;
    popts.dt = opts.hierarchy_dt;
    popts.t_max = grid.end();
    popts.stride = static_cast<int>(std::llround(2.0 * q0_ratio));
    popts.q0_stride = static_cast<int>(std::llround(q0_ratio));

    EnsembleResult result;
    result.hierarchy = propagate(sys, popts);
    const Q0Series q0 = Q0Series::from(result.hierarchy);
    check_cover(grid, q0);

    const NoiseGenerator noise(sys.kernel, grid);
    const std::size_t n_blocks = (opts.n_traj + kBlock - 1) / kBlock;
    std::vector<BlockStats> blocks(n_blocks);

    auto run_block = [&](std::size_t b) {
        std::vector<cplx> z, scratch;
        std::vector<Vec3> a;
        BlockStats& st = blocks[b];
        st.resize(grid.points);
        const std::size_t end = std::min(opts.n_traj, (b + 1) * kBlock);
        for (std::size_t j = b * kBlock; j < end; ++j) {
            noise.generate_into(trajectory_seed(opts.seed, j), z, scratch);
            integrate(sys, grid, z, q0, a);
            st.add(a);
        }
    };

    if (opts.parallel) {
        const auto nb = static_cast<std::int64_t>(n_blocks);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t b = 0; b < nb; ++b) run_block(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    }

    const BlockStats total = reduce_pairwise(blocks, 0, n_blocks);
    const double n = total.count;
    TimeSeries& series = result.series;
    double worst_imag = 0.0;
    for (std::size_t p = 0; p < grid.points; ++p) {
        const double imag = total.mean_im[p].cwiseAbs().maxCoeff();
        worst_imag = std::max(worst_imag, imag);
        series.push(grid.at(p), total.mean[p], imag);
        const Vec3r se = n > 1.0 ? Vec3r((total.m2[p] / (n - 1.0) / n).cwiseSqrt()) : Vec3r::Zero();
        series.std_error.push_back(se);
    }
    result.mean_imag = total.mean_im;
    series.diagnostics["n_traj"] = n;
    series.diagnostics["max_mean_imag"] = worst_imag;
    series.diagnostics["covariance_jitter"] = noise.jittered() ? 1.0 : 0.0;
    if (!std::all_of(series.bloch.begin(), series.bloch.end(), [](const Vec3r& v) { return v.allFinite(); }))
        throw IntegrationError("ensemble mean is not finite", grid.end());
    return result;
}

} // namespace qle
