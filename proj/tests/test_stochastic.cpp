#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qle/error.hpp"
#include "qle/stochastic.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace qle;

namespace {

SystemSpec ou_bath()
{
    SystemSpec s;
    s.kernel = ExponentialKernel::ornstein_uhlenbeck(1.0, 0.2);
    return s;
}

// Q_0 on half the noise step, straight from the hierarchy.
Propagation q0_run(const SystemSpec& sys, const TimeGrid& grid, int order = 10, double dt = 1e-3)
{
    PropagateOptions o;
    o.order = order;
    o.dt = dt;
    o.t_max = grid.end();
    o.q0_stride = static_cast<int>(std::lround(0.5 * grid.step / dt));
    o.stride = 2 * o.q0_stride;
    return propagate(sys, o);
}

// Plain RK4 for dA/dt = (-i H + L z + L Q_0) A, written out with the test's
// own generator matrices.
std::vector<Vec3> reference_trajectory(const SystemSpec& sys, const NoisePath& path, const Q0Series& q0)
{
    const Mat3 h = -cplx(0.0, 1.0) * support::h_matrix(sys.splitting);
    const Mat3 l = support::l_matrix();
    auto gen = [&](cplx z, const Mat3& q) -> Mat3 { return h + l * z + l * q; };
    std::vector<Vec3> out{sys.initial.cast<cplx>()};
    Vec3 a = out[0];
    const double dt = path.grid.step;
    for (std::size_t i = 0; i + 1 < path.grid.points; ++i) {
        const cplx zm = 0.5 * (path.z[i] + path.z[i + 1]);
        const Vec3 k1 = gen(path.z[i], q0.values[2 * i]) * a;
        const Vec3 k2 = gen(zm, q0.values[2 * i + 1]) * (a + 0.5 * dt * k1);
        const Vec3 k3 = gen(zm, q0.values[2 * i + 1]) * (a + 0.5 * dt * k2);
        const Vec3 k4 = gen(path.z[i + 1], q0.values[2 * i + 2]) * (a + dt * k3);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push_back(a);
    }
    return out;
}

struct Moments {
    cplx mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<cplx>& x)
{
    Moments m;
    for (auto v : x) m.mean += v;
    m.mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (auto v : x) var += std::norm(v - m.mean);
    m.se = std::sqrt(var / (x.size() - 1.0) / x.size());
    return m;
}

} // namespace

TEST_CASE("trajectory seeds are distinct and reproducible")
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(trajectory_seed(7, i));
    CHECK(seen.size() == 10000);
    CHECK(trajectory_seed(7, 3) == trajectory_seed(7, 3));
    CHECK(trajectory_seed(7, 3) != trajectory_seed(8, 3));
}

TEST_CASE("noise statistics for the reference kernel")
{
    const ExponentialKernel k(0.1, 0.2);
    const NoiseGenerator gen(k, TimeGrid{});
    CHECK_FALSE(gen.jittered());
    const std::size_t n = 10000;
    const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 0}, {0, 20}, {100, 140}, {300, 300}, {600, 500}};
    std::vector<std::vector<cplx>> cross(pairs.size()), same(pairs.size());
    std::vector<double> z0sq;
    std::vector<cplx> z, scratch;
    for (std::size_t j = 0; j < n; ++j) {
        gen.generate_into(trajectory_seed(99, j), z, scratch);
        z0sq.push_back(std::norm(z[0]));
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto [a, b] = pairs[p];
            cross[p].push_back(z[a] * std::conj(z[b]));
            same[p].push_back(z[a] * z[b]);
        }
    }
    double mean_z0 = 0.0;
    for (double v : z0sq) mean_z0 += v;
    mean_z0 /= n;
    CHECK(std::abs(mean_z0 - 0.1) < 3.0 * 0.1 / 100.0);

    const TimeGrid grid;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [a, b] = pairs[p];
        const auto c = moments(cross[p]);
        const auto s = moments(same[p]);
        CHECK(std::abs(c.mean - k(grid.at(a) - grid.at(b))) < 5.0 * c.se);
        CHECK(std::abs(s.mean) < 5.0 * s.se);
    }
}

TEST_CASE("noise covariance for a complex kernel")
{
    const ExponentialKernel k(0.1, 0.2, 1.0);
    const TimeGrid grid{0.05, 201};
    const NoiseGenerator gen(k, grid);
    std::vector<cplx> prod, z, scratch;
    for (std::size_t j = 0; j < 10000; ++j) {
        gen.generate_into(trajectory_seed(3, j), z, scratch);
        prod.push_back(z[60] * std::conj(z[30]));
    }
    const auto m = moments(prod);
    CHECK(std::abs(m.mean - k(1.5)) < 5.0 * m.se);
    CHECK(std::abs(k(1.5).imag()) > 5.0 * m.se);
}

TEST_CASE("noise paths are deterministic in the seed")
{
    const TimeGrid grid{0.05, 101};
    const auto a = generate_noise(ExponentialKernel(0.1, 0.2), grid, 12345);
    const auto b = generate_noise(ExponentialKernel(0.1, 0.2), grid, 12345);
    const auto c = generate_noise(ExponentialKernel(0.1, 0.2), grid, 12346);
    CHECK(a.z == b.z);
    CHECK(a.z != c.z);
    CHECK(a.seed == 12345);
    CHECK(a.z.size() == 101);
}

TEST_CASE("noise grid limits")
{
    const ExponentialKernel k(0.1, 0.2);
    CHECK_THROWS_AS(NoiseGenerator(k, TimeGrid{0.05, 0}), ConfigError);
    CHECK_THROWS_AS(NoiseGenerator(k, TimeGrid{0.05, 10001}), ConfigError);
    CHECK_THROWS_AS(NoiseGenerator(k, TimeGrid{0.0, 10}), ConfigError);
}

TEST_CASE("nearly singular covariance is rescued by jitter")
{
    // a very slow kernel on a fine grid makes C numerically rank deficient
    const NoiseGenerator gen(ExponentialKernel(1.0, 1e-9), TimeGrid{1e-3, 400});
    const auto p = gen.generate(1);
    for (auto v : p.z) CHECK(std::isfinite(std::abs(v)));
}

TEST_CASE("zero noise reproduces the noiseless Bloch solution")
{
    const SystemSpec sys = ou_bath();
    const TimeGrid grid{0.05, 201};
    const auto prop = q0_run(sys, grid);
    const auto q0 = Q0Series::from(prop);
    NoisePath path{grid, std::vector<cplx>(grid.points, 0.0), 0};
    const auto tr = trajectory(sys, path, q0);
    const auto ref = reference_trajectory(sys, path, q0);
    REQUIRE(tr.bloch.size() == grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) {
        CHECK((tr.bloch[i] - ref[i]).norm() < 1e-13);
        CHECK((tr.bloch[i].real() - prop.series.bloch[i]).norm() < 1e-6);
        CHECK(tr.t[i] == doctest::Approx(prop.series.t[i]));
    }
}

TEST_CASE("noisy trajectory matches a literal RK4")
{
    const SystemSpec sys = ou_bath();
    const TimeGrid grid{0.05, 201};
    const auto q0 = Q0Series::from(q0_run(sys, grid));
    const auto path = generate_noise(sys.kernel, grid, 77);
    const auto tr = trajectory(sys, path, q0);
    const auto ref = reference_trajectory(sys, path, q0);
    for (std::size_t i = 0; i < grid.points; ++i) CHECK((tr.bloch[i] - ref[i]).norm() <= 1e-12 * (1.0 + ref[i].norm()));
}

TEST_CASE("vanishing coupling: pure precession")
{
    SystemSpec sys;
    sys.kernel = ExponentialKernel(1e-300, 0.2);
    sys.initial = Vec3r(0.6, 0.0, 0.8);
    const TimeGrid grid{0.05, 201};
    const auto q0 = Q0Series::from(q0_run(sys, grid));
    NoisePath path{grid, std::vector<cplx>(grid.points, 0.0), 0};
    const auto tr = trajectory(sys, path, q0);
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double t = grid.at(i);
        CHECK(std::abs(tr.bloch[i].norm() - 1.0) < 1e-8);
        CHECK(std::abs(tr.bloch[i][0] - 0.6 * std::cos(t)) < 1e-6);
        CHECK(std::abs(tr.bloch[i][1] - 0.6 * std::sin(t)) < 1e-6);
    }
}

TEST_CASE("grid mismatch is a configuration error")
{
    const SystemSpec sys = ou_bath();
    const auto q0 = Q0Series::from(q0_run(sys, TimeGrid{0.05, 101}));
    NoisePath longer{TimeGrid{0.05, 201}, std::vector<cplx>(201, 0.0), 0};
    CHECK_THROWS_AS(trajectory(sys, longer, q0), ConfigError);
    NoisePath coarser{TimeGrid{0.1, 51}, std::vector<cplx>(51, 0.0), 0};
    CHECK_THROWS_AS(trajectory(sys, coarser, q0), ConfigError);
    NoisePath ragged{TimeGrid{0.05, 101}, std::vector<cplx>(50, 0.0), 0};
    CHECK_THROWS_AS(trajectory(sys, ragged, q0), ConfigError);
}

TEST_CASE("golden fixed-seed trajectory at the reference parameters")
{
    const SystemSpec sys = ou_bath();
    const TimeGrid grid;
    const auto q0 = Q0Series::from(q0_run(sys, grid));
    const auto tr = trajectory(sys, generate_noise(sys.kernel, grid, 20240601), q0);
    struct Golden {
        std::size_t index;
        Vec3 value;
    };
    const std::vector<Golden> golden{
        {100, Vec3(cplx(0.30204889599617352, 0.016262949612294662), cplx(-0.097919276230839986, 0.060352438818680604), cplx(0.53409999743862502, -0.0056273025385400258))},
        {300, Vec3(cplx(0.094269253503095896, 0.23519526497195975), cplx(-0.37847619252086429, 0.22078463724803166), cplx(0.45278202122221967, 0.20468525817004621))},
        {600, Vec3(cplx(-0.068012441739582208, 0.02962144921467047), cplx(0.046330925122074776, 0.097901210534640612), cplx(0.20502623895682051, 0.0012257926125530099))},
    };
    for (const auto& g : golden) CHECK((tr.bloch[g.index] - g.value).norm() <= 1e-9 * g.value.norm());
}

TEST_CASE("single-trajectory ensemble equals that trajectory")
{
    const SystemSpec sys = ou_bath();
    EnsembleOptions o;
    o.n_traj = 1;
    o.seed = 5;
    o.t_max = 5.0;
    const auto e = ensemble_mean(sys, o);
    const TimeGrid grid{0.05, 101};
    const auto tr = trajectory(sys, generate_noise(sys.kernel, grid, trajectory_seed(5, 0)), Q0Series::from(e.hierarchy));
    REQUIRE(e.series.size() == grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) {
        CHECK(e.series.bloch[i] == tr.bloch[i].real());
        CHECK(e.mean_imag[i] == tr.bloch[i].imag());
        CHECK(e.series.std_error[i] == Vec3r::Zero());
    }
}

TEST_CASE("serial and parallel ensembles agree bitwise")
{
    const SystemSpec sys = ou_bath();
    EnsembleOptions o;
    o.n_traj = 300;
    o.t_max = 5.0;
    const auto par = ensemble_mean(sys, o);
    o.parallel = false;
    const auto ser = ensemble_mean(sys, o);
    CHECK(par.series.bloch == ser.series.bloch);
    CHECK(par.series.std_error == ser.series.std_error);
    CHECK(par.mean_imag == ser.mean_imag);
}

TEST_CASE("standard error shrinks like 1/sqrt(n)")
{
    const SystemSpec sys = ou_bath();
    EnsembleOptions o;
    o.t_max = 5.0;
    auto median_se = [&](std::size_t n) {
        o.n_traj = n;
        const auto e = ensemble_mean(sys, o);
        std::vector<double> se;
        for (std::size_t i = 1; i < e.series.size(); ++i) se.push_back(e.series.std_error[i][2]);
        std::nth_element(se.begin(), se.begin() + se.size() / 2, se.end());
        return se[se.size() / 2];
    };
    const double ratio = median_se(2000) / median_se(4000);
    CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("ensemble mean follows the Bloch equation")
{
    const SystemSpec sys = ou_bath();
    EnsembleOptions o;
    o.n_traj = 2000;
    o.t_max = 10.0;
    const auto e = ensemble_mean(sys, o);
    const auto& ref = e.hierarchy.series;
    REQUIRE(ref.size() == e.series.size());
    std::size_t inside = 0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (std::abs(e.series.bloch[i][2] - ref.bloch[i][2]) <= 3.0 * e.series.std_error[i][2] + 1e-12) ++inside;
    CHECK(inside >= static_cast<std::size_t>(0.97 * ref.size()));
    CHECK(e.series.diagnostics.at("n_traj") == 2000.0);
}

TEST_CASE("ensemble mean for a complex kernel with W dropped")
{
    SystemSpec sys;
    sys.kernel = ExponentialKernel(0.1, 0.2, 1.0);
    sys.correction = Correction::markov_w;
    EnsembleOptions o;
    o.n_traj = 4000;
    o.t_max = 5.0;
    const auto e = ensemble_mean(sys, o);
    const auto& ref = e.hierarchy.series;
    for (std::size_t i = 0; i < ref.size(); ++i)
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(e.series.bloch[i][k] - ref.bloch[i][k]) <= 4.0 * e.series.std_error[i][k] + 1e-12);
}

TEST_CASE("ensemble option checks")
{
    const SystemSpec sys = ou_bath();
    EnsembleOptions o;
    o.n_traj = 0;
    CHECK_THROWS_AS(ensemble_mean(sys, o), ConfigError);
    o.n_traj = 10;
    o.t_max = 1.02;
    CHECK_THROWS_AS(ensemble_mean(sys, o), ConfigError);
    o.t_max = 1.0;
    o.hierarchy_dt = 0.01;
    o.noise_step = 0.05;
    CHECK_THROWS_AS(ensemble_mean(sys, o), ConfigError);
    o.hierarchy_dt = -1.0;
    CHECK_THROWS_AS(ensemble_mean(sys, o), InputError);
}
