// support.hpp: reference implementations used only by the tests. None of
// them share code with the library routines they check.

#pragma once

#include "qle/types.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace support {

using qle::cplx;
using qle::Mat3;
using qle::Vec3;
using qle::Vec3r;

inline Mat3 h_matrix(double w)
{
    Mat3 h = Mat3::Zero();
    h(0, 1) = cplx(0.0, -w);
    h(1, 0) = cplx(0.0, w);
    return h;
}

inline Mat3 l_matrix()
{
    Mat3 l = Mat3::Zero();
    l(1, 2) = -2.0;
    l(2, 1) = 2.0;
    return l;
}

inline Mat3 commutator(const Mat3& x, const Mat3& y) { return x * y - y * x; }

// Literal transcription of the Bloch equation and Q_n ladder with dense
// complex matrices. v is the sigma-x-freeze shift at the evaluation time (0
// otherwise).
struct LiteralDerivative {
    Vec3 da;
    std::vector<Mat3> dq;
};

inline LiteralDerivative literal_rhs(const Vec3& a_vec, const std::vector<Mat3>& q, double w, double amp,
                                     cplx z, double v)
{
    const int n_max = static_cast<int>(q.size()) - 1;
    Mat3 hp = h_matrix(w);
    hp(1, 1) += v;
    hp(2, 2) -= v;
    const Mat3 l = l_matrix();
    const cplx i(0.0, 1.0);

    LiteralDerivative out;
    out.da = (-i * hp + l * q[0]) * a_vec;
    for (int n = 0; n <= n_max; ++n) {
        Mat3 d = -i * commutator(hp, q[n]);
        for (int k = 0; k <= n; ++k) d += commutator(l * q[k], q[n - k]);
        d -= static_cast<double>(n + 1) * z * q[n];
        if (n == 0) d += amp * l;
        else d += amp * commutator(l, q[n - 1]);
        if (n < n_max) d += static_cast<double>(n + 1) * l * q[n + 1];
        out.dq.push_back(d);
    }
    return out;
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

// For a real kernel the bath acts on the spin as a classical Gaussian field
// x(t) with <x(t) x(s)> = alpha(t - s). With H = (w/2) sz + x sx the Bloch
// vector rotates about (2x, 0, w). This averages that rotation over exact
// OU paths, an exact route to <sigma> independent of the hierarchy.
struct ClassicalAverage {
    std::vector<double> t;
    std::vector<Vec3r> mean;
    std::vector<Vec3r> std_error;
};

inline ClassicalAverage classical_noise_average(double amp, double gamma, double w, const Vec3r& a0,
                                                int n_traj, double dt, double t_max, int every,
                                                unsigned long long seed)
{
    const int steps = static_cast<int>(std::lround(t_max / dt));
    const double rho = std::exp(-gamma * dt);
    const double kick = std::sqrt(amp * (1.0 - rho * rho));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;

    const int samples = steps / every + 1;
    std::vector<Vec3r> sum(samples, Vec3r::Zero()), sum2(samples, Vec3r::Zero());
    auto rot = [w](const Vec3r& a, double x) { return Vec3r(2.0 * x, 0.0, w).cross(a); };

    for (int j = 0; j < n_traj; ++j) {
        double x = std::sqrt(amp) * normal(rng);
        Vec3r a = a0;
        sum[0] += a;
        sum2[0] += a.cwiseProduct(a);
        for (int i = 0; i < steps; ++i) {
            const double xn = rho * x + kick * normal(rng);
            const double xm = 0.5 * (x + xn);
            const Vec3r k1 = rot(a, x);
            const Vec3r k2 = rot(a + 0.5 * dt * k1, xm);
            const Vec3r k3 = rot(a + 0.5 * dt * k2, xm);
            const Vec3r k4 = rot(a + dt * k3, xn);
            a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x = xn;
            if ((i + 1) % every == 0) {
                sum[(i + 1) / every] += a;
                sum2[(i + 1) / every] += a.cwiseProduct(a);
            }
        }
    }
    ClassicalAverage out;
    for (int s = 0; s < samples; ++s) {
        const Vec3r m = sum[s] / n_traj;
        const Vec3r var = (sum2[s] / n_traj - m.cwiseProduct(m)).cwiseMax(0.0);
        out.t.push_back(s * every * dt);
        out.mean.push_back(m);
        out.std_error.push_back((var / (n_traj - 1.0)).cwiseSqrt());
    }
    return out;
}

// Closed-form-free reference for the Markov limit: exp(M t) A0 with
// M = -iH + (Gamma/2) L^2 taken as a real matrix.
inline Vec3r markov_expm(double coupling, double w, const Vec3r& a0, double t)
{
    const Mat3 gen = -cplx(0.0, 1.0) * h_matrix(w) + 0.5 * coupling * l_matrix() * l_matrix();
    const Eigen::Matrix3d m = gen.real();
    const Eigen::Matrix3d e = (m * t).exp();
    return e * a0;
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace support
