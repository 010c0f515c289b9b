// hierarchy.hpp: noiseless non-Markovian Bloch equation for the spin-boson
// model, closed by the Q_n ladder of kernel-weighted O-operator moments.
//
//   dA/dt   = (-i H' + L Q_0) A
//   dQ_0/dt = -i[H', Q_0] + [L Q_0, Q_0] - z Q_0 + a L + L Q_1
//   dQ_n/dt = -i[H', Q_n] + sum_{k=0}^{n} [L Q_k, Q_{n-k}] - (n+1) z Q_n
//             + a [L, Q_{n-1}] + (n+1) L Q_{n+1}
//
// with z = gamma + i Omega, a = alpha(0), Q_{N+1} = 0 and Q_n(0) = 0.

#pragma once

#include "qle/correlations.hpp"
#include "qle/types.hpp"

#include <string_view>
#include <vector>

namespace qle {

// How the W term of a complex kernel is treated.
enum class Correction {
    none,           // real kernel only; W vanishes identically
    markov_w,       // W dropped (delta-correlated treatment of W only)
    sigma_x_freeze  // H -> H + V(t), accurate at early times only
};

Correction parse_correction(std::string_view name);
std::string_view to_string(Correction c);

struct SystemSpec {
    double splitting = 1.0; // omega
    ExponentialKernel kernel = ExponentialKernel::ornstein_uhlenbeck(1.0, 0.2);
    Vec3r initial = Vec3r(0.0, 0.0, 1.0);
    Correction correction = Correction::none;

    // Throws InputError / ConfigError.
    void validate() const;
};

// Generator matrices acting on the Bloch vector (sx, sy, sz).
Mat3 generator_h(double splitting);
Mat3 generator_l();
Mat3 generator_v(double shift);

// Time, Bloch vector A and the ladder Q_0..Q_N, stored contiguously as
// [A (3) | Q_0 (9, column-major) | ... | Q_N].
class HierarchyState {
public:
    HierarchyState(int order, const Vec3& bloch, double t = 0.0);

    int order() const noexcept { return order_; }
    double time() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }

    Eigen::Map<Vec3> bloch() { return Eigen::Map<Vec3>(data_.data()); }
    Eigen::Map<const Vec3> bloch() const { return Eigen::Map<const Vec3>(data_.data()); }
    Eigen::Map<Mat3> ladder(int n) { return Eigen::Map<Mat3>(data_.data() + offset(n)); }
    Eigen::Map<const Mat3> ladder(int n) const { return Eigen::Map<const Mat3>(data_.data() + offset(n)); }

    Eigen::VectorXcd& data() noexcept { return data_; }
    const Eigen::VectorXcd& data() const noexcept { return data_; }

    static Eigen::Index size_for(int order) { return 3 + 9 * static_cast<Eigen::Index>(order + 1); }
    static Eigen::Index offset(int n) { return 3 + 9 * static_cast<Eigen::Index>(n); }

    // Largest |Im| over A and every Q_n.
    double max_imag() const;

private:
    int order_;
    double t_;
    Eigen::VectorXcd data_;
};

// Right-hand side evaluator, templated on the scalar so real kernels with a
// real initial vector run in real arithmetic. Holds scratch buffers, so one
// instance per thread. Ladder matrices whose largest entry is below `floor`
// are skipped in the O(N^2) convolution sum; floor = 0 evaluates the sum
// literally.
template <class Scalar>
class BasicHierarchyRhs {
public:
    using Matrix = Eigen::Matrix<Scalar, 3, 3>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicHierarchyRhs(const SystemSpec& sys, int order, double floor = 1e-14);

    int order() const noexcept { return order_; }

    void operator()(double t, const Vector& y, Vector& dy);

private:
    SystemSpec sys_;
    int order_;
    double floor_;
    std::vector<Matrix> lq_; // L Q_k
    std::vector<char> active_;
};

using HierarchyRhs = BasicHierarchyRhs<cplx>;
using RealHierarchyRhs = BasicHierarchyRhs<double>;

// Time derivative of a full state (same layout as the state itself).
HierarchyState hierarchy_rhs(const HierarchyState& state, const SystemSpec& sys, double floor = 0.0);

struct PropagateOptions {
    int order = 100;
    double dt = 1e-3;
    double t_max = 30.0;
    int stride = 100;        // emit every `stride` steps (plus the final time)
    double floor = 1e-14;
    int q0_stride = 0;       // > 0 records Q_0 every q0_stride steps
    bool complex_arithmetic = false; // run a real kernel through the complex path
};

struct Propagation {
    TimeSeries series;
    std::vector<double> q0_time;
    std::vector<Mat3> q0;
};

// Fixed-step RK4 on (A, Q_0..Q_N). Deterministic. Throws IntegrationError
// naming the time if a step produces non-finite values.
Propagation propagate(const SystemSpec& sys, const PropagateOptions& opts);

// Adiabatic elimination of the ladder (gamma -> infinity, Q_0 -> (Gamma/2) L):
// dA/dt = (-i H + (Gamma/2) L^2) A, solved in closed form.
Vec3r markov_limit_reference(double coupling, double splitting, const Vec3r& initial, double t);

} // namespace qle
