// hierarchy.cpp: Bloch equation + Q_n ladder right-hand side and propagation

#include "qle/hierarchy.hpp"
#include "qle/error.hpp"
#include "qle/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <type_traits>

namespace qle {

namespace {

constexpr cplx I{0.0, 1.0};

// L has only (1,2) = -2 and (2,1) = 2, so products with it are row/column
// shuffles. These are the hot path of the convolution sum.
template <class M, class Q>
inline void left_l(const Q& q, M& out)
{
    out.row(0).setZero();
    out.row(1) = -2.0 * q.row(2);
    out.row(2) = 2.0 * q.row(1);
}

template <class M, class Q>
inline M right_l(const Q& q)
{
    M out;
    out.col(0).setZero();
    out.col(1) = 2.0 * q.col(2);
    out.col(2) = -2.0 * q.col(1);
    return out;
}

} // namespace

Correction parse_correction(std::string_view name)
{
    if (name == "none") return Correction::none;
    if (name == "markov-W" || name == "markov-w" || name == "markov_w") return Correction::markov_w;
    if (name == "sigma-x-freeze" || name == "sigma_x_freeze") return Correction::sigma_x_freeze;
    throw InputError("unknown correction mode '" + std::string(name) + "'");
}

std::string_view to_string(Correction c)
{
    switch (c) {
    case Correction::none: return "none";
    case Correction::markov_w: return "markov-W";
    case Correction::sigma_x_freeze: return "sigma-x-freeze";
    }
    return "none";
}

void SystemSpec::validate() const
{
    if (!std::isfinite(splitting)) throw InputError("spin splitting must be finite");
    if (!initial.allFinite()) throw InputError("initial Bloch vector must be finite");
    if (initial.norm() > 1.0 + 1e-12) throw InputError("initial Bloch vector must satisfy |A0| <= 1");
    if (correction == Correction::none && !kernel.is_real())
        throw ConfigError("correction mode 'none' requires a real kernel (Omega = 0); "
                          "choose markov-W or sigma-x-freeze");
}

Mat3 generator_h(double splitting)
{
    Mat3 h = Mat3::Zero();
    h(0, 1) = -I * splitting;
    h(1, 0) = I * splitting;
    return h;
}

Mat3 generator_l()
{
    Mat3 l = Mat3::Zero();
    l(1, 2) = -2.0;
    l(2, 1) = 2.0;
    return l;
}

Mat3 generator_v(double shift)
{
    Mat3 v = Mat3::Zero();
    v(1, 1) = shift;
    v(2, 2) = -shift;
    return v;
}

HierarchyState::HierarchyState(int order, const Vec3& bloch, double t)
    : order_(order), t_(t)
{
    if (order < 0) throw ConfigError("hierarchy order must be >= 0");
    data_ = Eigen::VectorXcd::Zero(size_for(order));
    data_.head<3>() = bloch;
}

double HierarchyState::max_imag() const
{
    return data_.imag().cwiseAbs().maxCoeff();
}

template <class Scalar>
BasicHierarchyRhs<Scalar>::BasicHierarchyRhs(const SystemSpec& sys, int order, double floor)
    : sys_(sys), order_(order), floor_(floor)
{
    if (order < 0) throw ConfigError("hierarchy order must be >= 0");
    if constexpr (std::is_same_v<Scalar, double>) {
        if (!sys.kernel.is_real()) throw ConfigError("real-arithmetic hierarchy needs a real kernel");
    }
    lq_.resize(static_cast<std::size_t>(order) + 1);
    active_.resize(static_cast<std::size_t>(order) + 1);
}

template <class Scalar>
void BasicHierarchyRhs<Scalar>::operator()(double t, const Vector& y, Vector& dy)
{
    const int n_max = order_;
    const double a = sys_.kernel.amplitude();

    // G = -i H'(t); real unless the sigma-x-freeze shift is active.
    Matrix g = Matrix::Zero();
    g(0, 1) = -sys_.splitting;
    g(1, 0) = sys_.splitting;
    Scalar z;
    if constexpr (std::is_same_v<Scalar, cplx>) {
        z = sys_.kernel.rate();
        if (sys_.correction == Correction::sigma_x_freeze) {
            const double v = hamiltonian_shift(sys_.kernel, t);
            g(1, 1) = -I * v;
            g(2, 2) = I * v;
        }
    } else {
        z = sys_.kernel.decay();
    }

    auto q = [&](int n) { return Eigen::Map<const Matrix>(y.data() + HierarchyState::offset(n)); };

    int last_active = -1;
    for (int k = 0; k <= n_max; ++k) {
        const auto qk = q(k);
        left_l(qk, lq_[k]);
        const bool on = floor_ <= 0.0 || qk.cwiseAbs().maxCoeff() >= floor_;
        active_[k] = on;
        if (on) last_active = k;
    }

    using Vec = Eigen::Matrix<Scalar, 3, 1>;
    const Eigen::Map<const Vec> bloch(y.data());
    Eigen::Map<Vec>(dy.data()) = (g + lq_[0]) * bloch;

    for (int n = 0; n <= n_max; ++n) {
        const auto qn = q(n);
        Matrix d = g * qn - qn * g - (static_cast<double>(n + 1) * z) * qn;

        const int k_lo = std::max(0, n - last_active);
        const int k_hi = std::min(n, last_active);
        for (int k = k_lo; k <= k_hi; ++k) {
            if (!active_[k] || !active_[n - k]) continue;
            const auto qm = q(n - k);
            d.noalias() += lq_[k] * qm;
            d.noalias() -= qm * lq_[k];
        }

        if (n == 0) {
            d(1, 2) += -2.0 * a;
            d(2, 1) += 2.0 * a;
        } else {
            d += a * (lq_[n - 1] - right_l<Matrix>(q(n - 1)));
        }
        if (n < n_max) d += static_cast<double>(n + 1) * lq_[n + 1];

        Eigen::Map<Matrix>(dy.data() + HierarchyState::offset(n)) = d;
    }
}

template class BasicHierarchyRhs<double>;
template class BasicHierarchyRhs<cplx>;

HierarchyState hierarchy_rhs(const HierarchyState& state, const SystemSpec& sys, double floor)
{
    HierarchyRhs rhs(sys, state.order(), floor);
    HierarchyState out(state.order(), Vec3::Zero(), state.time());
    rhs(state.time(), state.data(), out.data());
    return out;
}

namespace {

template <class Scalar>
Propagation propagate_impl(const SystemSpec& sys, const PropagateOptions& opts)
{
    using Vector = typename BasicHierarchyRhs<Scalar>::Vector;
    using Matrix = typename BasicHierarchyRhs<Scalar>::Matrix;

    Vector y = Vector::Zero(HierarchyState::size_for(opts.order));
    y.template head<3>() = sys.initial.cast<Scalar>();
    BasicHierarchyRhs<Scalar> rhs(sys, opts.order, opts.floor);
    Rk4Workspace<Vector> ws;

    auto imag_of = [&]() -> double {
        if constexpr (std::is_same_v<Scalar, cplx>) return y.imag().cwiseAbs().maxCoeff();
        else return 0.0;
    };

    Propagation out;
    auto emit = [&](double t) {
        Vec3r a;
        for (int i = 0; i < 3; ++i) a[i] = std::real(y[i]);
        out.series.push(t, a, imag_of());
    };
    auto emit_q0 = [&](double t) {
        out.q0_time.push_back(t);
        const Eigen::Map<const Matrix> q0(y.data() + HierarchyState::offset(0));
        out.q0.push_back(q0.template cast<cplx>());
    };

    const long steps = opts.t_max == 0.0
        ? 0L
        : static_cast<long>(std::ceil(opts.t_max / opts.dt - 1e-9));
    emit(0.0);
    if (opts.q0_stride > 0) emit_q0(0.0);

    double max_imag = imag_of();
    for (long i = 0; i < steps; ++i) {
        const double t0 = static_cast<double>(i) * opts.dt;
        const double t1 = (i + 1 == steps) ? opts.t_max : static_cast<double>(i + 1) * opts.dt;
        rk4_step(rhs, t0, t1 - t0, y, ws);

        if (!y.allFinite()) {
            std::ostringstream msg;
            msg << "hierarchy integration blew up at t = " << t1
                << " (order " << opts.order << ", dt " << opts.dt << ")";
            throw IntegrationError(msg.str(), t1);
        }
        max_imag = std::max(max_imag, imag_of());

        const long done = i + 1;
        if (done % opts.stride == 0 || done == steps) emit(t1);
        if (opts.q0_stride > 0 && done % opts.q0_stride == 0) emit_q0(t1);
    }
    out.series.diagnostics["max_imag"] = max_imag;
    return out;
}

} // namespace

Propagation propagate(const SystemSpec& sys, const PropagateOptions& opts)
{
    sys.validate();
    if (opts.order < 0) throw ConfigError("hierarchy order must be >= 0");
    if (!(opts.dt > 0.0) || !std::isfinite(opts.dt)) throw InputError("dt must be > 0");
    if (!(opts.t_max >= 0.0) || !std::isfinite(opts.t_max)) throw InputError("t_max must be >= 0");
    if (opts.stride < 1) throw InputError("output stride must be >= 1");

    // A real kernel and a real initial vector keep every quantity real; the
    // complex path exists for complex kernels.
    if (sys.kernel.is_real() && !opts.complex_arithmetic) return propagate_impl<double>(sys, opts);
    return propagate_impl<cplx>(sys, opts);
}

Vec3r markov_limit_reference(double coupling, double splitting, const Vec3r& initial, double t)
{
    // z decouples: dz/dt = -2 Gamma z.
    // (x, y) obey M = [[0, -w], [w, -2 Gamma]]; exp(M t) via the
    // Cayley-Hamilton form e^{mu t} [cosh(s t) I + sinh(s t)/s (M - mu I)].
    const double mu = -coupling;
    const cplx s = std::sqrt(cplx(coupling * coupling - splitting * splitting, 0.0));
    const cplx ch = std::cosh(s * t);
    const cplx sh_over_s = std::abs(s) < 1e-12 ? cplx(t, 0.0) : std::sinh(s * t) / s;
    const double e = std::exp(mu * t);

    const double m00 = 0.0 - mu;
    const double m01 = -splitting;
    const double m10 = splitting;
    const double m11 = -2.0 * coupling - mu;

    const double x = e * ((ch + sh_over_s * m00) * initial[0] + sh_over_s * m01 * initial[1]).real();
    const double y = e * (sh_over_s * m10 * initial[0] + (ch + sh_over_s * m11) * initial[1]).real();
    return {x, y, std::exp(-2.0 * coupling * t) * initial[2]};
}

} // namespace qle
