// oracle.cpp: bath discretization, Fock basis, sparse Hamiltonian and exact
// Schrodinger evolution

#include "qle/oracle.hpp"
#include "qle/error.hpp"
#include "qle/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace qle {

namespace {

constexpr std::uint16_t kEmpty = 0xffff;

} // namespace

cplx BathDiscretization::reconstructed(double lag) const
{
    cplx sum = 0.0;
    for (const auto& m : modes) sum += m.weight * std::polar(1.0, -m.freq * lag);
    return sum;
}

BathDiscretization discretize(const ExponentialKernel& kernel, int modes, double t_max, double splitting)
{
    if (modes < 2) throw ConfigError("bath discretization needs at least 2 modes");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw InputError("t_max must be finite and >= 0");

    const double a = kernel.amplitude();
    const double gamma = kernel.decay();
    const double center = kernel.modulation();
    const double half_width = std::max(8.0 * gamma, 4.0 * std::abs(splitting));
    const double dw = 2.0 * half_width / modes;

    BathDiscretization out;
    out.t_max = t_max;
    out.modes.reserve(static_cast<std::size_t>(modes));
    for (int k = 0; k < modes; ++k) {
        const double w = center - half_width + (k + 0.5) * dw;
        const double x = w - center;
        // Lorentzian with total weight a: a * (gamma / pi) / (gamma^2 + x^2)
        const double density = a * gamma / (std::numbers::pi * (gamma * gamma + x * x));
        out.modes.push_back({w, density * dw});
    }

    constexpr int kProbe = 2000;
    double err = 0.0;
    for (int i = 0; i <= kProbe; ++i) {
        const double lag = t_max * i / kProbe;
        err = std::max(err, std::abs(out.reconstructed(lag) - kernel(lag)));
    }
    out.reconstruction_error = err;
    if (err > 0.05 * a) {
        std::ostringstream msg;
        msg << "bath discretization with " << modes << " modes reproduces the kernel only to "
            << err / a << " * alpha(0) on [0, " << t_max << "]; increase the mode count";
        throw DiscretizationError(msg.str());
    }
    return out;
}

std::size_t FockBasis::count(int modes, int cutoff)
{
    // C(modes + cutoff, cutoff)
    double c = 1.0;
    for (int i = 1; i <= cutoff; ++i) c = c * (modes + i) / i;
    return static_cast<std::size_t>(std::llround(c));
}

FockBasis::FockBasis(int modes, int cutoff)
    : modes_(modes), cutoff_(cutoff)
{
    if (modes < 1 || modes >= kEmpty) throw ConfigError("Fock basis needs 1 <= modes < 65535");
    if (cutoff < 0) throw ConfigError("excitation cutoff must be >= 0");
    if (cutoff * std::log2(modes + 1.0) >= 63.0)
        throw ConfigError("Fock basis too large to index (modes and cutoff)");

    const std::size_t n = count(modes, cutoff);
    const auto width = static_cast<std::size_t>(cutoff);
    slots_.reserve(n * width);
    total_.reserve(n);

    const std::uint64_t base = static_cast<std::uint64_t>(modes) + 1;
    auto key_of = [&](std::span<const std::uint16_t> seq) {
        std::uint64_t key = 0;
        for (auto m : seq) key = key * base + (static_cast<std::uint64_t>(m) + 1);
        return key;
    };

    // Enumerate nondecreasing sequences level by level.
    std::vector<std::uint16_t> seq;
    std::unordered_map<std::uint64_t, std::int64_t> index;
    index.reserve(n);
    auto push = [&](int level) {
        index.emplace(key_of(seq), static_cast<std::int64_t>(total_.size()));
        total_.push_back(level);
        for (std::size_t i = 0; i < width; ++i)
            slots_.push_back(i < seq.size() ? seq[i] : kEmpty);
    };
    for (int level = 0; level <= cutoff; ++level) {
        seq.assign(static_cast<std::size_t>(level), 0);
        if (level == 0) {
            push(0);
            continue;
        }
        while (true) {
            push(level);
            // next nondecreasing sequence
            int i = level - 1;
            while (i >= 0 && seq[static_cast<std::size_t>(i)] == modes - 1) --i;
            if (i < 0) break;
            const std::uint16_t v = seq[static_cast<std::size_t>(i)] + 1;
            for (int j = i; j < level; ++j) seq[static_cast<std::size_t>(j)] = v;
        }
    }

    // raise table for configurations below the cutoff
    raise_offset_.assign(total_.size(), -1);
    std::vector<std::uint16_t> next;
    for (std::size_t c = 0; c < total_.size(); ++c) {
        if (total_[c] >= cutoff) continue;
        raise_offset_[c] = static_cast<std::int64_t>(raise_.size());
        const auto cur = config(c);
        for (int m = 0; m < modes; ++m) {
            next.assign(cur.begin(), cur.end());
            next.insert(std::upper_bound(next.begin(), next.end(), static_cast<std::uint16_t>(m)),
                        static_cast<std::uint16_t>(m));
            raise_.push_back(static_cast<std::int32_t>(index.at(key_of(next))));
        }
    }
}

std::span<const std::uint16_t> FockBasis::config(std::size_t c) const
{
    const auto width = static_cast<std::size_t>(cutoff_);
    return {slots_.data() + c * width, static_cast<std::size_t>(total_[c])};
}

std::int64_t FockBasis::raise(std::size_t c, int mode) const
{
    const std::int64_t off = raise_offset_[c];
    if (off < 0) return -1;
    return raise_[static_cast<std::size_t>(off + mode)];
}

SpinBosonHamiltonian::SpinBosonHamiltonian(const FockBasis& basis, std::span<const BathMode> modes,
                                           double splitting, bool rotating_wave)
{
    if (static_cast<int>(modes.size()) != basis.modes())
        throw ConfigError("mode list does not match the Fock basis");
    const std::size_t d = basis.size();
    const int m_count = basis.modes();

    std::vector<double> coupling(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) coupling[k] = std::sqrt(modes[k].weight);

    // lowering neighbours: c - e_k for each distinct k in c, found by scanning
    // the raise table once
    std::vector<std::vector<std::pair<std::int32_t, double>>> lowered(d);
    for (std::size_t c = 0; c < d; ++c) {
        if (basis.total(c) >= basis.cutoff()) continue;
        const auto cfg = basis.config(c);
        for (int k = 0; k < m_count; ++k) {
            const auto up = static_cast<std::size_t>(basis.raise(c, k));
            const auto occ = std::count(cfg.begin(), cfg.end(), static_cast<std::uint16_t>(k));
            // <c + e_k| a_k^+ |c> = sqrt(n_k + 1)
            lowered[up].emplace_back(static_cast<std::int32_t>(c),
                                     coupling[static_cast<std::size_t>(k)] * std::sqrt(occ + 1.0));
        }
    }

    row_ptr_.reserve(2 * d + 1);
    row_ptr_.push_back(0);
    std::vector<std::pair<std::int32_t, double>> row;
    for (int s = 0; s < 2; ++s) {
        const double spin_energy = s == 0 ? 0.5 * splitting : -0.5 * splitting;
        const auto other = static_cast<std::int32_t>((1 - s) * d);
        for (std::size_t c = 0; c < d; ++c) {
            row.clear();
            double diag = spin_energy;
            for (auto k : basis.config(c)) diag += modes[k].freq;
            row.emplace_back(static_cast<std::int32_t>(s * d + c), diag);

            // (s, c) <-> (1-s, c - e_k); rotating when this row is spin down
            if (!rotating_wave || s == 1)
                for (const auto& [col, v] : lowered[c]) row.emplace_back(other + col, v);
            // (s, c) <-> (1-s, c + e_k); rotating when this row is spin up
            if ((!rotating_wave || s == 0) && basis.total(c) < basis.cutoff()) {
                const auto cfg = basis.config(c);
                for (int k = 0; k < m_count; ++k) {
                    const auto occ = std::count(cfg.begin(), cfg.end(), static_cast<std::uint16_t>(k));
                    row.emplace_back(other + static_cast<std::int32_t>(basis.raise(c, k)),
                                     coupling[static_cast<std::size_t>(k)] * std::sqrt(occ + 1.0));
                }
            }
            std::sort(row.begin(), row.end());
            for (const auto& [col, v] : row) {
                cols_.push_back(col);
                values_.push_back(v);
            }
            row_ptr_.push_back(static_cast<std::int64_t>(cols_.size()));
        }
    }
}

void SpinBosonHamiltonian::apply_serial(std::span<const cplx> x, std::span<cplx> y) const
{
    const std::size_t n = dim();
    for (std::size_t r = 0; r < n; ++r) {
        cplx acc = 0.0;
        for (auto j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j)
            acc += values_[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(cols_[static_cast<std::size_t>(j)])];
        y[r] = acc;
    }
}

void SpinBosonHamiltonian::apply(std::span<const cplx> x, std::span<cplx> y) const
{
    const auto n = static_cast<std::int64_t>(dim());
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        cplx acc = 0.0;
        for (auto j = row_ptr_[static_cast<std::size_t>(r)]; j < row_ptr_[static_cast<std::size_t>(r) + 1]; ++j)
            acc += values_[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(cols_[static_cast<std::size_t>(j)])];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

std::pair<double, double> SpinBosonHamiltonian::spectral_bounds() const
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < dim(); ++r) {
        double diag = 0.0;
        double radius = 0.0;
        for (auto j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j) {
            const auto col = static_cast<std::size_t>(cols_[static_cast<std::size_t>(j)]);
            if (col == r) diag = values_[static_cast<std::size_t>(j)];
            else radius += std::abs(values_[static_cast<std::size_t>(j)]);
        }
        lo = std::min(lo, diag - radius);
        hi = std::max(hi, diag + radius);
    }
    return {lo, hi};
}

Eigen::Vector2cd spin_state_from_bloch(const Vec3r& bloch)
{
    const double r = bloch.norm();
    if (std::abs(r - 1.0) > 1e-9) throw InputError("a pure spin state needs a unit Bloch vector");
    const double theta = std::acos(std::clamp(bloch[2], -1.0, 1.0));
    const double phi = std::atan2(bloch[1], bloch[0]);
    return {cplx(std::cos(0.5 * theta), 0.0), std::polar(std::sin(0.5 * theta), phi)};
}

namespace {

class ChebyshevPropagator {
public:
    ChebyshevPropagator(const SpinBosonHamiltonian& h, double dt, bool parallel)
        : h_(h), parallel_(parallel)
    {
        const auto [lo, hi] = h.spectral_bounds();
        center_ = 0.5 * (hi + lo);
        radius_ = 0.5 * (hi - lo) * 1.01 + 1e-12;
        const double x = radius_ * dt;
        phase_ = std::polar(1.0, -center_ * dt);
        // c_n = (2 - delta_n0) (-i)^n J_n(x)
        cplx mi_pow = 1.0;
        for (int n = 0;; ++n) {
            const double j = std::cyl_bessel_j(static_cast<double>(n), x);
            coeffs_.push_back((n == 0 ? 1.0 : 2.0) * mi_pow * j);
            mi_pow *= cplx(0.0, -1.0);
            if (n > x + 4 && std::abs(j) < 1e-16) break;
        }
        const auto d = h.dim();
        prev_.resize(d);
        cur_.resize(d);
        next_.resize(d);
        acc_.resize(d);
    }

    void step(std::vector<cplx>& psi)
    {
        const std::size_t d = psi.size();
        std::copy(psi.begin(), psi.end(), prev_.begin());
        scaled_apply(prev_, cur_);
        for (std::size_t i = 0; i < d; ++i) acc_[i] = coeffs_[0] * prev_[i] + coeffs_[1] * cur_[i];
        for (std::size_t n = 2; n < coeffs_.size(); ++n) {
            scaled_apply(cur_, next_);
            const cplx c = coeffs_[n];
            for (std::size_t i = 0; i < d; ++i) {
                next_[i] = 2.0 * next_[i] - prev_[i];
                acc_[i] += c * next_[i];
            }
            std::swap(prev_, cur_);
            std::swap(cur_, next_);
        }
        for (std::size_t i = 0; i < d; ++i) psi[i] = phase_ * acc_[i];
    }

    std::size_t terms() const noexcept { return coeffs_.size(); }

private:
    // out = (H - center) in / radius
    void scaled_apply(const std::vector<cplx>& in, std::vector<cplx>& out)
    {
        if (parallel_) h_.apply(in, out);
        else h_.apply_serial(in, out);
        const double inv = 1.0 / radius_;
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = (out[i] - center_ * in[i]) * inv;
    }

    const SpinBosonHamiltonian& h_;
    bool parallel_;
    double center_ = 0.0;
    double radius_ = 1.0;
    cplx phase_;
    std::vector<cplx> coeffs_;
    std::vector<cplx> prev_, cur_, next_, acc_;
};

} // namespace

OracleResult evolve_exact(const BathDiscretization& bath, double splitting,
                          const Eigen::Vector2cd& spin, const OracleOptions& opts)
{
    if (!(opts.dt > 0.0)) throw InputError("oracle dt must be > 0");
    if (!(opts.t_max >= 0.0)) throw InputError("oracle t_max must be >= 0");
    if (opts.stride < 1) throw InputError("oracle stride must be >= 1");
    if (std::abs(spin.norm() - 1.0) > 1e-12) throw InputError("initial spin state must be normalized");

    const int m = static_cast<int>(bath.modes.size());
    const std::size_t configs = FockBasis::count(m, opts.cutoff);
    if (2 * configs > opts.max_dim) {
        std::ostringstream msg;
        msg << "oracle Hilbert space dimension " << 2 * configs << " exceeds the bound "
            << opts.max_dim << " (modes " << m << ", cutoff " << opts.cutoff << ")";
        throw ConfigError(msg.str());
    }

    const FockBasis basis(m, opts.cutoff);
    const SpinBosonHamiltonian h(basis, bath.modes, splitting, opts.rotating_wave);
    const std::size_t d = basis.size();

    std::vector<cplx> psi(2 * d, cplx(0.0));
    psi[0] = spin[0]; // |up> (x) |0>
    psi[d] = spin[1]; // |down> (x) |0>

    OracleResult out;
    out.dim = 2 * d;

    auto observe = [&](double t) {
        cplx coherence = 0.0;
        double up = 0.0;
        double down = 0.0;
        double bath_quanta = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double pu = std::norm(psi[c]);
            const double pd = std::norm(psi[d + c]);
            coherence += std::conj(psi[c]) * psi[d + c];
            up += pu;
            down += pd;
            bath_quanta += (pu + pd) * basis.total(c);
        }
        const double sz = up - down;
        out.series.push(t, Vec3r(2.0 * coherence.real(), 2.0 * coherence.imag(), sz));
        out.excitation.push_back(bath_quanta + 0.5 * (sz + (up + down)));
        const double drift = std::abs(up + down - 1.0);
        out.norm_drift = std::max(out.norm_drift, drift);
        if (drift > opts.max_norm_drift) {
            std::ostringstream msg;
            msg << "oracle norm drifted by " << drift << " at t = " << t << "; reduce dt";
            throw IntegrationError(msg.str(), t);
        }
    };

    const long steps = opts.t_max == 0.0 ? 0L : static_cast<long>(std::ceil(opts.t_max / opts.dt - 1e-9));
    const double h_step = steps > 0 ? opts.t_max / static_cast<double>(steps) : opts.dt;
    observe(0.0);

    if (opts.integrator == OracleIntegrator::chebyshev) {
        ChebyshevPropagator prop(h, h_step, opts.parallel);
        out.series.diagnostics["chebyshev_terms"] = static_cast<double>(prop.terms());
        for (long i = 0; i < steps; ++i) {
            prop.step(psi);
            if ((i + 1) % opts.stride == 0 || i + 1 == steps) observe(h_step * static_cast<double>(i + 1));
        }
    } else {
        Eigen::VectorXcd y = Eigen::Map<Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
        Rk4Workspace<Eigen::VectorXcd> ws;
        auto rhs = [&](double, const Eigen::VectorXcd& x, Eigen::VectorXcd& dx) {
            std::span<const cplx> in(x.data(), static_cast<std::size_t>(x.size()));
            std::span<cplx> res(dx.data(), static_cast<std::size_t>(dx.size()));
            if (opts.parallel) h.apply(in, res);
            else h.apply_serial(in, res);
            dx *= cplx(0.0, -1.0);
        };
        for (long i = 0; i < steps; ++i) {
            rk4_step(rhs, h_step * static_cast<double>(i), h_step, y, ws);
            if ((i + 1) % opts.stride == 0 || i + 1 == steps) {
                std::copy(y.data(), y.data() + y.size(), psi.begin());
                observe(h_step * static_cast<double>(i + 1));
            }
        }
    }

    out.series.diagnostics["norm_drift"] = out.norm_drift;
    out.series.diagnostics["dimension"] = static_cast<double>(out.dim);
    out.series.diagnostics["kernel_error"] = bath.reconstruction_error;
    double lo = out.excitation.front();
    double hi = lo;
    for (double e : out.excitation) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    out.series.diagnostics["excitation_variation"] = hi - lo;
    return out;
}

} // namespace qle
