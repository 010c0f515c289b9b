// oracle.hpp: brute-force reference: the spin coupled to a finite set of
// bath modes, evolved exactly in a truncated Fock space.
//
//   H = (w/2) sz + sum_k w_k a_k^+ a_k + sx sum_k g_k (a_k^+ + a_k)
//
// The bath modes come from sampling the Lorentzian whose Fourier transform is
// the exponential kernel, so alpha(tau) ~ sum_k g_k^2 exp(-i w_k tau). The OU
// Lorentzian is centered at zero, which means negative mode frequencies are
// admitted; the discretized bath is a faithful representation of the kernel,
// not a physical thermal reservoir.

#pragma once

#include "qle/correlations.hpp"
#include "qle/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qle {

struct BathDiscretization {
    std::vector<BathMode> modes;    // (w_k, g_k^2)
    double reconstruction_error;    // sup |sum_k g_k^2 e^{-i w_k tau} - alpha(tau)| on [0, t_max]
    double t_max;

    cplx reconstructed(double lag) const;
};

// M modes at the midpoints of a uniform grid on [Omega - W, Omega + W],
// W = max(8 gamma, 4 splitting), g_k^2 = S(w_k) dw. Throws
// DiscretizationError when the reconstruction error exceeds 5% of a.
BathDiscretization discretize(const ExponentialKernel& kernel, int modes, double t_max,
                              double splitting = 1.0);

// Bath configurations with total excitation number <= cutoff, ordered by
// total number. Each configuration is a sorted multiset of mode indices.
class FockBasis {
public:
    FockBasis(int modes, int cutoff);

    int modes() const noexcept { return modes_; }
    int cutoff() const noexcept { return cutoff_; }
    std::size_t size() const noexcept { return total_.size(); }

    int total(std::size_t c) const noexcept { return total_[c]; }
    std::span<const std::uint16_t> config(std::size_t c) const;

    // Index of c with one more quantum in `mode`, or -1 beyond the cutoff.
    std::int64_t raise(std::size_t c, int mode) const;

    // Number of configurations with total <= cutoff: C(modes + cutoff, cutoff).
    static std::size_t count(int modes, int cutoff);

private:
    int modes_;
    int cutoff_;
    std::vector<std::uint16_t> slots_; // cutoff_ entries per config, unused = 0xffff
    std::vector<int> total_;
    std::vector<std::int32_t> raise_;  // modes_ entries per config with total < cutoff
    std::vector<std::int64_t> raise_offset_;
};

// Real symmetric Hamiltonian on spin (x) Fock, stored in CSR. Basis index is
// spin * basis.size() + config with spin 0 = up, 1 = down.
class SpinBosonHamiltonian {
public:
    // rotating_wave drops the counter-rotating terms a^+ s+ and a s-.
    SpinBosonHamiltonian(const FockBasis& basis, std::span<const BathMode> modes,
                         double splitting, bool rotating_wave = false);

    std::size_t dim() const noexcept { return row_ptr_.size() - 1; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    // y = H x. The parallel version splits rows across OpenMP threads; each
    // row is summed in the same order either way, so results are identical.
    void apply(std::span<const cplx> x, std::span<cplx> y) const;
    void apply_serial(std::span<const cplx> x, std::span<cplx> y) const;

    // Gershgorin enclosure of the spectrum.
    std::pair<double, double> spectral_bounds() const;

private:
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> cols_;
    std::vector<double> values_;
};

enum class OracleIntegrator {
    chebyshev, // expansion of exp(-i H dt) per step, unitary to ~1e-14
    rk4
};

struct OracleOptions {
    int cutoff = 3;
    double dt = 0.05;       // step; with rk4 use ~1e-3
    double t_max = 10.0;
    int stride = 1;         // emit every `stride` steps
    OracleIntegrator integrator = OracleIntegrator::chebyshev;
    bool rotating_wave = false;
    std::size_t max_dim = 4'000'000;
    double max_norm_drift = 1e-6;
    bool parallel = true;
};

struct OracleResult {
    TimeSeries series;
    std::vector<double> excitation; // <N_bath + (sz + 1)/2> per sample
    double norm_drift = 0.0;
    std::size_t dim = 0;
};

// Normalized spin state with the given pure-state Bloch vector.
Eigen::Vector2cd spin_state_from_bloch(const Vec3r& bloch);

// Evolve |spin> (x) |vacuum>. Throws IntegrationError when the norm drifts
// by more than opts.max_norm_drift, ConfigError when the Hilbert space is
// larger than opts.max_dim.
OracleResult evolve_exact(const BathDiscretization& bath, double splitting,
                          const Eigen::Vector2cd& spin, const OracleOptions& opts);

} // namespace qle
