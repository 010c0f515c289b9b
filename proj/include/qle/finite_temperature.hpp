// finite_temperature.hpp: thermofield doubling of a thermal bath and the
// deterministic finite-T route through a single-exponential fit.
//
// Each mode a_k = sqrt(n_k + 1) c_k + sqrt(n_k) d_k^+ with c, d in vacuum; d
// lives in the fictitious bath with frequency -w_k. The doubled zero-T bath
// reproduces
//
//   alpha_T(tau) = sum_k |g_k|^2 [(n_k + 1) e^{-i w_k tau} + n_k e^{i w_k tau}].
//
// The stochastic finite-T equation (doubled noise chi_t and its W_T term) is
// not simulated; only the kernel feeds the hierarchy.

#pragma once

#include "qle/correlations.hpp"
#include "qle/hierarchy.hpp"
#include "qle/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace qle {

struct ThermofieldMode {
    double freq;
    double weight;     // |g_k|^2
    double occupation; // n_k
    double c_weight;   // sqrt(n_k + 1)
    double d_weight;   // sqrt(n_k)
};

struct ThermofieldMap {
    double temperature = 0.0;
    std::vector<ThermofieldMode> modes;
};

// Throws DomainError for a non-positive mode frequency, InputError for a
// negative or non-finite temperature.
ThermofieldMap build_thermofield(std::span<const BathMode> modes, double temperature);

// Sum over the c and d channels of the doubled bath.
cplx thermal_kernel_from_map(const ThermofieldMap& map, double lag);

struct FiniteTOptions {
    PropagateOptions propagate;
    std::size_t fit_samples = 200;  // lags 0 .. fit_span in this many steps
    double fit_span = 0.0;          // 0 selects 5 / gamma of the base Lorentzian
    double max_fit_residual = 0.05;
};

struct FiniteTResult {
    Propagation run;
    std::optional<ExponentialFit> fit; // empty when T = 0 bypassed the fit
};

// T = 0 runs the base Lorentzian kernel directly. T > 0 samples alpha_T,
// fits a single exponential and runs the hierarchy with it; both use the
// sigma-x-freeze correction. Throws ModelInadequacyError when the fit
// residual exceeds opts.max_fit_residual. The residual is also recorded in
// run.series.diagnostics["fit_residual"].
FiniteTResult solve_finite_T(const ThermalKernelSpec& bath, double splitting, const Vec3r& initial,
                             const FiniteTOptions& opts);

} // namespace qle
