// correlations.hpp: bath correlation kernels (zero-temperature exponential
// family and the sampled finite-temperature Lorentzian bath)

#pragma once

#include "qle/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace qle {

// alpha(tau) = a * exp(-(gamma + i Omega) |tau|), conjugated for tau < 0.
// Omega = 0 is the real Ornstein-Uhlenbeck kernel.
class ExponentialKernel {
public:
    ExponentialKernel(double amplitude, double decay, double modulation = 0.0);

    // a = Gamma * gamma / 2, the normalization used throughout for the OU bath.
    static ExponentialKernel ornstein_uhlenbeck(double coupling, double decay);
    static ExponentialKernel lorentzian(double coupling, double decay, double center);

    double amplitude() const noexcept { return amplitude_; }
    double decay() const noexcept { return decay_; }
    double modulation() const noexcept { return modulation_; }
    cplx rate() const noexcept { return {decay_, modulation_}; }
    bool is_real() const noexcept { return modulation_ == 0.0; }

    // Throws InputError on a non-finite lag.
    cplx operator()(double lag) const;

private:
    double amplitude_;
    double decay_;
    double modulation_;
};

// v(t) = 4 * int_0^t Im alpha(t - s) ds, in closed form.
double hamiltonian_shift(const ExponentialKernel& kernel, double t);

// Bose occupation 1 / (exp(w/T) - 1); zero at T = 0.
double thermal_occupation(double mode_freq, double temperature);

struct FrequencyGrid {
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

// Lorentzian bath S(w) = Gamma gamma^2 / (2 pi (gamma^2 + (w - center)^2)),
// restricted to positive frequencies and held at temperature T.
struct ThermalKernelSpec {
    double coupling = 1.0;  // Gamma
    double decay = 0.2;     // gamma, Lorentzian half width
    double center = 1.0;    // Lorentzian center
    double temperature = 0.0;
    std::optional<FrequencyGrid> grid;

    // Explicit grid if set, else 2000 points over
    // [max(1e-3, center - 20 gamma), center + 20 gamma].
    FrequencyGrid resolved_grid() const;

    // The zero-temperature exponential the Lorentzian would produce on the
    // full frequency line.
    ExponentialKernel base_kernel() const;
};

struct BathMode {
    double freq;
    double weight; // |g_k|^2
};

// Trapezoidal discretization of the Lorentzian on the resolved grid. The
// weights are rescaled so the zero-temperature sum carries the full
// amplitude Gamma gamma / 2 at zero lag.
std::vector<BathMode> sample_lorentzian(const ThermalKernelSpec& spec);

// alpha_T(tau) = sum_k |g_k|^2 [(n_k + 1) e^{-i w_k tau} + n_k e^{i w_k tau}].
// Immutable after construction.
class ThermalKernel {
public:
    explicit ThermalKernel(const ThermalKernelSpec& spec);

    const ThermalKernelSpec& spec() const noexcept { return spec_; }
    std::span<const BathMode> modes() const noexcept { return modes_; }

    cplx operator()(double lag) const;

private:
    ThermalKernelSpec spec_;
    std::vector<BathMode> modes_;
    std::vector<double> occupation_;
};

struct KernelSample {
    double lag;
    cplx value;
};

struct ExponentialFit {
    ExponentialKernel kernel;
    double residual; // relative RMS misfit over the samples
};

// a from the zero-lag sample, (gamma, Omega) by least squares on the log
// magnitude and the unwrapped phase. Throws FitError when the samples are
// unusable (too few, no zero lag, magnitude reaching zero).
ExponentialFit fit_exponential(std::span<const KernelSample> samples);

// Convenience: sample any kernel callable on lags 0, step, ..., count*step.
template <class Kernel>
std::vector<KernelSample> sample_kernel(const Kernel& kernel, double step, std::size_t count)
{
    std::vector<KernelSample> out;
    out.reserve(count + 1);
    for (std::size_t i = 0; i <= count; ++i) {
        const double lag = step * static_cast<double>(i);
        out.push_back({lag, kernel(lag)});
    }
    return out;
}

} // namespace qle
