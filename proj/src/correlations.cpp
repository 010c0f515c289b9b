// correlations.cpp: kernel evaluation, thermal quadrature, exponential fit

#include "qle/correlations.hpp"
#include "qle/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qle {

namespace {

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) throw InputError(std::string(what) + " must be finite");
}

} // namespace

ExponentialKernel::ExponentialKernel(double amplitude, double decay, double modulation)
    : amplitude_(amplitude), decay_(decay), modulation_(modulation)
{
    require_finite(amplitude, "kernel amplitude");
    require_finite(decay, "kernel decay");
    require_finite(modulation, "kernel modulation");
    if (!(amplitude > 0.0)) throw InputError("kernel amplitude must be > 0");
    if (!(decay > 0.0)) throw InputError("kernel decay must be > 0");
}

ExponentialKernel ExponentialKernel::ornstein_uhlenbeck(double coupling, double decay)
{
    return ExponentialKernel(0.5 * coupling * decay, decay, 0.0);
}

ExponentialKernel ExponentialKernel::lorentzian(double coupling, double decay, double center)
{
    return ExponentialKernel(0.5 * coupling * decay, decay, center);
}

cplx ExponentialKernel::operator()(double lag) const
{
    require_finite(lag, "lag");
    if (lag == 0.0) return {amplitude_, 0.0};
    const double tau = std::abs(lag);
    const double mag = amplitude_ * std::exp(-decay_ * tau);
    // phase -Omega*tau for tau > 0, conjugate for negative lag
    const double phase = (lag > 0.0 ? -1.0 : 1.0) * modulation_ * tau;
    return std::polar(mag, phase);
}

double hamiltonian_shift(const ExponentialKernel& kernel, double t)
{
    require_finite(t, "time");
    if (t < 0.0) throw InputError("hamiltonian_shift requires t >= 0");
    if (kernel.is_real() || t == 0.0) return 0.0;
    const cplx z = kernel.rate();
    // int_0^t a e^{-z tau} d tau = a (1 - e^{-z t}) / z
    const cplx integral = kernel.amplitude() * (1.0 - std::exp(-z * t)) / z;
    return 4.0 * integral.imag();
}

double thermal_occupation(double mode_freq, double temperature)
{
    require_finite(mode_freq, "mode frequency");
    require_finite(temperature, "temperature");
    if (!(mode_freq > 0.0)) throw DomainError("thermal occupation needs a positive mode frequency");
    if (temperature < 0.0) throw InputError("temperature must be >= 0");
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(mode_freq / temperature);
}

FrequencyGrid ThermalKernelSpec::resolved_grid() const
{
    if (grid) return *grid;
    return FrequencyGrid{std::max(1e-3, center - 20.0 * decay), center + 20.0 * decay, 2000};
}

ExponentialKernel ThermalKernelSpec::base_kernel() const
{
    return ExponentialKernel::lorentzian(coupling, decay, center);
}

std::vector<BathMode> sample_lorentzian(const ThermalKernelSpec& spec)
{
    require_finite(spec.coupling, "Gamma");
    require_finite(spec.decay, "gamma");
    require_finite(spec.center, "Lorentzian center");
    if (!(spec.coupling > 0.0) || !(spec.decay > 0.0))
        throw InputError("Lorentzian bath needs Gamma > 0 and gamma > 0");
    if (spec.temperature < 0.0 || !std::isfinite(spec.temperature))
        throw InputError("temperature must be finite and >= 0");

    const FrequencyGrid g = spec.resolved_grid();
    if (g.count == 0) throw ConfigError("empty frequency grid");
    if (g.count < 2) throw ConfigError("frequency grid needs at least two points");
    if (!(g.min > 0.0)) throw DomainError("frequency grid must be restricted to positive frequencies");
    if (!(g.max > g.min)) throw ConfigError("frequency grid needs max > min");

    const double gamma = spec.decay;
    const double step = (g.max - g.min) / static_cast<double>(g.count - 1);
    std::vector<BathMode> modes(g.count);
    double total = 0.0;
    for (std::size_t k = 0; k < g.count; ++k) {
        const double w = g.min + step * static_cast<double>(k);
        const double dw = w - spec.center;
        const double density = spec.coupling * gamma * gamma
                             / (2.0 * std::numbers::pi * (gamma * gamma + dw * dw));
        const double trap = (k == 0 || k + 1 == g.count) ? 0.5 * step : step;
        modes[k] = {w, density * trap};
        total += modes[k].weight;
    }
    const double scale = 0.5 * spec.coupling * gamma / total;
    for (auto& m : modes) m.weight *= scale;
    return modes;
}

ThermalKernel::ThermalKernel(const ThermalKernelSpec& spec)
    : spec_(spec), modes_(sample_lorentzian(spec))
{
    occupation_.reserve(modes_.size());
    for (const auto& m : modes_) occupation_.push_back(thermal_occupation(m.freq, spec_.temperature));
}

cplx ThermalKernel::operator()(double lag) const
{
    require_finite(lag, "lag");
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        const double n = occupation_[k];
        const double phase = modes_[k].freq * lag;
        // (n+1) e^{-i phase} + n e^{i phase} = (2n+1) cos - i sin
        re += modes_[k].weight * (2.0 * n + 1.0) * std::cos(phase);
        im -= modes_[k].weight * std::sin(phase);
    }
    return {re, im};
}

ExponentialFit fit_exponential(std::span<const KernelSample> samples)
{
    std::vector<KernelSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const KernelSample& x, const KernelSample& y) { return x.lag < y.lag; });

    for (const auto& s : sorted) {
        if (!std::isfinite(s.lag) || !std::isfinite(s.value.real()) || !std::isfinite(s.value.imag()))
            throw FitError("fit_exponential: non-finite sample");
        if (s.lag < 0.0) throw FitError("fit_exponential: lags must be >= 0");
    }
    if (sorted.empty() || sorted.front().lag != 0.0)
        throw FitError("fit_exponential: a sample at lag 0 is required");
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].lag == sorted[i - 1].lag)
            throw FitError("fit_exponential: duplicate lag " + std::to_string(sorted[i].lag));
    if (sorted.size() < 4)
        throw FitError("fit_exponential: need at least 3 samples at distinct positive lags");

    const double a = sorted.front().value.real();
    if (!(a > 0.0)) throw FitError("fit_exponential: zero-lag sample must be real and positive");

    bool all_real = true;
    for (const auto& s : sorted) all_real = all_real && s.value.imag() == 0.0;

    // Least squares through the origin: log|r| = -gamma tau, arg r = -Omega tau.
    double stt = 0.0;
    double s_mag = 0.0;
    double s_phase = 0.0;
    double prev_phase = 0.0;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const cplx r = sorted[i].value / a;
        const double mag = std::abs(r);
        if (!(mag > 1e-12)) {
            throw FitError("fit_exponential: sample magnitude reaches zero at lag "
                           + std::to_string(sorted[i].lag) + " (|alpha|/alpha(0) = "
                           + std::to_string(mag) + ")");
        }
        if (all_real && r.real() < 0.0) {
            throw FitError("fit_exponential: real samples change sign at lag "
                           + std::to_string(sorted[i].lag));
        }
        double phase = std::arg(r);
        // unwrap against the previous sample
        while (phase - prev_phase > std::numbers::pi) phase -= 2.0 * std::numbers::pi;
        while (phase - prev_phase < -std::numbers::pi) phase += 2.0 * std::numbers::pi;
        prev_phase = phase;

        const double tau = sorted[i].lag;
        stt += tau * tau;
        s_mag += tau * std::log(mag);
        s_phase += tau * phase;
    }
    const double gamma = -s_mag / stt;
    const double omega = all_real ? 0.0 : -s_phase / stt;
    if (!(gamma > 0.0))
        throw FitError("fit_exponential: samples do not decay (fitted gamma = " + std::to_string(gamma) + ")");

    ExponentialKernel kernel(a, gamma, omega);
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : sorted) {
        num += std::norm(s.value - kernel(s.lag));
        den += std::norm(s.value);
    }
    return {kernel, std::sqrt(num / den)};
}

} // namespace qle
