// finite_temperature.cpp: thermofield map and the fitted finite-T route

#include "qle/finite_temperature.hpp"
#include "qle/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qle {

ThermofieldMap build_thermofield(std::span<const BathMode> modes, double temperature)
{
    if (!std::isfinite(temperature) || temperature < 0.0)
        throw InputError("temperature must be finite and >= 0");
    ThermofieldMap map;
    map.temperature = temperature;
    map.modes.reserve(modes.size());
    for (const auto& m : modes) {
        if (!(m.freq > 0.0)) {
            std::ostringstream msg;
            msg << "thermofield map needs positive mode frequencies (got " << m.freq << ")";
            throw DomainError(msg.str());
        }
        const double n = thermal_occupation(m.freq, temperature);
        map.modes.push_back({m.freq, m.weight, n, std::sqrt(n + 1.0), std::sqrt(n)});
    }
    return map;
}

cplx thermal_kernel_from_map(const ThermofieldMap& map, double lag)
{
    cplx sum = 0.0;
    for (const auto& m : map.modes) {
        const cplx c_channel = m.c_weight * m.c_weight * std::polar(1.0, -m.freq * lag);
        const cplx d_channel = m.d_weight * m.d_weight * std::polar(1.0, m.freq * lag);
        sum += m.weight * (c_channel + d_channel);
    }
    return sum;
}

FiniteTResult solve_finite_T(const ThermalKernelSpec& bath, double splitting, const Vec3r& initial,
                             const FiniteTOptions& opts)
{
    SystemSpec sys;
    sys.splitting = splitting;
    sys.initial = initial;
    sys.correction = Correction::sigma_x_freeze;

    FiniteTResult out;
    if (bath.temperature == 0.0) {
        sys.kernel = bath.base_kernel();
        out.run = propagate(sys, opts.propagate);
        return out;
    }

    const ThermalKernel kernel(bath);
    const double span = opts.fit_span > 0.0 ? opts.fit_span : 5.0 / bath.decay;
    if (opts.fit_samples < 3) throw ConfigError("finite-T fit needs at least 3 samples");
    const auto samples = sample_kernel(kernel, span / static_cast<double>(opts.fit_samples), opts.fit_samples);

    ExponentialFit fit = [&] {
        try {
            return fit_exponential(samples);
        } catch (const FitError& e) {
            throw ModelInadequacyError(std::string("finite-T kernel cannot be fitted by one exponential: ") + e.what(),
                                       std::numeric_limits<double>::infinity());
        }
    }();
    if (fit.residual > opts.max_fit_residual) {
        std::ostringstream msg;
        msg << "finite-T kernel at T = " << bath.temperature
            << " is not a single exponential: relative fit residual " << fit.residual
            << " exceeds " << opts.max_fit_residual;
        throw ModelInadequacyError(msg.str(), fit.residual);
    }

    sys.kernel = fit.kernel;
    out.run = propagate(sys, opts.propagate);
    auto& d = out.run.series.diagnostics;
    d["fit_residual"] = fit.residual;
    d["fit_amplitude"] = fit.kernel.amplitude();
    d["fit_decay"] = fit.kernel.decay();
    d["fit_modulation"] = fit.kernel.modulation();
    out.fit = fit;
    return out;
}

} // namespace qle
