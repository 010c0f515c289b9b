// run.cpp: configuration parsing, single runs, comparisons and sweeps

#include "run.hpp"

#include "qle/error.hpp"
#include "qle/finite_temperature.hpp"
#include "qle/oracle.hpp"
#include "qle/stochastic.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace qle::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

void check_fields(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

double number(const json& j, const std::string& key, const std::string& where)
{
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

long long integer(const json& j, const std::string& key, const std::string& where)
{
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return v.get<long long>();
}

std::string text(const json& j, const std::string& key, const std::string& where)
{
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

KernelConfig parse_kernel(const json& j)
{
    KernelConfig k;
    if (!j.is_object() || !j.contains("type")) throw ConfigError("kernel needs a 'type'");
    k.type = text(j, "type", "kernel");
    if (k.type == "ou") check_fields(j, {"type", "Gamma", "gamma"}, "kernel (ou)");
    else if (k.type == "complex-exp") check_fields(j, {"type", "Gamma", "gamma", "Omega"}, "kernel (complex-exp)");
    else if (k.type == "thermal") check_fields(j, {"type", "Gamma", "gamma", "Omega", "T", "grid"}, "kernel (thermal)");
    else throw ConfigError("unknown kernel type '" + k.type + "' (ou, complex-exp, thermal)");

    if (j.contains("Gamma")) k.Gamma = number(j, "Gamma", "kernel");
    if (j.contains("gamma")) k.gamma = number(j, "gamma", "kernel");
    if (j.contains("Omega")) k.Omega = number(j, "Omega", "kernel");
    else if (k.type == "thermal") k.Omega = 1.0;
    if (j.contains("T")) k.T = number(j, "T", "kernel");
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_fields(g, {"min", "max", "n"}, "kernel.grid");
        for (const char* f : {"min", "max", "n"})
            if (!g.contains(f)) throw ConfigError(std::string("kernel.grid needs '") + f + "'");
        const long long n = integer(g, "n", "kernel.grid");
        if (n < 0) throw ConfigError("kernel.grid.n must be >= 0");
        k.grid = FrequencyGrid{number(g, "min", "kernel.grid"), number(g, "max", "kernel.grid"),
                               static_cast<std::size_t>(n)};
    }
    return k;
}

json kernel_json(const KernelConfig& k)
{
    json j{{"type", k.type}, {"Gamma", k.Gamma}, {"gamma", k.gamma}};
    if (k.type != "ou") j["Omega"] = k.Omega;
    if (k.type == "thermal") {
        j["T"] = k.T;
        if (k.grid) j["grid"] = {{"min", k.grid->min}, {"max", k.grid->max}, {"n", k.grid->count}};
    }
    return j;
}

ExponentialKernel exponential_of(const KernelConfig& k)
{
    if (k.type == "ou") return ExponentialKernel::ornstein_uhlenbeck(k.Gamma, k.gamma);
    if (k.type == "complex-exp") return ExponentialKernel::lorentzian(k.Gamma, k.gamma, k.Omega);
    throw ConfigError("this mode needs an exponential kernel (ou or complex-exp), not '" + k.type + "'");
}

ThermalKernelSpec thermal_of(const KernelConfig& k)
{
    ThermalKernelSpec s;
    s.coupling = k.Gamma;
    s.decay = k.gamma;
    s.center = k.Omega;
    s.temperature = k.T;
    s.grid = k.grid;
    return s;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int output_every(double interval, double step)
{
    const double r = interval / step;
    const long k = std::lround(r);
    if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * r)
        throw ConfigError("output interval " + fmt(interval) + " is not a whole number of steps " + fmt(step));
    return static_cast<int>(k);
}

TimeSeries subsample(const TimeSeries& s, int every)
{
    TimeSeries out;
    out.diagnostics = s.diagnostics;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i % static_cast<std::size_t>(every) != 0 && i + 1 != s.size()) continue;
        out.push(s.t[i], s.bloch[i], s.max_imag[i]);
        if (s.has_std_error()) out.std_error.push_back(s.std_error[i]);
    }
    return out;
}

json diagnostics_json(const TimeSeries& s)
{
    json d = json::object();
    for (const auto& [k, v] : s.diagnostics) d[k] = v;
    return d;
}

void write_manifest(const fs::path& path, const RunConfig& c, const std::string& data_file,
                    double seconds, const json& diagnostics)
{
    json m{{"artifact", "qle"},
           {"version", kVersion},
           {"data", data_file},
           {"config", to_json(c)},
           {"wall_clock_seconds", seconds},
           {"diagnostics", diagnostics}};
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << m.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void validate_single(const RunConfig& c, Mode m)
{
    if (m == Mode::oracle || m == Mode::mc) exponential_of(c.kernel);
    if (m == Mode::mc) {
        if (!c.n_traj) throw ConfigError("mode mc requires n_traj");
        if (!c.seed) throw ConfigError("mode mc requires seed");
        if (*c.n_traj < 1) throw ConfigError("n_traj must be >= 1");
        output_every(c.stride * c.dt, c.noise_step);
    }
    if (m == Mode::oracle) {
        if (c.oracle.modes < 2) throw ConfigError("oracle.modes must be >= 2");
        if (c.oracle.cutoff < 0) throw ConfigError("oracle.cutoff must be >= 0");
        if (!(c.oracle.dt > 0.0)) throw InputError("oracle.dt must be > 0");
        output_every(c.stride * c.dt, c.oracle.dt);
        if (std::abs(c.initial.norm() - 1.0) > 1e-9) throw InputError("oracle mode needs a pure initial state, |A0| = 1");
    }
    if (c.kernel.type == "thermal") {
        if (m != Mode::bloch) throw ConfigError("thermal kernels are only supported in bloch mode");
        if (!(c.kernel.T >= 0.0) || !std::isfinite(c.kernel.T)) throw InputError("kernel.T must be >= 0");
        sample_lorentzian(thermal_of(c.kernel));
        SystemSpec s = system_of(c);
        s.correction = Correction::sigma_x_freeze;
        s.validate();
    } else {
        system_of(c).validate();
    }
}

} // namespace

Mode parse_mode(const std::string& name)
{
    if (name == "bloch") return Mode::bloch;
    if (name == "oracle") return Mode::oracle;
    if (name == "mc") return Mode::mc;
    if (name == "sweep") return Mode::sweep;
    if (name == "compare") return Mode::compare;
    throw ConfigError("unknown mode '" + name + "' (bloch, oracle, mc, sweep, compare)");
}

std::string to_string(Mode m)
{
    switch (m) {
    case Mode::bloch: return "bloch";
    case Mode::oracle: return "oracle";
    case Mode::mc: return "mc";
    case Mode::sweep: return "sweep";
    case Mode::compare: return "compare";
    }
    return "bloch";
}

RunConfig parse_config(const json& j)
{
    try {
        check_fields(j, {"mode", "omega", "initial", "correction", "kernel", "order", "dt", "t_max", "stride",
                         "seed", "n_traj", "noise_step", "oracle", "sweep", "compare", "output", "run_id"},
                     "config");
        RunConfig c;
        if (j.contains("mode")) c.mode = parse_mode(text(j, "mode", "config"));
        if (j.contains("omega")) c.omega = number(j, "omega", "config");
        if (j.contains("initial")) {
            const auto& a = j.at("initial");
            if (!a.is_array() || a.size() != 3 || !std::all_of(a.begin(), a.end(), [](const json& x) { return x.is_number(); }))
                throw ConfigError("initial must be an array of three numbers");
            c.initial = Vec3r(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
        }
        if (j.contains("correction")) {
            try {
                c.correction = parse_correction(text(j, "correction", "config"));
            } catch (const InputError& e) {
                throw ConfigError(e.what());
            }
        }
        if (j.contains("kernel")) c.kernel = parse_kernel(j.at("kernel"));
        if (j.contains("order")) c.order = static_cast<int>(integer(j, "order", "config"));
        if (j.contains("dt")) c.dt = number(j, "dt", "config");
        if (j.contains("t_max")) c.t_max = number(j, "t_max", "config");
        if (j.contains("stride")) c.stride = static_cast<int>(integer(j, "stride", "config"));
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
            c.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("n_traj")) {
            if (!j.at("n_traj").is_number_unsigned()) throw ConfigError("n_traj must be a positive integer");
            c.n_traj = j.at("n_traj").get<std::size_t>();
        }
        if (j.contains("noise_step")) c.noise_step = number(j, "noise_step", "config");
        if (j.contains("oracle")) {
            const auto& o = j.at("oracle");
            check_fields(o, {"modes", "cutoff", "dt", "rotating_wave"}, "oracle");
            if (o.contains("modes")) c.oracle.modes = static_cast<int>(integer(o, "modes", "oracle"));
            if (o.contains("cutoff")) c.oracle.cutoff = static_cast<int>(integer(o, "cutoff", "oracle"));
            if (o.contains("dt")) c.oracle.dt = number(o, "dt", "oracle");
            if (o.contains("rotating_wave")) {
                if (!o.at("rotating_wave").is_boolean()) throw ConfigError("oracle.rotating_wave must be a boolean");
                c.oracle.rotating_wave = o.at("rotating_wave").get<bool>();
            }
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_fields(s, {"param", "values", "hold", "run_mode"}, "sweep");
            SweepConfig sw;
            if (!s.contains("param") || !s.contains("values")) throw ConfigError("sweep needs 'param' and 'values'");
            sw.param = text(s, "param", "sweep");
            const auto& v = s.at("values");
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); }))
                throw ConfigError("sweep.values must be an array of numbers");
            for (const auto& x : v) sw.values.push_back(x.get<double>());
            if (s.contains("hold")) sw.hold = text(s, "hold", "sweep");
            if (s.contains("run_mode")) sw.run_mode = parse_mode(text(s, "run_mode", "sweep"));
            c.sweep = sw;
        }
        if (j.contains("compare")) {
            const auto& s = j.at("compare");
            check_fields(s, {"methods", "interval"}, "compare");
            if (s.contains("methods")) {
                const auto& m = s.at("methods");
                if (!m.is_array()) throw ConfigError("compare.methods must be an array");
                c.compare_methods.clear();
                for (const auto& x : m) {
                    if (!x.is_string()) throw ConfigError("compare.methods entries must be strings");
                    c.compare_methods.push_back(parse_mode(x.get<std::string>()));
                }
            }
            if (s.contains("interval")) c.compare_interval = number(s, "interval", "compare");
        }
        if (j.contains("output")) c.output = text(j, "output", "config");
        if (j.contains("run_id")) c.run_id = text(j, "run_id", "config");
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json to_json(const RunConfig& c)
{
    json j{{"mode", to_string(c.mode)},
           {"omega", c.omega},
           {"initial", {c.initial[0], c.initial[1], c.initial[2]}},
           {"correction", std::string(to_string(c.correction))},
           {"kernel", kernel_json(c.kernel)},
           {"order", c.order},
           {"dt", c.dt},
           {"t_max", c.t_max},
           {"stride", c.stride},
           {"noise_step", c.noise_step},
           {"oracle", {{"modes", c.oracle.modes}, {"cutoff", c.oracle.cutoff}, {"dt", c.oracle.dt},
                       {"rotating_wave", c.oracle.rotating_wave}}},
           {"output", c.output},
           {"run_id", c.run_id}};
    if (c.seed) j["seed"] = *c.seed;
    if (c.n_traj) j["n_traj"] = *c.n_traj;
    if (c.sweep) {
        j["sweep"] = {{"param", c.sweep->param}, {"values", c.sweep->values}, {"run_mode", to_string(c.sweep->run_mode)}};
        if (!c.sweep->hold.empty()) j["sweep"]["hold"] = c.sweep->hold;
    }
    if (c.mode == Mode::compare) {
        json m = json::array();
        for (auto x : c.compare_methods) m.push_back(to_string(x));
        j["compare"] = {{"methods", m}, {"interval", c.compare_interval}};
    }
    return j;
}

SystemSpec system_of(const RunConfig& c)
{
    SystemSpec s;
    s.splitting = c.omega;
    s.initial = c.initial;
    s.correction = c.correction;
    s.kernel = c.kernel.type == "thermal" ? thermal_of(c.kernel).base_kernel() : exponential_of(c.kernel);
    return s;
}

void validate(const RunConfig& c)
{
    if (c.order < 0) throw ConfigError("order must be >= 0");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw InputError("dt must be > 0");
    if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw InputError("t_max must be > 0");
    if (c.stride < 1) throw ConfigError("stride must be >= 1");
    if (!(c.noise_step > 0.0)) throw InputError("noise_step must be > 0");
    for (double v : {c.kernel.Gamma, c.kernel.gamma})
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError("kernel Gamma and gamma must be > 0");

    if (c.mode == Mode::sweep) {
        if (!c.sweep) throw ConfigError("mode sweep requires a 'sweep' axis");
        const auto& s = *c.sweep;
        static const std::set<std::string> params{"gamma", "Gamma", "omega", "Omega", "T", "order"};
        if (!params.count(s.param)) throw ConfigError("cannot sweep '" + s.param + "'");
        if (s.values.empty()) throw ConfigError("sweep axis '" + s.param + "' has no values");
        if (!s.hold.empty() && s.hold != "gamma_Gamma") throw ConfigError("unknown sweep hold '" + s.hold + "'");
        if (!s.hold.empty() && s.param != "gamma" && s.param != "Gamma")
            throw ConfigError("hold gamma_Gamma needs a gamma or Gamma axis");
        if (s.run_mode == Mode::sweep || s.run_mode == Mode::compare)
            throw ConfigError("sweep.run_mode must be bloch, oracle or mc");
        for (double v : s.values) {
            RunConfig e = with_sweep_value(c, s.param, v, s.hold);
            e.mode = s.run_mode;
            e.sweep.reset();
            validate(e);
        }
        return;
    }
    if (c.mode == Mode::compare) {
        if (c.compare_methods.size() < 2) throw ConfigError("compare needs at least two methods");
        for (auto m : c.compare_methods) {
            if (m == Mode::sweep || m == Mode::compare) throw ConfigError("compare methods must be bloch, oracle or mc");
            validate_single(c, m);
        }
        if (!(c.compare_interval > 0.0)) throw InputError("compare.interval must be > 0");
        return;
    }
    validate_single(c, c.mode);
}

RunConfig with_sweep_value(const RunConfig& c, const std::string& param, double value, const std::string& hold)
{
    RunConfig e = c;
    const double product = c.kernel.gamma * c.kernel.Gamma;
    if (param == "gamma") {
        e.kernel.gamma = value;
        if (hold == "gamma_Gamma") e.kernel.Gamma = product / value;
    } else if (param == "Gamma") {
        e.kernel.Gamma = value;
        if (hold == "gamma_Gamma") e.kernel.gamma = product / value;
    } else if (param == "omega") {
        e.omega = value;
    } else if (param == "Omega") {
        e.kernel.Omega = value;
    } else if (param == "T") {
        e.kernel.T = value;
    } else if (param == "order") {
        if (value != std::floor(value) || value < 0) throw ConfigError("order values must be non-negative integers");
        e.order = static_cast<int>(value);
    } else {
        throw ConfigError("cannot sweep '" + param + "'");
    }
    return e;
}

std::string format_value(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_csv(const fs::path& path, const TimeSeries& s)
{
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    const bool se = s.has_std_error();
    f << "t,sx,sy,sz";
    if (se) f << ",se_sx,se_sy,se_sz";
    f << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        f << fmt(s.t[i]);
        for (int k = 0; k < 3; ++k) f << ',' << fmt(s.bloch[i][k]);
        if (se)
            for (int k = 0; k < 3; ++k) f << ',' << fmt(s.std_error[i][k]);
        f << '\n';
    }
}

TimeSeries resample(const TimeSeries& s, const std::vector<double>& times)
{
    if (s.size() == 0) throw ConfigError("cannot resample an empty series");
    TimeSeries out;
    out.diagnostics = s.diagnostics;
    std::size_t j = 0;
    for (double t : times) {
        while (j + 2 < s.size() && s.t[j + 1] < t) ++j;
        Vec3r v;
        Vec3r e = Vec3r::Zero();
        if (s.size() == 1 || t <= s.t.front()) {
            v = s.bloch.front();
            if (s.has_std_error()) e = s.std_error.front();
        } else if (t >= s.t.back()) {
            v = s.bloch.back();
            if (s.has_std_error()) e = s.std_error.back();
        } else {
            const double w = (t - s.t[j]) / (s.t[j + 1] - s.t[j]);
            v = (1.0 - w) * s.bloch[j] + w * s.bloch[j + 1];
            if (s.has_std_error()) e = (1.0 - w) * s.std_error[j] + w * s.std_error[j + 1];
        }
        out.push(t, v);
        if (s.has_std_error()) out.std_error.push_back(e);
    }
    return out;
}

MethodOutput run_method(Mode m, const RunConfig& c)
{
    MethodOutput out;
    if (m == Mode::bloch) {
        PropagateOptions p;
        p.order = c.order;
        p.dt = c.dt;
        p.t_max = c.t_max;
        p.stride = c.stride;
        if (c.kernel.type == "thermal") {
            FiniteTOptions f;
            f.propagate = p;
            auto r = solve_finite_T(thermal_of(c.kernel), c.omega, c.initial, f);
            out.series = std::move(r.run.series);
            out.diagnostics = diagnostics_json(out.series);
            out.diagnostics["correction"] = "sigma-x-freeze";
            out.diagnostics["fit_bypassed"] = !r.fit.has_value();
        } else {
            out.series = propagate(system_of(c), p).series;
            out.diagnostics = diagnostics_json(out.series);
        }
        return out;
    }
    if (m == Mode::oracle) {
        const auto kernel = exponential_of(c.kernel);
        const auto bath = discretize(kernel, c.oracle.modes, c.t_max, c.omega);
        OracleOptions o;
        o.cutoff = c.oracle.cutoff;
        o.dt = c.oracle.dt;
        o.t_max = c.t_max;
        o.stride = output_every(c.stride * c.dt, c.oracle.dt);
        o.rotating_wave = c.oracle.rotating_wave;
        auto r = evolve_exact(bath, c.omega, spin_state_from_bloch(c.initial), o);
        out.series = std::move(r.series);
        out.diagnostics = diagnostics_json(out.series);
        out.diagnostics["discretization_error"] = bath.reconstruction_error;
        return out;
    }
    if (m == Mode::mc) {
        EnsembleOptions e;
        e.n_traj = c.n_traj.value();
        e.seed = c.seed.value();
        e.order = c.order;
        e.noise_step = c.noise_step;
        e.t_max = c.t_max;
        e.hierarchy_dt = c.dt;
        auto r = ensemble_mean(system_of(c), e);
        out.series = subsample(r.series, output_every(c.stride * c.dt, c.noise_step));
        out.diagnostics = diagnostics_json(r.series);
        return out;
    }
    throw ConfigError("run_method: '" + to_string(m) + "' is not a single-method mode");
}

namespace {

int run_single(const RunConfig& c, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const MethodOutput r = run_method(c.mode, c);
    const double secs = seconds_since(t0);
    fs::create_directories(c.output);
    const fs::path csv = fs::path(c.output) / (c.run_id + ".csv");
    write_csv(csv, r.series);
    write_manifest(fs::path(c.output) / (c.run_id + ".json"), c, csv.filename().string(), secs, r.diagnostics);
    if (!c.quiet) log << "wrote " << csv.string() << " (" << r.series.size() << " rows, " << secs << " s)\n";
    return 0;
}

int run_compare(const RunConfig& c, std::ostream& log)
{
    std::vector<double> times;
    const long n = std::lround(std::floor(c.t_max / c.compare_interval + 1e-9));
    for (long i = 0; i <= n; ++i) times.push_back(c.compare_interval * static_cast<double>(i));
    if (times.back() < c.t_max - 1e-12) times.push_back(c.t_max);

    std::vector<MethodOutput> results;
    std::vector<double> secs;
    for (auto m : c.compare_methods) {
        const auto t0 = std::chrono::steady_clock::now();
        results.push_back(run_method(m, c));
        secs.push_back(seconds_since(t0));
    }

    const fs::path dir = fs::path(c.output) / c.run_id;
    fs::create_directories(dir);
    std::vector<TimeSeries> sampled;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::string name = to_string(c.compare_methods[i]);
        sampled.push_back(resample(results[i].series, times));
        write_csv(dir / (name + ".csv"), sampled.back());
        write_manifest(dir / (name + ".json"), c, name + ".csv", secs[i], results[i].diagnostics);
    }

    // deltas of every method against the first
    std::ofstream f(dir / "deltas.csv");
    if (!f) throw Error("cannot write deltas.csv");
    f << 't';
    for (std::size_t i = 1; i < sampled.size(); ++i) {
        const std::string name = to_string(c.compare_methods[i]);
        f << ',' << name << "_dsx," << name << "_dsy," << name << "_dsz";
    }
    f << '\n';
    json sup = json::object();
    std::vector<Vec3r> worst(sampled.size(), Vec3r::Zero());
    for (std::size_t k = 0; k < times.size(); ++k) {
        f << fmt(times[k]);
        for (std::size_t i = 1; i < sampled.size(); ++i) {
            const Vec3r d = sampled[i].bloch[k] - sampled[0].bloch[k];
            worst[i] = worst[i].cwiseMax(d.cwiseAbs());
            for (int a = 0; a < 3; ++a) f << ',' << fmt(d[a]);
        }
        f << '\n';
    }
    f.close();
    for (std::size_t i = 1; i < sampled.size(); ++i)
        sup[to_string(c.compare_methods[i]) + "_vs_" + to_string(c.compare_methods[0])] =
            {{"sx", worst[i][0]}, {"sy", worst[i][1]}, {"sz", worst[i][2]}};
    double total = 0.0;
    for (double s : secs) total += s;
    write_manifest(dir / "deltas.json", c, "deltas.csv", total, {{"sup_norm", sup}});
    if (!c.quiet) log << "wrote " << sampled.size() + 1 << " CSV files to " << dir.string() << '\n';
    return 0;
}

int run_sweep(const RunConfig& c, std::ostream& log)
{
    const SweepConfig& s = *c.sweep;
    const std::size_t n = s.values.size();
    std::vector<RunConfig> entries;
    for (double v : s.values) {
        RunConfig e = with_sweep_value(c, s.param, v, s.hold);
        e.mode = s.run_mode;
        e.sweep.reset();
        e.run_id = s.param + "=" + format_value(v);
        entries.push_back(e);
    }

    std::vector<MethodOutput> results(n);
    std::vector<double> secs(n, 0.0);
    std::vector<std::string> failure(n);
    std::vector<int> failure_code(n, 0);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            results[k] = run_method(entries[k].mode, entries[k]);
        } catch (const ConfigError& e) {
            failure[k] = e.what();
            failure_code[k] = 2;
        } catch (const std::exception& e) {
            failure[k] = e.what();
            failure_code[k] = 1;
        }
        secs[k] = seconds_since(t0);
    }

    const fs::path dir = fs::path(c.output) / (c.run_id);
    fs::create_directories(dir);
    json index{{"run_id", c.run_id}, {"param", s.param}, {"entries", json::array()}, {"complete", true}};
    int status = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string name = entries[i].run_id;
        if (failure_code[i] != 0) {
            index["entries"].push_back({{"value", s.values[i]}, {"status", "failed"}, {"error", failure[i]}});
            index["complete"] = false;
            status = failure_code[i];
            if (!c.quiet) log << "sweep entry " << name << " failed: " << failure[i] << '\n';
            break;
        }
        write_csv(dir / (name + ".csv"), results[i].series);
        write_manifest(dir / (name + ".json"), entries[i], name + ".csv", secs[i], results[i].diagnostics);
        index["entries"].push_back({{"value", s.values[i]}, {"status", "ok"}, {"csv", name + ".csv"},
                                    {"manifest", name + ".json"}});
    }
    std::ofstream f(dir / "index.json");
    f << index.dump(2) << '\n';
    if (!c.quiet) log << "sweep over " << s.param << ": " << index["entries"].size() << " entries in " << dir.string() << '\n';
    return status;
}

} // namespace

int execute(const RunConfig& config, std::ostream& log)
{
    RunConfig c = config;
    if (c.run_id.empty()) c.run_id = to_string(c.mode);
    try {
        validate(c);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        switch (c.mode) {
        case Mode::sweep: return run_sweep(c, log);
        case Mode::compare: return run_compare(c, log);
        default: return run_single(c, log);
        }
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace qle::cli
