// run.hpp: JSON run configuration, orchestration and CSV/manifest output
// for the qle command line tool.

#pragma once

#include "qle/hierarchy.hpp"
#include "qle/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qle::cli {

enum class Mode { bloch, oracle, mc, sweep, compare };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

struct KernelConfig {
    std::string type = "ou"; // ou | complex-exp | thermal
    double Gamma = 1.0;
    double gamma = 0.2;
    double Omega = 0.0;      // modulation, or Lorentzian center for thermal
    double T = 0.0;
    std::optional<FrequencyGrid> grid;
};

struct OracleConfig {
    int modes = 64;
    int cutoff = 3;
    double dt = 0.05;
    bool rotating_wave = false;
};

struct SweepConfig {
    std::string param;       // gamma | Gamma | omega | Omega | T | order
    std::vector<double> values;
    std::string hold;        // "" or "gamma_Gamma"
    Mode run_mode = Mode::bloch;
};

struct RunConfig {
    Mode mode = Mode::bloch;
    double omega = 1.0;
    Vec3r initial = Vec3r(0.0, 0.0, 1.0);
    Correction correction = Correction::none;
    KernelConfig kernel;
    int order = 100;
    double dt = 1e-3;
    double t_max = 30.0;
    int stride = 100;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_traj;
    double noise_step = 0.05;
    OracleConfig oracle;
    std::optional<SweepConfig> sweep;
    std::vector<Mode> compare_methods{Mode::bloch, Mode::oracle};
    double compare_interval = 0.5;
    std::string output = ".";
    std::string run_id;      // defaults to the mode name
    bool quiet = false;
};

// Throws ConfigError on unknown fields, wrong types or missing required
// fields. Physical validation happens in validate().
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Mode-specific requirements and parameter ranges; throws ConfigError or
// InputError.
void validate(const RunConfig& c);

SystemSpec system_of(const RunConfig& c);

struct MethodOutput {
    TimeSeries series;
    nlohmann::json diagnostics = nlohmann::json::object();
};

// One single-method run (bloch, oracle or mc).
MethodOutput run_method(Mode m, const RunConfig& c);

// Value of `param` applied to a copy of c (with the gamma_Gamma hold).
RunConfig with_sweep_value(const RunConfig& c, const std::string& param, double value, const std::string& hold);

// Shortest decimal that round-trips, used in sweep file names.
std::string format_value(double v);

void write_csv(const std::filesystem::path& path, const TimeSeries& s);

// Linear interpolation of s at the requested times (clamped to the ends).
TimeSeries resample(const TimeSeries& s, const std::vector<double>& times);

// Executes the configuration and writes its files. Returns the process exit
// status: 0 success, 1 numerical failure, 2 usage error.
int execute(const RunConfig& c, std::ostream& log);

} // namespace qle::cli
