// qle: command line driver: reads a JSON run configuration, applies flag
// overrides and writes CSV time series with JSON manifests.

#include "run.hpp"

#include "qle/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Non-Markovian spin-boson dynamics: Bloch hierarchy, exact-bath oracle, Monte Carlo"};
    std::string config_path;
    std::optional<std::string> output, mode;
    std::optional<int> order;
    std::optional<double> dt, t_max;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_traj;
    bool quiet = false;

    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--output", output, "output directory");
    app.add_option("--mode", mode, "bloch | oracle | mc | sweep | compare");
    app.add_option("--order", order, "hierarchy order N");
    app.add_option("--dt", dt, "hierarchy time step");
    app.add_option("--t-max", t_max, "final time");
    app.add_option("--seed", seed, "Monte Carlo master seed");
    app.add_option("--n-traj", n_traj, "Monte Carlo trajectory count");
    app.add_flag("--quiet", quiet, "suppress progress messages");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    qle::cli::RunConfig config;
    try {
        std::ifstream in(config_path);
        if (!in) throw qle::ConfigError("cannot open config file " + config_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw qle::ConfigError(std::string("malformed JSON in ") + config_path + ": " + e.what());
        }
        config = qle::cli::parse_config(j);
        if (output) config.output = *output;
        if (mode) config.mode = qle::cli::parse_mode(*mode);
        if (order) config.order = *order;
        if (dt) config.dt = *dt;
        if (t_max) config.t_max = *t_max;
        if (seed) config.seed = *seed;
        if (n_traj) config.n_traj = *n_traj;
        config.quiet = quiet;
    } catch (const qle::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return qle::cli::execute(config, std::cerr);
}
