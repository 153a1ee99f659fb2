#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oscar/cli.hpp"
#include "oscar/errors.hpp"

int main(int argc, char** argv) {
    using namespace oscar::cli;

    CLI::App app{"Spin, cantilever and readout-field simulation: phase distributions, figure presets, oracle checks"};
    app.set_version_flag("--version", "oscar_sim 1.0");

    std::string mode;
    app.add_option("mode", mode,
                   "params | evolve | phase | sweep | fig1 | fig2 | fig3 | oracle-compare | validate-adiabatic")
        ->required();

    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "flat key = value config file");

    // Flag name -> config key. Flags override the config file.
    const std::vector<std::pair<std::string, std::string>> flags{
        {"--out", "out"},
        {"--grid", "grid"},
        {"--time-scale", "time_scale"},
        {"--times", "times"},
        {"--gamma", "gamma"},
        {"--chi", "chi"},
        {"--kappa-over-gamma", "kappa_over_gamma"},
        {"--N", "N"},
        {"--alpha", "alpha"},
        {"--beta", "beta"},
        {"--epsilon", "epsilon"},
        {"--eta", "eta"},
        {"--spin", "spin"},
        {"--n-max", "n_max"},
        {"--method", "method"},
    };
    std::vector<std::optional<std::string>> flag_values(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) {
        app.add_option(flags[i].first, flag_values[i], "sets config key '" + flags[i].second + "'");
    }
    std::vector<std::string> sets;
    app.add_option("--set", sets, "any config key as key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        KeyValues kv;
        if (config_path) kv = read_config_file(*config_path);
        kv["mode"] = mode;
        for (const auto& s : sets) {
            for (auto& [k, v] : parse_config_text(s, "--set")) kv[k] = v;
        }
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if (flag_values[i]) kv[flags[i].second] = *flag_values[i];
        }
        const RunConfig cfg = resolve(kv);
        run(cfg, std::cout);
        return 0;
    } catch (const oscar::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
