#pragma once

// Run configuration and mode dispatch for the oscar_sim front end.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oscar/gaussian_dynamics.hpp"
#include "oscar/io.hpp"
#include "oscar/model.hpp"
#include "oscar/state.hpp"

namespace oscar::cli {

enum class Mode { params, evolve, phase, sweep, fig1, fig2, fig3, oracle_compare, validate_adiabatic };

std::string_view to_string(Mode m) noexcept;
Mode parse_mode(std::string_view s);

enum class SpinPrep { g, e, superposition };

std::string_view to_string(SpinPrep s) noexcept;

// Flat key -> raw value. Later sources override earlier ones.
using KeyValues = std::map<std::string, std::string, std::less<>>;

// "key = value" lines; '#' starts a comment. Errors cite `source:line`.
KeyValues parse_config_text(std::string_view text, std::string_view source = "<config>");
KeyValues read_config_file(const std::filesystem::path& path);

// Accepts "3", "-2.5", "4i", "-i", "1+2i", "1e-3-4.5e2i". `field` names the
// key in error messages.
cdouble parse_complex(std::string_view s, std::string_view field);
double parse_double(std::string_view s, std::string_view field);
int parse_int(std::string_view s, std::string_view field);
std::vector<double> parse_list(std::string_view s, std::string_view field);

struct SweepSpec {
    std::string parameter;  // gamma | chi | kappa_over_gamma | N
    double from = 0.0;
    double to = 0.0;
    int count = 0;
    bool log_spacing = false;

    std::vector<double> values() const;
};

struct RunConfig {
    Mode mode = Mode::phase;
    // Exactly one block is user-supplied; the dimensionless block is always
    // filled after resolution (derived from the physical one if given).
    DimensionlessParams params;
    std::optional<PhysicalParams> physical;
    std::vector<std::string> conversion_warnings;

    cdouble alpha;
    cdouble beta;
    SpinPrep spin = SpinPrep::superposition;

    std::vector<double> times;
    std::optional<TimeScale> time_scale;

    std::filesystem::path out = ".";
    int grid = 512;
    std::optional<int> n_max;
    EvolutionMethod method = EvolutionMethod::automatic;
    double rtol = 1e-9;
    double atol = 1e-12;

    std::vector<std::pair<int, int>> pairs;  // evolve
    SweepSpec sweep;                         // sweep

    std::vector<double> N_values;                 // fig1, fig2
    std::vector<double> chi_values;               // fig1, fig2
    std::vector<double> kappa_over_gamma_values;  // fig3

    int d_c = 40;
    int d_r = 10;
    std::vector<double> epsilons;  // validate-adiabatic
    double oracle_threshold = 1e-3;

    SystemState state() const;
    std::vector<Time> time_points() const;
};

// Resolves mode presets, then `user` on top. Throws ValidationError naming
// the offending key.
RunConfig resolve(const KeyValues& user);

// Fully resolved configuration, defaults expanded.
json to_json(const RunConfig& c);

// Writes the mode's artifacts under c.out; progress goes to `log`.
void run(const RunConfig& c, std::ostream& log);

// Worker threads for sweeps: OSCAR_SIM_THREADS if set, else hardware
// concurrency, never below 1.
int thread_cap();

// 2 for ValidationError, 3 for any other failure.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace oscar::cli
