#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "oscar/cli.hpp"
#include "oscar/errors.hpp"
#include "oscar/oracle.hpp"
#include "oscar/phase.hpp"

namespace oscar::cli {

namespace {

using oscar::to_json;

namespace fs = std::filesystem;

// Runs task(i) for i in [0, n) on up to thread_cap() workers. The first
// failure (lowest index) is rethrown after all workers finish.
template <class Task>
void parallel_for(std::size_t n, Task&& task) {
    const std::size_t workers = std::min<std::size_t>(n, std::size_t(thread_cap()));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

IntegratorOptions integrator(const RunConfig& c) { return {c.rtol, c.atol, Scheme::dop853}; }

PhaseOptions phase_options(const RunConfig& c) {
    PhaseOptions o;
    o.grid_size = c.grid;
    o.method = c.method;
    o.integrator = integrator(c);
    o.n_max_override = c.n_max;
    return o;
}

OracleOptions oracle_options(const RunConfig& c) {
    OracleOptions o;
    o.rtol = c.rtol;
    o.atol = c.atol;
    return o;
}

std::string time_label(const Time& t) { return fmt::format("{}{}", to_string(t.scale), format_number(t.value)); }

// Writes `<stem>.csv` and its sidecar `<stem>.json`.
void emit(const RunConfig& c, const std::string& stem, const std::string& csv, json meta, std::ostream& log) {
    const fs::path csv_path = c.out / (stem + ".csv");
    write_file(csv_path, csv);
    json side;
    side["file"] = stem + ".csv";
    side["config"] = to_json(c);
    for (auto& [k, v] : meta.items()) side[k] = v;
    write_json(c.out / (stem + ".json"), side);
    log << "wrote " << csv_path.string() << '\n';
}

json phase_summary(const PhaseDistribution& p) {
    const auto peaks = find_peaks(p);
    return {{"meta", to_json(p.meta)},
            {"integral", p.integral()},
            {"peaks", to_json(peaks)},
            {"n_peaks", peaks.size()},
            {"distinguishability", distinguishability(peaks)}};
}

std::string phase_csv(const PhaseDistribution& p) {
    std::ostringstream os;
    write_phase_csv(os, p);
    return os.str();
}

std::vector<double> unscaled_times(const RunConfig& c) {
    std::vector<double> t;
    for (const Time& x : c.time_points()) t.push_back(x.t(c.params.gamma));
    return t;
}

void run_params(const RunConfig& c, std::ostream& log) {
    json j;
    j["config"] = to_json(c);
    j["params"] = to_json(c.params);
    std::vector<std::string> warnings = c.conversion_warnings;
    if (c.params.epsilon != 0.0 || c.params.eta != 0.0) {
        j["chi_from_epsilon_eta"] = compute_chi(c.params.epsilon, c.params.eta, &warnings);
    }
    j["warnings"] = warnings;
    json conds = json::array();
    for (const Time& t : c.time_points()) conds.push_back(to_json(check_conditions(c.params, c.state(), t)));
    j["conditions"] = conds;
    write_json(c.out / "params.json", j);
    log << fmt::format("epsilon={:.6g} eta={:.6g} chi={:.6g} kappa={:.6g} gamma={:.6g} N={:.6g}\n",
                       c.params.epsilon, c.params.eta, c.params.chi, c.params.kappa, c.params.gamma, c.params.N_th);
    log << "wrote " << (c.out / "params.json").string() << '\n';
}

void run_evolve(const RunConfig& c, std::ostream& log) {
    if (c.method == EvolutionMethod::closed_form) {
        throw ValidationError("cli", "config key 'method': closed_form yields F only; evolve needs ode, propagator "
                                     "or automatic");
    }
    const SystemState state = c.state();
    std::vector<double> taus;
    for (const Time& t : c.time_points()) taus.push_back(t.tau(c.params.gamma));
    const double k = c.params.kappa_over_gamma();
    std::vector<CoeffSample> samples;
    for (Branch b : {Branch::e, Branch::g}) {
        if (state.weight(b) <= 0.0) continue;
        const auto sols = solve_branch(c.params, b, state.alpha, taus, c.method, integrator(c));
        for (std::size_t i = 0; i < taus.size(); ++i) {
            for (auto [n, m] : c.pairs) {
                const CoeffKey key{n, m, b};
                const auto F0 = initial_log_weight(state, key);
                if (!F0) continue;
                samples.push_back({taus[i], key, sols[i].coeffs(k, n, m, *F0)});
            }
        }
    }
    std::ostringstream os;
    write_coefficients_csv(os, samples);
    emit(c, "coefficients", os.str(), json{{"rows", samples.size()}}, log);
}

void run_phase(const RunConfig& c, std::ostream& log) {
    const auto times = c.time_points();
    const auto dists = phase_distributions(c.params, c.state(), times, phase_options(c));
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const auto summary = phase_summary(dists[i]);
        emit(c, "phase_" + time_label(times[i]), phase_csv(dists[i]), summary, log);
        log << fmt::format("{}: {} peak(s), distinguishability {:.4g}\n", time_label(times[i]),
                           summary["n_peaks"].get<std::size_t>(), summary["distinguishability"].get<double>());
    }
}

DimensionlessParams with_value(DimensionlessParams d, const std::string& name, double v) {
    if (name == "gamma") {
        const double kog = d.kappa_over_gamma();
        d.gamma = v;
        d.kappa = kog * v;
    } else if (name == "chi") {
        d.chi = v;
    } else if (name == "kappa_over_gamma") {
        d.kappa = v * d.gamma;
    } else if (name == "N") {
        d.N_th = v;
        d.M_th = -(v + 0.5);
    }
    return d;
}

void run_sweep(const RunConfig& c, std::ostream& log) {
    const auto values = c.sweep.values();
    const auto times = c.time_points();
    std::vector<std::vector<PhaseDistribution>> results(values.size());
    parallel_for(values.size(), [&](std::size_t i) {
        results[i] = phase_distributions(with_value(c.params, c.sweep.parameter, values[i]), c.state(), times,
                                         phase_options(c));
    });
    std::ostringstream os;
    os << "value,time,n_peaks,distinguishability,peak1_theta,peak2_theta,integral\n";
    json rows = json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            const auto& p = results[i][j];
            const auto peaks = find_peaks(p);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double d = distinguishability(peaks);
            os << fmt::format("{:.12g},{:.12g},{},{:.12g},{:.12g},{:.12g},{:.12g}\n", values[i], times[j].value,
                              peaks.size(), d, peaks.size() > 0 ? peaks[0].theta : nan,
                              peaks.size() > 1 ? peaks[1].theta : nan, p.integral());
            rows.push_back({{"value", values[i]}, {"time", to_json(times[j])}, {"summary", phase_summary(p)}});
            log << fmt::format("{}={:.6g} {}: {} peak(s), distinguishability {:.4g}\n", c.sweep.parameter, values[i],
                               time_label(times[j]), peaks.size(), d);
        }
    }
    emit(c, "sweep", os.str(), json{{"parameter", c.sweep.parameter}, {"points", rows}}, log);
}

struct FigRun {
    std::string stem;
    DimensionlessParams params;
    json labels;
};

void run_figure_family(const RunConfig& c, const std::vector<FigRun>& runs, json extra, std::ostream& log) {
    const auto times = c.time_points();
    std::vector<std::vector<PhaseDistribution>> results(runs.size());
    parallel_for(runs.size(), [&](std::size_t i) {
        results[i] = phase_distributions(runs[i].params, c.state(), times, phase_options(c));
    });
    json summary = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            const auto& p = results[i][j];
            json s = phase_summary(p);
            s["params"] = to_json(runs[i].params);
            for (auto& [k, v] : runs[i].labels.items()) s[k] = v;
            const std::string stem = runs[i].stem + "_" + time_label(times[j]);
            emit(c, stem, phase_csv(p), s, log);
            log << fmt::format("{}: {} peak(s), distinguishability {:.4g}\n", stem, s["n_peaks"].get<std::size_t>(),
                               s["distinguishability"].get<double>());
            s.erase("meta");
            s["file"] = stem + ".csv";
            summary.push_back(std::move(s));
        }
    }
    extra["config"] = to_json(c);
    extra["runs"] = summary;
    const fs::path path = c.out / (std::string(to_string(c.mode)) + "_summary.json");
    write_json(path, extra);
    log << "wrote " << path.string() << '\n';
}

void run_fig12(const RunConfig& c, std::ostream& log) {
    std::vector<FigRun> runs;
    for (double N : c.N_values) {
        for (double chi : c.chi_values) {
            auto d = c.params;
            d = with_value(with_value(d, "N", N), "chi", chi);
            runs.push_back({fmt::format("{}_N{}_chi{}", to_string(c.mode), format_number(N), format_number(chi)), d,
                            json{{"N", N}, {"chi", chi}}});
        }
    }
    run_figure_family(c, runs, json::object(), log);
}

void run_fig3(const RunConfig& c, std::ostream& log) {
    std::vector<FigRun> runs;
    for (double k : c.kappa_over_gamma_values) {
        runs.push_back({fmt::format("fig3_kog{}", format_number(k)), with_value(c.params, "kappa_over_gamma", k),
                        json{{"kappa_over_gamma", k}}});
    }
    run_figure_family(c, runs, json::object(), log);
}

void run_oracle_compare(const RunConfig& c, std::ostream& log) {
    const SystemState state = c.state();
    const TruncatedSpace space{c.d_c, c.d_r};
    const auto ts = unscaled_times(c);
    const auto init = initial_density(c.params, state, space);
    const auto traj = integrate(init.rho, Liouvillian(c.params, space, HamiltonianKind::effective), ts,
                                oracle_options(c));
    std::vector<Time> times;
    for (double t : ts) times.push_back(Time::unscaled(t));
    const auto gauss = phase_distributions(c.params, state, times, phase_options(c));

    std::ostringstream phase_os;
    phase_os << "t,theta,P_gaussian,P_oracle\n";
    json per_time = json::array();
    double linf_max = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto po = phase_from_density(traj.states[i], c.grid);
        double linf = 0.0;
        for (std::size_t j = 0; j < po.raw.size(); ++j) {
            linf = std::max(linf, std::abs(po.raw[j] - gauss[i].raw[j]));
            phase_os << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g}\n", ts[i], po.thetas[j], gauss[i].values[j],
                                    po.values[j]);
        }
        linf_max = std::max(linf_max, linf);
        per_time.push_back({{"t", ts[i]},
                            {"tau", ts[i] * c.params.gamma},
                            {"linf", linf},
                            {"gaussian_integral", gauss[i].integral()},
                            {"oracle_integral", po.integral()},
                            {"diagnostics", to_json(traj.diagnostics[i])}});
        log << fmt::format("t={:.6g}: L-inf {:.3e}\n", ts[i], linf);
    }
    const bool pass = linf_max < c.oracle_threshold;
    json report{{"linf_max", linf_max},         {"threshold", c.oracle_threshold}, {"pass", pass},
                {"field_tail", init.field_tail}, {"cantilever_tail", init.cantilever_tail},
                {"steps", traj.steps},           {"rhs_evals", traj.rhs_evals},    {"times", per_time}};
    emit(c, "oracle_compare_phase", phase_os.str(), report, log);

    std::ostringstream traj_os;
    write_trajectory_csv(traj_os, traj, {{0, 1}, {1, 0}, {1, 2}});
    emit(c, "oracle_compare_trajectory", traj_os.str(), json{{"pass", pass}}, log);

    report["config"] = to_json(c);
    write_json(c.out / "oracle_compare.json", report);
    log << fmt::format("{} oracle-compare: L-inf {:.3e} (threshold {:.1e})\n", pass ? "PASS" : "FAIL", linf_max,
                       c.oracle_threshold);
}

void run_validate_adiabatic(const RunConfig& c, std::ostream& log) {
    const SystemState state = c.state();
    const TruncatedSpace space{c.d_c, c.d_r};
    const auto ts = unscaled_times(c);
    std::vector<DiscrepancyReport> reports(c.epsilons.size());
    parallel_for(c.epsilons.size(), [&](std::size_t i) {
        auto d = c.params;
        d.epsilon = c.epsilons[i];
        d.eta = eta_for_chi(d.epsilon, c.params.chi);
        reports[i] = validate_adiabatic(d, state, space, ts, oracle_options(c), c.grid);
    });
    std::ostringstream os;
    os << "epsilon,eta,chi,phase_linf,spin_z_linf,regime_ok\n";
    json arr = json::array();
    bool monotone = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        os << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{}\n", r.epsilon, r.eta, r.chi, r.phase_linf,
                          r.spin_z_linf, r.regime_ok ? 1 : 0);
        arr.push_back(to_json(r));
        if (i > 0 && !(r.phase_linf < reports[i - 1].phase_linf)) monotone = false;
        log << fmt::format("epsilon={:.4g} eta={:.4g}: phase L-inf {:.4e}, <S_z> L-inf {:.4e}{}\n", r.epsilon, r.eta,
                           r.phase_linf, r.spin_z_linf, r.regime_ok ? "" : " (regime flag)");
    }
    emit(c, "validate_adiabatic", os.str(), json{{"reports", arr}, {"monotone_decrease", monotone}}, log);
    log << (monotone ? "discrepancy decreases monotonically in epsilon\n"
                     : "discrepancy does not decrease monotonically in epsilon\n");
}

}  // namespace

int thread_cap() {
    int cap = int(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OSCAR_SIM_THREADS"); env && *env) {
        int v = 0;
        try {
            v = parse_int(env, "OSCAR_SIM_THREADS");
        } catch (const ValidationError&) {
            throw ValidationError("cli", fmt::format("OSCAR_SIM_THREADS must be a positive integer (got '{}')", env));
        }
        if (v < 1) throw ValidationError("cli", fmt::format("OSCAR_SIM_THREADS must be >= 1 (got {})", v));
        cap = v;
    }
    return std::max(cap, 1);
}

int exit_code_for(const std::exception& e) noexcept {
    return dynamic_cast<const ValidationError*>(&e) ? 2 : 3;
}

void run(const RunConfig& c, std::ostream& log) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw Error("io", fmt::format("cannot create output directory '{}': {}", c.out.string(), ec.message()));
    switch (c.mode) {
        case Mode::params: return run_params(c, log);
        case Mode::evolve: return run_evolve(c, log);
        case Mode::phase: return run_phase(c, log);
        case Mode::sweep: return run_sweep(c, log);
        case Mode::fig1:
        case Mode::fig2: return run_fig12(c, log);
        case Mode::fig3: return run_fig3(c, log);
        case Mode::oracle_compare: return run_oracle_compare(c, log);
        case Mode::validate_adiabatic: return run_validate_adiabatic(c, log);
    }
}

}  // namespace oscar::cli
