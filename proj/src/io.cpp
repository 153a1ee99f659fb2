#include "oscar/io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "oscar/errors.hpp"

namespace oscar {

namespace {

// JSON has no NaN or infinity; emit null instead.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_number(double x) { return fmt::format("{:.12g}", x); }

void write_phase_csv(std::ostream& os, const PhaseDistribution& dist) {
    os << "theta,P\n";
    for (std::size_t i = 0; i < dist.thetas.size(); ++i) {
        os << fmt::format("{:.12g},{:.12g}\n", dist.thetas[i], dist.values[i]);
    }
}

json to_json(cdouble z) { return json::array({number(z.real()), number(z.imag())}); }

json to_json(const DimensionlessParams& d) {
    return {{"epsilon", number(d.epsilon)}, {"eta", number(d.eta)},     {"kappa", number(d.kappa)},
            {"gamma", number(d.gamma)},     {"chi", number(d.chi)},     {"kappa_over_gamma", number(d.kappa_over_gamma())},
            {"N", number(d.N_th)},          {"M", number(d.M_th)}};
}

json to_json(const PhysicalParams& p) {
    return {{"omega_c", number(p.omega_c)}, {"omega_r", number(p.omega_r)}, {"k_c", number(p.k_c)},
            {"B1", number(p.B1)},           {"dBz_dz", number(p.dBz_dz)},   {"L", number(p.L)},
            {"gamma_e", number(p.gamma_e)}, {"T", number(p.T)},             {"Q", number(p.Q)}};
}

json to_json(const SystemState& s) {
    return {{"alpha", to_json(s.alpha)}, {"beta", to_json(s.beta)}, {"w_e", number(s.w_e)}, {"w_g", number(s.w_g)}};
}

json to_json(const Time& t) { return {{"value", number(t.value)}, {"scale", std::string(to_string(t.scale))}}; }

json to_json(const ConditionReport& r) {
    return {{"time", to_json(r.time)},
            {"adiabatic_ratio", number(r.adiabatic_ratio)},
            {"adiabatic", r.adiabatic},
            {"partial_reversal_ratio", number(r.partial_reversal_ratio)},
            {"distinguishability_ratio", number(r.distinguishability_ratio)},
            {"distinguishable", r.distinguishable},
            {"backaction_ratio", number(r.backaction_ratio)},
            {"backaction_negligible", r.backaction_negligible},
            {"high_temperature", r.high_temperature},
            {"positivity_gap", number(r.positivity_gap)},
            {"positivity_note", r.positivity_note}};
}

json to_json(const PhaseMeta& m) {
    json j{{"time", to_json(m.time)},
           {"n_max", m.n_max},
           {"tail_bound", number(m.tail)},
           {"trace", number(m.trace)},
           {"max_imag_residue", number(m.max_imag_residue)},
           {"min_raw", number(m.min_raw)}};
    if (!m.method_e.empty()) j["method_e"] = m.method_e;
    if (!m.method_g.empty()) j["method_g"] = m.method_g;
    return j;
}

json to_json(const std::vector<Peak>& peaks) {
    json arr = json::array();
    for (const auto& p : peaks) {
        arr.push_back({{"index", p.index},
                       {"theta", number(p.theta)},
                       {"height", number(p.height)},
                       {"prominence", number(p.prominence)},
                       {"width", number(p.width)}});
    }
    return arr;
}

json to_json(const Diagnostics& g) {
    return {{"t", number(g.t)},
            {"trace_error", number(g.trace_error)},
            {"hermiticity_error", number(g.hermiticity_error)},
            {"min_eigenvalue", number(g.min_eigenvalue)},
            {"below_floor", g.below_floor},
            {"leakage", number(g.leakage)},
            {"spin_z", number(g.spin_z)},
            {"cantilever_mean", to_json(g.cantilever_mean)}};
}

json to_json(const DiscrepancyReport& r) {
    json times = json::array();
    for (double t : r.times) times.push_back(number(t));
    return {{"epsilon", number(r.epsilon)},        {"eta", number(r.eta)},
            {"chi", number(r.chi)},                {"times", times},
            {"phase_linf", number(r.phase_linf)},  {"spin_z_linf", number(r.spin_z_linf)},
            {"regime_ok", r.regime_ok},            {"note", r.note}};
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("io", fmt::format("cannot open '{}' for writing", path.string()));
    os.write(content.data(), std::streamsize(content.size()));
    if (!os) throw Error("io", fmt::format("write to '{}' failed", path.string()));
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace oscar
