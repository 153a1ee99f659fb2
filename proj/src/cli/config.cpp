#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "oscar/cli.hpp"
#include "oscar/errors.hpp"
#include "oscar/phase.hpp"

namespace oscar::cli {

namespace {

[[noreturn]] void bad_key(std::string_view key, const std::string& what) {
    throw ValidationError("cli", fmt::format("config key '{}': {}", key, what));
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

bool strict_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

const std::set<std::string, std::less<>> dimensionless_keys{"gamma", "chi", "kappa_over_gamma", "N", "epsilon", "eta"};
const std::set<std::string, std::less<>> physical_keys{"omega_c", "omega_r", "k_c", "B1", "dBz_dz",
                                                       "L",       "T",       "Q",   "gamma_e"};
const std::set<std::string, std::less<>> other_keys{
    "mode",        "out",        "grid",        "n_max",         "method",        "rtol",
    "atol",        "times",      "time_scale",  "alpha",         "beta",          "spin",
    "pairs",       "sweep_param", "sweep_from", "sweep_to",      "sweep_count",   "sweep_spacing",
    "N_values",    "chi_values", "kappa_over_gamma_values",       "d_c",           "d_r",
    "epsilons",    "oracle_threshold"};

bool known_key(std::string_view k) {
    return dimensionless_keys.contains(k) || physical_keys.contains(k) || other_keys.contains(k);
}

// Caption parameters shared by the figure presets.
const KeyValues caption_defaults{{"gamma", "1e-4"}, {"chi", "0.5"}, {"kappa_over_gamma", "0.08"}, {"N", "100"},
                                 {"epsilon", "0"},  {"eta", "0"},   {"alpha", "4i"},             {"beta", "3"},
                                 {"spin", "superposition"}};

KeyValues preset(Mode m) {
    KeyValues kv = caption_defaults;
    auto set = [&](std::initializer_list<std::pair<const char*, const char*>> items) {
        for (auto [k, v] : items) kv[k] = v;
    };
    set({{"grid", "512"},         {"method", "automatic"},    {"rtol", "1e-9"},         {"atol", "1e-12"},
         {"out", "."},            {"pairs", "0:0,0:1,1:0,1:2"}, {"N_values", "100,10000"}, {"chi_values", "0,0.5"},
         {"kappa_over_gamma_values", "0.04,0.08,0.12"},         {"sweep_param", "kappa_over_gamma"},
         {"sweep_from", "0.02"},  {"sweep_to", "0.16"},       {"sweep_count", "8"},     {"sweep_spacing", "linear"},
         {"d_c", "40"},           {"d_r", "10"},              {"epsilons", "2,4,8"},    {"oracle_threshold", "1e-3"}});
    switch (m) {
        case Mode::fig1:
            set({{"spin", "g"}, {"times", "0,80000"}, {"time_scale", "tau"}});
            break;
        case Mode::fig2:
            set({{"times", "0,80000"}, {"time_scale", "tau"}});
            break;
        case Mode::fig3:
        case Mode::sweep:
            set({{"times", "80000"}, {"time_scale", "tau"}});
            break;
        case Mode::oracle_compare:
            set({{"gamma", "0.1"}, {"chi", "0.5"}, {"kappa_over_gamma", "0.1"}, {"N", "1"}, {"alpha", "i"},
                 {"beta", "1"}, {"epsilon", "10"}, {"times", "4,8,12,16,20"}, {"time_scale", "t"}});
            break;
        case Mode::validate_adiabatic:
            set({{"gamma", "0.1"}, {"chi", "0.2"}, {"kappa_over_gamma", "0.1"}, {"N", "1"}, {"alpha", "i"},
                 {"beta", "1"}, {"d_r", "6"}, {"times", "2,4,6,8,10"}, {"time_scale", "t"}});
            break;
        default:
            break;
    }
    return kv;
}

bool needs_times(Mode m) { return m != Mode::params; }

SpinPrep parse_spin(std::string_view s) {
    if (s == "g") return SpinPrep::g;
    if (s == "e") return SpinPrep::e;
    if (s == "superposition") return SpinPrep::superposition;
    bad_key("spin", fmt::format("expected g, e or superposition (got '{}')", s));
}

std::vector<std::pair<int, int>> parse_pairs(std::string_view s) {
    std::vector<std::pair<int, int>> out;
    for (auto item : split(s, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) bad_key("pairs", fmt::format("expected n:m, got '{}'", item));
        const int n = parse_int(trim(item.substr(0, colon)), "pairs");
        const int m = parse_int(trim(item.substr(colon + 1)), "pairs");
        if (n < 0 || m < 0) bad_key("pairs", "indices must be >= 0");
        out.emplace_back(n, m);
    }
    return out;
}

PhysicalParams physical_from(const KeyValues& kv) {
    PhysicalParams p;
    auto req = [&](const char* key, double& slot) {
        const auto it = kv.find(key);
        if (it == kv.end()) bad_key(key, "required when a physical parameter block is given");
        slot = parse_double(it->second, key);
    };
    req("omega_c", p.omega_c);
    req("omega_r", p.omega_r);
    req("k_c", p.k_c);
    req("B1", p.B1);
    req("dBz_dz", p.dBz_dz);
    req("L", p.L);
    req("T", p.T);
    req("Q", p.Q);
    if (auto it = kv.find("gamma_e"); it != kv.end()) p.gamma_e = parse_double(it->second, "gamma_e");
    return p;
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
    switch (m) {
        case Mode::params: return "params";
        case Mode::evolve: return "evolve";
        case Mode::phase: return "phase";
        case Mode::sweep: return "sweep";
        case Mode::fig1: return "fig1";
        case Mode::fig2: return "fig2";
        case Mode::fig3: return "fig3";
        case Mode::oracle_compare: return "oracle-compare";
        case Mode::validate_adiabatic: return "validate-adiabatic";
    }
    return "?";
}

Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::params, Mode::evolve, Mode::phase, Mode::sweep, Mode::fig1, Mode::fig2, Mode::fig3,
                   Mode::oracle_compare, Mode::validate_adiabatic}) {
        if (s == to_string(m)) return m;
    }
    bad_key("mode", fmt::format("unknown mode '{}'", s));
}

std::string_view to_string(SpinPrep s) noexcept {
    switch (s) {
        case SpinPrep::g: return "g";
        case SpinPrep::e: return "e";
        case SpinPrep::superposition: return "superposition";
    }
    return "?";
}

KeyValues parse_config_text(std::string_view text, std::string_view source) {
    KeyValues kv;
    int lineno = 0;
    for (auto line : split(text, '\n')) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("cli", fmt::format("{}:{}: expected 'key = value'", source, lineno));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ValidationError("cli", fmt::format("{}:{}: empty key", source, lineno));
        if (!known_key(key)) throw ValidationError("cli", fmt::format("{}:{}: unknown key '{}'", source, lineno, key));
        kv[key] = value;
    }
    return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cli", fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

double parse_double(std::string_view s, std::string_view field) {
    double v = 0.0;
    if (!strict_double(trim(s), v)) bad_key(field, fmt::format("expected a finite number, got '{}'", s));
    return v;
}

int parse_int(std::string_view s, std::string_view field) {
    s = trim(s);
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        bad_key(field, fmt::format("expected an integer, got '{}'", s));
    }
    return v;
}

std::vector<double> parse_list(std::string_view s, std::string_view field) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (auto item : split(s, ',')) out.push_back(parse_double(item, field));
    return out;
}

cdouble parse_complex(std::string_view s, std::string_view field) {
    std::string compact;
    for (char c : s) {
        if (c != ' ' && c != '\t') compact.push_back(c);
    }
    std::string_view v = compact;
    auto fail = [&]() -> cdouble { bad_key(field, fmt::format("expected a complex number like 1+2i, got '{}'", s)); };
    if (v.empty()) return fail();
    if (v.back() != 'i') {
        double re = 0.0;
        return strict_double(v, re) ? cdouble(re, 0.0) : fail();
    }
    v.remove_suffix(1);
    // Split at the last sign that is not the leading one or part of an exponent.
    std::size_t split_at = std::string_view::npos;
    for (std::size_t i = v.size(); i-- > 1;) {
        if ((v[i] == '+' || v[i] == '-') && v[i - 1] != 'e' && v[i - 1] != 'E') {
            split_at = i;
            break;
        }
    }
    const std::string_view re_part = split_at == std::string_view::npos ? std::string_view{} : v.substr(0, split_at);
    std::string_view im_part = split_at == std::string_view::npos ? v : v.substr(split_at);
    double re = 0.0, im = 0.0;
    if (!re_part.empty() && !strict_double(re_part, re)) return fail();
    if (im_part.empty() || im_part == "+") {
        im = 1.0;
    } else if (im_part == "-") {
        im = -1.0;
    } else if (!strict_double(im_part, im)) {
        return fail();
    }
    return {re, im};
}

std::vector<double> SweepSpec::values() const {
    std::vector<double> v;
    if (count == 1) return {from};
    for (int i = 0; i < count; ++i) {
        const double f = double(i) / (count - 1);
        v.push_back(log_spacing ? from * std::pow(to / from, f) : from + (to - from) * f);
    }
    return v;
}

SystemState RunConfig::state() const {
    switch (spin) {
        case SpinPrep::g: return SystemState::eigenstate_g(alpha, beta);
        case SpinPrep::e: return SystemState::eigenstate_e(alpha, beta);
        case SpinPrep::superposition: break;
    }
    return SystemState::superposition(alpha, beta);
}

std::vector<Time> RunConfig::time_points() const {
    std::vector<Time> out;
    for (double t : times) out.push_back({t, time_scale.value_or(TimeScale::tau)});
    return out;
}

RunConfig resolve(const KeyValues& user) {
    for (const auto& [k, v] : user) {
        if (!known_key(k)) throw ValidationError("cli", fmt::format("unknown config key '{}'", k));
    }
    RunConfig c;
    const auto mode_it = user.find("mode");
    if (mode_it == user.end()) bad_key("mode", "required");
    c.mode = parse_mode(mode_it->second);

    const auto user_has = [&](std::string_view k) { return user.find(k) != user.end(); };
    const auto first_of = [&](const auto& keys) -> std::optional<std::string> {
        for (const auto& k : keys) {
            if (user_has(k)) return k;
        }
        return std::nullopt;
    };
    const auto phys_key = first_of(physical_keys);
    const auto dim_key = first_of(dimensionless_keys);
    if (phys_key && dim_key) {
        throw ValidationError("cli", fmt::format("config keys '{}' and '{}': exactly one parameter block (physical or "
                                                 "dimensionless) may be given",
                                                 *phys_key, *dim_key));
    }

    if (user_has("times") != user_has("time_scale")) {
        bad_key(user_has("times") ? "time_scale" : "times",
                "times and time_scale must be given together; the scale is never inferred");
    }

    KeyValues kv = preset(c.mode);
    for (const auto& [k, v] : user) kv[k] = v;
    auto get = [&](const std::string& k) -> const std::string& { return kv.at(k); };
    auto num = [&](const std::string& k) { return parse_double(get(k), k); };

    if (phys_key) {
        c.physical = physical_from(user);
        auto conv = to_dimensionless(*c.physical);
        c.params = conv.params;
        c.conversion_warnings = std::move(conv.warnings);
    } else {
        const double N = num("N");
        c.params = DimensionlessParams::scaled(num("gamma"), num("chi"), num("kappa_over_gamma"), N);
        c.params.epsilon = num("epsilon");
        c.params.eta = num("eta");
        if (!user_has("chi") && user_has("epsilon") && user_has("eta")) {
            c.params.chi = compute_chi(c.params.epsilon, c.params.eta, &c.conversion_warnings);
        }
        if (!(c.params.gamma > 0.0)) bad_key("gamma", "must be > 0");
        if (N < 0.0) bad_key("N", "must be >= 0");
    }

    c.alpha = parse_complex(get("alpha"), "alpha");
    c.beta = parse_complex(get("beta"), "beta");
    c.spin = parse_spin(get("spin"));

    if (kv.contains("times")) {
        c.times = parse_list(get("times"), "times");
        const auto& sc = get("time_scale");
        if (sc == "t") {
            c.time_scale = TimeScale::t;
        } else if (sc == "tau") {
            c.time_scale = TimeScale::tau;
        } else {
            bad_key("time_scale", fmt::format("expected t or tau (got '{}')", sc));
        }
        for (double t : c.times) {
            if (t < 0.0) bad_key("times", "times must be >= 0");
        }
    }
    if (needs_times(c.mode) && c.times.empty()) {
        bad_key("times", fmt::format("mode {} needs at least one time (with time_scale)", to_string(c.mode)));
    }

    c.out = get("out");
    c.grid = parse_int(get("grid"), "grid");
    if (c.grid < min_grid_size) bad_key("grid", fmt::format("must be >= {}", min_grid_size));
    if (kv.contains("n_max") && !get("n_max").empty() && get("n_max") != "auto") {
        c.n_max = parse_int(get("n_max"), "n_max");
        if (*c.n_max < 0) bad_key("n_max", "must be >= 0");
    }
    try {
        c.method = parse_evolution_method(get("method"));
    } catch (const Error& e) {
        bad_key("method", e.what());
    }
    c.rtol = num("rtol");
    c.atol = num("atol");
    if (!(c.rtol > 0.0)) bad_key("rtol", "must be > 0");
    if (!(c.atol > 0.0)) bad_key("atol", "must be > 0");

    c.pairs = parse_pairs(get("pairs"));

    c.sweep.parameter = get("sweep_param");
    if (c.sweep.parameter != "gamma" && c.sweep.parameter != "chi" && c.sweep.parameter != "kappa_over_gamma" &&
        c.sweep.parameter != "N") {
        bad_key("sweep_param", fmt::format("expected gamma, chi, kappa_over_gamma or N (got '{}')", c.sweep.parameter));
    }
    c.sweep.from = num("sweep_from");
    c.sweep.to = num("sweep_to");
    c.sweep.count = parse_int(get("sweep_count"), "sweep_count");
    if (c.sweep.count < 1) bad_key("sweep_count", "must be >= 1");
    const auto& spacing = get("sweep_spacing");
    if (spacing != "linear" && spacing != "log") bad_key("sweep_spacing", "expected linear or log");
    c.sweep.log_spacing = spacing == "log";
    if (c.sweep.log_spacing && !(c.sweep.from > 0.0 && c.sweep.to > 0.0)) {
        bad_key("sweep_from", "log spacing needs positive endpoints");
    }

    c.N_values = parse_list(get("N_values"), "N_values");
    c.chi_values = parse_list(get("chi_values"), "chi_values");
    c.kappa_over_gamma_values = parse_list(get("kappa_over_gamma_values"), "kappa_over_gamma_values");
    // A scalar override narrows the figure family to that one value.
    if (phys_key) {
        c.N_values = {c.params.N_th};
        c.chi_values = {c.params.chi};
        c.kappa_over_gamma_values = {c.params.kappa_over_gamma()};
    } else {
        if (user_has("N")) c.N_values = {c.params.N_th};
        if (user_has("chi")) c.chi_values = {c.params.chi};
        if (user_has("kappa_over_gamma")) c.kappa_over_gamma_values = {c.params.kappa_over_gamma()};
    }
    for (double N : c.N_values) {
        if (N < 0.0) bad_key("N_values", "must be >= 0");
    }
    for (double k : c.kappa_over_gamma_values) {
        if (k < 0.0) bad_key("kappa_over_gamma_values", "must be >= 0");
    }

    c.d_c = parse_int(get("d_c"), "d_c");
    c.d_r = parse_int(get("d_r"), "d_r");
    if (c.d_c < 2) bad_key("d_c", "must be >= 2");
    if (c.d_r < 2) bad_key("d_r", "must be >= 2");
    c.epsilons = parse_list(get("epsilons"), "epsilons");
    c.oracle_threshold = num("oracle_threshold");
    return c;
}

json to_json(const RunConfig& c) {
    auto list = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(x);
        return a;
    };
    json j;
    j["mode"] = std::string(to_string(c.mode));
    j["parameter_block"] = c.physical ? "physical" : "dimensionless";
    if (c.physical) j["physical"] = oscar::to_json(*c.physical);
    j["params"] = oscar::to_json(c.params);
    j["conversion_warnings"] = c.conversion_warnings;
    j["state"] = {{"alpha", oscar::to_json(c.alpha)}, {"beta", oscar::to_json(c.beta)}, {"spin", std::string(to_string(c.spin))}};
    j["times"] = list(c.times);
    j["time_scale"] = c.time_scale ? json(std::string(to_string(*c.time_scale))) : json(nullptr);
    j["out"] = c.out.string();
    j["grid"] = c.grid;
    j["n_max"] = c.n_max ? json(*c.n_max) : json("auto");
    j["method"] = std::string(to_string(c.method));
    j["rtol"] = c.rtol;
    j["atol"] = c.atol;
    json pairs = json::array();
    for (auto [n, m] : c.pairs) pairs.push_back({n, m});
    j["pairs"] = pairs;
    j["sweep"] = {{"parameter", c.sweep.parameter},
                  {"from", c.sweep.from},
                  {"to", c.sweep.to},
                  {"count", c.sweep.count},
                  {"spacing", c.sweep.log_spacing ? "log" : "linear"}};
    j["N_values"] = list(c.N_values);
    j["chi_values"] = list(c.chi_values);
    j["kappa_over_gamma_values"] = list(c.kappa_over_gamma_values);
    j["d_c"] = c.d_c;
    j["d_r"] = c.d_r;
    j["epsilons"] = list(c.epsilons);
    j["oracle_threshold"] = c.oracle_threshold;
    return j;
}

}  // namespace oscar::cli
