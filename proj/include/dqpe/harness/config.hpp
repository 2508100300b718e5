#pragma once

// Experiment configuration: one INI file of flat sections. Scalars are plain
// values, lists are written "[a, b, c]". Unknown sections and keys are errors.

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dqpe/errors.hpp"
#include "dqpe/ghz.hpp"
#include "dqpe/grape.hpp"
#include "dqpe/models.hpp"
#include "dqpe/qpe.hpp"
#include "dqpe/synthesis.hpp"

namespace dqpe::harness {

enum class ExperimentKind { tomography, sweep, ghz, gate_trace, potential, qpe };

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::tomography: return "tomography";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::ghz: return "ghz";
        case ExperimentKind::gate_trace: return "gate-trace";
        case ExperimentKind::potential: return "potential";
        case ExperimentKind::qpe: return "qpe";
    }
    return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::tomography, ExperimentKind::sweep, ExperimentKind::ghz, ExperimentKind::gate_trace,
                   ExperimentKind::potential, ExperimentKind::qpe}) {
        if (s == kind_name(k)) return k;
    }
    throw ConfigError("unknown experiment kind '" + s + "'");
}

struct GrapeBlock {
    GrapeMode mode = GrapeMode::gradient_ascent;
    std::vector<int> iterations{700};
    std::vector<int> time_steps{180};
    double x_min = 1e-6;  // stop once 1 - fidelity < x_min
    bool noise = true;
};

struct QpeBlock {
    double phi_true = 3.0 / 16.0;
    int n_counting = 4;
    int flux_counting = 1;  // counting qubits hosted on the flux device
    int shots = 10;
    MeasurementMode measurement = MeasurementMode::sampled;
    bool ideal_gates = false;
    bool physical_e2 = false;  // E2 pair from the hybrid coupler instead of the exact Bell state
};

struct TomographyBlock {
    Device device = Device::flux;
    std::string gate = "CNOT";
};

struct GhzBlock {
    double t_max = 30.0;
    double dt = 0.1;
};

struct GateTraceBlock {
    std::string gate = "H";
    int time_steps = 100;
    double total_time = 1.0;
    double step_size = 1.0;
    double u_max = 2.0 * pi;
    bool z_control = false;
    std::vector<int> iterations{100, 500};
};

struct PotentialBlock {
    int grid = 101;       // samples per axis over [-pi, pi]
    int cut_points = 2001;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::sweep;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int workers = 1;

    FluxRegisterModel flux;
    RydbergRegisterModel rydberg;
    HybridParams hybrid;
    GrapeBlock grape;
    QpeBlock qpe;
    std::vector<double> zeta{1000.0};
    TomographyBlock tomography;
    GhzBlock ghz;
    GateTraceBlock gate_trace;
    PotentialBlock potential;

    std::string source;  // raw file text, echoed into the manifest

    void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

/// Drops a trailing "; comment" and surrounding blanks.
inline std::string strip_comment(std::string v) {
    if (const auto pos = v.find(';'); pos != std::string::npos) v.erase(pos);
    return trim(v);
}

/// Splits "[a, b, c]" (or a bare scalar) into its items.
inline std::vector<std::string> list_items(const std::string& raw) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ConfigError("unterminated list '" + raw + "'");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> parts;
    if (trim(s).empty()) return parts;
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
    for (auto& p : parts) p = trim(p);
    return parts;
}

inline double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || !std::isfinite(x)) throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

/// Reads one section; every key must be consumed.
class Section {
public:
    Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool present() const { return tree_ != nullptr; }

    std::optional<std::string> raw(const std::string& key) {
        if (!tree_) return std::nullopt;
        auto v = tree_->get_optional<std::string>(key);
        if (v) used_.insert(key);
        return v ? std::optional<std::string>(strip_comment(*v)) : std::nullopt;
    }

    void get(const std::string& key, double& out) {
        if (auto v = raw(key)) out = to_double(where(key), *v);
    }
    void get(const std::string& key, int& out) {
        if (auto v = raw(key)) out = static_cast<int>(to_int(where(key), *v));
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (auto v = raw(key)) {
            const long long x = to_int(where(key), *v);
            if (x < 0) throw ConfigError(where(key) + ": must be >= 0");
            out = static_cast<std::uint64_t>(x);
        }
    }
    void get(const std::string& key, bool& out) {
        if (auto v = raw(key)) out = to_bool(where(key), *v);
    }
    void get(const std::string& key, std::string& out) {
        if (auto v = raw(key)) out = *v;
    }
    void get(const std::string& key, std::vector<int>& out) {
        if (auto v = raw(key)) {
            out.clear();
            for (const auto& item : list_items(*v)) out.push_back(static_cast<int>(to_int(where(key), item)));
        }
    }
    void get(const std::string& key, std::vector<double>& out) {
        if (auto v = raw(key)) {
            out.clear();
            for (const auto& item : list_items(*v)) out.push_back(to_double(where(key), item));
        }
    }
    /// Frequencies given in GHz, stored in rad/ns.
    void get_ghz(const std::string& key, double& out) {
        double f = 0.0;
        if (raw(key)) {
            get(key, f);
            out = ghz(f);
        }
    }

    void finish() const {
        if (!tree_) return;
        for (const auto& [k, v] : *tree_) {
            if (!used_.count(k)) throw ConfigError("unknown key [" + name_ + "] " + k);
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    const boost::property_tree::ptree* tree_;
    std::string name_;
    std::set<std::string> used_;
};

}  // namespace detail

inline void ExperimentConfig::validate() const {
    auto nonempty = [](const auto& v, const char* what) {
        if (v.empty()) throw ConfigError(std::string(what) + " must not be empty");
    };
    nonempty(grape.iterations, "[grape] iterations");
    nonempty(grape.time_steps, "[grape] time_steps");
    nonempty(zeta, "[sweep] zeta");
    for (int it : grape.iterations) {
        if (it < 0) throw ConfigError("[grape] iterations must be >= 0");
    }
    for (int n : grape.time_steps) {
        if (n < 1) throw ConfigError("[grape] time_steps must be >= 1");
    }
    for (double z : zeta) {
        if (!(z >= 1.0)) throw ConfigError("[sweep] zeta must be >= 1");
    }
    if (!(grape.x_min > 0.0 && grape.x_min < 1.0)) throw ConfigError("[grape] x_min must lie in (0, 1)");
    if (qpe.shots < 1) throw ConfigError("[qpe] shots must be >= 1");
    if (qpe.n_counting < 1 || qpe.n_counting > 8) throw ConfigError("[qpe] n_counting must lie in 1..8");
    if (qpe.flux_counting < 0 || qpe.flux_counting > qpe.n_counting) throw ConfigError("[qpe] flux_counting must lie in 0..n_counting");
    if (workers < 1) throw ConfigError("[experiment] workers must be >= 1");
    if (ghz.dt <= 0.0 || ghz.t_max < 0.0) throw ConfigError("[ghz] dt must be > 0 and t_max >= 0");
    if (gate_trace.iterations.size() != 2) throw ConfigError("[gate_trace] iterations must list exactly two budgets");
    if (gate_trace.time_steps < 1 || gate_trace.total_time <= 0.0) throw ConfigError("[gate_trace] time_steps and total_time must be positive");
    if (potential.grid < 2 || potential.cut_points < 3) throw ConfigError("[potential] grid must be >= 2 and cut_points >= 3");
    for (double t : {flux.gate_time_1q, flux.gate_time_2q, rydberg.gate_time_1q, rydberg.gate_time_2q}) {
        if (!(t > 0.0)) throw ConfigError("gate times must be > 0");
    }
    try {
        flux.params.validate();
        rydberg.params.validate();
        hybrid.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

/// Parses INI text. Environment overrides (DQPE_OUT, DQPE_WORKERS) are applied by the CLI, not here.
inline ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    static const std::set<std::string> known{"experiment", "flux", "rydberg", "hybrid", "grape", "qpe", "sweep",
                                             "tomography", "ghz", "gate_trace", "potential"};
    for (const auto& [name, sub] : root) {
        if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");
        if (sub.empty() && !sub.data().empty()) throw ConfigError("key '" + name + "' outside any section");
    }
    auto section = [&](const std::string& name) {
        auto child = root.get_child_optional(name);
        return detail::Section(child ? &*child : nullptr, name);
    };

    ExperimentConfig c;
    c.source = text;
    {
        auto s = section("experiment");
        if (!s.present()) throw ConfigError("missing [experiment] section");
        std::string kind;
        s.get("kind", kind);
        if (kind.empty()) throw ConfigError("[experiment] kind is required");
        c.kind = parse_kind(kind);
        s.get("seed", c.seed);
        s.get("out", c.out_dir);
        s.get("workers", c.workers);
        s.finish();
    }
    {
        auto s = section("flux");
        auto& f = c.flux.params;
        s.get_ghz("epsilon_ghz", f.epsilon);
        s.get_ghz("delta_ghz", f.delta);
        s.get_ghz("omega_r_ghz", f.omega_r);
        s.get_ghz("g_ghz", f.g);
        s.get("alpha", f.alpha);
        s.get("f_eps", f.f_eps);
        s.get("zeta_ref", f.zeta_ref);
        s.get("im_phi0_df", f.im_phi0_df);
        s.get("nz_ec_dn", f.nz_ec_dn);
        s.get_ghz("purcell_ghz", f.purcell_rate);
        s.get("fock_dim", f.fock_dim);
        s.get("coupling", c.flux.coupling);
        s.get("gate_time_1q", c.flux.gate_time_1q);
        s.get("gate_time_2q", c.flux.gate_time_2q);
        s.get("u_max", c.flux.u_max);
        s.get("step_size", c.flux.step_size);
        s.finish();
    }
    {
        auto s = section("rydberg");
        auto& r = c.rydberg.params;
        s.get_ghz("omega_ghz", r.omega);
        s.get_ghz("c6_ghz", r.v0);
        s.get("spacing", r.spacing);
        s.get("gamma_dephase", r.gamma_dephase);
        s.get("gamma_decay", r.gamma_decay);
        s.get_ghz("detuning_ghz", r.detuning);
        s.get("gate_time_1q", c.rydberg.gate_time_1q);
        s.get("gate_time_2q", c.rydberg.gate_time_2q);
        s.get("u_max", c.rydberg.u_max);
        s.get("step_size", c.rydberg.step_size);
        s.finish();
    }
    {
        auto s = section("hybrid");
        auto& h = c.hybrid;
        s.get_ghz("omega0_ghz", h.omega0);
        s.get_ghz("omega_e_ghz", h.omega_e);
        s.get_ghz("omega_g_ghz", h.omega_g);
        s.get_ghz("omega_u_ghz", h.omega_u);
        s.get("rabi", h.rabi);
        s.get("rabi_prime", h.rabi_prime);
        s.get("g_a", h.g_a);
        s.get("g_a_prime", h.g_a_prime);
        s.get("g_f", h.g_f);
        s.get_ghz("eps_f_ghz", h.eps_f);
        s.get_ghz("delta_f_ghz", h.delta_f);
        s.get("q_factor", h.q_factor);
        s.get("gamma_relax", h.gamma_relax);
        s.get("gamma_phi", h.gamma_phi);
        s.get("gamma_e", h.gamma_e_hybrid);
        s.get("fock_dim", h.fock_dim);
        s.finish();
    }
    {
        auto s = section("grape");
        std::string mode;
        s.get("mode", mode);
        if (mode == "ga" || mode.empty()) c.grape.mode = GrapeMode::gradient_ascent;
        else if (mode == "qn") c.grape.mode = GrapeMode::quasi_newton;
        else throw ConfigError("[grape] mode must be ga or qn");
        s.get("iterations", c.grape.iterations);
        s.get("time_steps", c.grape.time_steps);
        s.get("x_min", c.grape.x_min);
        s.get("noise", c.grape.noise);
        s.finish();
    }
    {
        auto s = section("qpe");
        s.get("phi_true", c.qpe.phi_true);
        s.get("n_counting", c.qpe.n_counting);
        s.get("flux_counting", c.qpe.flux_counting);
        s.get("shots", c.qpe.shots);
        std::string m;
        s.get("measurement", m);
        if (m == "sampled" || m.empty()) c.qpe.measurement = MeasurementMode::sampled;
        else if (m == "deferred") c.qpe.measurement = MeasurementMode::deferred;
        else throw ConfigError("[qpe] measurement must be sampled or deferred");
        std::string gates;
        s.get("gates", gates);
        if (gates == "grape" || gates.empty()) c.qpe.ideal_gates = false;
        else if (gates == "ideal") c.qpe.ideal_gates = true;
        else throw ConfigError("[qpe] gates must be grape or ideal");
        std::string e2;
        s.get("e2", e2);
        if (e2 == "ideal" || e2.empty()) c.qpe.physical_e2 = false;
        else if (e2 == "physical") c.qpe.physical_e2 = true;
        else throw ConfigError("[qpe] e2 must be ideal or physical");
        s.finish();
    }
    {
        auto s = section("sweep");
        s.get("zeta", c.zeta);
        s.finish();
    }
    {
        auto s = section("tomography");
        std::string dev;
        s.get("device", dev);
        if (dev == "flux" || dev.empty()) c.tomography.device = Device::flux;
        else if (dev == "rydberg") c.tomography.device = Device::rydberg;
        else throw ConfigError("[tomography] device must be flux or rydberg");
        s.get("gate", c.tomography.gate);
        s.finish();
    }
    {
        auto s = section("ghz");
        s.get("t_max", c.ghz.t_max);
        s.get("dt", c.ghz.dt);
        s.finish();
    }
    {
        auto s = section("gate_trace");
        s.get("gate", c.gate_trace.gate);
        s.get("time_steps", c.gate_trace.time_steps);
        s.get("total_time", c.gate_trace.total_time);
        s.get("step_size", c.gate_trace.step_size);
        s.get("u_max", c.gate_trace.u_max);
        s.get("z_control", c.gate_trace.z_control);
        s.get("iterations", c.gate_trace.iterations);
        s.finish();
    }
    {
        auto s = section("potential");
        s.get("grid", c.potential.grid);
        s.get("cut_points", c.potential.cut_points);
        s.finish();
    }
    c.flux.params.zeta = c.zeta.front();
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace dqpe::harness
