#pragma once

// The six experiment kinds. Each returns its output files as text plus a JSON
// summary; the CLI decides where they go.

#include <boost/math/tools/minima.hpp>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dqpe/ghz.hpp"
#include "dqpe/grape.hpp"
#include "dqpe/harness/config.hpp"
#include "dqpe/harness/output.hpp"
#include "dqpe/harness/pool.hpp"
#include "dqpe/qpe.hpp"
#include "dqpe/synthesis.hpp"
#include "dqpe/tomography.hpp"

namespace dqpe::harness {

struct ExperimentOutput {
    std::map<std::string, std::string> files;  // relative path -> contents
    Json summary = Json::object();
};

/// Named gates accepted in configs.
inline GateSpec named_gate(const std::string& name) {
    if (name == "H") return gates::h();
    if (name == "X") return gates::x();
    if (name == "Z") return gates::z();
    if (name == "I") return {"I", ops::identity(2)};
    if (name == "CNOT") return gates::cnot();
    if (name == "CZ") return gates::cphase(pi);
    if (name == "II") return {"II", ops::identity(4)};
    throw ConfigError("unknown gate '" + name + "' (expected H, X, Z, I, CNOT, CZ or II)");
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline SynthesisSettings synthesis_settings(const ExperimentConfig& c, int time_steps) {
    SynthesisSettings s;
    s.time_steps = time_steps;
    s.mode = c.grape.mode;
    s.min_error = c.grape.x_min;
    s.seed = c.seed;
    s.noise = c.grape.noise;
    return s;
}

/// Mixes grid coordinates into a point seed so results do not depend on evaluation order.
inline std::uint64_t point_seed(std::uint64_t seed, double zeta, int iterations, int time_steps) {
    std::uint64_t z = 0;
    std::memcpy(&z, &zeta, sizeof z);
    return shot_seed(shot_seed(shot_seed(seed, z), static_cast<std::uint64_t>(iterations)), static_cast<std::uint64_t>(time_steps));
}

// ---------------------------------------------------------------------------
// tomography

struct TomographyCell {
    int iterations = 0;
    int time_steps = 0;
    ChiMatrix chi;
    std::string error;
};

inline std::vector<TomographyCell> run_tomography(const ExperimentConfig& c, int workers, std::ostream& log) {
    const GateSpec gate = named_gate(c.tomography.gate);
    const int nq = gate.n_qubits();
    const auto its = sorted_unique(c.grape.iterations);
    const auto steps = sorted_unique(c.grape.time_steps);
    std::vector<TomographyCell> cells(its.size() * steps.size());
    parallel_for(steps.size(), workers, [&](std::size_t si) {
        const int n = steps[si];
        FluxRegisterModel flux = c.flux;
        flux.params.zeta = c.zeta.front();
        const DeviceModel m = c.tomography.device == Device::flux ? flux_device_model(flux, nq, c.grape.noise)
                                                                  : rydberg_device_model(c.rydberg, nq, c.grape.noise);
        GateSnapshots snaps;
        std::string error;
        try {
            snaps = synthesize_gate(m, gate.unitary, synthesis_settings(c, n), its);
        } catch (const NumericalError& e) {
            error = e.what();
        }
        for (std::size_t ii = 0; ii < its.size(); ++ii) {
            TomographyCell& cell = cells[ii * steps.size() + si];
            cell.iterations = its[ii];
            cell.time_steps = n;
            cell.error = error;
            if (error.empty()) {
                try {
                    cell.chi = process_tomography(SuperOperator(m.drift.space(), snaps.at(its[ii])), &gate.unitary);
                } catch (const NumericalError& e) {
                    cell.error = e.what();
                }
            }
            if (!cell.error.empty()) {
                log << "tomography: iterations=" << its[ii] << " time_steps=" << n << " failed: " << cell.error << "\n";
            }
        }
    });
    return cells;
}

inline ExperimentOutput cmd_tomography(const ExperimentConfig& c, int workers, std::ostream& log) {
    const auto cells = run_tomography(c, workers, log);
    const std::string dev = device_name(c.tomography.device);
    const double zeta = c.tomography.device == Device::flux ? c.zeta.front() : std::nan("");
    CsvTable fid({"device", "zeta", "gate", "grape_iterations", "time_steps", "fidelity"});
    CsvTable chi({"grape_iterations", "time_steps", "row", "col", "row_label", "col_label", "magnitude"});
    Json cells_json = Json::array();
    for (const auto& cell : cells) {
        const double f = cell.error.empty() ? cell.chi.fidelity : std::nan("");
        fid.row(dev, zeta, c.tomography.gate, cell.iterations, cell.time_steps, f);
        if (cell.error.empty()) {
            const long d = cell.chi.entries.rows();
            for (long i = 0; i < d; ++i) {
                for (long j = 0; j < d; ++j) {
                    chi.row(cell.iterations, cell.time_steps, static_cast<int>(i), static_cast<int>(j),
                            pauli_label(static_cast<int>(i), cell.chi.n_qubits), pauli_label(static_cast<int>(j), cell.chi.n_qubits),
                            std::abs(cell.chi.entries(i, j)));
                }
            }
        }
    }
    fid.sort_rows();
    chi.sort_rows();
    ExperimentOutput out;
    out.files["tomography.csv"] = fid.str();
    out.files["chi.csv"] = chi.str();
    out.files["tomography.svg"] = heatmap_from_csv(fid, "time_steps", "grape_iterations", "fidelity",
                                                   c.tomography.gate + " process fidelity (" + dev + ")");
    double best = 0.0;
    for (const auto& cell : cells) {
        if (cell.error.empty()) best = std::max(best, cell.chi.fidelity);
    }
    out.summary["best_fidelity"] = best;
    return out;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepPoint {
    double zeta = 0.0;
    int iterations = 0;
    int time_steps = 0;
    int shots = 0;
    int correct = 0;
    double accuracy = std::nan("");
    double seconds = 0.0;       // simulated local-gate time over all shots
    double wall_seconds = 0.0;  // host time for the point (manifest only)
    std::vector<long> outcomes;
    std::string error;
};

/// Forwards to another provider and adds up the device time of every gate served.
class TimedGateProvider : public GateProvider {
public:
    TimedGateProvider(GateProvider& inner, const FluxRegisterModel& flux, const RydbergRegisterModel& rydberg)
        : inner_(inner), flux_(flux), rydberg_(rydberg) {}

    Matrix channel(Device d, const GateSpec& g) override {
        const bool two = g.n_qubits() == 2;
        elapsed_ns_ += d == Device::flux ? (two ? flux_.gate_time_2q : flux_.gate_time_1q)
                                         : (two ? rydberg_.gate_time_2q : rydberg_.gate_time_1q);
        return inner_.channel(d, g);
    }

    double elapsed_ns() const { return elapsed_ns_; }

private:
    GateProvider& inner_;
    const FluxRegisterModel& flux_;
    const RydbergRegisterModel& rydberg_;
    double elapsed_ns_ = 0.0;
};

inline Matrix e2_pair_for(const ExperimentConfig& c, bool physical) {
    if (!physical) return bell_pair();
    const auto run = run_ghz(c.hybrid, c.ghz.t_max, c.ghz.dt, true);
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        if (run.samples[i].time == run.peak.time) return ghz_communication_pair(run.states[i], c.hybrid);
    }
    throw NumericalError("e2: peak sample not found");
}

inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& c, int workers, std::ostream& log) {
    const auto zetas = sorted_unique(c.zeta);
    const auto its = sorted_unique(c.grape.iterations);
    const auto steps = sorted_unique(c.grape.time_steps);
    const DeviceLayout layout = DeviceLayout::standard(c.qpe.n_counting, c.qpe.flux_counting);
    const Matrix pair = e2_pair_for(c, c.qpe.physical_e2);
    auto cache = std::make_shared<SynthesisCache>();

    std::vector<SweepPoint> points(zetas.size() * steps.size() * its.size());
    parallel_for(zetas.size() * steps.size(), workers, [&](std::size_t task) {
        const double zeta = zetas[task / steps.size()];
        const int n = steps[task % steps.size()];
        FluxRegisterModel flux = c.flux;
        flux.params.zeta = zeta;
        IdealGateProvider ideal;
        GrapeGateProvider grape(flux, c.rydberg, synthesis_settings(c, n), its, cache);
        for (std::size_t ii = 0; ii < its.size(); ++ii) {
            SweepPoint& pt = points[task * its.size() + ii];
            pt.zeta = zeta;
            pt.iterations = its[ii];
            pt.time_steps = n;
            pt.shots = c.qpe.shots;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                grape.set_iterations(its[ii]);
                GateProvider& inner = c.qpe.ideal_gates ? static_cast<GateProvider&>(ideal) : grape;
                TimedGateProvider timed(inner, flux, c.rydberg);
                const auto res = run_qpe(c.qpe.phi_true, layout, timed, pair, c.qpe.shots, point_seed(c.seed, zeta, its[ii], n),
                                         c.qpe.measurement);
                pt.correct = res.correct;
                pt.accuracy = res.accuracy;
                pt.seconds = timed.elapsed_ns() * 1e-9;
                for (const auto& s : res.shots) {
                    long x = 0;
                    for (int b : s.outcome) x = 2 * x + b;
                    pt.outcomes.push_back(x);
                }
            } catch (const Error& e) {
                pt.error = e.what();
                log << "sweep: zeta=" << fmt(zeta) << " grape_iterations=" << its[ii] << " time_steps=" << n
                    << " failed: " << pt.error << "\n";
            }
            pt.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    });
    return points;
}

inline CsvTable sweep_table(const std::vector<SweepPoint>& points) {
    CsvTable t({"zeta", "grape_iterations", "time_steps", "shots", "correct", "accuracy", "seconds"});
    for (const auto& p : points) t.row(p.zeta, p.iterations, p.time_steps, p.shots, p.correct, p.accuracy, p.seconds);
    t.sort_rows();
    return t;
}

inline ExperimentOutput cmd_sweep(const ExperimentConfig& c, int workers, std::ostream& log) {
    const auto points = run_sweep(c, workers, log);
    const CsvTable table = sweep_table(points);
    ExperimentOutput out;
    out.files["sweep.csv"] = table.str();
    CsvTable shots({"zeta", "grape_iterations", "time_steps", "shot", "outcome"});
    Json wall = Json::array();
    int failed = 0;
    for (const auto& p : points) {
        for (std::size_t s = 0; s < p.outcomes.size(); ++s) shots.row(p.zeta, p.iterations, p.time_steps, static_cast<int>(s), static_cast<long long>(p.outcomes[s]));
        wall.push_back({{"zeta", p.zeta}, {"grape_iterations", p.iterations}, {"time_steps", p.time_steps}, {"wall_seconds", p.wall_seconds}});
        if (!p.error.empty()) ++failed;
    }
    shots.sort_rows();
    out.files["shots.csv"] = shots.str();
    for (double z : sorted_unique(c.zeta)) {
        CsvTable one(table.header());
        for (const auto& r : table.rows()) {
            if (std::strtod(r[0].c_str(), nullptr) == z) one.row(r[0], r[1], r[2], r[3], r[4], r[5], r[6]);
        }
        out.files["sweep_zeta" + fmt(z) + ".svg"] =
            heatmap_from_csv(one, "time_steps", "grape_iterations", "accuracy", "QPE accuracy, zeta = " + fmt(z));
    }
    out.summary["points"] = points.size();
    out.summary["failed_points"] = failed;
    out.summary["wall_time"] = wall;
    return out;
}

// ---------------------------------------------------------------------------
// ghz

inline ExperimentOutput cmd_ghz(const ExperimentConfig& c) {
    const auto run = run_ghz(c.hybrid, c.ghz.t_max, c.ghz.dt);
    CsvTable t({"time_ns", "fidelity"});
    for (const auto& s : run.samples) t.row(s.time, s.fidelity);
    ExperimentOutput out;
    out.files["ghz.csv"] = t.str();
    out.summary["peak_fidelity"] = run.peak.fidelity;
    out.summary["peak_time_ns"] = run.peak.time;
    return out;
}

// ---------------------------------------------------------------------------
// potential

struct PotentialMinimum {
    double phi_star = 0.0;
    double u = 0.0;
};

/// Local minima of the cut on [-pi, pi), bracketed on a dense periodic grid and refined by Brent's method.
inline std::vector<PotentialMinimum> potential_cut_minima(double alpha, double f_eps, int samples) {
    auto u = [&](double x) { return flux_potential_cut(x, alpha, f_eps); };
    const double h = 2.0 * pi / samples;
    std::vector<PotentialMinimum> out;
    for (int i = 0; i < samples; ++i) {
        const double x = -pi + i * h;
        if (u(x) < u(x - h) && u(x) <= u(x + h)) {
            const auto [xm, um] = boost::math::tools::brent_find_minima(u, x - h, x + h, 52);
            out.push_back({std::remainder(xm, 2.0 * pi), um});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.phi_star < b.phi_star; });
    return out;
}

inline ExperimentOutput cmd_potential(const ExperimentConfig& c) {
    const double alpha = c.flux.params.alpha, f = c.flux.params.f_eps;
    const int g = c.potential.grid;
    CsvTable grid({"phi1", "phi2", "u_over_ej"});
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double p1 = -pi + 2.0 * pi * i / (g - 1), p2 = -pi + 2.0 * pi * j / (g - 1);
            grid.row(p1, p2, flux_potential(p1, p2, alpha, f));
        }
    }
    CsvTable cut({"phi_star", "u_over_ej"});
    const int m = c.potential.cut_points;
    for (int i = 0; i < m; ++i) {
        const double x = -pi + 2.0 * pi * i / (m - 1);
        cut.row(x, flux_potential_cut(x, alpha, f));
    }
    CsvTable mins({"phi_star", "u_over_ej"});
    Json mj = Json::array();
    for (const auto& mn : potential_cut_minima(alpha, f, m)) {
        mins.row(mn.phi_star, mn.u);
        mj.push_back({{"phi_star", mn.phi_star}, {"u_over_ej", mn.u}});
    }
    ExperimentOutput out;
    out.files["potential_grid.csv"] = grid.str();
    out.files["potential_cut.csv"] = cut.str();
    out.files["potential_minima.csv"] = mins.str();
    out.summary["minima"] = mj;
    return out;
}

// ---------------------------------------------------------------------------
// gate-trace

struct GateTraceRun {
    int iterations = 0;
    std::vector<double> fidelity_trace;  // per optimizer iteration
    std::vector<double> time_curve;      // gate fidelity of the partial propagator at each step boundary
    double final_fidelity = 0.0;
};

/// The gate-trace problem: one flux qubit of the register model, x/y (optionally z) controls.
inline GrapeProblem gate_trace_problem(const ExperimentConfig& c, int max_iterations) {
    FluxRegisterModel flux = c.flux;
    flux.params.zeta = c.zeta.front();
    flux.gate_time_1q = c.gate_trace.total_time;
    flux.u_max = c.gate_trace.u_max;
    flux.step_size = c.gate_trace.step_size;
    const GateSpec gate = named_gate(c.gate_trace.gate);
    DeviceModel m = flux_device_model(flux, gate.n_qubits(), c.grape.noise);
    if (!c.gate_trace.z_control) {
        std::vector<Operator> xy;
        for (std::size_t k = 0; k < m.controls.size(); ++k) {
            if (k % 3 != 2) xy.push_back(m.controls[k]);
        }
        m.controls = xy;
    }
    return gate_problem(m, gate.unitary, synthesis_settings(c, c.gate_trace.time_steps), max_iterations);
}

/// Fidelity of S_l ... S_1 against the target after each step, l = 0 ... N.
inline std::vector<double> gate_time_curve(const GrapeProblem& p, const ControlPulse& pulse) {
    const Matrix& target = std::get<SuperOperator>(p.target).matrix();
    const long big = target.rows();
    const auto s = dqpe::detail::step_maps(p, dqpe::detail::control_generators(p), pulse);
    std::vector<double> out;
    Matrix x = Matrix::Identity(big, big);
    out.push_back(dqpe::detail::trace_product(target.adjoint(), x).real() / static_cast<double>(big));
    for (const auto& sl : s) {
        x = sl * x;
        out.push_back(dqpe::detail::trace_product(target.adjoint(), x).real() / static_cast<double>(big));
    }
    return out;
}

/// Runs GRAPE once to the larger budget and reads the smaller budget off the same trajectory.
inline std::vector<GateTraceRun> run_gate_trace(const ExperimentConfig& c) {
    const auto budgets = c.gate_trace.iterations;
    const int max_it = *std::max_element(budgets.begin(), budgets.end());
    const GrapeProblem p = gate_trace_problem(c, max_it);
    std::map<int, ControlPulse> pulses;
    const auto res = optimize(p, [&](int it, const ControlPulse& pulse, double) {
        if (std::find(budgets.begin(), budgets.end(), it) != budgets.end()) pulses.emplace(it, pulse);
    });
    std::vector<GateTraceRun> runs;
    for (int b : budgets) {
        GateTraceRun r;
        r.iterations = b;
        const ControlPulse& pulse = pulses.count(b) ? pulses.at(b) : res.pulse;  // converged early
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(b) + 1, res.fidelity_trace.size());
        r.fidelity_trace.assign(res.fidelity_trace.begin(), res.fidelity_trace.begin() + static_cast<long>(n));
        r.time_curve = gate_time_curve(p, pulse);
        r.final_fidelity = r.fidelity_trace.back();
        runs.push_back(std::move(r));
    }
    return runs;
}

inline ExperimentOutput cmd_gate_trace(const ExperimentConfig& c) {
    const auto runs = run_gate_trace(c);
    const double dt = c.gate_trace.total_time / c.gate_trace.time_steps;
    CsvTable time({"grape_iterations", "step", "time_ns", "fidelity"});
    CsvTable iters({"grape_iterations", "iteration", "fidelity"});
    Json js = Json::array();
    for (const auto& r : runs) {
        for (std::size_t l = 0; l < r.time_curve.size(); ++l) time.row(r.iterations, static_cast<int>(l), static_cast<double>(l) * dt, r.time_curve[l]);
        for (std::size_t i = 0; i < r.fidelity_trace.size(); ++i) iters.row(r.iterations, static_cast<int>(i), r.fidelity_trace[i]);
        js.push_back({{"grape_iterations", r.iterations},
                      {"final_fidelity", r.final_fidelity},
                      {"peak_fidelity", *std::max_element(r.fidelity_trace.begin(), r.fidelity_trace.end())}});
    }
    ExperimentOutput out;
    out.files["gate_trace_time.csv"] = time.str();
    out.files["gate_trace_iterations.csv"] = iters.str();
    out.summary["runs"] = js;
    return out;
}

// ---------------------------------------------------------------------------
// qpe

inline ExperimentOutput cmd_qpe(const ExperimentConfig& c) {
    const DeviceLayout layout = DeviceLayout::standard(c.qpe.n_counting, c.qpe.flux_counting);
    const Matrix pair = e2_pair_for(c, c.qpe.physical_e2);
    FluxRegisterModel flux = c.flux;
    flux.params.zeta = c.zeta.front();
    const int n = c.grape.time_steps.front(), it = c.grape.iterations.front();
    IdealGateProvider ideal;
    GrapeGateProvider grape(flux, c.rydberg, synthesis_settings(c, n), {it});
    GateProvider& gates = c.qpe.ideal_gates ? static_cast<GateProvider&>(ideal) : grape;
    const auto res = run_qpe(c.qpe.phi_true, layout, gates, pair, c.qpe.shots, point_seed(c.seed, flux.params.zeta, it, n),
                             c.qpe.measurement);
    CsvTable shots({"shot", "outcome", "bits", "phase_estimate", "correct"});
    for (std::size_t s = 0; s < res.shots.size(); ++s) {
        const auto& r = res.shots[s];
        long x = 0;
        std::string bits;
        for (int b : r.outcome) {
            x = 2 * x + b;
            bits += static_cast<char>('0' + b);
        }
        shots.row(static_cast<int>(s), static_cast<long long>(x), bits, r.phase_estimate, r.correct ? 1 : 0);
    }
    CsvTable dist({"outcome", "probability"});
    for (std::size_t x = 0; x < res.mean_distribution.size(); ++x) dist.row(static_cast<int>(x), res.mean_distribution[x]);
    ExperimentOutput out;
    out.files["qpe_shots.csv"] = shots.str();
    out.files["qpe_distribution.csv"] = dist.str();
    out.summary["accuracy"] = res.accuracy;
    out.summary["correct"] = res.correct;
    out.summary["expected_outcome"] = expected_outcome(c.qpe.phi_true, layout.n_counting());
    return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& c, int workers, std::ostream& log) {
    switch (c.kind) {
        case ExperimentKind::tomography: return cmd_tomography(c, workers, log);
        case ExperimentKind::sweep: return cmd_sweep(c, workers, log);
        case ExperimentKind::ghz: return cmd_ghz(c);
        case ExperimentKind::gate_trace: return cmd_gate_trace(c);
        case ExperimentKind::potential: return cmd_potential(c);
        case ExperimentKind::qpe: return cmd_qpe(c);
    }
    throw ConfigError("unknown experiment kind");
}

}  // namespace dqpe::harness
