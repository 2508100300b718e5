#pragma once

// GRAPE-synthesized local gates for the two devices of the distributed register.
//
// Each gate is optimized on a small register model of its owning device (one
// or two qubits, resonator omitted) with x, y and z controls on every qubit,
// against the gate's unitary channel.

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "dqpe/grape.hpp"
#include "dqpe/models.hpp"
#include "dqpe/qpe.hpp"

namespace dqpe {

/// Flux qubits biased near the symmetry point with a small tunnel splitting.
inline FluxParams register_flux_params() {
    FluxParams p;
    p.delta = ghz(0.002);
    return p;
}

// Defaults place the gradient-ascent stability edge of every gate near 180 time steps.
struct FluxRegisterModel {
    FluxParams params = register_flux_params();
    double coupling = 5.0 * pi;   // zz coupling between neighbouring flux qubits, rad/ns
    double gate_time_1q = 0.1;    // ns
    double gate_time_2q = 0.1;
    double u_max = 20.0 * pi;
    double step_size = 18000.0;   // GA step; the stable range scales like 1 / gate_time^2
};

struct RydbergRegisterModel {
    RydbergParams params;
    double gate_time_1q = 1.2;
    double gate_time_2q = 1.2;
    double u_max = 2.0 * pi;
    double step_size = 125.0;
};

struct SynthesisSettings {
    int time_steps = 100;
    GrapeMode mode = GrapeMode::gradient_ascent;
    double min_error = 1e-6;
    std::uint64_t seed = 0;
    bool noise = true;
};

/// Register model of `n` qubits of a device: drift, collapse channels and x/y/z controls.
struct DeviceModel {
    Operator drift;
    std::vector<CollapseChannel> channels;
    std::vector<Operator> controls;
    double gate_time = 0.0;
    double u_max = 0.0;
    double step_size = 0.0;
    std::string fingerprint;  // every model parameter, for cache keys
};

namespace detail {

template <class... T>
std::string join_fields(const T&... v) {
    std::ostringstream os;
    os.precision(17);
    ((os << v << ','), ...);
    return os.str();
}

}  // namespace detail

inline std::vector<Operator> pauli_controls(int n) {
    const HilbertSpace space = HilbertSpace::qubits(n);
    std::vector<Operator> out;
    for (int q = 0; q < n; ++q) {
        out.push_back(embed(ops::sigma_x(), q, space));
        out.push_back(embed(ops::sigma_y(), q, space));
        out.push_back(embed(ops::sigma_z(), q, space));
    }
    return out;
}

inline DeviceModel flux_device_model(const FluxRegisterModel& m, int n, bool noise) {
    m.params.validate();
    const HilbertSpace space = HilbertSpace::qubits(n);
    Matrix h = Matrix::Zero(space.total_dim(), space.total_dim());
    for (int q = 0; q < n; ++q) h += embed(flux_qubit_matrix(m.params.epsilon, m.params.delta), q, space).matrix();
    for (int q = 0; q + 1 < n; ++q) {
        h += m.coupling * embed(ops::sigma_z(), q, space).matrix() * embed(ops::sigma_z(), q + 1, space).matrix();
    }
    const auto& f = m.params;
    DeviceModel d{Operator(space, h, true), {}, pauli_controls(n), n == 1 ? m.gate_time_1q : m.gate_time_2q, m.u_max, m.step_size,
                  detail::join_fields("flux", n, noise, f.epsilon, f.delta, f.zeta, f.zeta_ref, f.im_phi0_df, f.nz_ec_dn,
                                      f.purcell_rate, m.coupling, m.gate_time_1q, m.gate_time_2q, m.u_max, m.step_size)};
    if (noise) {
        for (int q = 0; q < n; ++q) {
            for (const auto& [op, rate] : flux_qubit_noise(m.params)) d.channels.emplace_back(embed(op, q, space), rate);
        }
    }
    return d;
}

inline DeviceModel rydberg_device_model(const RydbergRegisterModel& m, int n, bool noise) {
    RydbergParams p = m.params;
    p.n_atoms = n;
    DeviceModel d{rydberg_hamiltonian(p), {}, pauli_controls(n), n == 1 ? m.gate_time_1q : m.gate_time_2q, m.u_max, m.step_size,
                  detail::join_fields("rydberg", n, noise, p.omega, p.v0, p.spacing, p.gamma_dephase, p.gamma_decay, p.detuning,
                                      m.gate_time_1q, m.gate_time_2q, m.u_max, m.step_size)};
    if (noise) d.channels = rydberg_channels(p);
    return d;
}

inline GrapeProblem gate_problem(const DeviceModel& model, const Matrix& unitary, const SynthesisSettings& s, int max_iterations) {
    const HilbertSpace& space = model.drift.space();
    GrapeProblem p{.drift = build_liouvillian(model.drift, model.channels),
                   .controls = model.controls,
                   .target = SuperOperator(space, reg::unitary_superop(unitary))};
    p.n_steps = s.time_steps;
    p.total_time = model.gate_time;
    p.max_iterations = max_iterations;
    p.step_size = model.step_size;
    p.min_error = s.min_error;
    p.mode = s.mode;
    p.seed = s.seed;
    p.u_max = model.u_max;
    return p;
}

/// Channel snapshots of one optimization, keyed by iteration count.
using GateSnapshots = std::map<int, Matrix>;

/// Runs GRAPE once up to the largest checkpoint and records the composed propagator at each one.
inline GateSnapshots synthesize_gate(const DeviceModel& model, const Matrix& unitary, const SynthesisSettings& s,
                                     const std::vector<int>& checkpoints) {
    if (checkpoints.empty()) throw InvalidArgument("synthesize_gate: no iteration checkpoints");
    const int max_it = *std::max_element(checkpoints.begin(), checkpoints.end());
    const GrapeProblem p = gate_problem(model, unitary, s, max_it);
    GateSnapshots snaps;
    auto want = [&](int it) { return std::find(checkpoints.begin(), checkpoints.end(), it) != checkpoints.end(); };
    const auto res = optimize(p, [&](int it, const ControlPulse& pulse, double) {
        if (want(it)) snaps[it] = total_propagator(p, pulse).matrix();
    });
    for (int c : checkpoints) {
        if (!snaps.count(c)) snaps[c] = res.total_propagator.matrix();  // converged before reaching c
    }
    return snaps;
}

/// Thread-safe memo of synthesized gates shared across sweep points; each key is computed once.
class SynthesisCache {
public:
    GateSnapshots get(const std::string& key, const std::function<GateSnapshots()>& make) {
        std::shared_future<GateSnapshots> fut;
        std::promise<GateSnapshots> prom;
        bool owner = false;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                fut = prom.get_future().share();
                entries_.emplace(key, fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                prom.set_value(make());
            } catch (...) {
                prom.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.size();
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_future<GateSnapshots>> entries_;
};

/// Serves GRAPE-synthesized channels at a fixed iteration budget.
class GrapeGateProvider : public GateProvider {
public:
    GrapeGateProvider(FluxRegisterModel flux, RydbergRegisterModel rydberg, SynthesisSettings settings,
                      std::vector<int> checkpoints, std::shared_ptr<SynthesisCache> cache = nullptr)
        : flux_(std::move(flux)), rydberg_(std::move(rydberg)), settings_(settings), checkpoints_(std::move(checkpoints)),
          cache_(cache ? std::move(cache) : std::make_shared<SynthesisCache>()) {
        if (checkpoints_.empty()) throw InvalidArgument("GrapeGateProvider: no iteration budgets");
        iterations_ = checkpoints_.back();
    }

    void set_iterations(int it) {
        if (std::find(checkpoints_.begin(), checkpoints_.end(), it) == checkpoints_.end()) {
            throw InvalidArgument("GrapeGateProvider: " + std::to_string(it) + " is not a synthesized iteration budget");
        }
        iterations_ = it;
    }

    Matrix channel(Device device, const GateSpec& gate) override {
        const int n = gate.n_qubits();
        if (n < 1 || n > 2) throw InvalidArgument("GrapeGateProvider: only 1- and 2-qubit gates are synthesized");
        const DeviceModel m = device == Device::flux ? flux_device_model(flux_, n, settings_.noise)
                                                     : rydberg_device_model(rydberg_, n, settings_.noise);
        std::string key = m.fingerprint + gate.label + "|" +
                          detail::join_fields(settings_.time_steps, static_cast<int>(settings_.mode), settings_.min_error, settings_.seed);
        for (int c : checkpoints_) key += std::to_string(c) + ";";
        const auto snaps = cache_->get(key, [&] { return synthesize_gate(m, gate.unitary, settings_, checkpoints_); });
        return snaps.at(iterations_);
    }

    const std::shared_ptr<SynthesisCache>& cache() const { return cache_; }

private:
    FluxRegisterModel flux_;
    RydbergRegisterModel rydberg_;
    SynthesisSettings settings_;
    std::vector<int> checkpoints_;
    std::shared_ptr<SynthesisCache> cache_;
    int iterations_ = 0;
};

}  // namespace dqpe
