#pragma once

// Distributed phase estimation across a flux-qubit device and a Rydberg device.
//
// Register layout is device-major: the flux device holds the state qubit, its
// communication qubit and any flux-side counting qubits; the Rydberg device
// holds its communication qubit followed by the Rydberg counting qubits.
// Flux-side counting qubits are the least significant counting bits.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dqpe/core.hpp"
#include "dqpe/register.hpp"

namespace dqpe {

enum class Device { flux, rydberg };

inline const char* device_name(Device d) { return d == Device::flux ? "flux" : "rydberg"; }

struct DeviceLayout {
    int state = 0;
    int flux_comm = 1;
    std::vector<int> flux_counting;
    int rydberg_comm = 0;
    std::vector<int> rydberg_counting;
    std::vector<int> counting_order;  // most significant first

    /// n_counting counting qubits, the last `flux_counting_qubits` of them on the flux device.
    static DeviceLayout standard(int n_counting = 4, int flux_counting_qubits = 1) {
        if (n_counting < 1) throw InvalidArgument("DeviceLayout: at least one counting qubit is required");
        if (flux_counting_qubits < 0 || flux_counting_qubits > n_counting) {
            throw InvalidArgument("DeviceLayout: flux counting qubits must lie in [0, n_counting]");
        }
        DeviceLayout l;
        int next = 2;
        for (int i = 0; i < flux_counting_qubits; ++i) l.flux_counting.push_back(next++);
        l.rydberg_comm = next++;
        for (int i = 0; i < n_counting - flux_counting_qubits; ++i) l.rydberg_counting.push_back(next++);
        l.counting_order = l.rydberg_counting;
        l.counting_order.insert(l.counting_order.end(), l.flux_counting.begin(), l.flux_counting.end());
        l.validate();
        return l;
    }

    int n_qubits() const { return 3 + static_cast<int>(flux_counting.size() + rydberg_counting.size()); }
    int n_counting() const { return static_cast<int>(counting_order.size()); }

    Device device_of(int q) const {
        if (q == state || q == flux_comm) return Device::flux;
        for (int c : flux_counting) {
            if (c == q) return Device::flux;
        }
        if (q == rydberg_comm) return Device::rydberg;
        for (int c : rydberg_counting) {
            if (c == q) return Device::rydberg;
        }
        throw InvalidArgument("DeviceLayout: qubit " + std::to_string(q) + " is not part of the layout");
    }

    int comm_of(Device d) const { return d == Device::flux ? flux_comm : rydberg_comm; }

    void validate() const {
        std::vector<int> all{state, flux_comm, rydberg_comm};
        all.insert(all.end(), flux_counting.begin(), flux_counting.end());
        all.insert(all.end(), rydberg_counting.begin(), rydberg_counting.end());
        std::vector<int> sorted = all;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != static_cast<int>(i)) throw InvalidArgument("DeviceLayout: qubit indices must be a permutation of 0..n-1");
        }
        if (counting_order.size() != flux_counting.size() + rydberg_counting.size()) {
            throw InvalidArgument("DeviceLayout: counting order must list every counting qubit once");
        }
        for (int c : counting_order) {
            if (c == state || c == flux_comm || c == rydberg_comm) throw InvalidArgument("DeviceLayout: counting order names a non-counting qubit");
        }
    }

    HilbertSpace space() const { return HilbertSpace::qubits(n_qubits()); }
};

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

/// A local gate request: a label unique per unitary (the cache key for synthesized gates)
/// and the ideal unitary on the listed qubits.
struct GateSpec {
    std::string label;
    Matrix unitary;

    int n_qubits() const { return static_cast<int>(std::llround(std::log2(static_cast<double>(unitary.rows())))); }
};

namespace gates {

inline std::string angle_label(const std::string& name, double theta) {
    std::ostringstream os;
    os.precision(17);
    os << name << "(" << theta << ")";
    return os.str();
}

inline GateSpec h() { return {"H", ops::hadamard()}; }
inline GateSpec x() { return {"X", ops::sigma_x()}; }
inline GateSpec z() { return {"Z", ops::sigma_z()}; }
inline GateSpec cnot() { return {"CNOT", ops::cnot()}; }
inline GateSpec cphase(double theta) { return {angle_label("CP", theta), ops::controlled_phase(theta)}; }
inline GateSpec controlled(const std::string& name, const Matrix& u) { return {"C" + name, ops::controlled(u)}; }

}  // namespace gates

/// Supplies the channel (column-stacked superoperator) realizing a gate on a device.
class GateProvider {
public:
    virtual ~GateProvider() = default;
    virtual Matrix channel(Device device, const GateSpec& gate) = 0;
};

class IdealGateProvider : public GateProvider {
public:
    Matrix channel(Device, const GateSpec& gate) override { return reg::unitary_superop(gate.unitary); }
};

/// Precomputed channels keyed by (device, label).
class TableGateProvider : public GateProvider {
public:
    void set(Device device, const std::string& label, Matrix superop) { table_[{device, label}] = std::move(superop); }

    Matrix channel(Device device, const GateSpec& gate) override {
        auto it = table_.find({device, gate.label});
        if (it == table_.end()) {
            throw InvalidArgument(std::string("gate provider has no ") + device_name(device) + " gate '" + gate.label + "'");
        }
        return it->second;
    }

private:
    std::map<std::pair<Device, std::string>, Matrix> table_;
};

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

struct ProtocolStep {
    enum class Kind { e2, local_gate, measure_ebit, classical_correction };
    Kind kind = Kind::local_gate;
    std::string label;
    std::vector<int> qubits;
    int outcome = -1;       // measure_ebit: the bit (-1 in deferred mode)
    int source_step = -1;   // classical_correction: index of the measurement it depends on
};

inline const char* step_kind_name(ProtocolStep::Kind k) {
    switch (k) {
        case ProtocolStep::Kind::e2: return "E2";
        case ProtocolStep::Kind::local_gate: return "local_gate";
        case ProtocolStep::Kind::measure_ebit: return "measure_ebit";
        case ProtocolStep::Kind::classical_correction: return "classical_correction";
    }
    return "?";
}

enum class MeasurementMode { sampled, forced, deferred };

struct ProtocolOptions {
    MeasurementMode mode = MeasurementMode::sampled;
    std::vector<int> forced_outcomes{};  // consumed in order in forced mode
    bool correct_after_first = true;   // X on both ebits after the control-side measurement
    bool correct_after_second = true;  // Z on the control after the target-side measurement
};

/// Register state plus the machinery to run local gates, E2 and non-local controlled gates on it.
class DistributedRegister {
public:
    DistributedRegister(DeviceLayout layout, GateProvider& gates, Matrix e2_pair, ProtocolOptions options = {},
                        std::uint64_t seed = 0)
        : layout_(std::move(layout)), gates_(gates), pair_(std::move(e2_pair)), options_(std::move(options)), rng_(seed) {
        layout_.validate();
        n_ = layout_.n_qubits();
        rho_ = Matrix::Zero(1L << n_, 1L << n_);
        rho_(0, 0) = 1.0;
    }

    int n_qubits() const { return n_; }
    const DeviceLayout& layout() const { return layout_; }
    const Matrix& rho() const { return rho_; }
    void set_rho(Matrix rho) { rho_ = std::move(rho); }
    const std::vector<ProtocolStep>& transcript() const { return transcript_; }
    std::mt19937_64& rng() { return rng_; }

    /// Applies a gate that is local to one device.
    void local(const GateSpec& gate, const std::vector<int>& qubits) {
        if (gate.n_qubits() != static_cast<int>(qubits.size())) throw StructuralError("local gate: arity mismatch for " + gate.label);
        const Device d = layout_.device_of(qubits.front());
        for (int q : qubits) {
            if (layout_.device_of(q) != d) throw InvalidArgument("local gate " + gate.label + " spans both devices");
        }
        reg::apply_superop(rho_, n_, qubits, gates_.channel(d, gate));
        transcript_.push_back({ProtocolStep::Kind::local_gate, gate.label, qubits, -1, -1});
    }

    /// Loads the shared pair onto the two communication qubits (flux side first).
    void e2() {
        reg::replace_pair(rho_, n_, layout_.flux_comm, layout_.rydberg_comm, pair_);
        transcript_.push_back({ProtocolStep::Kind::e2, "E2", {layout_.flux_comm, layout_.rydberg_comm}, -1, -1});
    }

    /// Controlled-`u` from `control` to `target` on different devices, consuming one E2 pair.
    void nonlocal_controlled(int control, int target, const GateSpec& cu) {
        const Device da = layout_.device_of(control), db = layout_.device_of(target);
        if (da == db) throw InvalidArgument("nonlocal_controlled: control and target are on the same device");
        const int a = layout_.comm_of(da), b = layout_.comm_of(db);
        e2();
        local(gates::cnot(), {control, a});
        measure_and_correct(a, [&](int m) {
            local(gates::x(), {a});
            if (options_.correct_after_first) {
                local(gates::x(), {b});
                transcript_.push_back({ProtocolStep::Kind::classical_correction, "X", {b}, -1, m});
            }
        });
        local(cu, {b, target});
        local(gates::h(), {b});
        measure_and_correct(b, [&](int m) {
            local(gates::x(), {b});
            if (options_.correct_after_second) {
                local(gates::z(), {control});
                transcript_.push_back({ProtocolStep::Kind::classical_correction, "Z", {control}, -1, m});
            }
        });
    }

    /// Controlled gate that is local when possible and routed through E2 otherwise.
    void controlled(int control, int target, const GateSpec& cu) {
        if (layout_.device_of(control) == layout_.device_of(target)) {
            local(cu, {control, target});
        } else {
            nonlocal_controlled(control, target, cu);
        }
    }

private:
    /// Measures qubit q in the computational basis; `on_one` receives the transcript index of
    /// the measurement and runs the outcome-1 branch.
    void measure_and_correct(int q, const std::function<void(int)>& on_one) {
        const int step = static_cast<int>(transcript_.size());
        transcript_.push_back({ProtocolStep::Kind::measure_ebit, "M", {q}, -1, -1});
        if (options_.mode == MeasurementMode::deferred) {
            Matrix r0 = reg::project(rho_, n_, q, 0);
            rho_ = reg::project(rho_, n_, q, 1);
            on_one(step);
            rho_ += r0;
            return;
        }
        const double p1 = std::clamp(reg::probability_one(rho_, n_, q), 0.0, 1.0);
        int bit = 0;
        if (options_.mode == MeasurementMode::forced) {
            if (forced_next_ >= options_.forced_outcomes.size()) throw InvalidArgument("forced measurement outcomes exhausted");
            bit = options_.forced_outcomes[forced_next_++];
        } else {
            const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            bit = u < p1 ? 1 : 0;
        }
        const double p = bit ? p1 : 1.0 - p1;
        if (!(p > 1e-14)) throw NumericalError("measurement outcome " + std::to_string(bit) + " has zero probability");
        rho_ = reg::project(rho_, n_, q, bit) / p;
        transcript_[static_cast<std::size_t>(step)].outcome = bit;
        if (bit) on_one(step);
    }

    DeviceLayout layout_;
    GateProvider& gates_;
    Matrix pair_;
    ProtocolOptions options_;
    std::mt19937_64 rng_;
    int n_ = 0;
    Matrix rho_;
    std::vector<ProtocolStep> transcript_;
    std::size_t forced_next_ = 0;
};

/// (|00> + |11>)/sqrt(2).
inline Matrix bell_pair() {
    Vector v = Vector::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return v * v.adjoint();
}

/// Inverse QFT over `order` (most significant first): the rotation network on the reversed
/// wire order followed by a noiseless relabeling that undoes the reversal. Cross-device
/// rotations use the flux-side qubit as control.
inline void distributed_inverse_qft(DistributedRegister& r, const std::vector<int>& order) {
    const int n = static_cast<int>(order.size());
    std::vector<int> rev(order.rbegin(), order.rend());
    for (int j = n - 1; j >= 0; --j) {
        for (int m = n - 1; m > j; --m) {
            const double theta = -2.0 * pi / static_cast<double>(1L << (m - j + 1));
            int c = rev[static_cast<std::size_t>(m)], t = rev[static_cast<std::size_t>(j)];
            if (r.layout().device_of(c) != r.layout().device_of(t) && r.layout().device_of(t) == Device::flux) std::swap(c, t);
            r.controlled(c, t, gates::cphase(theta));
        }
        r.local(gates::h(), {rev[static_cast<std::size_t>(j)]});
    }
    std::vector<int> perm(static_cast<std::size_t>(r.n_qubits()));
    for (int q = 0; q < r.n_qubits(); ++q) perm[static_cast<std::size_t>(q)] = q;
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = order[static_cast<std::size_t>(n - 1 - i)];
    r.set_rho(reg::permute_qubits(r.rho(), r.n_qubits(), perm));
}

struct ShotRecord {
    std::vector<int> outcome;  // bits in counting order
    double phase_estimate = 0.0;
    bool correct = false;
};

struct QpeResult {
    std::vector<ShotRecord> shots;
    int correct = 0;
    double accuracy = 0.0;
    std::vector<double> mean_distribution;  // shot-averaged outcome probabilities
};

/// Best n-bit approximation of phi as an integer in [0, 2^n).
inline long expected_outcome(double phi, int n) {
    const long size = 1L << n;
    return static_cast<long>(std::llround(phi * static_cast<double>(size))) % size;
}

/// Per-shot seed; independent streams for each shot index.
inline std::uint64_t shot_seed(std::uint64_t seed, std::uint64_t shot) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (shot + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Runs the circuit once and returns the counting-register outcome distribution.
inline std::vector<double> qpe_distribution(double phi, const DeviceLayout& layout, GateProvider& gates,
                                            const Matrix& e2_pair, const ProtocolOptions& options, std::uint64_t seed) {
    if (!(phi >= 0.0 && phi < 1.0)) throw InvalidArgument("run_qpe: phi must lie in [0, 1)");
    DistributedRegister r(layout, gates, e2_pair, options, seed);
    Matrix rho = r.rho();
    const long one = reg::bit_of(layout.state, r.n_qubits());
    rho.setZero();
    rho(one, one) = 1.0;  // eigenstate |1> of diag(1, e^{2 pi i phi})
    r.set_rho(rho);

    const auto& order = layout.counting_order;
    const int n = static_cast<int>(order.size());
    for (int q : order) r.local(gates::h(), {q});
    for (int i = 0; i < n; ++i) {
        const int power = n - 1 - i;  // order[i] controls U^(2^power)
        const double theta = std::fmod(2.0 * pi * std::ldexp(phi, power), 2.0 * pi);
        r.controlled(order[static_cast<std::size_t>(i)], layout.state, gates::cphase(theta));
    }
    distributed_inverse_qft(r, order);
    return reg::marginal_distribution(r.rho(), r.n_qubits(), order);
}

inline QpeResult run_qpe(double phi, const DeviceLayout& layout, GateProvider& gates, const Matrix& e2_pair, int shots,
                         std::uint64_t seed, MeasurementMode mode = MeasurementMode::sampled) {
    if (shots < 1) throw InvalidArgument("run_qpe: shots must be >= 1");
    const int n = layout.n_counting();
    const long want = expected_outcome(phi, n);
    QpeResult res;
    res.mean_distribution.assign(static_cast<std::size_t>(1L << n), 0.0);
    for (int s = 0; s < shots; ++s) {
        ProtocolOptions opt;
        opt.mode = mode;
        std::mt19937_64 rng(shot_seed(seed, static_cast<std::uint64_t>(s)));
        const std::uint64_t circuit_seed = rng();
        const auto dist = qpe_distribution(phi, layout, gates, e2_pair, opt, circuit_seed);
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        long x = static_cast<long>(dist.size()) - 1;
        double total = 0.0;
        for (double p : dist) total += std::max(p, 0.0);
        u *= total;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            u -= std::max(dist[i], 0.0);
            if (u < 0.0) {
                x = static_cast<long>(i);
                break;
            }
        }
        for (std::size_t i = 0; i < dist.size(); ++i) res.mean_distribution[i] += dist[i] / shots;
        ShotRecord rec;
        for (int b = n - 1; b >= 0; --b) rec.outcome.push_back(static_cast<int>((x >> b) & 1));
        rec.phase_estimate = static_cast<double>(x) / static_cast<double>(1L << n);
        rec.correct = x == want;
        res.correct += rec.correct ? 1 : 0;
        res.shots.push_back(std::move(rec));
    }
    res.accuracy = static_cast<double>(res.correct) / static_cast<double>(shots);
    return res;
}

}  // namespace dqpe
