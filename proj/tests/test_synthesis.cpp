#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "dqpe/synthesis.hpp"
#include "oracles.hpp"

using namespace dqpe;

namespace {

double channel_fidelity(const Matrix& s, const Matrix& u) {
    const Matrix target = reg::unitary_superop(u);
    return (target.adjoint() * s).trace().real() / static_cast<double>(s.rows());
}

bool trace_preserving(const Matrix& s, double tol) {
    const long d = std::llround(std::sqrt(static_cast<double>(s.rows())));
    const Vector vid = vectorize(Matrix(Matrix::Identity(d, d)));
    return max_abs(Matrix(vid.transpose() * s) - Matrix(vid.transpose())) < tol;
}

}  // namespace

TEST(DeviceModel, FluxDriftAndChannels) {
    FluxRegisterModel m;
    const auto d = flux_device_model(m, 2, true);
    const Matrix hq = flux_qubit_matrix(m.params.epsilon, m.params.delta);
    const Matrix id = ops::identity(2);
    const Matrix want = oracle::kron(hq, id) + oracle::kron(id, hq) + m.coupling * oracle::kron(ops::sigma_z(), ops::sigma_z());
    EXPECT_LT(max_abs(d.drift.matrix() - want), 1e-14);
    EXPECT_EQ(d.channels.size(), 2 * flux_qubit_noise(m.params).size());
    EXPECT_EQ(d.controls.size(), 6u);
    EXPECT_LT(max_abs(d.controls[4].matrix() - oracle::kron(id, ops::sigma_y())), 1e-15);
    EXPECT_TRUE(flux_device_model(m, 1, false).channels.empty());
}

TEST(DeviceModel, FingerprintTracksParameters) {
    FluxRegisterModel a, b;
    b.params.zeta = 1000.0;
    EXPECT_NE(flux_device_model(a, 1, true).fingerprint, flux_device_model(b, 1, true).fingerprint);
    EXPECT_EQ(flux_device_model(a, 1, true).fingerprint, flux_device_model(a, 1, true).fingerprint);
    EXPECT_NE(flux_device_model(a, 1, true).fingerprint, flux_device_model(a, 1, false).fingerprint);
}

TEST(Synthesis, NoiselessHadamardIsReachable) {
    SynthesisSettings s;
    s.time_steps = 190;
    s.noise = false;
    const auto snaps = synthesize_gate(flux_device_model(FluxRegisterModel{}, 1, false), ops::hadamard(), s, {700});
    EXPECT_GE(channel_fidelity(snaps.at(700), ops::hadamard()), 0.999);
    const auto ry = synthesize_gate(rydberg_device_model(RydbergRegisterModel{}, 1, false), ops::hadamard(), s, {700});
    EXPECT_GE(channel_fidelity(ry.at(700), ops::hadamard()), 0.999);
}

TEST(Synthesis, NoisyChannelIsTracePreserving) {
    SynthesisSettings s;
    s.time_steps = 40;
    const auto snaps = synthesize_gate(flux_device_model(FluxRegisterModel{}, 1, true), ops::sigma_x(), s, {5, 20});
    ASSERT_EQ(snaps.size(), 2u);
    for (const auto& [it, m] : snaps) EXPECT_TRUE(trace_preserving(m, 1e-10)) << it;
}

TEST(Synthesis, CheckpointsPastConvergenceHoldTheFinalChannel) {
    SynthesisSettings s;
    s.time_steps = 190;
    s.noise = false;
    s.min_error = 1e-2;  // converges early
    const auto snaps = synthesize_gate(flux_device_model(FluxRegisterModel{}, 1, false), ops::hadamard(), s, {5000, 6000});
    EXPECT_EQ(snaps.at(5000), snaps.at(6000));
    EXPECT_THROW(synthesize_gate(flux_device_model(FluxRegisterModel{}, 1, false), ops::hadamard(), s, {}), InvalidArgument);
}

TEST(SynthesisCache, ComputesEachKeyOnceAcrossThreads) {
    SynthesisCache cache;
    std::atomic<int> calls{0};
    std::vector<std::jthread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            cache.get("k", [&] {
                ++calls;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
                return GateSnapshots{{1, Matrix::Identity(1, 1)}};
            });
        });
    }
    threads.clear();
    EXPECT_EQ(calls.load(), 1);
    EXPECT_EQ(cache.size(), 1u);
}

TEST(SynthesisCache, PropagatesFailures) {
    SynthesisCache cache;
    EXPECT_THROW(cache.get("bad", []() -> GateSnapshots { throw NumericalError("boom"); }), NumericalError);
    EXPECT_THROW(cache.get("bad", [] { return GateSnapshots{}; }), NumericalError);
}

TEST(GrapeGateProvider, ServesCachedChannelsPerBudget) {
    SynthesisSettings s;
    s.time_steps = 190;
    auto cache = std::make_shared<SynthesisCache>();
    GrapeGateProvider p(FluxRegisterModel{}, RydbergRegisterModel{}, s, {3, 10}, cache);
    const GateSpec h = gates::h();
    p.set_iterations(3);
    const Matrix a = p.channel(Device::flux, h);
    p.set_iterations(10);
    const Matrix b = p.channel(Device::flux, h);
    EXPECT_EQ(cache->size(), 1u);
    EXPECT_GT(channel_fidelity(b, ops::hadamard()), channel_fidelity(a, ops::hadamard()));
    p.channel(Device::rydberg, h);
    EXPECT_EQ(cache->size(), 2u);
    EXPECT_THROW(p.set_iterations(7), InvalidArgument);
    EXPECT_THROW(p.channel(Device::flux, GateSpec{"CCX", Matrix::Identity(8, 8)}), InvalidArgument);
}
