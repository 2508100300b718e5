#include <gtest/gtest.h>

#include "dqpe/ghz.hpp"
#include "dqpe/models.hpp"
#include "oracles.hpp"

using namespace dqpe;

TEST(Rydberg, InteractionShiftIsC6OverR6) {
    RydbergParams p;
    const double r6 = 3.5 * 3.5 * 3.5 * 3.5 * 3.5 * 3.5;
    EXPECT_NEAR(p.interaction_shift(), 2.0 * 3.141592653589793 * 801.98 / r6, 1e-12);
    EXPECT_NEAR(p.interaction_shift() / (2.0 * pi), 0.4363, 1e-4);
}

TEST(Rydberg, TwoAtomHamiltonianStructure) {
    RydbergParams p;
    p.n_atoms = 2;
    p.omega = 1.3;
    p.detuning = 0.4;
    const Matrix h = rydberg_hamiltonian(p).matrix();
    const Matrix sx = ops::sigma_x(), ee = ops::projector(2, 1), id = ops::identity(2);
    const Matrix want = 0.65 * (oracle::kron(sx, id) + oracle::kron(id, sx)) - 0.4 * (oracle::kron(ee, id) + oracle::kron(id, ee)) +
                        p.interaction_shift() * oracle::kron(ee, ee);
    EXPECT_LT(max_abs(h - want), 1e-12);
}

TEST(Rydberg, ChannelsAndValidation) {
    RydbergParams p;
    p.n_atoms = 3;
    p.gamma_dephase = 0.01;
    EXPECT_EQ(rydberg_channels(p).size(), 6u);
    p.spacing = 0.0;
    EXPECT_THROW(rydberg_hamiltonian(p), InvalidArgument);
}

TEST(Flux, HamiltonianMatchesExplicitConstruction) {
    FluxParams p;
    p.epsilon = 0.3;
    p.delta = 0.7;
    p.omega_r = 2.0;
    p.g = 0.05;
    p.fock_dim = 4;
    const Matrix a = ops::annihilation(4), n = ops::number(4), id4 = ops::identity(4);
    const Matrix want = oracle::kron(0.5 * (0.3 * ops::sigma_z() + 0.7 * ops::sigma_x()), id4) +
                        oracle::kron(ops::identity(2), 2.0 * (n + 0.5 * id4)) + 0.05 * oracle::kron(ops::sigma_y(), a + a.adjoint());
    EXPECT_LT(max_abs(flux_hamiltonian(p).matrix() - want), 1e-14);
}

TEST(Flux, ChargeNoiseScalesWithShunt) {
    FluxParams p;
    p.zeta = 10.0;
    const double r10 = p.charge_noise_rate();
    p.zeta = 1000.0;
    EXPECT_NEAR(p.charge_noise_rate() / r10, std::pow(100.0, -0.75), 1e-14);
    p.zeta = 0.5;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Flux, NoiseChannelsDropZeroRates) {
    FluxParams p;
    p.purcell_rate = 0.0;
    p.im_phi0_df = 0.0;
    // epsilon = delta = 0 -> no dephasing either
    EXPECT_EQ(flux_qubit_noise(p).size(), 1u);
    EXPECT_EQ(flux_channels(p).size(), 1u);
}

TEST(Flux, PotentialSymmetries) {
    for (double x : {-2.5, -1.0, 0.3, 1.7}) {
        EXPECT_NEAR(flux_potential_cut(x, 0.8, 0.5), flux_potential_cut(-x, 0.8, 0.5), 1e-14);
        EXPECT_NEAR(flux_potential_cut(x, 0.8, 0.53), flux_potential_cut(-x, 0.8, 0.47), 1e-14);
    }
    EXPECT_NEAR(flux_potential(0.0, 0.0, 0.8, 0.0), 0.0, 1e-15);
}

TEST(Hybrid, HamiltonianIsHermitianWithExpectedLayout) {
    HybridParams p;
    const Operator h = hybrid_hamiltonian(p);
    EXPECT_EQ(h.space(), HilbertSpace({2, 3, 3}));
    EXPECT_LT(hermiticity_defect(h.matrix()), 1e-12);
    EXPECT_NEAR(p.kappa(), ghz(20.0) / 1e5, 1e-15);
    EXPECT_EQ(hybrid_channels(p).size(), 5u);
    p.q_factor = std::numeric_limits<double>::infinity();
    EXPECT_EQ(p.kappa(), 0.0);
}

TEST(Ghz, CalibratedPeak) {
    const auto run = run_ghz(HybridParams{}, 30.0, 0.1);
    EXPECT_NEAR(run.peak.fidelity, 0.93, 0.05);
    EXPECT_NEAR(run.peak.time, 17.0, 5.0);
    EXPECT_NEAR(run.peak.fidelity, 0.927767, 1e-3);
}

TEST(Ghz, RatesOffChangesPeakByLessThanOnePermille) {
    HybridParams quiet;
    quiet.gamma_relax = quiet.gamma_phi = quiet.gamma_e_hybrid = 0.0;
    const double noisy = run_ghz(HybridParams{}, 30.0, 0.1).peak.fidelity;
    const double clean = run_ghz(quiet, 30.0, 0.1).peak.fidelity;
    EXPECT_LT(std::abs(noisy - clean), 1e-3);
    EXPECT_GE(clean, noisy);
}

TEST(Ghz, NoCouplingKeepsInitialOverlap) {
    HybridParams p;
    p.g_a = p.g_a_prime = p.g_f = 0.0;
    p.gamma_relax = p.gamma_phi = p.gamma_e_hybrid = 0.0;
    const auto run = run_ghz(p, 10.0, 0.5);
    for (const auto& s : run.samples) EXPECT_NEAR(s.fidelity, run.samples.front().fidelity, 1e-10);
}

TEST(Ghz, CommunicationPairAtPeakIsCloseToBell) {
    const auto run = run_ghz(HybridParams{}, 30.0, 0.1, true);
    std::size_t k = 0;
    while (run.samples[k].time != run.peak.time) ++k;
    const Matrix pair = ghz_communication_pair(run.states[k], HybridParams{});
    Vector bell = Vector::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(pair.trace().real(), 1.0, 1e-12);
    EXPECT_LT(hermiticity_defect(pair), 1e-12);
    EXPECT_GT((bell.adjoint() * pair * bell)(0, 0).real(), 0.85);
}

TEST(Ghz, RejectsBadSampling) {
    EXPECT_THROW(run_ghz(HybridParams{}, 0.0, 0.1), InvalidArgument);
}
