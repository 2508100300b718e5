#include <gtest/gtest.h>

#include "dqpe/lindblad.hpp"
#include "evolution_fixture.hpp"
#include "oracles.hpp"

using namespace dqpe;

TEST(Expm, AgreesWithTaylorSeries) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 7;
        std::normal_distribution<double> n(0.0, 1.0 + trial);
        Matrix a(d, d);
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j) a(i, j) = cplx(n(rng), n(rng));
        const Matrix e = expm(a), t = oracle::taylor_expm(a);
        EXPECT_LT(max_abs(e - t) / std::max(1.0, max_abs(t)), 1e-10) << "trial " << trial;
    }
}

TEST(Expm, SemigroupProperty) {
    std::mt19937_64 rng(11);
    const Matrix h = oracle::random_hermitian(5, rng);
    const Matrix a = -I_unit * h;
    EXPECT_LT(max_abs(expm(a * 0.3) * expm(a * 0.7) - expm(a)), 1e-12);
}

TEST(Expm, RejectsNonFinite) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = std::nan("");
    EXPECT_THROW(expm(a), NumericalError);
}

TEST(Liouvillian, RejectsNonHermitianHamiltonian) {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 1) = 1.0;
    EXPECT_THROW(build_liouvillian(Operator(HilbertSpace::qubits(1), h), {}), InvalidArgument);
}

TEST(CollapseChannel, RejectsNegativeRate) {
    EXPECT_THROW(CollapseChannel(Operator::local(ops::sigma_z()), -0.1), InvalidArgument);
}

TEST(Evolve, RandomEvolutionsPreserveStateInvariants) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ev = fixtures::random_evolution(rng, true);
        const auto d = fixtures::invariant_defects(evolve(ev.rho0, ev.segments, ev.channels, ev.times));
        EXPECT_LT(d.trace, 1e-8) << "trial " << trial;
        EXPECT_LT(d.hermiticity, 1e-9) << "trial " << trial;
        EXPECT_GT(d.min_eigenvalue, -1e-7) << "trial " << trial;
    }
}

TEST(Evolve, WithoutDissipatorMatchesSchrodinger) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) EXPECT_LT(fixtures::schrodinger_deviation(fixtures::random_evolution(rng, false)), 1e-9) << trial;
}

TEST(Evolve, AmplitudeDampingClosedForm) {
    const double gamma = 0.37;
    const HilbertSpace s = HilbertSpace::qubits(1);
    Vector plus = Vector::Ones(2) / std::sqrt(2.0);
    const DensityOperator rho0(s, plus * plus.adjoint());
    // basis |0> = ground, |1> = excited; lowering operator |0><1|
    const std::vector<CollapseChannel> ch{CollapseChannel(Operator(s, ops::ket_bra(2, 0, 1)), gamma)};
    const std::vector<Segment> seg{{Operator::zero(s), 3.0}};
    const auto out = evolve(rho0, seg, ch, {0.5, 1.5, 3.0});
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = std::vector<double>{0.5, 1.5, 3.0}[i];
        EXPECT_NEAR(out[i].population(1), 0.5 * std::exp(-gamma * t), 1e-12);
        EXPECT_NEAR(std::abs(out[i].matrix()(0, 1)), 0.5 * std::exp(-0.5 * gamma * t), 1e-12);
    }
}

TEST(Evolve, PureDephasingClosedForm) {
    const double gamma = 0.2;
    const HilbertSpace s = HilbertSpace::qubits(1);
    Vector plus = Vector::Ones(2) / std::sqrt(2.0);
    const std::vector<CollapseChannel> ch{CollapseChannel(Operator(s, ops::sigma_z()), gamma)};
    const auto out = evolve(DensityOperator(s, plus * plus.adjoint()), {{Operator::zero(s), 2.0}}, ch, {2.0});
    EXPECT_NEAR(out[0].matrix()(0, 1).real(), 0.5 * std::exp(-2.0 * gamma * 2.0), 1e-12);
    EXPECT_NEAR(out[0].population(0), 0.5, 1e-12);
}

TEST(Evolve, JaynesCummingsVacuumRabi) {
    const int nf = 4;
    const double g = 0.8;
    const HilbertSpace s({2, nf});  // atom (0 = g, 1 = e) (x) field
    const Matrix sp = ops::ket_bra(2, 1, 0);
    const Matrix a = ops::annihilation(nf);
    const Matrix h = g * (oracle::kron(sp, a) + oracle::kron(sp.adjoint(), a.adjoint()));
    // |e, n=1> -> amplitude cos(g sqrt(2) t)
    const long start = 1 * nf + 1;
    Vector v = Vector::Zero(2 * nf);
    v(start) = 1.0;
    const DensityOperator rho0(s, v * v.adjoint());
    std::vector<double> times{0.3, 1.1, 2.0};
    const auto out = evolve(rho0, {{Operator(s, h, true), 2.0}}, {}, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double c = std::cos(g * std::sqrt(2.0) * times[i]);
        EXPECT_NEAR(out[i].population(start), c * c, 1e-10);
        EXPECT_NEAR(out[i].population(0 * nf + 2), 1.0 - c * c, 1e-10);
    }
}

TEST(Evolve, SampleTimesAreValidated) {
    const HilbertSpace s = HilbertSpace::qubits(1);
    const DensityOperator rho = DensityOperator::maximally_mixed(s);
    const std::vector<Segment> seg{{Operator::zero(s), 1.0}};
    EXPECT_THROW(evolve(rho, seg, {}, {2.0}), InvalidArgument);
    EXPECT_THROW(evolve(rho, seg, {}, {0.5, 0.2}), InvalidArgument);
    EXPECT_THROW(evolve(rho, {{Operator::zero(s), 0.0}}, {}, {0.0}), InvalidArgument);
}

TEST(Evolve, InstabilityIsReported) {
    // Non-Hermitian "Hamiltonian" admitted by a loosened tolerance; evolve() must catch the damage.
    const HilbertSpace s = HilbertSpace::qubits(1);
    Tolerances t;
    t.hermitian = 10.0;
    ScopedTolerances guard(t);
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = cplx(0.0, 1.0);
    const Vector plus = Vector::Ones(2) / std::sqrt(2.0);
    const DensityOperator rho(s, plus * plus.adjoint());
    EXPECT_THROW(evolve(rho, {{Operator(s, h), 1.0}}, {}, {1.0}), NumericalError);
}

TEST(Choi, IdentityIsMaximallyEntangled) {
    const HilbertSpace s = HilbertSpace::qubits(1);
    const Matrix choi = choi_matrix(SuperOperator::identity(s));
    Vector omega = Vector::Zero(4);
    omega(0) = omega(3) = 1.0;
    EXPECT_LT(max_abs(choi - omega * omega.adjoint()), 1e-15);
}

TEST(StepPropagator, ComposesToLongerStep) {
    std::mt19937_64 rng(14);
    const HilbertSpace s({3});
    const Operator h(s, oracle::random_hermitian(3, rng), true);
    const auto l = build_liouvillian(h, {CollapseChannel(Operator(s, oracle::random_hermitian(3, rng)), 0.3)});
    const auto p1 = step_propagator(l, 0.1), p2 = step_propagator(l, 0.2);
    EXPECT_LT(max_abs(p1.map.matrix() * p1.map.matrix() - p2.map.matrix()), 1e-12);
    EXPECT_THROW(step_propagator(l, 0.0), InvalidArgument);
}
