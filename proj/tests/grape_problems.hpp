#pragma once

// Seeded random GRAPE problems and a central-difference gradient.

#include <random>

#include "dqpe/grape.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace dqpe;

struct RandomGrape {
    GrapeProblem problem;
    ControlPulse pulse;
};

/// 1-2 qubits, M <= 3 controls, N <= 16 steps, dt = 0.01 / ||H||; alternates state and gate targets.
inline RandomGrape random_grape(std::uint64_t seed, GradientRule rule = GradientRule::trapezoid) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> nq(1, 2), nc(1, 3), ns(4, 16);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rate(0.0, 0.3);
    const int q = nq(rng);
    const int d = 1 << q;
    const HilbertSpace s = HilbertSpace::qubits(q);
    const Matrix h0 = oracle::random_hermitian(d, rng);
    std::vector<Operator> controls;
    for (int k = nc(rng); k > 0; --k) controls.emplace_back(s, oracle::random_hermitian(d, rng), true);
    const int n = ns(rng);
    RealMatrix amps(static_cast<long>(controls.size()), n);
    for (long i = 0; i < amps.rows(); ++i)
        for (long j = 0; j < amps.cols(); ++j) amps(i, j) = u(rng);

    double hnorm = 0.0;
    for (long l = 0; l < n; ++l) {
        Matrix h = h0;
        for (std::size_t k = 0; k < controls.size(); ++k) h += amps(static_cast<long>(k), l) * controls[k].matrix();
        hnorm = std::max(hnorm, Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff());
    }
    const double dt = 0.01 / hnorm;

    std::vector<CollapseChannel> ch;
    ch.emplace_back(Operator(s, oracle::random_hermitian(d, rng)), rate(rng));
    const Liouvillian drift = build_liouvillian(Operator(s, h0, true), ch);

    GrapeProblem p{.drift = drift, .controls = controls, .target = Operator::identity(s)};
    if (seed % 2 == 0) {
        p.target = Operator(s, oracle::random_density(d, rng));
        p.initial = DensityOperator(s, oracle::random_density(d, rng));
    } else {
        p.target = SuperOperator::unitary_conjugation(Operator(s, oracle::random_unitary(d, rng)));
    }
    p.n_steps = n;
    p.total_time = dt * n;
    p.rule = rule;
    p.u_max = 10.0;
    return {std::move(p), ControlPulse(amps, dt * n)};
}

inline RealMatrix finite_difference_gradient(const GrapeProblem& p, const ControlPulse& pulse, double h = 1e-5) {
    RealMatrix g(pulse.n_controls(), pulse.n_steps());
    for (int k = 0; k < pulse.n_controls(); ++k) {
        for (int l = 0; l < pulse.n_steps(); ++l) {
            ControlPulse up = pulse, dn = pulse;
            up.amplitudes(k, l) += h;
            dn.amplitudes(k, l) -= h;
            g(k, l) = (performance_index(p, up) - performance_index(p, dn)) / (2.0 * h);
        }
    }
    return g;
}

/// ||analytic - fd|| / ||fd||.
inline double gradient_relative_error(const RandomGrape& r) {
    const RealMatrix a = gradient(r.problem, r.pulse);
    const RealMatrix f = finite_difference_gradient(r.problem, r.pulse);
    return (a - f).norm() / f.norm();
}

}  // namespace fixtures
