#pragma once

// Bell-pair generation on the hybrid coupler. The atom starts in |e>, the flux
// qubit in its ground state and the LC mode in vacuum; with the atomic e-g
// transition and the flux splitting both resonant with the LC mode, the
// excitation is shared between atom and flux qubit through the resonator.

#include <cmath>
#include <set>
#include <vector>

#include "dqpe/core.hpp"
#include "dqpe/lindblad.hpp"
#include "dqpe/models.hpp"

namespace dqpe {

struct GhzSample {
    double time = 0.0;
    double fidelity = 0.0;
};

struct GhzRun {
    std::vector<GhzSample> samples;
    GhzSample peak;
    std::vector<DensityOperator> states;  // aligned with samples
};

/// Eigenbasis of the free flux-qubit term, ground state first.
inline Matrix hybrid_flux_eigenbasis(const HybridParams& p) {
    const Matrix hf = -0.5 * p.eps_f * hybrid::sigma_fz() - 0.5 * p.delta_f * ops::sigma_x();
    Eigen::SelfAdjointEigenSolver<Matrix> es(hf);
    Matrix v = es.eigenvectors();
    // Fix the arbitrary eigenvector phases so the largest component of each column is real positive.
    for (int c = 0; c < 2; ++c) {
        Eigen::Index r = 0;
        v.col(c).cwiseAbs().maxCoeff(&r);
        v.col(c) *= std::conj(v(r, c)) / std::abs(v(r, c));
    }
    return v;
}

inline DensityOperator ghz_initial_state(const HybridParams& p) {
    const Matrix f = hybrid_flux_eigenbasis(p);
    Vector flux = f.col(0);
    Vector res = Vector::Zero(p.fock_dim);
    res(0) = 1.0;
    Vector atom = Vector::Zero(3);
    atom(hybrid::level_e) = 1.0;
    Vector psi = kron(kron(flux, res), atom);
    return DensityOperator::pure(StateVector(p.space(), psi));
}

/// Flux (x) atom state in qubit labels: flux ground -> 0, excited -> 1; atom g -> 0, e -> 1.
/// The resonator is traced out and the atom is restricted to {e, g}.
inline Matrix hybrid_pair_state(const DensityOperator& rho, const HybridParams& p) {
    const Matrix red = partial_trace(rho.matrix(), rho.space(), std::set<int>{hybrid::flux_site, hybrid::atom_site});
    const Matrix f = hybrid_flux_eigenbasis(p);
    Matrix a = Matrix::Zero(3, 2);  // columns: qubit 0 = g, qubit 1 = e
    a(hybrid::level_g, 0) = 1.0;
    a(hybrid::level_e, 1) = 1.0;
    const Matrix map = kron(f, a);  // 6 x 4 isometry from qubit labels into flux (x) atom
    return map.adjoint() * red * map;
}

/// Overlap with (|0 1> + e^{i theta} |1 0>)/sqrt(2), maximized over the local phase theta.
inline double pair_bell_fidelity(const Matrix& pair) {
    return 0.5 * (pair(1, 1).real() + pair(2, 2).real()) + std::abs(pair(1, 2));
}

inline double ghz_fidelity(const DensityOperator& rho, const HybridParams& p) {
    return pair_bell_fidelity(hybrid_pair_state(rho, p));
}

/// Evolves the always-on coupler and samples the Bell fidelity every `dt` ns up to `t_max`.
inline GhzRun run_ghz(const HybridParams& p, double t_max, double dt, bool keep_states = false) {
    if (!(t_max > 0.0) || !(dt > 0.0)) throw InvalidArgument("run_ghz: t_max and dt must be > 0");
    const auto n = static_cast<long>(std::floor(t_max / dt + 1e-9));
    std::vector<double> times;
    for (long i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * dt);
    const auto traj = evolve(ghz_initial_state(p), {Segment{hybrid_hamiltonian(p), times.back() > 0 ? times.back() : dt}},
                             hybrid_channels(p), times);
    GhzRun run;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        GhzSample s{times[i], ghz_fidelity(traj[i], p)};
        if (run.samples.empty() || s.fidelity > run.peak.fidelity) run.peak = s;
        run.samples.push_back(s);
    }
    if (keep_states) run.states = traj;
    return run;
}

/// The entangled pair handed to the distributed protocol: qubit order (flux, atom), with a
/// local X on the flux side and the relative phase removed so the ideal output is (|00> + |11>)/sqrt(2).
inline Matrix ghz_communication_pair(const DensityOperator& rho, const HybridParams& p) {
    Matrix pair = hybrid_pair_state(rho, p);
    const cplx c = pair(1, 2);
    const cplx phase = std::abs(c) > 0.0 ? c / std::abs(c) : cplx(1.0);
    Matrix z = Matrix::Identity(2, 2);
    z(1, 1) = std::conj(phase);
    const Matrix u = kron(ops::sigma_x(), z);
    pair = u * pair * u.adjoint();
    const double tr = pair.trace().real();
    if (!(tr > 0.0)) throw NumericalError("ghz_communication_pair: no population left in the qubit subspace");
    pair /= tr;
    return 0.5 * (pair + pair.adjoint());
}

}  // namespace dqpe
