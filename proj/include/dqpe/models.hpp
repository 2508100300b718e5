#pragma once

// Hamiltonians and collapse channels of the three hardware models:
// a Rydberg atom array, a C-shunted flux qubit with its CPW resonator, and
// the flux / LC-resonator / atom hybrid coupler.

#include <cmath>
#include <string>
#include <vector>

#include "dqpe/core.hpp"
#include "dqpe/lindblad.hpp"

namespace dqpe {

/// f[GHz] -> omega[rad/ns].
inline constexpr double ghz(double f) { return 2.0 * pi * f; }

// ---------------------------------------------------------------------------
// Rydberg array. Per site: g -> |0>, e -> |1>.
// ---------------------------------------------------------------------------

struct RydbergParams {
    double omega = 0.0;               // Rabi amplitude
    double v0 = ghz(801.98);          // C6, rad/ns um^6
    double spacing = 3.5;             // um
    double gamma_dephase = 0.0;
    double gamma_decay = 1.0 / 375000.0;
    double detuning = 0.0;
    int n_atoms = 1;

    void validate() const {
        if (gamma_dephase < 0.0 || gamma_decay < 0.0) throw InvalidArgument("RydbergParams: rates must be >= 0");
        if (!(spacing > 0.0)) throw InvalidArgument("RydbergParams: spacing must be > 0");
        if (n_atoms < 1) throw InvalidArgument("RydbergParams: n_atoms must be >= 1");
    }

    /// Nearest-neighbour van der Waals shift V0 / R^6.
    double interaction_shift() const { return v0 / std::pow(spacing, 6); }
};

namespace rydberg {
inline Matrix sigma_eg() { return ops::ket_bra(2, 1, 0); }
inline Matrix sigma_ge() { return ops::ket_bra(2, 0, 1); }
inline Matrix sigma_ee() { return ops::projector(2, 1); }
}  // namespace rydberg

inline Operator rydberg_hamiltonian(const RydbergParams& p) {
    p.validate();
    const HilbertSpace space = HilbertSpace::qubits(p.n_atoms);
    const long d = space.total_dim();
    Matrix h = Matrix::Zero(d, d);
    std::vector<Matrix> ee;
    for (int i = 0; i < p.n_atoms; ++i) {
        ee.push_back(embed(rydberg::sigma_ee(), i, space).matrix());
        h += 0.5 * p.omega * embed(rydberg::sigma_eg() + rydberg::sigma_ge(), i, space).matrix();
        h -= p.detuning * ee.back();
    }
    for (int i = 0; i < p.n_atoms; ++i) {
        for (int j = i + 1; j < p.n_atoms; ++j) {
            const double r = p.spacing * (j - i);
            h += p.v0 / std::pow(r, 6) * ee[static_cast<std::size_t>(i)] * ee[static_cast<std::size_t>(j)];
        }
    }
    return Operator(space, std::move(h), true);
}

inline std::vector<CollapseChannel> rydberg_channels(const RydbergParams& p) {
    p.validate();
    const HilbertSpace space = HilbertSpace::qubits(p.n_atoms);
    std::vector<CollapseChannel> out;
    for (int i = 0; i < p.n_atoms; ++i) {
        if (p.gamma_dephase > 0.0) out.emplace_back(embed(rydberg::sigma_ee(), i, space), p.gamma_dephase);
        if (p.gamma_decay > 0.0) out.emplace_back(embed(rydberg::sigma_ge(), i, space), p.gamma_decay);
    }
    return out;
}

// ---------------------------------------------------------------------------
// C-shunted flux qubit (x) CPW resonator.
// ---------------------------------------------------------------------------

struct FluxParams {
    double epsilon = 0.0;
    double delta = 0.0;
    double omega_r = 0.0;
    double g = 0.0;
    double alpha = 0.8;
    double f_eps = 0.53;
    double zeta = 10.0;
    double zeta_ref = 10.0;   // charge-noise magnitude below is quoted at this shunt factor
    double im_phi0_df = 0.01;   // flux-noise rate scale, rad/ns
    double nz_ec_dn = 3.0;      // charge-noise rate scale at zeta_ref, rad/ns
    double purcell_rate = ghz(9.19e-3);
    int fock_dim = 3;

    void validate() const {
        if (!(zeta >= 1.0) || !(zeta_ref >= 1.0)) throw InvalidArgument("FluxParams: zeta must be >= 1");
        if (fock_dim < 2) throw InvalidArgument("FluxParams: fock_dim must be >= 2");
        if (im_phi0_df < 0.0 || nz_ec_dn < 0.0 || purcell_rate < 0.0) throw InvalidArgument("FluxParams: rates must be >= 0");
        if (!(f_eps > 0.0 && f_eps < 1.0)) throw InvalidArgument("FluxParams: f_eps must lie in (0, 1)");
    }

    double qubit_frequency() const { return std::hypot(epsilon, delta); }

    double charge_noise_rate() const { return 0.5 * nz_ec_dn * std::pow(zeta / zeta_ref, -0.75); }

    HilbertSpace space() const { return HilbertSpace({2, fock_dim}); }
};

/// Two-level persistent-current-basis Hamiltonian 1/2 (eps sz + Delta sx).
inline Matrix flux_qubit_matrix(double epsilon, double delta) {
    return 0.5 * (epsilon * ops::sigma_z() + delta * ops::sigma_x());
}

inline Operator flux_hamiltonian(const FluxParams& p) {
    p.validate();
    const HilbertSpace space = p.space();
    const Matrix a = ops::annihilation(p.fock_dim);
    const Matrix id_r = ops::identity(p.fock_dim);
    Matrix h = kron(flux_qubit_matrix(p.epsilon, p.delta), id_r);
    h += kron(ops::identity(2), p.omega_r * (ops::number(p.fock_dim) + 0.5 * id_r));
    h += p.g * kron(ops::sigma_y(), a + a.adjoint());
    return Operator(space, std::move(h), true);
}

/// Qubit-local channels: sz dephasing at omega_q/2, flux noise on sx, charge noise on sy
/// (scaled by (zeta/zeta_ref)^-3/4) and Purcell emission on sy. Zero rates are dropped.
inline std::vector<std::pair<Matrix, double>> flux_qubit_noise(const FluxParams& p) {
    std::vector<std::pair<Matrix, double>> out;
    const double rates[4] = {0.5 * p.qubit_frequency(), 0.5 * p.im_phi0_df, p.charge_noise_rate(), p.purcell_rate};
    const Matrix opsv[4] = {ops::sigma_z(), ops::sigma_x(), ops::sigma_y(), ops::sigma_y()};
    for (int k = 0; k < 4; ++k) {
        if (rates[k] > 0.0) out.emplace_back(opsv[k], rates[k]);
    }
    return out;
}

inline std::vector<CollapseChannel> flux_channels(const FluxParams& p) {
    p.validate();
    const HilbertSpace space = p.space();
    std::vector<CollapseChannel> out;
    for (const auto& [op, rate] : flux_qubit_noise(p)) out.emplace_back(embed(op, 0, space), rate);
    return out;
}

/// U / E_J of the three-junction loop.
inline double flux_potential(double phi1, double phi2, double alpha, double f_eps) {
    return 2.0 + alpha - std::cos(phi1) - std::cos(phi2) - alpha * std::cos(2.0 * pi * f_eps + phi1 - phi2);
}

/// The potential along phi1 = -phi2 = phi_star.
inline double flux_potential_cut(double phi_star, double alpha, double f_eps) {
    return flux_potential(phi_star, -phi_star, alpha, f_eps);
}

// ---------------------------------------------------------------------------
// Hybrid coupler: flux qubit (L = 0, R = 1) (x) LC resonator (x) atom (e = 0, g = 1, u = 2).
// ---------------------------------------------------------------------------

struct HybridParams {
    double omega0 = ghz(20.0);
    double omega_e = ghz(20.0);
    double omega_g = 0.0;
    double omega_u = ghz(25.0);
    double rabi = 0.0;
    double rabi_prime = 0.0;
    double g_a = 0.1858;            // calibrated: Bell peak 0.928 at 17 ns
    double g_a_prime = 0.05;
    double g_f = 0.1598;
    double eps_f = 0.0;
    double delta_f = ghz(20.0);
    double q_factor = 1e5;
    double gamma_relax = 4e-5;
    double gamma_phi = 4e-5;
    double gamma_e_hybrid = 4e-5;
    int fock_dim = 3;

    void validate() const {
        if (!(q_factor > 0.0)) throw InvalidArgument("HybridParams: q_factor must be > 0");
        if (fock_dim < 2) throw InvalidArgument("HybridParams: fock_dim must be >= 2");
        if (gamma_relax < 0.0 || gamma_phi < 0.0 || gamma_e_hybrid < 0.0) throw InvalidArgument("HybridParams: rates must be >= 0");
    }

    double kappa() const { return std::isinf(q_factor) ? 0.0 : omega0 / q_factor; }

    HilbertSpace space() const { return HilbertSpace({2, fock_dim, 3}); }
};

namespace hybrid {

inline constexpr int flux_site = 0;
inline constexpr int resonator_site = 1;
inline constexpr int atom_site = 2;
inline constexpr int level_e = 0;
inline constexpr int level_g = 1;
inline constexpr int level_u = 2;

/// |L><L| - |R><R|.
inline Matrix sigma_fz() { return ops::sigma_z(); }
/// |R><L|.
inline Matrix sigma_fminus() { return ops::ket_bra(2, 1, 0); }
/// |a><b| on the atom.
inline Matrix atom(int a, int b) { return ops::ket_bra(3, a, b); }

inline Operator lc_term(const HybridParams& p) {
    const int n = p.fock_dim;
    return embed(p.omega0 * (ops::number(n) + 0.5 * ops::identity(n)), resonator_site, p.space());
}

inline Operator atom_term(const HybridParams& p) {
    Matrix h = p.omega_e * atom(level_e, level_e) + p.omega_g * atom(level_g, level_g) + p.omega_u * atom(level_u, level_u);
    h += 0.5 * p.rabi * (atom(level_e, level_g) + atom(level_g, level_e));
    h += 0.5 * p.rabi_prime * (atom(level_e, level_u) + atom(level_u, level_e));
    return embed(h, atom_site, p.space());
}

inline Operator flux_term(const HybridParams& p) {
    return embed(-0.5 * p.eps_f * sigma_fz() - 0.5 * p.delta_f * ops::sigma_x(), flux_site, p.space());
}

inline Operator atom_coupling_term(const HybridParams& p) {
    const Matrix b = ops::annihilation(p.fock_dim);
    const Matrix id_f = ops::identity(2);
    Matrix v = 0.5 * p.g_a * kron(id_f, kron(b.adjoint(), atom(level_g, level_e)));
    v += 0.5 * p.g_a_prime * kron(id_f, kron(b.adjoint(), atom(level_u, level_e)));
    v += v.adjoint().eval();
    return Operator(p.space(), std::move(v), true);
}

inline Operator flux_coupling_term(const HybridParams& p) {
    const Matrix b = ops::annihilation(p.fock_dim);
    Matrix v = -p.g_f * kron(sigma_fz(), kron(b + b.adjoint(), ops::identity(3)));
    return Operator(p.space(), std::move(v), true);
}

}  // namespace hybrid

inline Operator hybrid_hamiltonian(const HybridParams& p) {
    p.validate();
    return hybrid::lc_term(p) + hybrid::atom_term(p) + hybrid::flux_term(p) + hybrid::atom_coupling_term(p) +
           hybrid::flux_coupling_term(p);
}

inline std::vector<CollapseChannel> hybrid_channels(const HybridParams& p) {
    p.validate();
    using namespace hybrid;
    const HilbertSpace space = p.space();
    std::vector<CollapseChannel> out;
    if (p.gamma_relax > 0.0) out.emplace_back(embed(sigma_fminus(), flux_site, space), p.gamma_relax);
    if (p.gamma_phi > 0.0) out.emplace_back(embed(sigma_fz(), flux_site, space), 0.5 * p.gamma_phi);
    if (p.kappa() > 0.0) out.emplace_back(embed(ops::annihilation(p.fock_dim), resonator_site, space), p.kappa());
    if (p.gamma_e_hybrid > 0.0) {
        out.emplace_back(embed(atom(level_g, level_e), atom_site, space), p.gamma_e_hybrid);
        out.emplace_back(embed(atom(level_g, level_u), atom_site, space), p.gamma_e_hybrid);
    }
    return out;
}

}  // namespace dqpe
