#pragma once

// Gradient-ascent pulse engineering over Lindblad dynamics.
//
// Controls are piecewise constant: on step l the generator is
//   L_l = L_drift + sum_k u_k(l) K_k,   K_k = -i[H_k, .],
// and the step propagator is S_l = exp(L_l dt). The performance index is
//   state transfer:  Phi = Re <C, rho_N>                      (Hilbert-Schmidt)
//   gate:            Phi = Re Tr(C^dagger S_N ... S_1) / d^2
// and its gradient uses dS_l/du_k(l) ~ dt K_k S_l.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dqpe/core.hpp"
#include "dqpe/lbfgs.hpp"
#include "dqpe/lindblad.hpp"

namespace dqpe {

enum class GrapeMode { gradient_ascent, quasi_newton };

/// Where the control derivative of a step is evaluated: after the step only (first order),
/// or averaged over both step ends (trapezoid).
enum class GradientRule { first_order, trapezoid };

struct ControlPulse {
    RealMatrix amplitudes;  // M x N
    double dt = 0.0;
    double total_time = 0.0;

    ControlPulse() = default;
    ControlPulse(RealMatrix u, double total) : amplitudes(std::move(u)), total_time(total) {
        if (!(total > 0.0)) throw InvalidArgument("ControlPulse: total time must be > 0");
        dt = amplitudes.cols() > 0 ? total / static_cast<double>(amplitudes.cols()) : 0.0;
        if (!amplitudes.allFinite()) throw NumericalError("ControlPulse: non-finite amplitudes");
    }

    int n_controls() const { return static_cast<int>(amplitudes.rows()); }
    int n_steps() const { return static_cast<int>(amplitudes.cols()); }
};

struct GrapeProblem {
    Liouvillian drift;
    std::vector<Operator> controls;
    /// Operator -> state-transfer target C; SuperOperator -> gate target.
    std::variant<Operator, SuperOperator> target;
    std::optional<DensityOperator> initial{};  // required for state transfer
    int n_steps = 1;
    double total_time = 1.0;
    int max_iterations = 100;
    double step_size = 0.1;
    double min_error = 1e-4;
    GrapeMode mode = GrapeMode::gradient_ascent;
    GradientRule rule = GradientRule::trapezoid;
    std::uint64_t seed = 0;
    double u_max = 2.0 * pi;
    std::optional<RealMatrix> initial_amplitudes{};  // overrides the random initial guess

    bool gate_mode() const { return std::holds_alternative<SuperOperator>(target); }
    const HilbertSpace& space() const { return drift.space(); }

    void validate() const {
        if (n_steps < 1) throw InvalidArgument("GrapeProblem: n_steps must be >= 1");
        if (controls.empty()) throw InvalidArgument("GrapeProblem: at least one control is required");
        if (!(total_time > 0.0)) throw InvalidArgument("GrapeProblem: total_time must be > 0");
        if (!(min_error > 0.0 && min_error < 1.0)) throw InvalidArgument("GrapeProblem: min_error must lie in (0, 1)");
        if (mode == GrapeMode::gradient_ascent && !(step_size > 0.0)) {
            throw InvalidArgument("GrapeProblem: step_size must be > 0 for gradient ascent");
        }
        if (max_iterations < 0) throw InvalidArgument("GrapeProblem: max_iterations must be >= 0");
        if (!(u_max > 0.0)) throw InvalidArgument("GrapeProblem: u_max must be > 0");
        for (const auto& h : controls) require_same_space(space(), h.space(), "GrapeProblem: control");
        if (gate_mode()) {
            require_same_space(space(), std::get<SuperOperator>(target).space(), "GrapeProblem: gate target");
        } else {
            require_same_space(space(), std::get<Operator>(target).space(), "GrapeProblem: state target");
            if (!initial) throw InvalidArgument("GrapeProblem: state transfer requires an initial state");
            require_same_space(space(), initial->space(), "GrapeProblem: initial state");
        }
        if (initial_amplitudes) {
            if (initial_amplitudes->rows() != static_cast<long>(controls.size()) || initial_amplitudes->cols() != n_steps) {
                throw StructuralError("GrapeProblem: initial amplitudes must be M x N");
            }
        }
    }
};

struct GrapeResult {
    ControlPulse pulse;
    std::vector<double> fidelity_trace;
    double final_fidelity = 0.0;
    int iterations_used = 0;
    bool converged = false;
    SuperOperator total_propagator;
};

namespace detail {

inline void check_shape(const GrapeProblem& p, const ControlPulse& pulse) {
    if (pulse.n_controls() != static_cast<int>(p.controls.size()) || pulse.n_steps() != p.n_steps) {
        throw StructuralError("GRAPE: pulse is " + std::to_string(pulse.n_controls()) + "x" +
                              std::to_string(pulse.n_steps()) + ", problem expects " +
                              std::to_string(p.controls.size()) + "x" + std::to_string(p.n_steps));
    }
}

inline std::vector<Matrix> control_generators(const GrapeProblem& p) {
    std::vector<Matrix> out;
    for (const auto& h : p.controls) out.push_back(hamiltonian_superoperator(h).matrix());
    return out;
}

inline std::vector<Matrix> step_maps(const GrapeProblem& p, const std::vector<Matrix>& gens, const ControlPulse& pulse) {
    std::vector<Matrix> s(static_cast<std::size_t>(pulse.n_steps()));
    for (int l = 0; l < pulse.n_steps(); ++l) {
        Matrix gen = p.drift.generator.matrix();
        for (int k = 0; k < pulse.n_controls(); ++k) gen += pulse.amplitudes(k, l) * gens[static_cast<std::size_t>(k)];
        s[static_cast<std::size_t>(l)] = expm(gen * pulse.dt);
    }
    return s;
}

/// Re Tr(A B) without forming the product.
inline cplx trace_product(const Matrix& a, const Matrix& b) { return (a.transpose().cwiseProduct(b)).sum(); }

struct Evaluation {
    double phi = 0.0;
    RealMatrix grad;
    Matrix total;  // composed propagator (gate mode)
};

inline Evaluation evaluate(const GrapeProblem& p, const ControlPulse& pulse, bool want_gradient) {
    check_shape(p, pulse);
    const auto gens = control_generators(p);
    const auto s = step_maps(p, gens, pulse);
    const int n = pulse.n_steps();
    const int m = pulse.n_controls();
    const long dim = p.space().total_dim();
    const long big = dim * dim;
    Evaluation ev;
    ev.grad = RealMatrix::Zero(m, n);

    if (!p.gate_mode()) {
        const Vector c = vectorize(std::get<Operator>(p.target).matrix());
        std::vector<Vector> rho(static_cast<std::size_t>(n + 1)), lam(static_cast<std::size_t>(n + 1));
        rho[0] = vectorize(p.initial->matrix());
        for (int l = 1; l <= n; ++l) rho[static_cast<std::size_t>(l)] = s[static_cast<std::size_t>(l - 1)] * rho[static_cast<std::size_t>(l - 1)];
        ev.phi = c.dot(rho[static_cast<std::size_t>(n)]).real();
        if (!want_gradient) return ev;
        lam[static_cast<std::size_t>(n)] = c;
        for (int l = n; l >= 1; --l) lam[static_cast<std::size_t>(l - 1)] = s[static_cast<std::size_t>(l - 1)].adjoint() * lam[static_cast<std::size_t>(l)];
        for (int k = 0; k < m; ++k) {
            const Matrix& kk = gens[static_cast<std::size_t>(k)];
            std::vector<double> at(static_cast<std::size_t>(n + 1));
            for (int l = 0; l <= n; ++l) at[static_cast<std::size_t>(l)] = lam[static_cast<std::size_t>(l)].dot(kk * rho[static_cast<std::size_t>(l)]).real();
            for (int l = 1; l <= n; ++l) {
                const double v = p.rule == GradientRule::first_order ? at[static_cast<std::size_t>(l)]
                                                                     : 0.5 * (at[static_cast<std::size_t>(l)] + at[static_cast<std::size_t>(l - 1)]);
                ev.grad(k, l - 1) = pulse.dt * v;
            }
        }
    } else {
        const Matrix& c = std::get<SuperOperator>(p.target).matrix();
        const double norm = static_cast<double>(big);
        std::vector<Matrix> x(static_cast<std::size_t>(n + 1)), lam(static_cast<std::size_t>(n + 1));
        x[0] = Matrix::Identity(big, big);
        for (int l = 1; l <= n; ++l) x[static_cast<std::size_t>(l)] = s[static_cast<std::size_t>(l - 1)] * x[static_cast<std::size_t>(l - 1)];
        ev.total = x[static_cast<std::size_t>(n)];
        ev.phi = trace_product(c.adjoint(), ev.total).real() / norm;
        if (!want_gradient) return ev;
        lam[static_cast<std::size_t>(n)] = c;
        for (int l = n; l >= 1; --l) lam[static_cast<std::size_t>(l - 1)] = s[static_cast<std::size_t>(l - 1)].adjoint() * lam[static_cast<std::size_t>(l)];
        std::vector<Matrix> q(static_cast<std::size_t>(n + 1));
        for (int l = 0; l <= n; ++l) q[static_cast<std::size_t>(l)] = x[static_cast<std::size_t>(l)] * lam[static_cast<std::size_t>(l)].adjoint();
        for (int k = 0; k < m; ++k) {
            const Matrix& kk = gens[static_cast<std::size_t>(k)];
            std::vector<double> at(static_cast<std::size_t>(n + 1));
            for (int l = 0; l <= n; ++l) at[static_cast<std::size_t>(l)] = trace_product(kk, q[static_cast<std::size_t>(l)]).real() / norm;
            for (int l = 1; l <= n; ++l) {
                const double v = p.rule == GradientRule::first_order ? at[static_cast<std::size_t>(l)]
                                                                     : 0.5 * (at[static_cast<std::size_t>(l)] + at[static_cast<std::size_t>(l - 1)]);
                ev.grad(k, l - 1) = pulse.dt * v;
            }
        }
    }
    for (int k = 0; k < m; ++k) {
        for (int l = 0; l < n; ++l) {
            if (!std::isfinite(ev.grad(k, l))) {
                throw NumericalError("GRAPE: non-finite gradient at control " + std::to_string(k) + ", step " + std::to_string(l));
            }
        }
    }
    return ev;
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's distributions.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Initial guess: uniform in [-u_max/10, u_max/10] from the problem seed, or the explicit override.
inline ControlPulse initial_pulse(const GrapeProblem& p) {
    p.validate();
    if (p.initial_amplitudes) return ControlPulse(*p.initial_amplitudes, p.total_time);
    std::mt19937_64 rng(p.seed);
    RealMatrix u(static_cast<long>(p.controls.size()), p.n_steps);
    for (long k = 0; k < u.rows(); ++k) {
        for (long l = 0; l < u.cols(); ++l) u(k, l) = (2.0 * detail::uniform01(rng) - 1.0) * p.u_max / 10.0;
    }
    return ControlPulse(std::move(u), p.total_time);
}

/// rho_0 ... rho_N.
inline std::vector<DensityOperator> forward_states(const GrapeProblem& p, const ControlPulse& pulse) {
    if (p.gate_mode() || !p.initial) throw InvalidArgument("forward_states: requires a state-transfer problem");
    std::vector<DensityOperator> out{*p.initial};
    if (pulse.n_steps() == 0) return out;
    detail::check_shape(p, pulse);
    const auto s = detail::step_maps(p, detail::control_generators(p), pulse);
    Vector v = vectorize(p.initial->matrix());
    for (const auto& sl : s) {
        v = sl * v;
        Matrix rho = devectorize_matrix(v);
        rho = 0.5 * (rho + rho.adjoint());
        out.push_back(DensityOperator(p.space(), std::move(rho)));
    }
    return out;
}

/// lambda_0 ... lambda_N with lambda_N = C and lambda_{l-1} = S_l^dagger lambda_l.
inline std::vector<Operator> backward_costates(const GrapeProblem& p, const ControlPulse& pulse) {
    detail::check_shape(p, pulse);
    if (p.gate_mode()) throw InvalidArgument("backward_costates: requires a state-transfer problem");
    const auto s = detail::step_maps(p, detail::control_generators(p), pulse);
    const Operator& c = std::get<Operator>(p.target);
    std::vector<Operator> out(static_cast<std::size_t>(pulse.n_steps() + 1));
    out.back() = c;
    Vector v = vectorize(c.matrix());
    for (int l = pulse.n_steps(); l >= 1; --l) {
        v = s[static_cast<std::size_t>(l - 1)].adjoint() * v;
        out[static_cast<std::size_t>(l - 1)] = Operator(p.space(), devectorize_matrix(v));
    }
    return out;
}

inline double performance_index(const GrapeProblem& p, const ControlPulse& pulse) {
    return detail::evaluate(p, pulse, false).phi;
}

inline RealMatrix gradient(const GrapeProblem& p, const ControlPulse& pulse) {
    return detail::evaluate(p, pulse, true).grad;
}

/// Composed propagator S_N ... S_1.
inline SuperOperator total_propagator(const GrapeProblem& p, const ControlPulse& pulse) {
    detail::check_shape(p, pulse);
    const auto s = detail::step_maps(p, detail::control_generators(p), pulse);
    const long big = p.space().total_dim() * p.space().total_dim();
    Matrix x = Matrix::Identity(big, big);
    for (const auto& sl : s) x = sl * x;
    return SuperOperator(p.space(), std::move(x));
}

/// Called with the pulse after `iteration` updates and its performance index.
using GrapeObserver = std::function<void(int iteration, const ControlPulse& pulse, double phi)>;

inline GrapeResult optimize(const GrapeProblem& p, const GrapeObserver& observer = {}) {
    p.validate();
    GrapeResult res;
    ControlPulse pulse = initial_pulse(p);
    const double target_phi = 1.0 - p.min_error;

    if (p.mode == GrapeMode::gradient_ascent) {
        for (int it = 0;; ++it) {
            const bool last = it == p.max_iterations;
            auto ev = detail::evaluate(p, pulse, !last);
            res.fidelity_trace.push_back(ev.phi);
            if (observer) observer(it, pulse, ev.phi);
            res.iterations_used = it;
            if (ev.phi >= target_phi) {
                res.converged = true;
                break;
            }
            if (last) break;
            if (ev.grad.cwiseAbs().maxCoeff() < 1e-14) break;  // stalled
            pulse.amplitudes = (pulse.amplitudes + p.step_size * ev.grad).cwiseMax(-p.u_max).cwiseMin(p.u_max);
            if (!pulse.amplitudes.allFinite()) {
                throw NumericalError("GRAPE: non-finite amplitudes after iteration " + std::to_string(it + 1));
            }
        }
    } else {
        const long m = pulse.amplitudes.rows(), n = pulse.amplitudes.cols();
        auto to_pulse = [&](const Eigen::VectorXd& x) {
            return ControlPulse(Eigen::Map<const RealMatrix>(x.data(), m, n), p.total_time);
        };
        lbfgs::Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            auto ev = detail::evaluate(p, to_pulse(x), true);
            g = -Eigen::Map<const Eigen::VectorXd>(ev.grad.data(), ev.grad.size());
            return -ev.phi;
        };
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(pulse.amplitudes.data(), pulse.amplitudes.size());
        const double phi0 = performance_index(p, pulse);
        res.fidelity_trace.push_back(phi0);
        if (observer) observer(0, pulse, phi0);
        if (phi0 >= target_phi || p.max_iterations == 0) {
            res.converged = phi0 >= target_phi;
        } else {
            lbfgs::Options opt;
            opt.max_iterations = p.max_iterations;
            opt.lower = -p.u_max;
            opt.upper = p.u_max;
            lbfgs::Observer obs = [&](int it, const Eigen::VectorXd& xi, double fx) {
                res.fidelity_trace.push_back(-fx);
                if (observer) observer(it, to_pulse(xi), -fx);
                return -fx < target_phi;
            };
            auto rep = lbfgs::minimize(f, x, opt, obs);
            res.converged = rep.status == lbfgs::Status::stopped;
            res.iterations_used = rep.iterations;
            pulse = to_pulse(x);
        }
    }
    res.pulse = pulse;
    res.final_fidelity = res.fidelity_trace.back();
    res.total_propagator = total_propagator(p, pulse);
    return res;
}

}  // namespace dqpe
