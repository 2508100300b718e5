#pragma once

// Liouvillians, time-step propagators and piecewise-constant evolution.

#include <unsupported/Eigen/MatrixFunctions>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dqpe/core.hpp"

namespace dqpe {

struct CollapseChannel {
    Operator op;
    double rate = 0.0;

    CollapseChannel(Operator a, double gamma) : op(std::move(a)), rate(gamma) {
        if (!(rate >= 0.0) || !std::isfinite(rate)) {
            throw InvalidArgument("CollapseChannel: rate must be finite and >= 0, got " + std::to_string(rate));
        }
    }
};

struct Liouvillian {
    SuperOperator generator;
    SuperOperator hamiltonian_part;
    SuperOperator dissipator_part;

    const HilbertSpace& space() const { return generator.space(); }
};

/// -i[H, .] as a superoperator.
inline SuperOperator hamiltonian_superoperator(const Operator& h) {
    const long d = h.space().total_dim();
    const Matrix id = Matrix::Identity(d, d);
    Matrix m = -I_unit * (kron(id, h.matrix()) - kron(h.matrix().transpose(), id));
    return SuperOperator(h.space(), std::move(m));
}

/// gamma (A . A^dagger - 1/2 {A^dagger A, .}).
inline SuperOperator dissipator(const Operator& a, double rate) {
    const long d = a.space().total_dim();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix& A = a.matrix();
    const Matrix ada = A.adjoint() * A;
    Matrix m = kron(A.conjugate(), A) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id);
    return SuperOperator(a.space(), rate * m);
}

inline Liouvillian build_liouvillian(const Operator& h, const std::vector<CollapseChannel>& channels) {
    if (!h.is_hermitian(tolerances().hermitian)) {
        throw InvalidArgument("build_liouvillian: Hamiltonian is not Hermitian (defect " +
                              std::to_string(hermiticity_defect(h.matrix())) + ")");
    }
    SuperOperator hp = hamiltonian_superoperator(h);
    SuperOperator dp = SuperOperator::zero(h.space());
    Matrix acc = dp.matrix();
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const auto& c = channels[k];
        require_same_space(h.space(), c.op.space(), "build_liouvillian: channel");
        if (c.rate == 0.0) continue;
        acc += dissipator(c.op, c.rate).matrix();
    }
    dp = SuperOperator(h.space(), std::move(acc));
    SuperOperator gen = hp + dp;
    return Liouvillian{std::move(gen), std::move(hp), std::move(dp)};
}

/// Pade scaling-and-squaring exponential (Eigen's implementation of Higham's algorithm).
inline Matrix expm(const Matrix& a) {
    if (!all_finite(a)) throw NumericalError("expm: non-finite input");
    Matrix out = a.exp();
    if (!all_finite(out)) throw NumericalError("expm: non-finite result");
    return out;
}

struct Propagator {
    SuperOperator map;
    double dt = 0.0;
};

inline Propagator step_propagator(const Liouvillian& l, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("step_propagator: dt must be > 0");
    return Propagator{SuperOperator(l.space(), expm(l.generator.matrix() * dt)), dt};
}

/// One piecewise-constant stretch of an evolution.
struct Segment {
    Operator hamiltonian;
    double duration = 0.0;
};

namespace detail {

inline void check_state(const Matrix& rho, double t) {
    const double tol = tolerances().instability;
    auto fail = [t](const std::string& what) {
        throw NumericalError("evolve: " + what + " at t = " + std::to_string(t) + " ns");
    };
    if (!all_finite(rho)) fail("non-finite density matrix");
    if (hermiticity_defect(rho) > tol) fail("Hermiticity lost");
    if (std::abs(rho.trace().real() - 1.0) > tol) fail("trace drifted to " + std::to_string(rho.trace().real()));
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(rho, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lmin < -tol) fail("negative eigenvalue " + std::to_string(lmin));
}

}  // namespace detail

/// Samples rho(t) under piecewise-constant Hamiltonians. Propagators are cached per
/// (segment, interval length), so uniformly spaced samples cost one exponential per segment.
inline std::vector<DensityOperator> evolve(const DensityOperator& rho0, const std::vector<Segment>& segments,
                                           const std::vector<CollapseChannel>& channels,
                                           const std::vector<double>& sample_times) {
    const HilbertSpace& space = rho0.space();
    double total = 0.0;
    for (const auto& s : segments) {
        if (!(s.duration > 0.0)) throw InvalidArgument("evolve: segment durations must be > 0");
        require_same_space(space, s.hamiltonian.space(), "evolve: segment");
        total += s.duration;
    }
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] < 0.0 || sample_times[i] > total * (1.0 + 1e-12) + 1e-12) {
            throw InvalidArgument("evolve: sample time " + std::to_string(sample_times[i]) + " outside [0, " +
                                  std::to_string(total) + "]");
        }
        if (i > 0 && sample_times[i] < sample_times[i - 1]) throw InvalidArgument("evolve: sample times must be sorted");
    }

    std::vector<DensityOperator> out;
    out.reserve(sample_times.size());
    if (segments.empty()) {
        for (std::size_t i = 0; i < sample_times.size(); ++i) out.push_back(rho0);
        return out;
    }

    std::vector<std::optional<Liouvillian>> gens(segments.size());
    std::map<std::pair<std::size_t, long long>, Matrix> cache;
    auto advance = [&](Vector& v, std::size_t seg, double len) {
        if (len <= 0.0) return;
        if (!gens[seg]) gens[seg] = build_liouvillian(segments[seg].hamiltonian, channels);
        // Interval lengths are keyed at 1e-11 ns so float noise in sample grids still hits the cache.
        auto key = std::make_pair(seg, std::llround(len * 1e11));
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, expm(gens[seg]->generator.matrix() * len)).first;
        v = it->second * v;
    };

    Vector v = vectorize(rho0);
    std::size_t seg = 0;
    double seg_start = 0.0;  // absolute start of `seg`
    double t_now = 0.0;      // time represented by v
    for (double ts : sample_times) {
        while (seg + 1 < segments.size() && ts > seg_start + segments[seg].duration) {
            advance(v, seg, seg_start + segments[seg].duration - t_now);
            seg_start += segments[seg].duration;
            t_now = seg_start;
            ++seg;
            detail::check_state(devectorize_matrix(v), t_now);
        }
        advance(v, seg, ts - t_now);
        t_now = ts;
        Matrix rho = devectorize_matrix(v);
        detail::check_state(rho, ts);
        rho = 0.5 * (rho + rho.adjoint());
        out.push_back(DensityOperator::trusted(space, std::move(rho)));
    }
    return out;
}

/// Choi matrix sum_ij |i><j| (x) E(|i><j|) of a superoperator.
inline Matrix choi_matrix(const Matrix& super, long d) {
    Matrix choi = Matrix::Zero(d * d, d * d);
    for (long i = 0; i < d; ++i) {
        for (long j = 0; j < d; ++j) {
            // column j*d+i of the superoperator is vec(E(|i><j|))
            Matrix e = devectorize_matrix(super.col(j * d + i));
            choi.block(i * d, j * d, d, d) = e;
        }
    }
    return choi;
}

inline Matrix choi_matrix(const SuperOperator& s) { return choi_matrix(s.matrix(), s.space().total_dim()); }

}  // namespace dqpe
