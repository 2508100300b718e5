#pragma once

// Process tomography in the Pauli basis.
//
// chi is defined by E(rho) = sum_mn chi_mn P_m rho P_n with unnormalized Pauli
// strings P_m, so that Tr(chi) = 1 for trace-preserving maps.

#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "dqpe/core.hpp"
#include "dqpe/lindblad.hpp"

namespace dqpe {

/// Pauli strings {I, X, Y, Z}^(x)n; index m encodes letters base 4, first qubit most significant.
inline std::vector<Matrix> pauli_basis(int n_qubits) {
    const Matrix single[4] = {ops::identity(2), ops::sigma_x(), ops::sigma_y(), ops::sigma_z()};
    std::vector<Matrix> out{Matrix::Identity(1, 1)};
    for (int q = 0; q < n_qubits; ++q) {
        std::vector<Matrix> next;
        next.reserve(out.size() * 4);
        for (const auto& p : out) {
            for (const auto& s : single) next.push_back(kron(p, s));
        }
        out = std::move(next);
    }
    return out;
}

inline std::string pauli_label(int index, int n_qubits) {
    static const char letters[4] = {'I', 'X', 'Y', 'Z'};
    std::string s(static_cast<std::size_t>(n_qubits), 'I');
    for (int q = n_qubits - 1; q >= 0; --q) {
        s[static_cast<std::size_t>(q)] = letters[index % 4];
        index /= 4;
    }
    return s;
}

struct ChiMatrix {
    int n_qubits = 0;
    Matrix entries;
    double fidelity = std::numeric_limits<double>::quiet_NaN();  // vs the supplied ideal, if any
};

/// chi of U . U^dagger by direct expansion U = sum_m c_m P_m.
inline Matrix chi_of_unitary(const Matrix& u) {
    const long d = u.rows();
    const int n_qubits = static_cast<int>(std::llround(std::log2(static_cast<double>(d))));
    const auto paulis = pauli_basis(n_qubits);
    Vector c(static_cast<long>(paulis.size()));
    for (std::size_t m = 0; m < paulis.size(); ++m) {
        c(static_cast<long>(m)) = (paulis[m].adjoint() * u).trace() / static_cast<double>(d);
    }
    return c * c.adjoint();
}

inline double process_fidelity(const ChiMatrix& chi, const Matrix& ideal_unitary) {
    return (chi.entries * chi_of_unitary(ideal_unitary)).trace().real();
}

/// Linear map on d x d operators.
using OperatorMap = std::function<Matrix(const Matrix&)>;

namespace detail {

/// beta(jk, mn) = Tr(P_k P_m P_j P_n) / d, the expansion of P_m P_j P_n in the Pauli basis.
inline Matrix tomography_beta(const std::vector<Matrix>& paulis, long d) {
    const long n = static_cast<long>(paulis.size());
    Matrix beta(n * n, n * n);
    for (long m = 0; m < n; ++m) {
        for (long nn = 0; nn < n; ++nn) {
            for (long j = 0; j < n; ++j) {
                const Matrix prod = paulis[static_cast<std::size_t>(m)] * paulis[static_cast<std::size_t>(j)] *
                                    paulis[static_cast<std::size_t>(nn)];
                for (long k = 0; k < n; ++k) {
                    beta(j * n + k, m * n + nn) =
                        (paulis[static_cast<std::size_t>(k)] * prod).trace() / static_cast<double>(d);
                }
            }
        }
    }
    return beta;
}

}  // namespace detail

/// Reconstructs chi from the images of the d^2 Pauli inputs. `ideal` (d x d unitary), when
/// given, sets the process fidelity Tr(chi chi_ideal).
inline ChiMatrix process_tomography(const OperatorMap& map, int n_qubits, const Matrix* ideal = nullptr) {
    if (n_qubits < 1 || n_qubits > 2) throw InvalidArgument("process_tomography: supports 1 or 2 qubits");
    const long d = 1L << n_qubits;
    const auto paulis = pauli_basis(n_qubits);
    const long n = static_cast<long>(paulis.size());

    Vector lambda(n * n);
    for (long j = 0; j < n; ++j) {
        const Matrix out = map(paulis[static_cast<std::size_t>(j)]);
        if (out.rows() != d || out.cols() != d) throw StructuralError("process_tomography: map changed dimension");
        for (long k = 0; k < n; ++k) {
            lambda(j * n + k) = (paulis[static_cast<std::size_t>(k)] * out).trace() / static_cast<double>(d);
        }
    }
    const Matrix beta = detail::tomography_beta(paulis, d);
    const Vector x = beta.fullPivLu().solve(lambda);

    ChiMatrix chi;
    chi.n_qubits = n_qubits;
    chi.entries.resize(n, n);
    for (long m = 0; m < n; ++m) {
        for (long nn = 0; nn < n; ++nn) chi.entries(m, nn) = x(m * n + nn);
    }
    if (ideal) chi.fidelity = process_fidelity(chi, *ideal);
    return chi;
}

inline ChiMatrix process_tomography(const SuperOperator& s, const Matrix* ideal = nullptr) {
    for (int dim : s.space().subsystem_dims()) {
        if (dim != 2) throw InvalidArgument("process_tomography: subsystem of dimension " + std::to_string(dim) + " is not a qubit");
    }
    const SuperOperator& ref = s;
    return process_tomography([&ref](const Matrix& x) { return ref.apply(x); }, s.space().size(), ideal);
}

inline ChiMatrix process_tomography(const Propagator& p, const Matrix* ideal = nullptr) {
    return process_tomography(p.map, ideal);
}

/// Restricts a map on qubits (x) environment to the qubits, with the environment prepared in
/// `env_state` and traced out afterwards. The qubits must be the leading subsystems.
inline OperatorMap reduce_to_qubits(const SuperOperator& s, int n_qubits, const Matrix& env_state) {
    const HilbertSpace& space = s.space();
    for (int q = 0; q < n_qubits; ++q) {
        if (space.dim(q) != 2) throw InvalidArgument("reduce_to_qubits: leading subsystem " + std::to_string(q) + " is not a qubit");
    }
    std::set<int> keep;
    for (int q = 0; q < n_qubits; ++q) keep.insert(q);
    return [s, space, keep, env_state](const Matrix& x) {
        Matrix full = kron(x, env_state);
        return partial_trace(s.apply(full), space, keep);
    };
}

}  // namespace dqpe
