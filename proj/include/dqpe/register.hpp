#pragma once

// Density-matrix operations on an n-qubit register. Qubit 0 is the most
// significant bit of the basis index. Local maps act on the listed qubits in
// the order given, the first listed qubit being the most significant.

#include <cmath>
#include <vector>

#include "dqpe/core.hpp"

namespace dqpe::reg {

inline long bit_of(int q, int n) { return 1L << (n - 1 - q); }

namespace detail {

inline void check_targets(int n, const std::vector<int>& targets) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || targets[i] >= n) throw InvalidArgument("register: qubit index out of range");
        for (std::size_t j = 0; j < i; ++j) {
            if (targets[i] == targets[j]) throw InvalidArgument("register: repeated qubit index");
        }
    }
}

/// Global index offsets of the 2^k local basis states, and the "rest" indices with all target bits clear.
inline void local_structure(int n, const std::vector<int>& targets, std::vector<long>& local, std::vector<long>& rest) {
    const int k = static_cast<int>(targets.size());
    const long dl = 1L << k;
    local.assign(static_cast<std::size_t>(dl), 0);
    for (long i = 0; i < dl; ++i) {
        long off = 0;
        for (int t = 0; t < k; ++t) {
            if (i & (1L << (k - 1 - t))) off |= bit_of(targets[static_cast<std::size_t>(t)], n);
        }
        local[static_cast<std::size_t>(i)] = off;
    }
    long mask = 0;
    for (int t : targets) mask |= bit_of(t, n);
    rest.clear();
    for (long i = 0; i < (1L << n); ++i) {
        if ((i & mask) == 0) rest.push_back(i);
    }
}

}  // namespace detail

/// rho -> (S (x) id) rho, where S is a column-stacked superoperator on the target qubits.
inline void apply_superop(Matrix& rho, int n, const std::vector<int>& targets, const Matrix& s) {
    detail::check_targets(n, targets);
    const long dl = 1L << targets.size();
    if (s.rows() != dl * dl || s.cols() != dl * dl) throw StructuralError("apply_superop: superoperator size does not match targets");
    std::vector<long> local, rest;
    detail::local_structure(n, targets, local, rest);
    Vector block(dl * dl), out(dl * dl);
    for (long r : rest) {
        for (long c : rest) {
            for (long j = 0; j < dl; ++j) {
                for (long i = 0; i < dl; ++i) block(j * dl + i) = rho(r | local[static_cast<std::size_t>(i)], c | local[static_cast<std::size_t>(j)]);
            }
            out.noalias() = s * block;
            for (long j = 0; j < dl; ++j) {
                for (long i = 0; i < dl; ++i) rho(r | local[static_cast<std::size_t>(i)], c | local[static_cast<std::size_t>(j)]) = out(j * dl + i);
            }
        }
    }
}

inline Matrix unitary_superop(const Matrix& u) { return kron(u.conjugate(), u); }

inline void apply_unitary(Matrix& rho, int n, const std::vector<int>& targets, const Matrix& u) {
    apply_superop(rho, n, targets, unitary_superop(u));
}

/// Full 2^n unitary of a local gate (for oracles and small circuits).
inline Matrix expand_unitary(int n, const std::vector<int>& targets, const Matrix& u) {
    detail::check_targets(n, targets);
    const long dl = 1L << targets.size();
    std::vector<long> local, rest;
    detail::local_structure(n, targets, local, rest);
    Matrix full = Matrix::Zero(1L << n, 1L << n);
    for (long r : rest) {
        for (long i = 0; i < dl; ++i) {
            for (long j = 0; j < dl; ++j) full(r | local[static_cast<std::size_t>(i)], r | local[static_cast<std::size_t>(j)]) = u(i, j);
        }
    }
    return full;
}

inline double probability_one(const Matrix& rho, int n, int q) {
    const long b = bit_of(q, n);
    double p = 0.0;
    for (long i = 0; i < rho.rows(); ++i) {
        if (i & b) p += rho(i, i).real();
    }
    return p;
}

/// Zeroes every entry whose row or column disagrees with `bit` on qubit q (unnormalized projection).
inline Matrix project(const Matrix& rho, int n, int q, int bit) {
    const long b = bit_of(q, n);
    Matrix out = rho;
    for (long i = 0; i < rho.rows(); ++i) {
        const bool ri = ((i & b) != 0) == (bit == 1);
        for (long j = 0; j < rho.cols(); ++j) {
            const bool cj = ((j & b) != 0) == (bit == 1);
            if (!(ri && cj)) out(i, j) = 0.0;
        }
    }
    return out;
}

/// Replaces the state of qubits (a, b) by `pair`: rho -> Tr_ab(rho) (x) pair.
inline void replace_pair(Matrix& rho, int n, int a, int b, const Matrix& pair) {
    if (pair.rows() != 4 || pair.cols() != 4) throw StructuralError("replace_pair: pair state must be 4 x 4");
    const Vector vid = vectorize(Matrix(Matrix::Identity(4, 4)));
    const Matrix s = vectorize(pair) * vid.transpose();
    apply_superop(rho, n, {a, b}, s);
}

/// New qubit i carries old qubit perm[i].
inline Matrix permute_qubits(const Matrix& rho, int n, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != n) throw StructuralError("permute_qubits: permutation length must equal n");
    const long d = 1L << n;
    std::vector<long> map(static_cast<std::size_t>(d));
    for (long i = 0; i < d; ++i) {
        long j = 0;
        for (int q = 0; q < n; ++q) {
            if (i & bit_of(q, n)) j |= bit_of(perm[static_cast<std::size_t>(q)], n);
        }
        map[static_cast<std::size_t>(i)] = j;  // new index i <- old index j
    }
    Matrix out(d, d);
    for (long i = 0; i < d; ++i) {
        for (long j = 0; j < d; ++j) out(i, j) = rho(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
    }
    return out;
}

/// Probability of each bitstring on `qubits` (first listed = most significant).
inline std::vector<double> marginal_distribution(const Matrix& rho, int n, const std::vector<int>& qubits) {
    const int k = static_cast<int>(qubits.size());
    std::vector<double> p(static_cast<std::size_t>(1L << k), 0.0);
    for (long i = 0; i < rho.rows(); ++i) {
        long x = 0;
        for (int t = 0; t < k; ++t) {
            if (i & bit_of(qubits[static_cast<std::size_t>(t)], n)) x |= 1L << (k - 1 - t);
        }
        p[static_cast<std::size_t>(x)] += rho(i, i).real();
    }
    return p;
}

}  // namespace dqpe::reg
