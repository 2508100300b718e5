#pragma once

// Dense complex linear algebra for composite quantum systems.
//
// Conventions used throughout the library:
//   * subsystem 0 is the most significant factor of every Kronecker product;
//   * vec() stacks columns, so vec(A rho B) = (B^T kron A) vec(rho);
//   * hbar = 1, time in ns, frequencies and rates in rad/ns.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dqpe/errors.hpp"

namespace dqpe {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I_unit{0.0, 1.0};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// Invariant thresholds shared by every type in the library.
struct Tolerances {
    double hermitian = 1e-10;   // max |M - M^dagger|
    double trace = 1e-8;        // |Tr(rho) - 1|
    double positivity = 1e-8;   // smallest admissible eigenvalue is -positivity
    double norm = 1e-10;        // | ||psi|| - 1 |
    double instability = 1e-6;  // evolve() aborts beyond this drift
};

namespace detail {
inline Tolerances& tolerance_storage() {
    static Tolerances t;
    return t;
}
}  // namespace detail

inline const Tolerances& tolerances() { return detail::tolerance_storage(); }

/// Test-configuration hook: overrides the module tolerances for its lifetime.
class ScopedTolerances {
public:
    explicit ScopedTolerances(const Tolerances& t) : saved_(tolerances()) {
        detail::tolerance_storage() = t;
    }
    ~ScopedTolerances() { detail::tolerance_storage() = saved_; }
    ScopedTolerances(const ScopedTolerances&) = delete;
    ScopedTolerances& operator=(const ScopedTolerances&) = delete;

private:
    Tolerances saved_;
};

// ---------------------------------------------------------------------------
// HilbertSpace
// ---------------------------------------------------------------------------

class HilbertSpace {
public:
    HilbertSpace() = default;

    explicit HilbertSpace(std::vector<int> subsystem_dims) : dims_(std::move(subsystem_dims)) {
        if (dims_.empty()) throw InvalidArgument("HilbertSpace: at least one subsystem is required");
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (dims_[i] < 2) {
                throw InvalidArgument("HilbertSpace: subsystem " + std::to_string(i) +
                                      " has dimension " + std::to_string(dims_[i]) + " < 2");
            }
        }
        total_ = std::accumulate(dims_.begin(), dims_.end(), 1L, std::multiplies<long>());
    }

    static HilbertSpace qubits(int n) { return HilbertSpace(std::vector<int>(static_cast<std::size_t>(n), 2)); }

    const std::vector<int>& subsystem_dims() const { return dims_; }
    int size() const { return static_cast<int>(dims_.size()); }
    int dim(int site) const { return dims_.at(static_cast<std::size_t>(site)); }
    long total_dim() const { return total_; }
    bool empty() const { return dims_.empty(); }

    /// Concatenation in layout order.
    HilbertSpace operator*(const HilbertSpace& other) const {
        std::vector<int> d = dims_;
        d.insert(d.end(), other.dims_.begin(), other.dims_.end());
        return HilbertSpace(std::move(d));
    }

    bool operator==(const HilbertSpace& o) const { return dims_ == o.dims_; }
    bool operator!=(const HilbertSpace& o) const { return !(*this == o); }

    std::string describe() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
        os << "]";
        return os.str();
    }

private:
    std::vector<int> dims_;
    long total_ = 0;
};

inline void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* where) {
    if (a != b) {
        throw StructuralError(std::string(where) + ": space mismatch " + a.describe() + " vs " + b.describe());
    }
}

// ---------------------------------------------------------------------------
// Matrix helpers
// ---------------------------------------------------------------------------

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermiticity_defect(const Matrix& m) { return max_abs(m - m.adjoint()); }

inline bool all_finite(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
    }
    return true;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    out = Eigen::kroneckerProduct(a, b);
    return out;
}

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

class StateVector {
public:
    StateVector(HilbertSpace space, Vector amplitudes) : space_(std::move(space)), amps_(std::move(amplitudes)) {
        if (amps_.size() != space_.total_dim()) {
            throw StructuralError("StateVector: length " + std::to_string(amps_.size()) +
                                  " does not match space " + space_.describe());
        }
        if (std::abs(amps_.norm() - 1.0) > tolerances().norm) {
            throw InvalidArgument("StateVector: norm " + std::to_string(amps_.norm()) + " is not 1");
        }
    }

    /// Rescales a nonzero vector to unit norm.
    static StateVector normalized(HilbertSpace space, Vector amplitudes) {
        const double n = amplitudes.norm();
        if (!(n > 0.0)) throw InvalidArgument("StateVector: cannot normalize a zero vector");
        return StateVector(std::move(space), amplitudes / n);
    }

    /// Computational basis state |index>.
    static StateVector basis(HilbertSpace space, long index) {
        if (index < 0 || index >= space.total_dim()) throw InvalidArgument("StateVector::basis: index out of range");
        Vector v = Vector::Zero(space.total_dim());
        v(index) = 1.0;
        return StateVector(std::move(space), std::move(v));
    }

    const HilbertSpace& space() const { return space_; }
    const Vector& amplitudes() const { return amps_; }

private:
    HilbertSpace space_;
    Vector amps_;
};

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

class Operator {
public:
    Operator() = default;

    Operator(HilbertSpace space, Matrix matrix, bool hermitian_hint = false)
        : space_(std::move(space)), m_(std::move(matrix)), hermitian_(hermitian_hint) {
        const long d = space_.total_dim();
        if (m_.rows() != d || m_.cols() != d) {
            throw StructuralError("Operator: matrix is " + std::to_string(m_.rows()) + "x" +
                                  std::to_string(m_.cols()) + " but space " + space_.describe() +
                                  " has dimension " + std::to_string(d));
        }
        if (hermitian_ && hermiticity_defect(m_) > tolerances().hermitian) {
            throw InvalidArgument("Operator: hermitian hint set but |M - M^dagger| = " +
                                  std::to_string(hermiticity_defect(m_)));
        }
    }

    /// Single-subsystem operator; the space is inferred from the matrix size.
    static Operator local(Matrix m, bool hermitian_hint = false) {
        const int d = static_cast<int>(m.rows());
        return Operator(HilbertSpace({d}), std::move(m), hermitian_hint);
    }

    static Operator identity(const HilbertSpace& s) {
        return Operator(s, Matrix::Identity(s.total_dim(), s.total_dim()), true);
    }

    static Operator zero(const HilbertSpace& s) {
        return Operator(s, Matrix::Zero(s.total_dim(), s.total_dim()), true);
    }

    const HilbertSpace& space() const { return space_; }
    const Matrix& matrix() const { return m_; }
    bool hermitian_hint() const { return hermitian_; }
    bool is_hermitian(double tol) const { return hermiticity_defect(m_) <= tol; }

    Operator adjoint() const { return Operator(space_, m_.adjoint(), hermitian_); }

    Operator operator+(const Operator& o) const {
        require_same_space(space_, o.space_, "Operator::operator+");
        return Operator(space_, m_ + o.m_, hermitian_ && o.hermitian_);
    }
    Operator operator-(const Operator& o) const {
        require_same_space(space_, o.space_, "Operator::operator-");
        return Operator(space_, m_ - o.m_, hermitian_ && o.hermitian_);
    }
    Operator operator*(const Operator& o) const {
        require_same_space(space_, o.space_, "Operator::operator*");
        return Operator(space_, m_ * o.m_, false);
    }
    Operator operator*(double s) const { return Operator(space_, m_ * s, hermitian_); }
    Operator operator*(cplx s) const { return Operator(space_, m_ * s, hermitian_ && s.imag() == 0.0); }
    friend Operator operator*(double s, const Operator& o) { return o * s; }
    friend Operator operator*(cplx s, const Operator& o) { return o * s; }

private:
    HilbertSpace space_;
    Matrix m_;
    bool hermitian_ = false;
};

// ---------------------------------------------------------------------------
// DensityOperator
// ---------------------------------------------------------------------------

class DensityOperator {
public:
    DensityOperator(HilbertSpace space, Matrix matrix) : space_(std::move(space)), m_(std::move(matrix)) {
        validate();
    }

    /// Skips validation; for internal hot loops whose invariants are checked elsewhere.
    static DensityOperator trusted(HilbertSpace space, Matrix matrix) {
        return DensityOperator(std::move(space), std::move(matrix), TrustedTag{});
    }

    static DensityOperator pure(const StateVector& psi) {
        return DensityOperator(psi.space(), psi.amplitudes() * psi.amplitudes().adjoint());
    }

    static DensityOperator maximally_mixed(const HilbertSpace& s) {
        const long d = s.total_dim();
        return DensityOperator(s, Matrix::Identity(d, d) / static_cast<double>(d));
    }

    const HilbertSpace& space() const { return space_; }
    const Matrix& matrix() const { return m_; }

    double purity() const { return (m_ * m_).trace().real(); }
    double min_eigenvalue() const { return Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff(); }
    double population(long index) const { return m_(index, index).real(); }

    /// Kronecker product in layout order.
    DensityOperator tensor(const DensityOperator& other) const {
        return DensityOperator(space_ * other.space_, kron(m_, other.m_));
    }

private:
    struct TrustedTag {};
    DensityOperator(HilbertSpace space, Matrix matrix, TrustedTag) : space_(std::move(space)), m_(std::move(matrix)) {}

    void validate() const {
        const long d = space_.total_dim();
        if (m_.rows() != d || m_.cols() != d) {
            throw StructuralError("DensityOperator: matrix size does not match space " + space_.describe());
        }
        const auto& tol = tolerances();
        if (!all_finite(m_)) throw NumericalError("DensityOperator: non-finite entries");
        const double herm = hermiticity_defect(m_);
        if (herm > tol.hermitian) {
            throw InvalidArgument("DensityOperator: not Hermitian (defect " + std::to_string(herm) + ")");
        }
        const double tr = m_.trace().real();
        if (std::abs(tr - 1.0) > tol.trace) {
            throw InvalidArgument("DensityOperator: trace " + std::to_string(tr) + " != 1");
        }
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (lmin < -tol.positivity) {
            throw InvalidArgument("DensityOperator: negative eigenvalue " + std::to_string(lmin));
        }
    }

    HilbertSpace space_;
    Matrix m_;
};

// ---------------------------------------------------------------------------
// SuperOperator
// ---------------------------------------------------------------------------

/// Linear map on column-stacked density matrices.
class SuperOperator {
public:
    SuperOperator() = default;

    SuperOperator(HilbertSpace space, Matrix matrix) : space_(std::move(space)), m_(std::move(matrix)) {
        const long d2 = space_.total_dim() * space_.total_dim();
        if (m_.rows() != d2 || m_.cols() != d2) {
            throw StructuralError("SuperOperator: expected " + std::to_string(d2) + "x" + std::to_string(d2) +
                                  " for space " + space_.describe());
        }
    }

    static SuperOperator identity(const HilbertSpace& s) {
        const long d2 = s.total_dim() * s.total_dim();
        return SuperOperator(s, Matrix::Identity(d2, d2));
    }

    static SuperOperator zero(const HilbertSpace& s) {
        const long d2 = s.total_dim() * s.total_dim();
        return SuperOperator(s, Matrix::Zero(d2, d2));
    }

    /// rho -> U rho U^dagger.
    static SuperOperator unitary_conjugation(const Operator& u) {
        return SuperOperator(u.space(), kron(u.matrix().conjugate(), u.matrix()));
    }

    /// rho -> A rho.
    static SuperOperator left(const Operator& a) {
        const long d = a.space().total_dim();
        return SuperOperator(a.space(), kron(Matrix::Identity(d, d), a.matrix()));
    }

    /// rho -> rho B.
    static SuperOperator right(const Operator& b) {
        const long d = b.space().total_dim();
        return SuperOperator(b.space(), kron(b.matrix().transpose(), Matrix::Identity(d, d)));
    }

    const HilbertSpace& space() const { return space_; }
    const Matrix& matrix() const { return m_; }

    Matrix apply(const Matrix& rho) const;
    DensityOperator apply(const DensityOperator& rho) const;

    SuperOperator operator*(const SuperOperator& o) const {
        require_same_space(space_, o.space_, "SuperOperator::operator*");
        return SuperOperator(space_, m_ * o.m_);
    }
    SuperOperator operator+(const SuperOperator& o) const {
        require_same_space(space_, o.space_, "SuperOperator::operator+");
        return SuperOperator(space_, m_ + o.m_);
    }
    SuperOperator operator*(double s) const { return SuperOperator(space_, m_ * s); }

    /// Hilbert-Schmidt adjoint map.
    SuperOperator adjoint() const { return SuperOperator(space_, m_.adjoint()); }

private:
    HilbertSpace space_;
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Vectorization
// ---------------------------------------------------------------------------

inline Vector vectorize(const Matrix& rho) {
    return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline Vector vectorize(const DensityOperator& rho) { return vectorize(rho.matrix()); }

/// Raw inverse of vectorize(); throws when the length is not a perfect square.
inline Matrix devectorize_matrix(const Vector& v) {
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (n * n != v.size()) {
        throw StructuralError("devectorize: length " + std::to_string(v.size()) + " is not a perfect square");
    }
    return Eigen::Map<const Matrix>(v.data(), n, n);
}

inline DensityOperator devectorize(const Vector& v, const HilbertSpace& space) {
    Matrix m = devectorize_matrix(v);
    if (m.rows() != space.total_dim()) throw StructuralError("devectorize: length does not match space");
    return DensityOperator(space, std::move(m));
}

inline Matrix SuperOperator::apply(const Matrix& rho) const {
    if (rho.rows() != space_.total_dim()) throw StructuralError("SuperOperator::apply: dimension mismatch");
    Vector out = m_ * vectorize(rho);
    return devectorize_matrix(out);
}

inline DensityOperator SuperOperator::apply(const DensityOperator& rho) const {
    require_same_space(space_, rho.space(), "SuperOperator::apply");
    return DensityOperator(space_, apply(rho.matrix()));
}

// ---------------------------------------------------------------------------
// Standard single-subsystem operators
// ---------------------------------------------------------------------------

namespace ops {

inline Matrix identity(int d) { return Matrix::Identity(d, d); }

inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return m;
}

inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

/// |i><j| on a d-level system.
inline Matrix ket_bra(int d, int i, int j) {
    if (i < 0 || j < 0 || i >= d || j >= d) throw InvalidArgument("ket_bra: index out of range");
    Matrix m = Matrix::Zero(d, d);
    m(i, j) = 1.0;
    return m;
}

inline Matrix projector(int d, int i) { return ket_bra(d, i, i); }

/// Bosonic annihilation operator truncated to `fock_dim` levels.
inline Matrix annihilation(int fock_dim) {
    Matrix m = Matrix::Zero(fock_dim, fock_dim);
    for (int n = 1; n < fock_dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

inline Matrix number(int fock_dim) {
    Matrix m = Matrix::Zero(fock_dim, fock_dim);
    for (int n = 0; n < fock_dim; ++n) m(n, n) = static_cast<double>(n);
    return m;
}

inline Matrix hadamard() {
    Matrix m(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
}

inline Matrix cnot() {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 3) = 1.0;
    m(3, 2) = 1.0;
    return m;
}

/// diag(1, 1, 1, e^{i theta}).
inline Matrix controlled_phase(double theta) {
    Matrix m = Matrix::Identity(4, 4);
    m(3, 3) = std::exp(I_unit * theta);
    return m;
}

/// |0><0| (x) I + |1><1| (x) u.
inline Matrix controlled(const Matrix& u) {
    const auto d = u.rows();
    Matrix m = Matrix::Zero(2 * d, 2 * d);
    m.topLeftCorner(d, d).setIdentity();
    m.bottomRightCorner(d, d) = u;
    return m;
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Composite-system operations
// ---------------------------------------------------------------------------

/// Kronecker product of the operands in layout order; the result space is the concatenation.
inline Operator tensor_product(const std::vector<Operator>& factors) {
    if (factors.empty()) throw InvalidArgument("tensor_product: no operands");
    Matrix m = factors.front().matrix();
    HilbertSpace space = factors.front().space();
    bool herm = factors.front().hermitian_hint();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        m = kron(m, factors[i].matrix());
        space = space * factors[i].space();
        herm = herm && factors[i].hermitian_hint();
    }
    return Operator(std::move(space), std::move(m), herm);
}

/// Operator product over a given layout: factor i must act on subsystem i.
inline Operator tensor_product(const std::vector<Matrix>& factors, const HilbertSpace& space) {
    if (static_cast<int>(factors.size()) != space.size()) {
        throw StructuralError("tensor_product: expected " + std::to_string(space.size()) + " factors, got " +
                              std::to_string(factors.size()));
    }
    Matrix m(1, 1);
    m(0, 0) = 1.0;
    for (int i = 0; i < space.size(); ++i) {
        const auto& f = factors[static_cast<std::size_t>(i)];
        if (f.rows() != space.dim(i) || f.cols() != space.dim(i)) {
            throw StructuralError("tensor_product: factor for subsystem " + std::to_string(i) + " is " +
                                  std::to_string(f.rows()) + "x" + std::to_string(f.cols()) + ", expected dimension " +
                                  std::to_string(space.dim(i)));
        }
        m = kron(m, f);
    }
    return Operator(space, std::move(m));
}

/// Places a single-subsystem operator at `site`, identity elsewhere.
inline Operator embed(const Matrix& op, int site, const HilbertSpace& space) {
    if (site < 0 || site >= space.size()) {
        throw InvalidArgument("embed: site " + std::to_string(site) + " out of range for space " + space.describe());
    }
    if (op.rows() != space.dim(site) || op.cols() != space.dim(site)) {
        throw StructuralError("embed: operator dimension " + std::to_string(op.rows()) +
                              " does not match subsystem " + std::to_string(site) + " of dimension " +
                              std::to_string(space.dim(site)));
    }
    const long left = std::accumulate(space.subsystem_dims().begin(), space.subsystem_dims().begin() + site, 1L,
                                      std::multiplies<long>());
    const long right = space.total_dim() / (left * space.dim(site));
    Matrix m = kron(kron(Matrix::Identity(left, left), op), Matrix::Identity(right, right));
    return Operator(space, std::move(m), hermiticity_defect(op) <= tolerances().hermitian);
}

inline Operator embed(const Operator& op, int site, const HilbertSpace& space) {
    if (op.space().size() != 1) throw StructuralError("embed: operator must act on a single subsystem");
    return embed(op.matrix(), site, space);
}

namespace detail {

/// Row-major multi-index decomposition with subsystem 0 most significant.
inline std::vector<int> digits(long index, const std::vector<int>& dims) {
    std::vector<int> out(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        out[k] = static_cast<int>(index % dims[k]);
        index /= dims[k];
    }
    return out;
}

}  // namespace detail

/// Reduced density matrix on the `keep` subsystems (kept in increasing index order).
inline Matrix partial_trace(const Matrix& rho, const HilbertSpace& space, const std::set<int>& keep) {
    if (keep.empty()) throw InvalidArgument("partial_trace: keep set is empty");
    for (int k : keep) {
        if (k < 0 || k >= space.size()) throw InvalidArgument("partial_trace: subsystem " + std::to_string(k) + " out of range");
    }
    const auto& dims = space.subsystem_dims();
    const long d = space.total_dim();
    long dk = 1;
    for (int k : keep) dk *= dims[static_cast<std::size_t>(k)];
    const long dt = d / dk;

    std::vector<long> kept_index(static_cast<std::size_t>(d)), traced_index(static_cast<std::size_t>(d));
    for (long i = 0; i < d; ++i) {
        const auto dig = detail::digits(i, dims);
        long ki = 0, ti = 0;
        for (std::size_t s = 0; s < dims.size(); ++s) {
            if (keep.count(static_cast<int>(s))) ki = ki * dims[s] + dig[s];
            else ti = ti * dims[s] + dig[s];
        }
        kept_index[static_cast<std::size_t>(i)] = ki;
        traced_index[static_cast<std::size_t>(i)] = ti;
    }
    // Group full indices by traced index so the inner loop only touches matching pairs.
    std::vector<std::vector<long>> groups(static_cast<std::size_t>(dt));
    for (long i = 0; i < d; ++i) groups[static_cast<std::size_t>(traced_index[static_cast<std::size_t>(i)])].push_back(i);

    Matrix out = Matrix::Zero(dk, dk);
    for (const auto& g : groups) {
        for (long i : g) {
            for (long j : g) {
                out(kept_index[static_cast<std::size_t>(i)], kept_index[static_cast<std::size_t>(j)]) += rho(i, j);
            }
        }
    }
    return out;
}

inline DensityOperator partial_trace(const DensityOperator& rho, const std::set<int>& keep) {
    Matrix m = partial_trace(rho.matrix(), rho.space(), keep);
    std::vector<int> kd;
    for (int k : keep) kd.push_back(rho.space().dim(k));
    if (kd.size() == 1 && kd.front() < 2) throw InvalidArgument("partial_trace: degenerate subsystem");
    return DensityOperator(HilbertSpace(kd), std::move(m));
}

/// Re Tr{C^dagger rho}.
inline double overlap_fidelity(const Matrix& rho, const Matrix& target) {
    if (rho.rows() != target.rows() || rho.cols() != target.cols()) {
        throw StructuralError("overlap_fidelity: dimension mismatch");
    }
    return (target.adjoint() * rho).trace().real();
}

inline double overlap_fidelity(const DensityOperator& rho, const Operator& target) {
    require_same_space(rho.space(), target.space(), "overlap_fidelity");
    return overlap_fidelity(rho.matrix(), target.matrix());
}

}  // namespace dqpe
