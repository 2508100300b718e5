#pragma once

// Reference implementations used only by the tests. Each one computes its
// answer by a route that shares no code with the library path it checks.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;

/// exp(A) by a Taylor series on A / 2^s followed by s squarings.
inline Mat taylor_expm(const Mat& a, int terms = 40) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (norm / std::ldexp(1.0, s) > 0.25) ++s;
    const Mat b = a / std::ldexp(1.0, s);
    Mat term = Mat::Identity(a.rows(), a.cols());
    Mat sum = term;
    for (int k = 1; k < terms; ++k) {
        term = term * b / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

/// Explicit Kronecker product by index arithmetic.
inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            for (long k = 0; k < b.rows(); ++k)
                for (long l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

inline Mat random_unitary(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat z(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) z(i, j) = cplx(n(rng), n(rng));
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (long i = 0; i < d; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
    return q;
}

inline Mat random_hermitian(int d, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat z(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) z(i, j) = cplx(n(rng), n(rng));
    return scale * 0.5 * (z + z.adjoint());
}

inline Mat random_density(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat z(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) z(i, j) = cplx(n(rng), n(rng));
    Mat rho = z * z.adjoint();
    return rho / rho.trace();
}

/// Counting-register distribution of textbook QPE, computed on a statevector:
/// H^n, controlled phases on the eigenstate, then the inverse DFT matrix.
inline std::vector<double> qpe_statevector(double phi, int n) {
    const long size = 1L << n;
    Vec psi(size);
    for (long k = 0; k < size; ++k) psi(k) = std::polar(1.0 / std::sqrt(static_cast<double>(size)), 2.0 * pi * phi * static_cast<double>(k));
    Mat idft(size, size);
    for (long x = 0; x < size; ++x)
        for (long k = 0; k < size; ++k)
            idft(x, k) = std::polar(1.0 / std::sqrt(static_cast<double>(size)), -2.0 * pi * static_cast<double>(x * k) / static_cast<double>(size));
    const Vec out = idft * psi;
    std::vector<double> p(static_cast<std::size_t>(size));
    for (long x = 0; x < size; ++x) p[static_cast<std::size_t>(x)] = std::norm(out(x));
    return p;
}

/// Closed-form QPE outcome probabilities, |1/2^n sum_k e^{2 pi i k (phi - x/2^n)}|^2.
inline std::vector<double> qpe_closed_form(double phi, int n) {
    const long size = 1L << n;
    std::vector<double> p(static_cast<std::size_t>(size));
    for (long x = 0; x < size; ++x) {
        cplx s = 0.0;
        for (long k = 0; k < size; ++k) s += std::polar(1.0, 2.0 * pi * static_cast<double>(k) * (phi - static_cast<double>(x) / static_cast<double>(size)));
        p[static_cast<std::size_t>(x)] = std::norm(s / static_cast<double>(size));
    }
    return p;
}

}  // namespace oracle
