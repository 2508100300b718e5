#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, for minimization over a
// box. Trial points are projected onto the box; when projection makes the
// Wolfe zoom fail the search falls back to Armijo backtracking on the
// projected path.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace dqpe::lbfgs {

struct Options {
    int history = 20;
    int max_iterations = 100;
    int max_linesearch = 40;
    double c1 = 1e-4;
    double c2 = 0.9;
    double gradient_tolerance = 1e-10;  // on the projected gradient, infinity norm
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

enum class Status { converged, max_iterations, line_search_failed, stopped };

struct Report {
    Status status = Status::max_iterations;
    int iterations = 0;
    double value = 0.0;
};

/// Returns f(x) and writes the gradient into g.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;
/// Called after every accepted iterate; returning false stops the run.
using Observer = std::function<bool(int iteration, const Eigen::VectorXd& x, double f)>;

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Options& o) {
    return x.cwiseMax(o.lower).cwiseMin(o.upper);
}

/// Gradient components that could still move x inside the box.
inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Options& o) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double gi = g(i);
        if ((x(i) <= o.lower && gi > 0.0) || (x(i) >= o.upper && gi < 0.0)) continue;
        m = std::max(m, std::abs(gi));
    }
    return m;
}

/// Minimizer of the quadratic through (a, fa) with slope da at a and value fb at b,
/// safeguarded into the middle of [a, b].
inline double interpolate(double a, double fa, double da, double b, double fb) {
    const double h = b - a;
    const double denom = 2.0 * (fb - fa - da * h);
    double t = denom > 0.0 ? a - da * h * h / denom : 0.5 * (a + b);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (a + b);
    return t;
}

}  // namespace detail

inline Report minimize(const Objective& f, Eigen::VectorXd& x, const Options& opt, const Observer& observer = {}) {
    x = detail::project(x, opt);
    Eigen::VectorXd g(x.size());
    double fx = f(x, g);
    Report report;
    report.value = fx;

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int it = 0; it < opt.max_iterations; ++it) {
        if (detail::projected_gradient_norm(x, g, opt) <= opt.gradient_tolerance) {
            report.status = Status::converged;
            report.iterations = it;
            return report;
        }

        // Variables held at a bound by the gradient stay fixed for this iteration.
        std::vector<bool> active(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            active[static_cast<std::size_t>(i)] = (x(i) <= opt.lower && g(i) > 0.0) || (x(i) >= opt.upper && g(i) < 0.0);
        }
        auto free_part = [&](Eigen::VectorXd v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                if (active[static_cast<std::size_t>(i)]) v(i) = 0.0;
            }
            return v;
        };
        const Eigen::VectorXd g_free = free_part(g);

        // Two-loop recursion.
        Eigen::VectorXd q = g_free;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd d = free_part(-q);
        double slope0 = g.dot(d);
        if (!(slope0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = -g_free;
            slope0 = g.dot(d);
        }
        double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(g_free.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;

        // Strong-Wolfe search (bracketing then zoom).
        Eigen::VectorXd x_new, g_new(x.size());
        double f_new = 0.0;
        bool accepted = false;
        double a_prev = 0.0, f_prev = fx, d_prev = slope0;
        double a_lo = 0.0, f_lo = fx, d_lo = slope0, a_hi = 0.0, f_hi = 0.0;
        bool zooming = false;
        for (int ls = 0; ls < opt.max_linesearch; ++ls) {
            if (zooming) step = detail::interpolate(a_lo, f_lo, d_lo, a_hi, f_hi);
            x_new = detail::project(x + step * d, opt);
            f_new = f(x_new, g_new);
            const double d_new = g_new.dot(d);
            if (!std::isfinite(f_new)) {
                step *= 0.5;
                continue;
            }
            const bool armijo = f_new <= fx + opt.c1 * step * slope0;
            if (!zooming) {
                if (!armijo || (ls > 0 && f_new >= f_prev)) {
                    zooming = true;
                    a_lo = a_prev, f_lo = f_prev, d_lo = d_prev;
                    a_hi = step, f_hi = f_new;
                    continue;
                }
                if (std::abs(d_new) <= -opt.c2 * slope0) {
                    accepted = true;
                    break;
                }
                if (d_new >= 0.0) {
                    zooming = true;
                    a_lo = step, f_lo = f_new, d_lo = d_new;
                    a_hi = a_prev, f_hi = f_prev;
                    continue;
                }
                a_prev = step, f_prev = f_new, d_prev = d_new;
                step *= 2.0;
            } else {
                if (!armijo || f_new >= f_lo) {
                    a_hi = step, f_hi = f_new;
                } else {
                    if (std::abs(d_new) <= -opt.c2 * slope0) {
                        accepted = true;
                        break;
                    }
                    if (d_new * (a_hi - a_lo) >= 0.0) a_hi = a_lo, f_hi = f_lo;
                    a_lo = step, f_lo = f_new, d_lo = d_new;
                }
                if (std::abs(a_hi - a_lo) < 1e-14) break;
            }
        }
        if (!accepted) {
            // Armijo backtracking along the projected path.
            step = 1.0;
            for (int ls = 0; ls < opt.max_linesearch; ++ls, step *= 0.5) {
                x_new = detail::project(x + step * d, opt);
                f_new = f(x_new, g_new);
                if (std::isfinite(f_new) && f_new <= fx + opt.c1 * g.dot(x_new - x)) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            report.status = Status::line_search_failed;
            report.iterations = it;
            return report;
        }

        Eigen::VectorXd s = x_new - x, y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        g = g_new;
        fx = f_new;
        report.value = fx;
        report.iterations = it + 1;
        if (observer && !observer(it + 1, x, fx)) {
            report.status = Status::stopped;
            return report;
        }
    }
    report.status = Status::max_iterations;
    return report;
}

}  // namespace dqpe::lbfgs
