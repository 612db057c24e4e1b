#pragma once

// Test-side reference solvers, independent of the library implementations
// they check: an exact active-set QP for simplex projection, projected
// gradient for simplex-constrained least squares, and a dense linear
// regression via Gaussian elimination.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace testoracle {

using Vec = std::vector<double>;

// Exact min ||x - v||^2 over the probability simplex by enumerating active
// sets (n <= ~16). Feasibility and KKT dual feasibility checked per subset.
inline Vec qp_project_simplex(const Vec& v) {
    const std::size_t n = v.size();
    Vec best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask < (1ULL << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1ULL << i)) {
                sum += v[i];
                ++count;
            }
        const double tau = (sum - 1.0) / count;
        Vec x(n, 0.0);
        bool feasible = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1ULL << i)) {
                x[i] = v[i] - tau;
                if (x[i] < -1e-10) feasible = false;
            } else if (v[i] - tau > 1e-10) {
                feasible = false;  // dual feasibility: excluded coords must not want in
            }
        }
        if (!feasible) continue;
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) dist += (x[i] - v[i]) * (x[i] - v[i]);
        if (dist < best_dist) {
            best_dist = dist;
            best = x;
        }
    }
    for (double& xi : best) xi = std::max(xi, 0.0);
    return best;
}

// min_r sum_k (y_k - r . a_k)^2 over the simplex, by projected gradient
// with the exact projection above.
inline Vec constrained_ls_simplex(const std::vector<Vec>& rows, const Vec& y, int iters = 200000) {
    const std::size_t n = rows.front().size();
    Vec r(n, 1.0 / n);
    // Lipschitz constant bound: 2 * max row norm^2 * #rows
    double lip = 0.0;
    for (const auto& a : rows) {
        double s = 0.0;
        for (double ai : a) s += ai * ai;
        lip += 2.0 * s;
    }
    const double eta = lip > 0.0 ? 1.0 / lip : 1.0;
    for (int it = 0; it < iters; ++it) {
        Vec grad(n, 0.0);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double pred = 0.0;
            for (std::size_t i = 0; i < n; ++i) pred += r[i] * rows[k][i];
            const double e = pred - y[k];
            for (std::size_t i = 0; i < n; ++i) grad[i] += 2.0 * e * rows[k][i];
        }
        Vec step(n);
        for (std::size_t i = 0; i < n; ++i) step[i] = r[i] - eta * grad[i];
        r = qp_project_simplex(step);
    }
    return r;
}

// Solve A x = b in place (partial pivoting). A is row-major n x n.
inline Vec gauss_solve(std::vector<Vec> a, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (std::abs(a[col][col]) < 1e-14) throw std::runtime_error("gauss_solve: singular");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

// Ordinary least squares with intercept: y ~ w . x + b. Returns w then b.
inline Vec linear_regression(const std::vector<Vec>& xs, const Vec& y) {
    const std::size_t d = xs.front().size();
    const std::size_t m = d + 1;
    std::vector<Vec> ata(m, Vec(m, 0.0));
    Vec atb(m, 0.0);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        Vec row = xs[k];
        row.push_back(1.0);
        for (std::size_t i = 0; i < m; ++i) {
            atb[i] += row[i] * y[k];
            for (std::size_t j = 0; j < m; ++j) ata[i][j] += row[i] * row[j];
        }
    }
    // Tiny ridge keeps duplicated grid rows nonsingular.
    for (std::size_t i = 0; i < m; ++i) ata[i][i] += 1e-10;
    return gauss_solve(std::move(ata), std::move(atb));
}

inline double chi_square_statistic(const std::vector<long>& observed, const Vec& expected_probs,
                                   long total) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expect = expected_probs[i] * total;
        if (expect <= 0.0) {
            if (observed[i] != 0) return std::numeric_limits<double>::infinity();
            continue;
        }
        const double diff = observed[i] - expect;
        stat += diff * diff / expect;
    }
    return stat;
}

}  // namespace testoracle
