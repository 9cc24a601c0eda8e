#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "deflatecrb/common.hpp"

namespace deflatecrb {

struct SparseEstimate {
    Vector x_hat;        // length K, zero outside support
    IndexSet support;    // declared nonzeros, sorted
    int iterations = 0;
    double residual_norm = 0.0;
};

struct SolverOptions {
    Eigen::Index sparsity = 1;   // OMP / CoSaMP target
    double lambda = 0.0;         // BPDN l1 weight
    int max_iters = 500;
    double tol = 1e-6;
    bool debias = false;

    void check() const {
        if (sparsity < 1) throw InvalidInput("SolverOptions: sparsity must be >= 1");
        if (lambda < 0.0) throw InvalidInput("SolverOptions: lambda must be >= 0");
        if (!(tol > 0.0)) throw InvalidInput("SolverOptions: tol must be > 0");
    }
};

namespace detail {

// Least squares on a column subset; throws when the subset is (numerically)
// collinear.
inline Vector subset_least_squares(const Matrix& h, const Vector& y, const IndexSet& idx,
                                   double rank_tol = 1e-10) {
    Matrix sub = columns_at(h, idx);
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    qr.setThreshold(rank_tol);
    if (qr.rank() < sub.cols())
        throw NumericalFailure("least squares: selected columns are rank deficient");
    return qr.solve(y);
}

inline SparseEstimate assemble(const Matrix& h, const Vector& y, Eigen::Index k,
                               const IndexSet& support, const Vector& coeffs,
                               int iterations) {
    SparseEstimate est;
    est.x_hat = Vector::Zero(k);
    est.support = support;
    for (std::size_t i = 0; i < support.size(); ++i)
        est.x_hat[support[i]] = coeffs[static_cast<Eigen::Index>(i)];
    est.iterations = iterations;
    est.residual_norm = (y - h * est.x_hat).norm();
    return est;
}

// Indices of the m largest |v[i]|, ties to the lowest index.
inline IndexSet top_indices(const Vector& v, Eigen::Index m) {
    IndexSet idx(v.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(v[a]) > std::abs(v[b]);
    });
    idx.resize(std::min<Eigen::Index>(m, v.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace detail

// Orthogonal Matching Pursuit: greedy atom selection with a full
// least-squares refit on the running support each iteration.
inline SparseEstimate omp(const Matrix& h_bar, const Vector& y_bar, const SolverOptions& opts) {
    opts.check();
    const Eigen::Index k = h_bar.cols();
    if (opts.sparsity > std::min(h_bar.rows(), k))
        throw InvalidInput("omp: sparsity exceeds min(rows, K)");

    IndexSet support;
    Vector coeffs;
    Vector residual = y_bar;
    const double stop_norm = opts.tol * y_bar.norm();
    int iters = 0;
    while (static_cast<Eigen::Index>(support.size()) < opts.sparsity &&
           residual.norm() > stop_norm) {
        Vector corr = h_bar.transpose() * residual;
        for (Eigen::Index j : support) corr[j] = 0.0;
        Eigen::Index best = 0;
        double best_val = -1.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (std::abs(corr[j]) > best_val) {
                best_val = std::abs(corr[j]);
                best = j;
            }
        }
        support.push_back(best);
        std::sort(support.begin(), support.end());
        coeffs = detail::subset_least_squares(h_bar, y_bar, support);
        residual = y_bar - columns_at(h_bar, support) * coeffs;
        ++iters;
    }
    if (support.empty()) coeffs = Vector(0);
    return detail::assemble(h_bar, y_bar, k, support, coeffs, iters);
}

// CoSaMP. The identification size is clamped so the merged support never
// exceeds the row count; without the clamp the merged least squares is
// underdetermined whenever 3s > rows.
inline SparseEstimate cosamp(const Matrix& h_bar, const Vector& y_bar,
                             const SolverOptions& opts) {
    opts.check();
    const Eigen::Index k = h_bar.cols();
    const Eigen::Index rows = h_bar.rows();
    const Eigen::Index s = opts.sparsity;
    if (s > std::min(rows, k)) throw InvalidInput("cosamp: sparsity exceeds min(rows, K)");

    IndexSet support;
    Vector x = Vector::Zero(k);
    Vector residual = y_bar;
    double prev_res = residual.norm();
    int iters = 0;
    if (prev_res == 0.0)
        return detail::assemble(h_bar, y_bar, k, {}, Vector(0), 0);

    for (; iters < opts.max_iters; ++iters) {
        Vector proxy = h_bar.transpose() * residual;
        const Eigen::Index room = rows - static_cast<Eigen::Index>(support.size());
        IndexSet picked = detail::top_indices(proxy, std::min<Eigen::Index>(2 * s, room));

        std::set<Eigen::Index> merged(support.begin(), support.end());
        merged.insert(picked.begin(), picked.end());
        IndexSet merged_v(merged.begin(), merged.end());

        Vector b = detail::subset_least_squares(h_bar, y_bar, merged_v);
        Vector b_full = Vector::Zero(k);
        for (std::size_t i = 0; i < merged_v.size(); ++i)
            b_full[merged_v[i]] = b[static_cast<Eigen::Index>(i)];
        support = detail::top_indices(b_full, s);

        x.setZero();
        for (Eigen::Index j : support) x[j] = b_full[j];
        residual = y_bar - h_bar * x;

        const double res = residual.norm();
        if (std::abs(prev_res - res) < opts.tol * std::max(prev_res, 1e-300)) {
            ++iters;
            break;
        }
        prev_res = res;
    }

    Vector coeffs(support.size());
    for (std::size_t i = 0; i < support.size(); ++i)
        coeffs[static_cast<Eigen::Index>(i)] = x[support[i]];
    return detail::assemble(h_bar, y_bar, k, support, coeffs, iters);
}

namespace detail {

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Largest squared singular value of h by power iteration on h^T h.
inline double lipschitz_estimate(const Matrix& h, int iters = 100, double tol = 1e-8) {
    Vector v = Vector::Ones(h.cols()).normalized();
    double prev = 0.0;
    for (int i = 0; i < iters; ++i) {
        Vector w = h.transpose() * (h * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(norm - prev) < tol * norm) return norm;
        prev = norm;
    }
    return prev;
}

} // namespace detail

// Basis Pursuit DeNoise via accelerated proximal gradient (FISTA) with
// monotone restart: minimize 0.5 ||y - H x||^2 + lambda ||x||_1.
inline SparseEstimate bpdn(const Matrix& h_bar, const Vector& y_bar, const SolverOptions& opts) {
    opts.check();
    if (!y_bar.allFinite() || !h_bar.allFinite())
        throw InvalidInput("bpdn: non-finite inputs");
    const Eigen::Index k = h_bar.cols();
    const double lambda = opts.lambda;

    const double lip = detail::lipschitz_estimate(h_bar);
    if (lip == 0.0) return detail::assemble(h_bar, y_bar, k, {}, Vector(0), 0);
    // small margin over the power-iteration estimate keeps the step valid
    const double step = 1.0 / (1.01 * lip);

    auto objective = [&](const Vector& x) {
        return 0.5 * (y_bar - h_bar * x).squaredNorm() + lambda * x.lpNorm<1>();
    };
    // subgradient optimality residual of the l1 objective
    auto kkt_residual = [&](const Vector& x) {
        const Vector g = h_bar.transpose() * (y_bar - h_bar * x);
        double worst = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (x[j] != 0.0)
                worst = std::max(worst, std::abs(g[j] - lambda * (x[j] > 0.0 ? 1.0 : -1.0)));
            else
                worst = std::max(worst, std::max(0.0, std::abs(g[j]) - lambda));
        }
        return worst;
    };

    Vector x = Vector::Zero(k);
    Vector z = x;
    double t = 1.0;
    double obj = objective(x);
    int iters = 0;
    for (; iters < opts.max_iters; ++iters) {
        Vector grad = h_bar.transpose() * (h_bar * z - y_bar);
        Vector x_next(k);
        for (Eigen::Index j = 0; j < k; ++j)
            x_next[j] = detail::soft_threshold(z[j] - step * grad[j], step * lambda);

        double obj_next = objective(x_next);
        if (obj_next > obj) {
            // restart the momentum from the last accepted point
            t = 1.0;
            z = x;
            grad = h_bar.transpose() * (h_bar * z - y_bar);
            for (Eigen::Index j = 0; j < k; ++j)
                x_next[j] = detail::soft_threshold(z[j] - step * grad[j], step * lambda);
            obj_next = objective(x_next);
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x_next + ((t - 1.0) / t_next) * (x_next - x);
        const double rel_change = std::abs(obj - obj_next) / std::max(obj, 1e-300);
        x = x_next;
        obj = obj_next;
        t = t_next;
        // stop only when the objective has stalled and the subgradient
        // optimality residual is below 10 * tol * lambda
        if (rel_change < opts.tol &&
            (lambda == 0.0 || kkt_residual(x) <= 10.0 * opts.tol * lambda)) {
            ++iters;
            break;
        }
    }

    IndexSet support;
    for (Eigen::Index j = 0; j < k; ++j)
        if (x[j] != 0.0) support.push_back(j);

    Vector coeffs(support.size());
    if (opts.debias && !support.empty() &&
        static_cast<Eigen::Index>(support.size()) <= h_bar.rows()) {
        coeffs = detail::subset_least_squares(h_bar, y_bar, support);
    } else {
        for (std::size_t i = 0; i < support.size(); ++i)
            coeffs[static_cast<Eigen::Index>(i)] = x[support[i]];
    }
    return detail::assemble(h_bar, y_bar, k, support, coeffs, iters);
}

// Least squares restricted to the true support; the reference estimator
// that attains the deflated bound in the linear-Gaussian model.
inline SparseEstimate oracle_ls(const Matrix& h_bar, const Vector& y_bar,
                                const IndexSet& true_support) {
    if (true_support.empty()) throw InvalidInput("oracle_ls: empty support");
    Vector coeffs = detail::subset_least_squares(h_bar, y_bar, true_support);
    IndexSet support = true_support;
    std::sort(support.begin(), support.end());
    return detail::assemble(h_bar, y_bar, h_bar.cols(), support, coeffs, 1);
}

// Normalized squared error (1/L_A) ||alpha_hat - alpha||^2.
inline double mse(const Vector& alpha_hat, const Vector& alpha) {
    if (alpha_hat.size() != alpha.size()) throw InvalidInput("mse: length mismatch");
    return (alpha_hat - alpha).squaredNorm() / static_cast<double>(alpha.size());
}

// Restriction of x_hat to the true support T (amplitude extraction used
// for scoring against the bounds).
inline Vector restrict_to_support(const Vector& x_hat, const IndexSet& t) {
    Vector out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[static_cast<Eigen::Index>(i)] = x_hat[t[i]];
    return out;
}

struct SupportMetrics {
    double hit_rate = 0.0;
    int false_alarms = 0;
};

inline SupportMetrics support_metrics(const SparseEstimate& est, const IndexSet& true_support) {
    SupportMetrics m;
    if (true_support.empty()) return m;
    std::set<Eigen::Index> truth(true_support.begin(), true_support.end());
    int hits = 0;
    for (Eigen::Index j : est.support) {
        if (truth.count(j)) ++hits;
        else ++m.false_alarms;
    }
    m.hit_rate = static_cast<double>(hits) / static_cast<double>(true_support.size());
    return m;
}

} // namespace deflatecrb
