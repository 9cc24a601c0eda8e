#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "deflatecrb/common.hpp"
#include "deflatecrb/dims.hpp"

namespace deflatecrb {

enum class EntryDist { Gaussian, Rademacher };
enum class AmplitudePrior { Gaussian, RademacherScaled };

// Disjoint sorted supports: T (sources of interest), T~ (interferers).
struct SupportPair {
    IndexSet t;
    IndexSet t_tilde;
};

struct SceneRealization {
    Matrix h;            // N x K dictionary
    SupportPair supports;
    Vector alpha;        // L_A amplitudes of interest
    Vector beta;         // L_B interfering amplitudes
    double noise_var = 0.0;
    Vector noise;        // the drawn noise vector n
    Vector y;            // observation

    Matrix a_psi() const { return columns_at(h, supports.t); }
    Matrix b_psi() const { return columns_at(h, supports.t_tilde); }

    // The implied K-sparse vector x with x_T = alpha, x_T~ = beta.
    Vector full_sparse_vector() const {
        Vector x = Vector::Zero(h.cols());
        for (std::size_t i = 0; i < supports.t.size(); ++i)
            x[supports.t[i]] = alpha[static_cast<Eigen::Index>(i)];
        for (std::size_t i = 0; i < supports.t_tilde.size(); ++i)
            x[supports.t_tilde[i]] = beta[static_cast<Eigen::Index>(i)];
        return x;
    }
};

struct DeflatedSystem {
    Matrix u;      // N x (N-L_B) orthonormal basis of <B_psi>^perp
    Vector y_bar;  // U^T y
    Matrix h_bar;  // U^T H

    // F = U^T A_psi, the deflated matrix of interest
    Matrix f(const SupportPair& supports) const { return columns_at(h_bar, supports.t); }
};

// i.i.d. entries with variance 1/N. Gaussian by default; the Rademacher
// alternative keeps the same second moment.
inline Matrix gen_dictionary(const ProblemDims& dims, std::mt19937_64& rng,
                             EntryDist dist = EntryDist::Gaussian) {
    const double s = 1.0 / std::sqrt(static_cast<double>(dims.n));
    if (dist == EntryDist::Gaussian) return gaussian_matrix(dims.n, dims.k, s, rng);
    std::bernoulli_distribution coin(0.5);
    Matrix m(dims.n, dims.k);
    for (Eigen::Index j = 0; j < dims.k; ++j)
        for (Eigen::Index i = 0; i < dims.n; ++i) m(i, j) = coin(rng) ? s : -s;
    return m;
}

// Psi * Phi with [Phi]_{k,k'} = g((k-k') T_S) and Psi i.i.d. Gaussian(0, 1/N).
inline Matrix gen_steering_dictionary(const std::function<double(double)>& g,
                                      double sample_period, const ProblemDims& dims,
                                      std::mt19937_64& rng) {
    if (!(sample_period > 0.0)) throw InvalidInput("gen_steering_dictionary: T_S must be > 0");
    Matrix phi(dims.k, dims.k);
    for (Eigen::Index kk = 0; kk < dims.k; ++kk) {
        for (Eigen::Index kp = 0; kp < dims.k; ++kp) {
            const double v = g(static_cast<double>(kk - kp) * sample_period);
            if (!std::isfinite(v))
                throw InvalidInput("gen_steering_dictionary: waveform sample not finite");
            phi(kk, kp) = v;
        }
    }
    const Matrix psi = gen_dictionary(dims, rng);
    return psi * phi;
}

// Uniform disjoint supports: draw L_A + L_B distinct indices by partial
// Fisher-Yates, split, sort.
inline SupportPair draw_supports(Eigen::Index k, Eigen::Index l_a, Eigen::Index l_b,
                                 std::mt19937_64& rng) {
    const Eigen::Index l = l_a + l_b;
    if (l > k) throw InvalidInput("draw_supports: L_A + L_B > K");
    std::vector<Eigen::Index> pool(k);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < l; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, k - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    SupportPair sp;
    sp.t.assign(pool.begin(), pool.begin() + l_a);
    sp.t_tilde.assign(pool.begin() + l_a, pool.begin() + l);
    std::sort(sp.t.begin(), sp.t.end());
    std::sort(sp.t_tilde.begin(), sp.t_tilde.end());
    return sp;
}

inline SupportPair draw_supports(const ProblemDims& dims, std::mt19937_64& rng) {
    return draw_supports(dims.k, dims.l_a, dims.l_b, rng);
}

inline Vector draw_amplitudes(Eigen::Index size, double variance, AmplitudePrior prior,
                              std::mt19937_64& rng) {
    if (!(variance > 0.0)) throw InvalidInput("draw_amplitudes: variance must be > 0");
    const double s = std::sqrt(variance);
    if (prior == AmplitudePrior::Gaussian) return gaussian_vector(size, s, rng);
    std::bernoulli_distribution coin(0.5);
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = coin(rng) ? s : -s;
    return v;
}

inline SceneRealization synthesize_observation(const Matrix& h, const SupportPair& supports,
                                               const Vector& alpha, const Vector& beta,
                                               double noise_var, std::mt19937_64& rng) {
    if (alpha.size() != static_cast<Eigen::Index>(supports.t.size()))
        throw InvalidInput("synthesize_observation: alpha size mismatch");
    if (beta.size() != static_cast<Eigen::Index>(supports.t_tilde.size()))
        throw InvalidInput("synthesize_observation: beta size mismatch");
    if (!(noise_var > 0.0)) throw InvalidInput("synthesize_observation: noise variance must be > 0");

    SceneRealization scene;
    scene.h = h;
    scene.supports = supports;
    scene.alpha = alpha;
    scene.beta = beta;
    scene.noise_var = noise_var;
    scene.noise = gaussian_vector(h.rows(), std::sqrt(noise_var), rng);
    scene.y = columns_at(h, supports.t) * alpha + scene.noise;
    if (beta.size() > 0) scene.y += columns_at(h, supports.t_tilde) * beta;
    return scene;
}

// Orthonormal basis U of the complement of col(b_psi): full Householder QR,
// trailing N - L_B columns of Q. Rank checked against rank_tol * smax.
inline Matrix orth_complement(const Matrix& b_psi, double rank_tol = 1e-10) {
    const Eigen::Index n = b_psi.rows();
    const Eigen::Index lb = b_psi.cols();
    if (lb == 0) return Matrix::Identity(n, n);
    if (lb >= n) throw InvalidInput("orth_complement: need more rows than columns");

    Eigen::JacobiSVD<Matrix> svd(b_psi);
    const auto& sv = svd.singularValues();
    const double smax = sv[0];
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > rank_tol * smax) ++rank;
    if (rank < lb)
        throw NumericalFailure("orth_complement: rank-deficient interference basis (rank " +
                               std::to_string(rank) + " of " + std::to_string(lb) + ")");

    Eigen::HouseholderQR<Matrix> qr(b_psi);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q.rightCols(n - lb);
}

inline DeflatedSystem deflate_system(const Matrix& u, const SceneRealization& scene) {
    if (u.rows() != scene.h.rows())
        throw InvalidInput("deflate_system: basis and dictionary row counts differ");
    DeflatedSystem d;
    d.u = u;
    d.y_bar = u.transpose() * scene.y;
    d.h_bar = u.transpose() * scene.h;
    return d;
}

// P_perp = I - B (B^T B)^{-1} B^T, via the thin Q factor.
inline Matrix projector_perp(const Matrix& b_psi, double rank_tol = 1e-10) {
    const Eigen::Index n = b_psi.rows();
    if (b_psi.cols() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(b_psi);
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (!(sv[i] > rank_tol * sv[0]))
            throw NumericalFailure("projector_perp: rank-deficient input");
    Eigen::HouseholderQR<Matrix> qr(b_psi);
    Matrix q_thin = qr.householderQ() * Matrix::Identity(n, b_psi.cols());
    return Matrix::Identity(n, n) - q_thin * q_thin.transpose();
}

} // namespace deflatecrb
