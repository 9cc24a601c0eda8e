#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "deflatecrb/bounds.hpp"
#include "deflatecrb/common.hpp"
#include "deflatecrb/dims.hpp"
#include "deflatecrb/model.hpp"

namespace deflatecrb {

// Marchenko-Pastur law with aspect ratio rho_tilde and support edges
// lambda_pm = (1 +- sqrt(rho_tilde))^2.
struct MPLaw {
    double rho_tilde = 0.0;
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;

    explicit MPLaw(double rt) : rho_tilde(rt) {
        if (!(rt > 0.0)) throw InvalidInput("MPLaw: rho_tilde must be > 0");
        const double s = std::sqrt(rt);
        lambda_minus = (1.0 - s) * (1.0 - s);
        lambda_plus = (1.0 + s) * (1.0 + s);
    }
};

struct SpectralSample {
    Vector eigenvalues;  // sorted ascending
    ProblemDims dims;
};

namespace detail {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt_step(const std::function<double(double)>& f, double a, double b,
                         double fa, double fm, double fb, double whole, double tol,
                         int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adapt_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adapt_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 40) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    return adapt_step(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb), tol, depth);
}

} // namespace detail

// Continuous part of the law of the L_A x L_A matrix rho F^T F. With the
// edges (1 +- sqrt(rho_tilde))^2 and rho_tilde > 1 there is no point mass
// and the normalizing constant is 2*pi*x: this is the unique density with
// unit mass, mean rho_tilde, and the Narayana moment sequence implied by
// the quadratic Stieltjes relation.
inline double mp_density(double x, const MPLaw& law) {
    if (!(x > law.lambda_minus) || !(x < law.lambda_plus)) return 0.0;
    return std::sqrt((law.lambda_plus - x) * (x - law.lambda_minus)) / (2.0 * M_PI * x);
}

// Stieltjes transform: the root of z S^2 + (z + 1 - rho_tilde) S + 1 = 0
// with Im S matching the half-plane of z, and the decaying branch
// (S -> -1/z) on the real axis outside the support.
inline std::complex<double> mp_stieltjes(std::complex<double> z, const MPLaw& law) {
    const double rt = law.rho_tilde;
    if (z.imag() == 0.0) {
        const double x = z.real();
        if (x >= law.lambda_minus && x <= law.lambda_plus)
            throw InvalidInput("mp_stieltjes: real argument inside the support");
        if (x == 0.0) {
            // quadratic degenerates; (1 - rt) S + 1 = 0
            if (!(rt > 1.0)) throw InvalidInput("mp_stieltjes: S(0) undefined for rho_tilde <= 1");
            return {1.0 / (rt - 1.0), 0.0};
        }
    }
    const std::complex<double> a = z;
    const std::complex<double> b = z + 1.0 - rt;
    const std::complex<double> c = 1.0;
    const std::complex<double> disc = std::sqrt(b * b - 4.0 * a * c);
    // stable form: pick sign so b + s*disc is large, small root = 2c / (b + s*disc)
    const std::complex<double> q =
        (std::real(std::conj(b) * disc) >= 0.0) ? b + disc : b - disc;
    const std::complex<double> root_small = -2.0 * c / q;
    const std::complex<double> root_big = -q / (2.0 * a);
    std::complex<double> s = root_small;
    if (z.imag() > 0.0 && s.imag() <= 0.0) s = root_big;
    else if (z.imag() < 0.0 && s.imag() >= 0.0) s = root_big;
    return s;
}

// Residual of the quadratic relation at a candidate S (diagnostic).
inline double mp_stieltjes_residual(std::complex<double> z, std::complex<double> s,
                                    const MPLaw& law) {
    if (z == std::complex<double>(0.0, 0.0))
        return std::abs((1.0 - law.rho_tilde) * s + 1.0);
    return std::abs(s - (-1.0 / z + law.rho_tilde / z * s / (1.0 + s)));
}

// k-th moment of the MP law, Narayana-weighted:
//   sum_{i=1..k} (1/k) C(k,i) C(k,i-1) rho_tilde^i
inline double mp_moment(int k, const MPLaw& law) {
    if (k < 1) throw InvalidInput("mp_moment: k must be >= 1");
    double sum = 0.0;
    for (int i = 1; i <= k; ++i) {
        double term = 1.0 / k;
        // C(k,i) * C(k,i-1)
        double c1 = 1.0, c2 = 1.0;
        for (int j = 0; j < i; ++j) c1 = c1 * (k - j) / (j + 1);
        for (int j = 0; j < i - 1; ++j) c2 = c2 * (k - j) / (j + 1);
        term *= c1 * c2 * std::pow(law.rho_tilde, i);
        sum += term;
    }
    return sum;
}

// MP CDF by quadrature from the lower edge.
inline double mp_cdf(double x, const MPLaw& law) {
    if (x <= law.lambda_minus) return 0.0;
    if (x >= law.lambda_plus) return 1.0;
    return detail::integrate([&](double t) { return mp_density(t, law); },
                             law.lambda_minus, x, 1e-9);
}

// Eigenvalues of rho * F^T F (symmetric solver on the small Gram side).
inline SpectralSample spectral_sample(const Matrix& f, const ProblemDims& dims) {
    const double rho = static_cast<double>(dims.n) / static_cast<double>(dims.l_a);
    Matrix gram = rho * (f.transpose() * f);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    SpectralSample s;
    s.eigenvalues = es.eigenvalues();
    s.dims = dims;
    return s;
}

// (1/L_A) sum lambda_i^k of an empirical spectrum.
inline double esd_moments(const SpectralSample& sample, int k) {
    if (sample.eigenvalues.size() == 0) throw InvalidInput("esd_moments: empty spectrum");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < sample.eigenvalues.size(); ++i)
        sum += std::pow(sample.eigenvalues[i], k);
    return sum / static_cast<double>(sample.eigenvalues.size());
}

// Kolmogorov-Smirnov distance between the ESD and the MP CDF.
inline double ks_distance(const SpectralSample& sample, const MPLaw& law) {
    std::vector<double> ev(sample.eigenvalues.data(),
                           sample.eigenvalues.data() + sample.eigenvalues.size());
    std::sort(ev.begin(), ev.end());
    const double n = static_cast<double>(ev.size());
    double d = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const double cdf = mp_cdf(ev[i], law);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
    }
    return d;
}

// Lemma limits: (1/L_A) Tr{(F^T F)^{-1}} -> rho/(rho - c - 1) and
// (1/(N-L_B)) Tr{F^T F} -> 1/rho.
inline std::pair<double, double> lemma1_limits(const AsymptoticRatios& r) {
    if (!(r.rho_tilde > 1.0)) throw InvalidInput("lemma1_limits: requires rho_tilde > 1");
    return {r.rho / (r.rho_tilde - 1.0), 1.0 / r.rho};
}

struct Lemma1Report {
    int trials = 0;
    double mean_inv_trace = 0.0;
    double mean_trace = 0.0;
    double se_inv_trace = 0.0;
    double se_trace = 0.0;
    double limit_inv_trace = 0.0;
    double limit_trace = 0.0;

    double rel_gap_inv() const {
        return std::abs(mean_inv_trace - limit_inv_trace) / limit_inv_trace;
    }
    double rel_gap_tr() const { return std::abs(mean_trace - limit_trace) / limit_trace; }
};

// Draw F either through the physical deflation path (Gaussian A, B then
// F = U^T A) or directly i.i.d. Gaussian(0, 1/N), and compare the two
// normalized traces against the almost-sure limits.
inline Matrix draw_f(const ProblemDims& dims, bool direct, std::mt19937_64& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(dims.n));
    if (direct || dims.l_b == 0)
        return gaussian_matrix(dims.n - dims.l_b, dims.l_a, s, rng);
    Matrix a = gaussian_matrix(dims.n, dims.l_a, s, rng);
    Matrix b = gaussian_matrix(dims.n, dims.l_b, s, rng);
    Matrix u = orth_complement(b);
    return u.transpose() * a;
}

inline Lemma1Report verify_lemma1(const ProblemDims& dims, int trials, std::uint64_t seed,
                                  bool direct = false) {
    const auto ratios = AsymptoticRatios::from_dims(dims);
    if (!(ratios.rho_tilde >= 1.1))
        throw InvalidInput("verify_lemma1: requires rho_tilde >= 1.1 for a stable inverse trace");
    if (trials < 1) throw InvalidInput("verify_lemma1: trials must be >= 1");

    std::vector<double> inv_traces(trials), traces(trials);
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(seed, 0x4c454d31ULL, static_cast<std::uint64_t>(t));
        const Matrix f = draw_f(dims, direct, rng);
        const Matrix gram = f.transpose() * f;
        inv_traces[t] = detail::trace_of_inverse_spd(gram) / static_cast<double>(dims.l_a);
        traces[t] = gram.trace() / static_cast<double>(dims.n - dims.l_b);
    }

    Lemma1Report rep;
    rep.trials = trials;
    auto mean_se = [&](const std::vector<double>& v, double& mean, double& se) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        se = std::sqrt(var / v.size());
    };
    mean_se(inv_traces, rep.mean_inv_trace, rep.se_inv_trace);
    mean_se(traces, rep.mean_trace, rep.se_trace);
    std::tie(rep.limit_inv_trace, rep.limit_trace) = lemma1_limits(ratios);
    return rep;
}

} // namespace deflatecrb
