#pragma once

#include <cmath>
#include <string>

#include "deflatecrb/common.hpp"
#include "deflatecrb/dims.hpp"
#include "deflatecrb/model.hpp"

namespace deflatecrb {

enum class BoundModel { Deflated, Joint, Ideal };

struct NoiseCalibration {
    double sigma2 = 0.0;        // noise variance of the calibrated model
    double snr_target_db = 0.0;
    double sigma_alpha2 = 0.0;
    double sigma_beta2 = 0.0;

    double sir() const {
        return sigma_beta2 > 0.0 ? sigma_alpha2 / sigma_beta2
                                 : std::numeric_limits<double>::infinity();
    }
};

struct BoundReport {
    double c_deflated = 0.0;
    double c_joint = 0.0;
    double c_ideal = 0.0;
    double c_deflated_inf = 0.0;
    double c_joint_inf = 0.0;
    double c_ideal_inf = 0.0;
    double snr_na_deflated = 0.0;
    double snr_na_joint = 0.0;
    double snr_na_ideal = 0.0;
    AsymptoticRatios ratios;
};

namespace detail {

// Tr{G^{-1}} for a symmetric PD Gram matrix, as a sum of inverse
// eigenvalues, with a condition-number guard.
inline double trace_of_inverse_spd(const Matrix& gram, double cond_limit = 1e12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double lmin = ev[0];
    const double lmax = ev[ev.size() - 1];
    if (!(lmin > 0.0) || lmax / lmin > cond_limit) {
        const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        throw NumericalFailure("trace_of_inverse: Gram matrix singular or ill-conditioned"
                               " (condition number " + std::to_string(cond) + ")");
    }
    return ev.cwiseInverse().sum();
}

// A^T P_perp A without forming the N x N projector: Gram minus the part
// captured by the thin Q factor of B.
inline Matrix deflated_gram(const Matrix& a_psi, const Matrix& b_psi) {
    Matrix gram = a_psi.transpose() * a_psi;
    if (b_psi.cols() == 0) return gram;
    Eigen::HouseholderQR<Matrix> qr(b_psi);
    Matrix q_thin = qr.householderQ() * Matrix::Identity(b_psi.rows(), b_psi.cols());
    Matrix qa = q_thin.transpose() * a_psi;
    gram.noalias() -= qa.transpose() * qa;
    return gram;
}

} // namespace detail

// sigma^2 / L_A * Tr{(A^T P_perp A)^{-1}}
inline double ecrb_deflated(const Matrix& a_psi, const Matrix& b_psi, double sigma2) {
    const Matrix gram = detail::deflated_gram(a_psi, b_psi);
    return sigma2 / static_cast<double>(a_psi.cols()) * detail::trace_of_inverse_spd(gram);
}

// sigma0^2 / L * Tr{([A B]^T [A B])^{-1}}
inline double ecrb_joint(const Matrix& a_psi, const Matrix& b_psi, double sigma0_2) {
    const Eigen::Index l = a_psi.cols() + b_psi.cols();
    Matrix stacked(a_psi.rows(), l);
    stacked << a_psi, b_psi;
    const Matrix gram = stacked.transpose() * stacked;
    return sigma0_2 / static_cast<double>(l) * detail::trace_of_inverse_spd(gram);
}

// sigma1^2 / L_A * Tr{(A^T A)^{-1}}
inline double ecrb_ideal(const Matrix& a_psi, double sigma1_2) {
    const Matrix gram = a_psi.transpose() * a_psi;
    return sigma1_2 / static_cast<double>(a_psi.cols()) * detail::trace_of_inverse_spd(gram);
}

// Output (non-asymptotic) SNR for each model.
inline double snr_na(BoundModel model, const Matrix& a_psi, const Matrix& b_psi,
                     double sigma_alpha2, double sigma_beta2, double sigma2) {
    if (!(sigma2 > 0.0)) throw InvalidInput("snr_na: noise variance must be > 0");
    const double n = static_cast<double>(a_psi.rows());
    switch (model) {
        case BoundModel::Deflated: {
            const double tr = detail::deflated_gram(a_psi, b_psi).trace();
            const double retained = n - static_cast<double>(b_psi.cols());
            return sigma_alpha2 * tr / (sigma2 * retained);
        }
        case BoundModel::Joint: {
            const double tr_a = (a_psi.transpose() * a_psi).trace();
            const double tr_b = (b_psi.transpose() * b_psi).trace();
            return (sigma_alpha2 * tr_a + sigma_beta2 * tr_b) / (sigma2 * n);
        }
        case BoundModel::Ideal: {
            const double tr_a = (a_psi.transpose() * a_psi).trace();
            return sigma_alpha2 * tr_a / (sigma2 * n);
        }
    }
    throw InvalidInput("snr_na: unknown model");
}

// Closed asymptotic forms.

inline double ecrb_deflated_asym(const AsymptoticRatios& r, double sigma_alpha2, double snr) {
    if (!(r.rho_tilde > 1.0))
        throw InvalidInput("ecrb_deflated_asym: bound diverges for rho_tilde <= 1");
    if (!(snr > 0.0)) throw InvalidInput("ecrb_deflated_asym: SNR must be > 0");
    return sigma_alpha2 / snr / (r.rho_tilde - 1.0);
}

inline double asym_snr0(const AsymptoticRatios& r, double sigma_alpha2, double sigma_beta2,
                        double sigma0_2) {
    return (sigma_alpha2 - sigma_beta2) / (sigma0_2 * r.rho) + sigma_beta2 / (sigma0_2 * r.rho_bar);
}

inline double ecrb_joint_asym(const AsymptoticRatios& r, double sigma_alpha2,
                              double sigma_beta2, double sigma0_2) {
    if (!(r.rho_bar > 1.0)) throw InvalidInput("ecrb_joint_asym: requires rho_bar > 1");
    const double snr0 = asym_snr0(r, sigma_alpha2, sigma_beta2, sigma0_2);
    if (!(snr0 > 0.0)) throw NumericalFailure("ecrb_joint_asym: non-positive asymptotic SNR0");
    const double sir_inv = sigma_beta2 / sigma_alpha2;
    const double mix = (1.0 - sir_inv) / r.rho + sir_inv / r.rho_bar;
    return sigma_alpha2 / snr0 * mix * r.rho_bar / (r.rho_bar - 1.0);
}

inline double ecrb_ideal_asym(const AsymptoticRatios& r, double sigma_alpha2, double snr1) {
    if (!(r.rho > 1.0)) throw InvalidInput("ecrb_ideal_asym: requires rho > 1");
    if (!(snr1 > 0.0)) throw InvalidInput("ecrb_ideal_asym: SNR must be > 0");
    return sigma_alpha2 / snr1 / (r.rho - 1.0);
}

// Invert the asymptotic output-SNR definition of the given model to get
// the noise variance hitting a target SNR (in dB).
inline NoiseCalibration calibrate_noise(double snr_db, double sigma_alpha2,
                                        double sigma_beta2, const AsymptoticRatios& r,
                                        BoundModel model) {
    if (!std::isfinite(snr_db)) throw InvalidInput("calibrate_noise: SNR target must be finite");
    const double snr = from_db(snr_db);
    NoiseCalibration cal;
    cal.snr_target_db = snr_db;
    cal.sigma_alpha2 = sigma_alpha2;
    cal.sigma_beta2 = sigma_beta2;
    switch (model) {
        case BoundModel::Deflated:
        case BoundModel::Ideal:
            cal.sigma2 = sigma_alpha2 / (r.rho * snr);
            break;
        case BoundModel::Joint:
            // SNR0 = [(sa2 - sb2)/rho + sb2/rho_bar] / sigma0^2
            cal.sigma2 = ((sigma_alpha2 - sigma_beta2) / r.rho + sigma_beta2 / r.rho_bar) / snr;
            break;
    }
    if (!(cal.sigma2 > 0.0))
        throw NumericalFailure("calibrate_noise: calibration yields non-positive variance");
    return cal;
}

} // namespace deflatecrb
