#pragma once

#include <string>

#include "deflatecrb/common.hpp"

namespace deflatecrb {

// Problem sizes: N measurements, K dictionary atoms, L_A sources of
// interest, L_B interferers. Requires K > N > L_A + L_B >= 2.
struct ProblemDims {
    Eigen::Index n = 0;
    Eigen::Index k = 0;
    Eigen::Index l_a = 0;
    Eigen::Index l_b = 0;

    ProblemDims() = default;
    ProblemDims(Eigen::Index n_, Eigen::Index k_, Eigen::Index la_, Eigen::Index lb_)
        : n(n_), k(k_), l_a(la_), l_b(lb_) {
        validate();
    }

    Eigen::Index l() const { return l_a + l_b; }

    void validate() const {
        if (l_a < 1) throw InvalidInput("ProblemDims: L_A must be >= 1");
        if (l_b < 0) throw InvalidInput("ProblemDims: L_B must be >= 0");
        if (l() < 2) throw InvalidInput("ProblemDims: L_A + L_B must be >= 2");
        if (!(k > n && n > l()))
            throw InvalidInput("ProblemDims: need K > N > L_A + L_B (got K=" +
                               std::to_string(k) + ", N=" + std::to_string(n) +
                               ", L=" + std::to_string(l()) + ")");
    }
};

// Limit ratios of the doubly asymptotic regime:
//   rho = N/L_A, c = L_B/L_A, rho_tilde = rho - c, rho_bar = N/L.
struct AsymptoticRatios {
    double rho = 0.0;
    double c = 0.0;
    double rho_tilde = 0.0;
    double rho_bar = 0.0;

    static AsymptoticRatios from_limits(double rho, double c) {
        if (c < 0.0) throw InvalidInput("AsymptoticRatios: c must be >= 0");
        AsymptoticRatios r;
        r.rho = rho;
        r.c = c;
        r.rho_tilde = rho - c;
        r.rho_bar = rho / (1.0 + c);
        r.check();
        return r;
    }

    static AsymptoticRatios from_dims(const ProblemDims& d) {
        return from_limits(static_cast<double>(d.n) / static_cast<double>(d.l_a),
                           static_cast<double>(d.l_b) / static_cast<double>(d.l_a));
    }

    void check() const {
        if (!(rho > 1.0)) throw InvalidInput("AsymptoticRatios: rho must be > 1");
        if (!(rho_tilde > 1.0)) throw InvalidInput("AsymptoticRatios: rho_tilde must be > 1");
        if (!(rho_bar > 1.0)) throw InvalidInput("AsymptoticRatios: rho_bar must be > 1");
    }
};

} // namespace deflatecrb
