#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "chemrep/assembly.hpp"

namespace chemrep {

/// Decay-rate constants: C_p is the zero-mean Poincare constant of the
/// domain (first nonzero Neumann eigenvalue), K_p = min(C_p, 1).
struct RateConstants {
    double c_p = 0.0;
    double k_p = 0.0;

    /// Per-step geometric factor (1 + 2 K_p k)^{-1} of the u-decay bound.
    double uv_step_ratio(double k) const { return 1.0 / (1.0 + 2.0 * k_p * k); }
    /// Exponential rate 2 K_p / (1 + 2 K_p k) of the proved u-envelope.
    double u_rate(double k) const { return 2.0 * k_p / (1.0 + 2.0 * k_p * k); }
    /// Rate of the proved v-hat envelope; cases split on 2 K_p vs 1.
    double vhat_rate(double k) const {
        if (2.0 * k_p > 1.0) return 1.0 / (1.0 + k);
        return 2.0 * k_p / (1.0 + 2.0 * k_p * k);
    }
    bool vhat_logarithmic_case() const { return 2.0 * k_p == 1.0; }
};

/// Smallest nonzero eigenvalue of K x = lambda M x on a P1 space (discrete
/// Neumann Laplacian), via inverse iteration with constants deflated.
double poincare_constant(const FESpace& p1_space, double tol = 1e-12, int max_iter = 1000);

RateConstants rate_constants(const FESpace& p1_space);

/// Discrete residual of the continuous energy law evaluated on a scheme
/// trajectory: RE^n = delta_t E(u,v) + ||grad u||^2 + 1/2 ||(A_h - I)v||^2
/// + 1/2 ||grad v||^2 with E(u,v) = 1/2 ||u||^2 + 1/4 ||grad v||^2.
class EnergyResidual {
public:
    EnergyResidual(const SparseOperator& mass_u, const SparseOperator& stiff_u,
                   const AhOperator& ah_v)
        : mass_u_(&mass_u), stiff_u_(&stiff_u), ah_v_(&ah_v) {}

    double energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double residual(const Eigen::VectorXd& u_prev, const Eigen::VectorXd& v_prev,
                    const Eigen::VectorXd& u, const Eigen::VectorXd& v, double k) const;

private:
    const SparseOperator* mass_u_;
    const SparseOperator* stiff_u_;
    const AhOperator* ah_v_;
};

struct DecayFit {
    double rate = 0.0;      // y ~ C exp(-rate t)
    double r_squared = 0.0;
    bool hit_floor = false; // series reached the floor; fit used the pre-floor part
    int n_used = 0;
};

/// Least-squares fit of log y against t over the trailing window (default
/// last 60% of samples). Values at or below the floor terminate the window.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y,
                   double tail_fraction = 0.6, double floor = 1e-14);

/// Nodal minimum for P1; for P2 the minimum is sampled over dofs and
/// quadrature points (an upper bound for the true minimum).
double min_field(const ScalarField& f);

/// Lumped norm squared of the interpolated negative part,
/// |Pi^h(min(u,0))|_h^2 = sum_i d_i min(u_i,0)^2.
double negative_part_norm_sq(const ScalarField& p1_field, const SparseOperator& lumped);

/// W^{1,6}-norm squared of a scalar field, by degree-8 quadrature (the
/// gradient part is exact for P1/P2; the value part is approximate for P2).
double w16_norm_sq(const ScalarField& f);

struct StepRecord {
    int step = 0;
    double t = 0.0;
    double mass_u = 0.0;          // consistent integral of u
    double mass_u_h = 0.0;        // lumped pairing (u, 1)^h
    double energy = 0.0;          // E(u, v)
    double energy_mod = 0.0;      // modified energy (UV: equals E)
    double residual_re = 0.0;     // RE^n, 0 at step 0
    double min_u = 0.0;
    double min_v = 0.0;
    double uhat_sq = 0.0;         // ||u - m0||_0^2
    double grad_or_sigma_sq = 0.0; // ||grad v||_0^2 (UV) or ||sigma||_0^2 (US)
    double vhat_sq = 0.0;         // ||v - m0^2||_0^2
    double cum_k_uhat_h1_sq = 0.0;
    double cum_k_vhat_w16_sq = 0.0;
    int iters = 0;
    double negpart_u_sq = 0.0;    // |Pi^h(u_-)|_h^2
    double uniq_small = 0.0;      // UV: k (||u||_1^2 + ||grad v||_1^2)^2
};

struct RunReport {
    std::vector<StepRecord> records;
    bool failed = false;
    std::string failure_reason;
    double c_p = 0.0;
    double k_p = 0.0;
    double m0 = 0.0;

    static const char* csv_header(); // versioned, fixed column set
    void write_csv(std::ostream& os) const;
};

} // namespace chemrep
