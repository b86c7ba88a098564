#pragma once

#include <memory>
#include <stdexcept>

#include "chemrep/assembly.hpp"
#include "chemrep/solvers.hpp"

namespace chemrep {

/// Thrown when a time step fails to converge; carries the last residual.
struct StepError : std::runtime_error {
    StepError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
    double last_residual = 0.0;
};

struct UVConfig {
    double k = 1e-4;
    int v_degree = 2; // companion space degree for v; 2 keeps u^2 in V_h
    NewtonConfig newton;
    LinearSolveConfig linear;
};

struct UVState {
    ScalarField u; // P1
    ScalarField v; // degree v_degree
    double t = 0.0;
    int step = 0;
};

struct UVStepResult {
    UVState state;
    int newton_iters = 0;
    double residual_norm = 0.0;
};

/// The six signed terms of the per-step discrete energy identity; their sum
/// vanishes (up to solver tolerance) when u^2 lies in the v space.
struct UVEnergyLawTerms {
    double dt_energy = 0.0;             // delta_t E(u - m0, v)
    double k_half_dtu_sq = 0.0;         // (k/2) ||delta_t u||_0^2
    double k_quarter_dtgradv_sq = 0.0;  // (k/4) ||delta_t grad v||_0^2
    double uhat_h1_sq = 0.0;            // ||u - m0||_1^2
    double half_ah_minus_i_sq = 0.0;    // (1/2) ||(A_h - I) v||_0^2
    double half_gradv_sq = 0.0;         // (1/2) ||grad v||_0^2

    double sum() const {
        return dt_energy + k_half_dtu_sq + k_quarter_dtgradv_sq + uhat_h1_sq +
               half_ah_minus_i_sq + half_gradv_sq;
    }
    double max_term() const;
};

/// Coupled backward-Euler scheme in the primitive variables (u, v) with
/// (P1, P_{v_degree}) continuous elements, one Newton solve per step.
class UVScheme {
public:
    UVScheme(const StructuredMesh& mesh, UVConfig cfg);

    const UVConfig& config() const { return cfg_; }
    const FESpace& u_space() const { return u_space_; }
    const FESpace& v_space() const { return v_space_; }
    const SparseOperator& mass_u() const { return mass_u_; }
    const SparseOperator& stiffness_u() const { return stiff_u_; }
    const SparseOperator& lumped_mass_u() const { return lumped_u_; }
    const AhOperator& ah_v() const { return ah_v_; }
    double m0() const { return m0_; }
    double domain_area() const { return area_; }

    /// u0 is projected onto P1 (lumped) and shifted so the discrete mean
    /// matches m0 exactly; v0 is interpolated. Negative nodal data only
    /// warns, matching the presets' strictly positive initial data.
    UVState init(const std::function<double(double, double)>& u0,
                 const std::function<double(double, double)>& v0);

    UVStepResult step(const UVState& prev) const;

    /// E(u, v) = 1/2 ||u||_0^2 + 1/4 ||grad v||_0^2
    double energy(const UVState& s) const;
    UVEnergyLawTerms energy_law_terms(const UVState& prev, const UVState& next) const;

    /// Combined residual of the two scheme equations at packed coefficients
    /// x = [u; v], given the previous state. Exposed for verification.
    Eigen::VectorXd residual(const UVState& prev, const Eigen::VectorXd& x) const;
    SparseOperator jacobian(const Eigen::VectorXd& x) const;

    Eigen::VectorXd pack(const UVState& s) const;
    UVState unpack(const Eigen::VectorXd& x, double t, int step) const;

private:
    UVConfig cfg_;
    FESpace u_space_;
    FESpace v_space_;
    SparseOperator mass_u_, stiff_u_, lumped_u_;
    AhOperator ah_v_; // owns mass_v and stiffness_v on the v space
    Eigen::VectorXd int_weights_u_; // M_U * 1, so that int(u) = w . u
    double area_ = 0.0;
    double m0_ = 0.0;
    std::vector<Eigen::Triplet<double>> jac_const_;
    mutable LuSolver newton_lu_;
};

} // namespace chemrep
