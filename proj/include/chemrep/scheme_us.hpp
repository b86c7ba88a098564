#pragma once

#include "chemrep/assembly.hpp"
#include "chemrep/scheme_uv.hpp" // StepError
#include "chemrep/solvers.hpp"

namespace chemrep {

/// Truncation of s onto [eps, 1/eps].
double lambda_eps(double s, double eps);

/// Regularized entropy potential with F'' = 1/lambda_eps, F(1) = F'(1) = 0:
/// s log s - s + 1 on [eps, 1/eps], quadratic C^1 extensions outside.
double F_eps(double s, double eps);
double Fp_eps(double s, double eps);

/// Element-wise constant symmetric mobility matrix. Eigenvectors are the two
/// legs of the element's right angle; eigenvalues are difference quotients of
/// F', so the discrete chain rule Lambda * grad Pi(F'(u)) = grad u holds
/// exactly and all eigenvalues lie in [eps, 1/eps].
struct LambdaField {
    struct Elem {
        double a11 = 0.0, a12 = 0.0, a22 = 0.0; // global-frame entries
        double eig1 = 0.0, eig2 = 0.0;           // leg-frame eigenvalues
    };
    std::vector<Elem> elems;

    Vec2 apply(int e, Vec2 s) const {
        const auto& m = elems[static_cast<std::size_t>(e)];
        return {m.a11 * s.x + m.a12 * s.y, m.a12 * s.x + m.a22 * s.y};
    }
};

/// Throws if an element has no right angle at its first vertex.
LambdaField build_lambda(const ScalarField& u_p1, double eps);

enum class USVariant { Regularized, Plain };

struct USConfig {
    double k = 1e-4;
    double eps = 1e-3; // required in (0,1) for the regularized variant
    USVariant variant = USVariant::Regularized;
    PicardConfig picard;
    NewtonConfig newton; // plain variant only
    int max_step_retries = 3;
    int divergence_window = 5; // growing-change iterations before a retry
};

struct USState {
    ScalarField u;     // P1
    VectorField sigma; // constrained P1 vector
    ScalarField v;     // P1, recovered
    double t = 0.0;
    int step = 0;
};

struct USStepResult {
    USState state;
    int iters = 0;            // Picard or Newton iterations
    double final_change = 0.0; // last relative change (Picard) or residual (Newton)
    double used_k = 0.0;      // may be halved by the divergence guard
    int retries = 0;
    double residual_u = 0.0;    // scheme-equation residuals at the accepted state
    double residual_sigma = 0.0;
};

/// Terms of the per-step modified-energy identity. The time terms use the
/// lumped pairing, matching how the scheme is written, so the signed sum
/// vanishes up to the nonlinear-solver tolerance.
struct USEnergyLawTerms {
    double dt_energy = 0.0;            // delta_t (1/2 |u - m0|_h^2 + 1/4 ||sigma||_0^2)
    double k_half_dtu_sq = 0.0;        // (k/2) |delta_t u|_h^2
    double k_quarter_dtsigma_sq = 0.0; // (k/4) ||delta_t sigma||_0^2
    double uhat_h1_sq = 0.0;           // ||u - m0||_1^2
    double half_sigma_h1_sq = 0.0;     // (1/2) ||sigma||_1^2

    double sum() const {
        return dt_energy + k_half_dtu_sq + k_quarter_dtsigma_sq + uhat_h1_sq + half_sigma_h1_sq;
    }
    double max_term() const;
};

/// Solves the lumped v-recovery equation
/// (delta_t v, w)^h + (grad v, grad w) + (v, w)^h = (u^2, w).
/// On right-angled meshes the system matrix is an M-matrix, so nonnegative
/// (v_prev, u) data yields a nonnegative v.
class VRecovery {
public:
    VRecovery(const FESpace& p1_space, double k);
    ScalarField solve(const ScalarField& prev_v, const ScalarField& u_new) const;

private:
    const FESpace* space_;
    double k_;
    SparseOperator lumped_;
    SpdSolver solver_;
};

ScalarField recover_v(const ScalarField& prev_v, const ScalarField& u_new, double k);

/// Backward-Euler scheme in (u, sigma) with P1 elements and mass lumping on
/// the u time derivative. The regularized variant advances with a Picard
/// loop on the truncated mobility; the plain variant replaces the mobility
/// matrix by u itself and solves the coupled system with Newton.
class USScheme {
public:
    USScheme(const StructuredMesh& mesh, USConfig cfg);

    const USConfig& config() const { return cfg_; }
    const FESpace& space() const { return space_; }
    const SigmaSpace& sigma_space() const { return sigma_; }
    const SparseOperator& mass() const { return mass_; }
    const SparseOperator& lumped_mass() const { return lumped_; }
    const SparseOperator& stiffness() const { return stiff_; }
    const SparseOperator& sigma_mass() const { return sigma_mass_; }
    const SparseOperator& b_form() const { return b_raw_; }
    const AhOperator& ah() const { return ah_; }
    double m0() const { return m0_; }

    USState init(const std::function<double(double, double)>& u0,
                 const std::function<double(double, double)>& v0,
                 const std::function<Vec2(double, double)>& grad_v0);

    USStepResult step(const USState& prev) const;

    /// Modified energy in consistent norms: 1/2 ||u||_0^2 + 1/4 ||sigma||_0^2.
    double modified_energy(const USState& s) const;
    USEnergyLawTerms energy_law_terms(const USState& prev, const USState& next, double used_k) const;

private:
    USStepResult step_regularized(const USState& prev, double k, int retries) const;
    USStepResult step_plain(const USState& prev) const;

    /// g_i = (mob sigma, grad phi_i); mob is Lambda_eps or the scalar u.
    Eigen::VectorXd coupling_u(const LambdaField* lam, const ScalarField* uscal,
                               const VectorField& sigma) const;
    /// h_(j,d) = (mob grad u, e_d phi_j), rows at constrained dofs zeroed.
    Eigen::VectorXd coupling_sigma(const LambdaField* lam, const ScalarField* uscal,
                                   const ScalarField& u) const;

    std::pair<double, double> scheme_residuals(const USState& prev, const USState& next,
                                               double k) const;

    USConfig cfg_;
    FESpace space_;
    SigmaSpace sigma_;
    SparseOperator mass_, lumped_, stiff_;
    SparseOperator sigma_mass_;      // raw block mass
    SparseOperator b_raw_;           // raw B form
    SparseOperator sigma_sys_;       // pinned (1/k) M_sigma + B
    AhOperator ah_;
    Eigen::VectorXd int_weights_;    // M * 1
    double area_ = 0.0;
    double m0_ = 0.0;
    SpdSolver u_solver_;             // (1/k) M_L + K
    SpdSolver sigma_solver_;         // pinned (1/k) M_sigma + B
    std::unique_ptr<VRecovery> v_recovery_;
    std::vector<Eigen::Triplet<double>> jac_const_; // plain variant
    mutable LuSolver newton_lu_;
};

} // namespace chemrep
