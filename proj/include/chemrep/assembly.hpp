#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "chemrep/fe_space.hpp"

namespace chemrep {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Assembled bilinear form in compressed-row storage.
struct SparseOperator {
    SpMat mat;
    bool symmetric = false;

    int rows() const { return static_cast<int>(mat.rows()); }
    int cols() const { return static_cast<int>(mat.cols()); }
};

/// x' A x
double quadratic_form(const SparseOperator& A, const Eigen::VectorXd& x);

/// Consistent mass matrix (degree-4 quadrature; exact for P1 and P2).
SparseOperator assemble_mass(const FESpace& space);

/// Diagonal lumped mass for P1 (row sums of the consistent matrix, equal to
/// the vertex-interpolation pairing (.,.)^h). Throws for degree != 1.
SparseOperator assemble_lumped_mass(const FESpace& space);

/// Stiffness matrix (grad u, grad v).
SparseOperator assemble_stiffness(const FESpace& space);

/// Mixed mass M[i,j] = (phi_j^trial, psi_i^test) between two spaces on the
/// same mesh.
SparseOperator assemble_mixed_mass(const FESpace& test, const FESpace& trial);

/// Vector-P1 block mass on the sigma space (no constraints applied).
SparseOperator assemble_sigma_mass(const SigmaSpace& sigma);

/// B form on the sigma space: (div s, div t) + (rot s, rot t) + (s, t),
/// assembled without constraints; its quadratic form is the H^1_sigma norm
/// squared of conforming fields.
SparseOperator assemble_B(const SigmaSpace& sigma);

/// Pins constrained dofs: zeroes their rows and columns and sets a unit
/// diagonal, preserving symmetry. Right-hand sides must be zeroed at the
/// same dofs before solving.
void pin_constrained(SparseOperator& op, const SigmaSpace& sigma);
void zero_constrained(Eigen::VectorXd& rhs, const SigmaSpace& sigma);

/// b_i = (u grad v, grad phi_i) over the test space (the UV coupling term).
/// Spaces must share a mesh.
Eigen::VectorXd assemble_trilinear_uv(const ScalarField& u, const ScalarField& v,
                                      const FESpace& test);

/// b_i = (f, phi_i) with f given pointwise, using the requested rule.
Eigen::VectorXd assemble_load(const FESpace& space, const std::function<double(double, double)>& f,
                              const QuadratureRule& rule);

/// Integral of a pointwise function over the mesh.
double integrate_mesh(const StructuredMesh& mesh, const std::function<double(double, double)>& f,
                      const QuadratureRule& rule);

/// Lumped L2 projection Q^h onto a P1 space: (Q^h f, u)^h = (f, u).
ScalarField l2_project_lumped(const FESpace& p1_space,
                              const std::function<double(double, double)>& f,
                              const QuadratureRule& rule);

/// Consistent L2 projection onto a scalar space.
ScalarField l2_project(const FESpace& space, const std::function<double(double, double)>& f,
                       const QuadratureRule& rule);

/// Consistent L2 projection of a vector function into the constrained sigma
/// space (pinned dofs stay exactly zero).
VectorField l2_project_sigma(const SigmaSpace& sigma,
                             const std::function<Vec2(double, double)>& g,
                             const QuadratureRule& rule);

/// The discrete operator A_h on a scalar space, defined by
/// (A_h v, w) = (grad v, grad w) + (v, w) for all w. Keeps the mass
/// factorization so repeated applications are cheap.
class AhOperator {
public:
    explicit AhOperator(const FESpace& space);

    const FESpace& space() const { return *space_; }
    const SparseOperator& mass() const { return mass_; }
    const SparseOperator& stiffness() const { return stiffness_; }

    /// Coefficients of A_h v (solves M x = (K + M) v).
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    /// Coefficients of (A_h - I) v (solves M x = K v).
    Eigen::VectorXd apply_minus_identity(const Eigen::VectorXd& v) const;
    /// ||(A_h - I) v||_0^2 = (K v)' M^{-1} (K v).
    double minus_identity_norm_sq(const Eigen::VectorXd& v) const;

private:
    const FESpace* space_;
    SparseOperator mass_;
    SparseOperator stiffness_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass_solver_;
};

} // namespace chemrep
