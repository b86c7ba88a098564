#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>

#include "chemrep/assembly.hpp"

namespace chemrep {

struct LinearSolveConfig {
    enum class Method { Direct, ConjugateGradient, BiCGStab };
    Method method = Method::Direct;
    double rel_tol = 1e-12;
    int max_iter = 5000;
};

/// One-shot linear solve. Throws std::runtime_error on factorization failure
/// or non-convergence within max_iter.
Eigen::VectorXd solve_linear(const SparseOperator& A, const Eigen::VectorXd& b,
                             const LinearSolveConfig& cfg = {});

/// Cached SPD factorization (LDLT). The matrix is copied at compute time.
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const SparseOperator& A) { compute(A); }
    void compute(const SparseOperator& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool ready_ = false;
};

/// Cached sparse LU with pattern reuse: the first factorization analyzes the
/// pattern, later ones only refactor numerically (patterns must match).
class LuSolver {
public:
    void factorize(const SparseOperator& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    bool analyzed_ = false;
    bool ready_ = false;
};

struct NewtonConfig {
    double tol = 1e-8;
    int max_iter = 30;
    double damping = 1.0; // step scaling in (0,1]
};

struct NewtonResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
};

/// Newton iteration with combined stopping rule:
/// ||r|| <= tol * max(1, ||r0||)  or  ||dx|| <= tol * (1 + ||x||).
/// Pass a persistent LuSolver to reuse the symbolic factorization across
/// calls with an unchanged Jacobian pattern.
NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                          const std::function<SparseOperator(const Eigen::VectorXd&)>& jacobian,
                          Eigen::VectorXd x0, const NewtonConfig& cfg,
                          LuSolver* cache = nullptr);

struct PicardConfig {
    double tol = 1e-4; // relative-change threshold
    int max_iter = 200;
};

} // namespace chemrep
