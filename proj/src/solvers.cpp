#include "chemrep/solvers.hpp"

#include <stdexcept>

namespace chemrep {

Eigen::VectorXd solve_linear(const SparseOperator& A, const Eigen::VectorXd& b,
                             const LinearSolveConfig& cfg) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw std::invalid_argument("solve_linear: dimension mismatch");

    switch (cfg.method) {
    case LinearSolveConfig::Method::Direct: {
        if (A.symmetric) {
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(
                Eigen::SparseMatrix<double>(A.mat));
            if (ldlt.info() != Eigen::Success)
                throw std::runtime_error("solve_linear: LDLT factorization failed");
            return ldlt.solve(b);
        }
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Eigen::SparseMatrix<double>(A.mat));
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("solve_linear: LU factorization failed");
        return lu.solve(b);
    }
    case LinearSolveConfig::Method::ConjugateGradient: {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(A.mat);
        cg.setTolerance(cfg.rel_tol);
        cg.setMaxIterations(cfg.max_iter);
        const Eigen::VectorXd x = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw std::runtime_error("solve_linear: CG did not converge within max_iter");
        return x;
    }
    case LinearSolveConfig::Method::BiCGStab: {
        Eigen::BiCGSTAB<SpMat> bicg(A.mat);
        bicg.setTolerance(cfg.rel_tol);
        bicg.setMaxIterations(cfg.max_iter);
        const Eigen::VectorXd x = bicg.solve(b);
        if (bicg.info() != Eigen::Success)
            throw std::runtime_error("solve_linear: BiCGStab did not converge within max_iter");
        return x;
    }
    }
    throw std::logic_error("solve_linear: unknown method");
}

void SpdSolver::compute(const SparseOperator& A) {
    ldlt_.compute(Eigen::SparseMatrix<double>(A.mat));
    if (ldlt_.info() != Eigen::Success)
        throw std::runtime_error("SpdSolver: factorization failed");
    ready_ = true;
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
    if (!ready_) throw std::logic_error("SpdSolver: compute() not called");
    return ldlt_.solve(b);
}

void LuSolver::factorize(const SparseOperator& A) {
    Eigen::SparseMatrix<double> m(A.mat);
    if (!analyzed_) {
        lu_.analyzePattern(m);
        analyzed_ = true;
    }
    lu_.factorize(m);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("LuSolver: factorization failed");
    ready_ = true;
}

Eigen::VectorXd LuSolver::solve(const Eigen::VectorXd& b) const {
    if (!ready_) throw std::logic_error("LuSolver: factorize() not called");
    return lu_.solve(b);
}

NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                          const std::function<SparseOperator(const Eigen::VectorXd&)>& jacobian,
                          Eigen::VectorXd x0, const NewtonConfig& cfg, LuSolver* cache) {
    NewtonResult out;
    out.x = std::move(x0);

    LuSolver local;
    LuSolver* lu = cache ? cache : &local;

    Eigen::VectorXd r = residual(out.x);
    const double r0 = std::max(1.0, r.norm());
    out.residual_norm = r.norm();
    if (out.residual_norm <= cfg.tol * r0) {
        out.converged = true;
        return out;
    }

    for (int it = 0; it < cfg.max_iter; ++it) {
        lu->factorize(jacobian(out.x));
        const Eigen::VectorXd dx = lu->solve(-r);
        out.x += cfg.damping * dx;
        ++out.iterations;

        r = residual(out.x);
        out.residual_norm = r.norm();
        if (out.residual_norm <= cfg.tol * r0 ||
            cfg.damping * dx.norm() <= cfg.tol * (1.0 + out.x.norm())) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

} // namespace chemrep
