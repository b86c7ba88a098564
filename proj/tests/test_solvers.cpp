#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "chemrep/assembly.hpp"
#include "chemrep/solvers.hpp"
#include "test_utils.hpp"

using namespace chemrep;
using namespace chemrep::testutil;

namespace {

SparseOperator identity_op(int n) {
    SparseOperator op;
    op.mat.resize(n, n);
    op.mat.setIdentity();
    op.symmetric = true;
    return op;
}

SparseOperator random_spd(int n, std::mt19937& rng) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = dist(rng);
    const Eigen::MatrixXd spd = a.transpose() * a + n * Eigen::MatrixXd::Identity(n, n);
    SparseOperator op;
    op.mat = spd.sparseView();
    op.symmetric = true;
    return op;
}

} // namespace

TEST_CASE("identity solve returns rhs") {
    std::mt19937 rng(1u);
    const Eigen::VectorXd b = random_vector(40, rng);
    const Eigen::VectorXd x = solve_linear(identity_op(40), b);
    CHECK((x - b).norm() == 0.0);
}

TEST_CASE("SPD mass solve: direct residual at machine level") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 12, 12);
    const FESpace p1(mesh, 1);
    const SparseOperator m = assemble_mass(p1);
    std::mt19937 rng(2u);
    const Eigen::VectorXd b = random_vector(p1.n_dofs(), rng);
    const Eigen::VectorXd x = solve_linear(m, b);
    CHECK((m.mat * x - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("CG, BiCGStab and direct agree on a random SPD system") {
    std::mt19937 rng(3u);
    const SparseOperator a = random_spd(100, rng);
    const Eigen::VectorXd b = random_vector(100, rng);

    const Eigen::VectorXd xd = solve_linear(a, b);
    LinearSolveConfig cg;
    cg.method = LinearSolveConfig::Method::ConjugateGradient;
    cg.rel_tol = 1e-12;
    const Eigen::VectorXd xc = solve_linear(a, b, cg);
    CHECK((xd - xc).norm() <= 1e-8 * xd.norm());

    LinearSolveConfig bi;
    bi.method = LinearSolveConfig::Method::BiCGStab;
    bi.rel_tol = 1e-12;
    const Eigen::VectorXd xb = solve_linear(a, b, bi);
    CHECK((xd - xb).norm() <= 1e-8 * xd.norm());
}

TEST_CASE("dimension mismatch and iteration exhaustion raise") {
    std::mt19937 rng(4u);
    const SparseOperator a = random_spd(20, rng);
    CHECK_THROWS_AS(solve_linear(a, Eigen::VectorXd::Zero(19)), std::invalid_argument);

    LinearSolveConfig cg;
    cg.method = LinearSolveConfig::Method::ConjugateGradient;
    cg.rel_tol = 1e-15;
    cg.max_iter = 1;
    CHECK_THROWS_AS(solve_linear(a, random_vector(20, rng), cg), std::runtime_error);
}

TEST_CASE("Newton solves an affine system in exactly one iteration") {
    std::mt19937 rng(5u);
    const SparseOperator a = random_spd(30, rng);
    const Eigen::VectorXd b = random_vector(30, rng);

    const auto residual = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a.mat * x - b); };
    const auto jacobian = [&](const Eigen::VectorXd&) { return a; };

    NewtonConfig cfg;
    cfg.tol = 1e-10;
    const NewtonResult r = newton_solve(residual, jacobian, Eigen::VectorXd::Zero(30), cfg);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK((a.mat * r.x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("Newton on x^2 - 4 from x0 = 3") {
    const auto residual = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(1);
        r[0] = x[0] * x[0] - 4.0;
        return r;
    };
    const auto jacobian = [](const Eigen::VectorXd& x) {
        SparseOperator j;
        j.mat.resize(1, 1);
        j.mat.coeffRef(0, 0) = 2.0 * x[0];
        return j;
    };

    NewtonConfig cfg;
    cfg.tol = 1e-12;
    Eigen::VectorXd x0(1);
    x0[0] = 3.0;
    const NewtonResult r = newton_solve(residual, jacobian, x0, cfg);
    CHECK(r.converged);
    CHECK(r.iterations <= 6);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("Newton reports non-convergence") {
    // No real root: x^2 + 1.
    const auto residual = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(1);
        r[0] = x[0] * x[0] + 1.0;
        return r;
    };
    const auto jacobian = [](const Eigen::VectorXd& x) {
        SparseOperator j;
        j.mat.resize(1, 1);
        j.mat.coeffRef(0, 0) = 2.0 * x[0] + 1e-3;
        return j;
    };
    NewtonConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_iter = 5;
    Eigen::VectorXd x0(1);
    x0[0] = 3.0;
    const NewtonResult r = newton_solve(residual, jacobian, x0, cfg);
    CHECK(!r.converged);
}

TEST_CASE("reported Newton residual matches an independent recomputation") {
    std::mt19937 rng(6u);
    const SparseOperator a = random_spd(25, rng);
    const Eigen::VectorXd b = random_vector(25, rng);
    const auto residual = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r = a.mat * x - b;
        for (int i = 0; i < r.size(); ++i) r[i] += 0.01 * x[i] * x[i] * x[i];
        return r;
    };
    const auto jacobian = [&](const Eigen::VectorXd& x) {
        SparseOperator j = a;
        for (int i = 0; i < x.size(); ++i) j.mat.coeffRef(i, i) += 0.03 * x[i] * x[i];
        return j;
    };
    NewtonConfig cfg;
    cfg.tol = 1e-12;
    const NewtonResult r = newton_solve(residual, jacobian, Eigen::VectorXd::Zero(25), cfg);
    CHECK(r.converged);
    CHECK(std::abs(residual(r.x).norm() - r.residual_norm) <= 1e-12);
}
