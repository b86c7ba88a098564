#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "chemrep/assembly.hpp"
#include "chemrep/diagnostics.hpp"
#include "chemrep/quadrature.hpp"
#include "chemrep/solvers.hpp"
#include "test_utils.hpp"

using namespace chemrep;
using namespace chemrep::testutil;

TEST_CASE("quadrature rules: weights and monomial exactness") {
    for (const QuadratureRule* rule :
         {&QuadratureRule::degree4(), &QuadratureRule::degree8(), &QuadratureRule::degree14()}) {
        double wsum = 0.0;
        for (const double w : rule->weights) wsum += w;
        CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));

        for (int a = 0; a + 0 <= rule->exactness; ++a) {
            for (int b = 0; a + b <= rule->exactness; ++b) {
                double s = 0.0;
                for (std::size_t q = 0; q < rule->points.size(); ++q)
                    s += rule->weights[q] * std::pow(rule->points[q].l1, a) *
                         std::pow(rule->points[q].l2, b);
                CHECK(s == doctest::Approx(reference_monomial_integral(a, b)).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("1D Gauss-Legendre integrates high-degree polynomials") {
    std::vector<double> x, w;
    gauss_legendre_01(8, x, w);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += w[i] * std::pow(x[i], 15); // degree 15 = 2*8-1
    CHECK(s == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("space construction: dof counts") {
    const StructuredMesh single = build_rect_mesh(2.0, 2.0, 1, 1);
    CHECK(FESpace(single, 1).n_dofs() == 4);
    CHECK(FESpace(single, 2).n_dofs() == 9); // 4 vertices + 5 edges

    const StructuredMesh m25 = build_rect_mesh(2.0, 2.0, 25, 25);
    CHECK(FESpace(m25, 1).n_dofs() == 676);

    CHECK_THROWS_AS(FESpace(single, 3), std::invalid_argument);
    CHECK_THROWS_AS(FESpace(single, 0), std::invalid_argument);

    const FESpace p2(single, 2);
    for (int e = 0; e < single.n_triangles(); ++e) {
        const auto dofs = p2.element_dofs(e);
        std::set<int> unique(dofs.begin(), dofs.end());
        CHECK(unique.size() == 6);
    }
}

TEST_CASE("mass matrix: constants, symmetry, element values") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 7, 5);
    for (int degree : {1, 2}) {
        const FESpace space(mesh, degree);
        const SparseOperator m = assemble_mass(space);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(space.n_dofs());
        CHECK(ones.dot(m.mat * ones) == doctest::Approx(4.0).epsilon(1e-13));

        const SpMat diff = SpMat(m.mat - SpMat(m.mat.transpose()));
        double asym = 0.0;
        for (int r = 0; r < diff.outerSize(); ++r)
            for (SpMat::InnerIterator it(diff, r); it; ++it) asym = std::max(asym, std::abs(it.value()));
        CHECK(asym <= 1e-13);
    }

    // Unit-leg right triangle: P1 element mass diagonal is area/6, lumped area/3.
    const StructuredMesh cell = build_rect_mesh(1.0, 1.0, 1, 1);
    const FESpace p1(cell, 1);
    const SparseOperator m = assemble_mass(p1);
    const SparseOperator ml = assemble_lumped_mass(p1);
    const int lone = cell.vertex_index(1, 0); // belongs to exactly one triangle
    CHECK(m.mat.coeff(lone, lone) == doctest::Approx(0.5 / 6.0).epsilon(1e-14));
    CHECK(ml.mat.coeff(lone, lone) == doctest::Approx(0.5 / 3.0).epsilon(1e-14));
}

TEST_CASE("lumped mass: integral of one, equivalence with L2, P2 rejected") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 10, 10);
    const FESpace p1(mesh, 1);
    const SparseOperator ml = assemble_lumped_mass(p1);
    CHECK(ml.mat.diagonal().sum() == doctest::Approx(4.0).epsilon(1e-13));

    const FESpace p2(mesh, 2);
    CHECK_THROWS_AS(assemble_lumped_mass(p2), std::invalid_argument);

    // |u|_h^2 / ||u||_0^2 lies in [1, 4] on every refinement level (element
    // eigenvalue bounds), which is the h-uniform norm equivalence.
    std::mt19937 rng(7u);
    for (int n : {5, 10, 20}) {
        const StructuredMesh m = build_rect_mesh(2.0, 2.0, n, n);
        const FESpace space(m, 1);
        const SparseOperator mass = assemble_mass(space);
        const SparseOperator lump = assemble_lumped_mass(space);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd u = random_vector(space.n_dofs(), rng);
            const double ratio = quadratic_form(lump, u) / quadratic_form(mass, u);
            CHECK(ratio >= 1.0 - 1e-12);
            CHECK(ratio <= 4.0 + 1e-12);
        }
    }
}

TEST_CASE("stiffness: kernel, coordinate energy, M-matrix property") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 9, 6);
    for (int degree : {1, 2}) {
        const FESpace space(mesh, degree);
        const SparseOperator k = assemble_stiffness(space);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(space.n_dofs());
        CHECK((k.mat * ones).lpNorm<Eigen::Infinity>() <= 1e-12);

        const ScalarField x = interpolate(space, [](double px, double) { return px; });
        CHECK(quadratic_form(k, x.coeffs) == doctest::Approx(4.0).epsilon(1e-12));
    }

    // Off-diagonal entries nonpositive for P1 on right-angled meshes,
    // including stretched cells.
    for (auto [lx, ly, nx, ny] : {std::tuple{2.0, 2.0, 8, 8}, std::tuple{2.0, 1.0, 7, 3}}) {
        const StructuredMesh m = build_rect_mesh(lx, ly, nx, ny);
        const FESpace p1(m, 1);
        const SparseOperator k = assemble_stiffness(p1);
        for (int r = 0; r < k.mat.outerSize(); ++r)
            for (SpMat::InnerIterator it(k.mat, r); it; ++it)
                if (it.row() != it.col()) CHECK(it.value() <= 1e-14);
    }
}

TEST_CASE("B form: zero field, mass lower bound, H1-sigma identity") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 6, 6);
    const FESpace p1(mesh, 1);
    const SigmaSpace sigma = build_sigma_space(p1);
    const SparseOperator b = assemble_B(sigma);
    const SparseOperator msig = assemble_sigma_mass(sigma);

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sigma.n_dofs());
    CHECK(quadratic_form(b, zero) == 0.0);

    std::mt19937 rng(11u);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd s = random_vector(sigma.n_dofs(), rng);
        zero_constrained(s, sigma);
        CHECK(quadratic_form(b, s) >= quadratic_form(msig, s) - 1e-12);

        // Independent evaluation of ||s||_0^2 + ||rot s||_0^2 + ||div s||_0^2:
        // div and rot are constant per element for P1 fields.
        double direct = quadratic_form(msig, s);
        for (int e = 0; e < mesh.n_triangles(); ++e) {
            const auto dofs = p1.element_dofs(e);
            const auto& geom = p1.geometry(e);
            double div = 0.0, rot = 0.0;
            for (int i = 0; i < 3; ++i) {
                const Vec2 g = geom.grad_lambda[static_cast<std::size_t>(i)];
                div += s[2 * dofs[static_cast<std::size_t>(i)]] * g.x +
                       s[2 * dofs[static_cast<std::size_t>(i)] + 1] * g.y;
                rot += s[2 * dofs[static_cast<std::size_t>(i)] + 1] * g.x -
                       s[2 * dofs[static_cast<std::size_t>(i)]] * g.y;
            }
            direct += geom.area * (div * div + rot * rot);
        }
        CHECK(quadratic_form(b, s) == doctest::Approx(direct).epsilon(1e-12));
    }

    // A projected gradient field has positive B energy.
    const VectorField g = l2_project_sigma(
        sigma,
        [](double x, double y) {
            return Vec2{(2.0 - 2.0 * x) * y * (2.0 - y), x * (2.0 - x) * (2.0 - 2.0 * y)};
        },
        QuadratureRule::degree8());
    CHECK(quadratic_form(b, g.coeffs) > 0.0);
}

TEST_CASE("pinned operators keep constrained dofs exactly zero") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 5, 5);
    const FESpace p1(mesh, 1);
    const SigmaSpace sigma = build_sigma_space(p1);

    SparseOperator sys;
    sys.mat = SpMat(assemble_sigma_mass(sigma).mat) + assemble_B(sigma).mat;
    sys.symmetric = true;
    pin_constrained(sys, sigma);

    std::mt19937 rng(3u);
    Eigen::VectorXd rhs = random_vector(sigma.n_dofs(), rng);
    zero_constrained(rhs, sigma);
    const Eigen::VectorXd x = solve_linear(sys, rhs);
    for (int i = 0; i < sigma.n_dofs(); ++i)
        if (sigma.is_constrained(i)) CHECK(x[i] == 0.0);
}

TEST_CASE("trilinear term: constant v, constant u factorization, quadrature oracle") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 4, 4);
    const FESpace u_space(mesh, 1);
    const FESpace v_space(mesh, 2);

    std::mt19937 rng(5u);
    ScalarField u{&u_space, random_vector(u_space.n_dofs(), rng, 0.0, 2.0)};
    ScalarField v_const{&v_space, Eigen::VectorXd::Constant(v_space.n_dofs(), 3.25)};
    CHECK(assemble_trilinear_uv(u, v_const, u_space).lpNorm<Eigen::Infinity>() <= 1e-13);

    // Constant u factors out: b(u=c, v) = c * b(u=1, v).
    ScalarField v{&v_space, random_vector(v_space.n_dofs(), rng)};
    ScalarField u_one{&u_space, Eigen::VectorXd::Ones(u_space.n_dofs())};
    ScalarField u_c{&u_space, Eigen::VectorXd::Constant(u_space.n_dofs(), 2.5)};
    const Eigen::VectorXd b1 = assemble_trilinear_uv(u_one, v, u_space);
    const Eigen::VectorXd bc = assemble_trilinear_uv(u_c, v, u_space);
    CHECK((bc - 2.5 * b1).lpNorm<Eigen::Infinity>() <= 1e-12 * bc.lpNorm<Eigen::Infinity>());

    // u = v = interpolated x: entries are integrals of x d(phi_i)/dx,
    // cross-checked against a panel-Gauss oracle built on point location.
    const ScalarField ux = interpolate(u_space, [](double x, double) { return x; });
    const ScalarField vx = interpolate(v_space, [](double x, double) { return x; });
    const Eigen::VectorXd b = assemble_trilinear_uv(ux, vx, u_space);
    for (int i : {0, 7, 12, u_space.n_dofs() - 1}) {
        ScalarField basis{&u_space, Eigen::VectorXd::Zero(u_space.n_dofs())};
        basis.coeffs[i] = 1.0;
        // Oracle path: point location + barycentric evaluation instead of the
        // assembly tables.
        const double oracle = integrate_mesh(
            mesh, [&](double x, double y) { return x * eval_field_grad(basis, x, y).x; },
            QuadratureRule::degree8());
        CHECK(b[i] == doctest::Approx(oracle).epsilon(1e-11));
    }

    const StructuredMesh other = build_rect_mesh(2.0, 2.0, 3, 3);
    const FESpace other_space(other, 2);
    ScalarField v_other{&other_space, Eigen::VectorXd::Zero(other_space.n_dofs())};
    CHECK_THROWS_AS(assemble_trilinear_uv(ux, v_other, u_space), std::invalid_argument);
}

TEST_CASE("interpolation: constants, linears, quadratics") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 6, 6);
    const FESpace p1(mesh, 1);
    const FESpace p2(mesh, 2);

    const ScalarField seven = interpolate(p1, [](double, double) { return 7.0; });
    CHECK((seven.coeffs.array() - 7.0).abs().maxCoeff() == 0.0);

    const ScalarField fx = interpolate(p1, [](double x, double) { return x; });
    std::mt19937 rng(13u);
    std::uniform_real_distribution<double> pt(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double x = pt(rng), y = pt(rng);
        CHECK(eval_field(fx, x, y) == doctest::Approx(x).epsilon(1e-13));
    }

    const auto sq = [](double x, double) { return x * x; };
    const ScalarField q2 = interpolate(p2, sq);
    const ScalarField q1 = interpolate(p1, sq);
    for (int trial = 0; trial < 50; ++trial) {
        const double x = pt(rng), y = pt(rng);
        CHECK(eval_field(q2, x, y) == doctest::Approx(x * x).epsilon(1e-12));
    }
    // P1 reproduces x^2 at vertices only; at a cell midpoint it must differ.
    const double hx = 2.0 / 6.0;
    const double mid_err = std::abs(eval_field(q1, 0.5 * hx, 0.25 * hx) - sq(0.5 * hx, 0.0));
    CHECK(mid_err > 1e-4);
}

TEST_CASE("projections: constants fixed, means preserved, orthogonality") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 12, 12);
    const FESpace p1(mesh, 1);

    const ScalarField c = l2_project_lumped(p1, [](double, double) { return 4.5; },
                                            QuadratureRule::degree4());
    CHECK((c.coeffs.array() - 4.5).abs().maxCoeff() <= 1e-13);

    // Mean preservation for the lumped projection of a sharp Gaussian bump.
    const auto u0 = [](double x, double y) {
        return -10.0 * x * y * (2 - x) * (2 - y) *
                   std::exp(-10.0 * (y - 1) * (y - 1) - 10.0 * (x - 1) * (x - 1)) +
               10.0001;
    };
    const double exact = integrate_rect(u0, 2.0, 2.0, 48, 48, 10);
    const ScalarField proj = l2_project_lumped(p1, u0, QuadratureRule::degree14());
    const SparseOperator lumped = assemble_lumped_mass(p1);
    const double projected_mean = lumped.mat.diagonal().dot(proj.coeffs);
    CHECK(projected_mean == doctest::Approx(exact).epsilon(1e-10));

    // Galerkin orthogonality of the consistent projection of a P2 field.
    const FESpace p2(mesh, 2);
    std::mt19937 rng(17u);
    const ScalarField rich{&p2, random_vector(p2.n_dofs(), rng)};
    const ScalarField flat = l2_project(
        p1, [&](double x, double y) { return eval_field(rich, x, y); }, QuadratureRule::degree4());
    const SparseOperator mixed = assemble_mixed_mass(p1, p2);
    const SparseOperator mass1 = assemble_mass(p1);
    const Eigen::VectorXd defect = mixed.mat * rich.coeffs - mass1.mat * flat.coeffs;
    CHECK(defect.lpNorm<Eigen::Infinity>() <= 1e-10);

    // Projected gradients satisfy the normal-trace constraint exactly.
    const SigmaSpace sigma = build_sigma_space(p1);
    const auto grad_v0 = [](double x, double y) {
        const double g = std::exp(-30.0 * (y - 1) * (y - 1) - 30.0 * (x - 1) * (x - 1));
        const double p = 20.0 * x * y * (2 - x) * (2 - y);
        return Vec2{g * (20.0 * y * (2 - y) * (2 - 2 * x) - p * 60.0 * (x - 1)),
                    g * (20.0 * x * (2 - x) * (2 - 2 * y) - p * 60.0 * (y - 1))};
    };
    const VectorField sg = l2_project_sigma(sigma, grad_v0, QuadratureRule::degree8());
    for (int i = 0; i < sigma.n_dofs(); ++i)
        if (sigma.is_constrained(i)) CHECK(sg.coeffs[i] == 0.0);
}

TEST_CASE("A_h operator: constants, algebraic identity, W16 regularity proxy") {
    const StructuredMesh mesh = build_rect_mesh(2.0, 2.0, 8, 8);
    const FESpace p2(mesh, 2);
    const AhOperator ah(p2);

    const Eigen::VectorXd c = Eigen::VectorXd::Constant(p2.n_dofs(), 2.75);
    CHECK((ah.apply(c) - c).lpNorm<Eigen::Infinity>() <= 1e-12 * c.lpNorm<Eigen::Infinity>());

    std::mt19937 rng(23u);
    const Eigen::VectorXd v = random_vector(p2.n_dofs(), rng);
    const Eigen::VectorXd w = ah.apply_minus_identity(v);
    const double via_solve = quadratic_form(ah.mass(), w);
    const double via_identity = ah.minus_identity_norm_sq(v);
    CHECK(via_solve == doctest::Approx(via_identity).epsilon(1e-10));

    // ||v||_W16 <= C ||A_h v||_0 with C uniform across refinement levels:
    // the finest-level ratios must not exceed twice the coarsest-level max.
    double coarse_max = 0.0;
    for (int idx = 0; idx < 3; ++idx) {
        const int n = 8 << idx;
        const StructuredMesh m = build_rect_mesh(2.0, 2.0, n, n);
        const FESpace space(m, 2);
        const AhOperator op(space);
        double level_max = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::VectorXd x = random_vector(space.n_dofs(), rng);
            const ScalarField f{&space, x};
            const double w16 = std::sqrt(w16_norm_sq(f));
            const Eigen::VectorXd ahx = op.apply(x);
            const double denom = std::sqrt(quadratic_form(op.mass(), ahx));
            level_max = std::max(level_max, w16 / denom);
        }
        if (idx == 0) coarse_max = level_max;
        else CHECK(level_max <= 2.0 * coarse_max);
    }
}
