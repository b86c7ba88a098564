#include "chemrep/scheme_uv.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace chemrep {

double UVEnergyLawTerms::max_term() const {
    return std::max({std::abs(dt_energy), std::abs(k_half_dtu_sq), std::abs(k_quarter_dtgradv_sq),
                     std::abs(uhat_h1_sq), std::abs(half_ah_minus_i_sq), std::abs(half_gradv_sq)});
}

UVScheme::UVScheme(const StructuredMesh& mesh, UVConfig cfg)
    : cfg_(cfg),
      u_space_(mesh, 1),
      v_space_(mesh, cfg.v_degree),
      mass_u_(assemble_mass(u_space_)),
      stiff_u_(assemble_stiffness(u_space_)),
      lumped_u_(assemble_lumped_mass(u_space_)),
      ah_v_(v_space_) {
    if (!(cfg_.k > 0.0)) throw std::invalid_argument("UVScheme: time step must be positive");
    area_ = mesh.lx * mesh.ly;
    int_weights_u_ = mass_u_.mat * Eigen::VectorXd::Ones(u_space_.n_dofs());

    // Constant Jacobian blocks: M_u/k + K_u and M_v (1/k + 1) + K_v.
    const int nu = u_space_.n_dofs();
    const SpMat a0 = SpMat(mass_u_.mat / cfg_.k) + stiff_u_.mat;
    const SpMat d0 = SpMat(ah_v_.mass().mat * (1.0 / cfg_.k + 1.0)) + ah_v_.stiffness().mat;
    for (int r = 0; r < a0.outerSize(); ++r)
        for (SpMat::InnerIterator it(a0, r); it; ++it)
            jac_const_.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                    it.value());
    for (int r = 0; r < d0.outerSize(); ++r)
        for (SpMat::InnerIterator it(d0, r); it; ++it)
            jac_const_.emplace_back(nu + static_cast<int>(it.row()), nu + static_cast<int>(it.col()),
                                    it.value());
}

UVState UVScheme::init(const std::function<double(double, double)>& u0,
                       const std::function<double(double, double)>& v0) {
    const auto& init_rule = QuadratureRule::degree14();
    const double int_u0 = integrate_mesh(u_space_.mesh(), u0, init_rule);
    m0_ = int_u0 / area_;

    UVState s;
    s.u = l2_project_lumped(u_space_, u0, init_rule);
    const double int_uh = int_weights_u_.dot(s.u.coeffs);
    s.u.coeffs.array() += (int_u0 - int_uh) / area_;
    s.v = interpolate(v_space_, v0);
    s.t = 0.0;
    s.step = 0;

    if (s.u.coeffs.minCoeff() < 0.0 || s.v.coeffs.minCoeff() < 0.0)
        std::cerr << "UVScheme::init: warning: negative nodal values in initial data\n";
    return s;
}

Eigen::VectorXd UVScheme::pack(const UVState& s) const {
    Eigen::VectorXd x(u_space_.n_dofs() + v_space_.n_dofs());
    x << s.u.coeffs, s.v.coeffs;
    return x;
}

UVState UVScheme::unpack(const Eigen::VectorXd& x, double t, int step) const {
    UVState s;
    s.u.space = &u_space_;
    s.u.coeffs = x.head(u_space_.n_dofs());
    s.v.space = &v_space_;
    s.v.coeffs = x.tail(v_space_.n_dofs());
    s.t = t;
    s.step = step;
    return s;
}

Eigen::VectorXd UVScheme::residual(const UVState& prev, const Eigen::VectorXd& x) const {
    const int nu = u_space_.n_dofs();
    const int nv = v_space_.n_dofs();
    const Eigen::VectorXd u = x.head(nu);
    const Eigen::VectorXd v = x.tail(nv);

    Eigen::VectorXd r(nu + nv);
    r.head(nu) = mass_u_.mat * ((u - prev.u.coeffs) / cfg_.k) + stiff_u_.mat * u;
    r.tail(nv) = ah_v_.mass().mat * ((v - prev.v.coeffs) / cfg_.k + v) + ah_v_.stiffness().mat * v;

    // Nonlinear terms: (u grad v, grad phi_i) and -(u^2, psi_i).
    const auto& rule = QuadratureRule::degree4();
    const auto& utab = u_space_.basis_table(rule);
    const auto& vtab = v_space_.basis_table(rule);
    const int ndu = utab.n_basis, ndv = vtab.n_basis;
    for (int e = 0; e < u_space_.mesh().n_triangles(); ++e) {
        const auto udofs = u_space_.element_dofs(e);
        const auto vdofs = v_space_.element_dofs(e);
        const auto& geom = u_space_.geometry(e);
        const double scale = 2.0 * geom.area;
        for (int q = 0; q < utab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            double uq = 0.0;
            for (int i = 0; i < ndu; ++i) uq += u[udofs[static_cast<std::size_t>(i)]] * utab.value(q, i);
            Vec2 gv{0.0, 0.0};
            for (int j = 0; j < ndv; ++j) {
                const Vec2 g = v_space_.physical_grad(vtab, geom, q, j);
                const double c = v[vdofs[static_cast<std::size_t>(j)]];
                gv.x += c * g.x;
                gv.y += c * g.y;
            }
            for (int i = 0; i < ndu; ++i) {
                const Vec2 gu = u_space_.physical_grad(utab, geom, q, i);
                r[udofs[static_cast<std::size_t>(i)]] += w * uq * dot(gv, gu);
            }
            const double wuu = w * uq * uq;
            for (int i = 0; i < ndv; ++i)
                r[nu + vdofs[static_cast<std::size_t>(i)]] -= wuu * vtab.value(q, i);
        }
    }
    return r;
}

SparseOperator UVScheme::jacobian(const Eigen::VectorXd& x) const {
    const int nu = u_space_.n_dofs();
    const int nv = v_space_.n_dofs();
    const Eigen::VectorXd u = x.head(nu);
    const Eigen::VectorXd v = x.tail(nv);

    std::vector<Eigen::Triplet<double>> trip = jac_const_;

    const auto& rule = QuadratureRule::degree4();
    const auto& utab = u_space_.basis_table(rule);
    const auto& vtab = v_space_.basis_table(rule);
    const int ndu = utab.n_basis, ndv = vtab.n_basis;

    std::array<double, 9> juu{};
    std::array<double, 18> juv{};
    std::array<double, 18> jvu{};
    std::array<Vec2, 3> gu{};
    std::array<Vec2, 6> gvb{};

    for (int e = 0; e < u_space_.mesh().n_triangles(); ++e) {
        const auto udofs = u_space_.element_dofs(e);
        const auto vdofs = v_space_.element_dofs(e);
        const auto& geom = u_space_.geometry(e);
        const double scale = 2.0 * geom.area;
        juu.fill(0.0);
        juv.fill(0.0);
        jvu.fill(0.0);
        for (int q = 0; q < utab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            double uq = 0.0;
            for (int i = 0; i < ndu; ++i) uq += u[udofs[static_cast<std::size_t>(i)]] * utab.value(q, i);
            Vec2 gv{0.0, 0.0};
            for (int j = 0; j < ndv; ++j) {
                gvb[static_cast<std::size_t>(j)] = v_space_.physical_grad(vtab, geom, q, j);
                const double c = v[vdofs[static_cast<std::size_t>(j)]];
                gv.x += c * gvb[static_cast<std::size_t>(j)].x;
                gv.y += c * gvb[static_cast<std::size_t>(j)].y;
            }
            for (int i = 0; i < ndu; ++i) gu[static_cast<std::size_t>(i)] = u_space_.physical_grad(utab, geom, q, i);

            for (int i = 0; i < ndu; ++i) {
                const double conv = dot(gv, gu[static_cast<std::size_t>(i)]);
                for (int j = 0; j < ndu; ++j)
                    juu[static_cast<std::size_t>(i * ndu + j)] += w * utab.value(q, j) * conv;
                for (int j = 0; j < ndv; ++j)
                    juv[static_cast<std::size_t>(i * ndv + j)] +=
                        w * uq * dot(gvb[static_cast<std::size_t>(j)], gu[static_cast<std::size_t>(i)]);
            }
            const double wu2 = 2.0 * w * uq;
            for (int i = 0; i < ndv; ++i)
                for (int j = 0; j < ndu; ++j)
                    jvu[static_cast<std::size_t>(i * ndu + j)] -=
                        wu2 * utab.value(q, j) * vtab.value(q, i);
        }
        for (int i = 0; i < ndu; ++i)
            for (int j = 0; j < ndu; ++j)
                trip.emplace_back(udofs[static_cast<std::size_t>(i)], udofs[static_cast<std::size_t>(j)],
                                  juu[static_cast<std::size_t>(i * ndu + j)]);
        for (int i = 0; i < ndu; ++i)
            for (int j = 0; j < ndv; ++j)
                trip.emplace_back(udofs[static_cast<std::size_t>(i)], nu + vdofs[static_cast<std::size_t>(j)],
                                  juv[static_cast<std::size_t>(i * ndv + j)]);
        for (int i = 0; i < ndv; ++i)
            for (int j = 0; j < ndu; ++j)
                trip.emplace_back(nu + vdofs[static_cast<std::size_t>(i)], udofs[static_cast<std::size_t>(j)],
                                  jvu[static_cast<std::size_t>(i * ndu + j)]);
    }

    SparseOperator jac;
    jac.mat.resize(nu + nv, nu + nv);
    jac.mat.setFromTriplets(trip.begin(), trip.end());
    jac.symmetric = false;
    return jac;
}

UVStepResult UVScheme::step(const UVState& prev) const {
    const auto res = [this, &prev](const Eigen::VectorXd& x) { return residual(prev, x); };
    const auto jac = [this](const Eigen::VectorXd& x) { return jacobian(x); };

    NewtonResult nr = newton_solve(res, jac, pack(prev), cfg_.newton, &newton_lu_);
    if (!nr.converged)
        throw StepError("UV step: Newton did not converge within max_iter", nr.residual_norm);

    UVStepResult out;
    out.state = unpack(nr.x, prev.t + cfg_.k, prev.step + 1);
    out.newton_iters = nr.iterations;
    out.residual_norm = nr.residual_norm;
    return out;
}

double UVScheme::energy(const UVState& s) const {
    return 0.5 * quadratic_form(mass_u_, s.u.coeffs) +
           0.25 * quadratic_form(ah_v_.stiffness(), s.v.coeffs);
}

UVEnergyLawTerms UVScheme::energy_law_terms(const UVState& prev, const UVState& next) const {
    const double k = cfg_.k;
    const auto hat_energy = [this](const UVState& s) {
        Eigen::VectorXd uhat = s.u.coeffs.array() - m0_;
        return 0.5 * quadratic_form(mass_u_, uhat) +
               0.25 * quadratic_form(ah_v_.stiffness(), s.v.coeffs);
    };

    UVEnergyLawTerms t;
    t.dt_energy = (hat_energy(next) - hat_energy(prev)) / k;
    const Eigen::VectorXd du = next.u.coeffs - prev.u.coeffs;
    const Eigen::VectorXd dv = next.v.coeffs - prev.v.coeffs;
    t.k_half_dtu_sq = quadratic_form(mass_u_, du) / (2.0 * k);
    t.k_quarter_dtgradv_sq = quadratic_form(ah_v_.stiffness(), dv) / (4.0 * k);
    const Eigen::VectorXd uhat = next.u.coeffs.array() - m0_;
    const double mean_uhat = int_weights_u_.dot(uhat);
    t.uhat_h1_sq = quadratic_form(stiff_u_, uhat) + mean_uhat * mean_uhat;
    t.half_ah_minus_i_sq = 0.5 * ah_v_.minus_identity_norm_sq(next.v.coeffs);
    t.half_gradv_sq = 0.5 * quadratic_form(ah_v_.stiffness(), next.v.coeffs);
    return t;
}

} // namespace chemrep
