#include "chemrep/scheme_us.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace chemrep {

double lambda_eps(double s, double eps) {
    if (s <= eps) return eps;
    if (s >= 1.0 / eps) return 1.0 / eps;
    return s;
}

double Fp_eps(double s, double eps) {
    const double inv = 1.0 / eps;
    if (s < eps) return std::log(eps) + (s - eps) / eps;
    if (s > inv) return std::log(inv) + (s - inv) * eps;
    return std::log(s);
}

double F_eps(double s, double eps) {
    const double inv = 1.0 / eps;
    if (s < eps) {
        const double d = s - eps;
        return (eps * std::log(eps) - eps + 1.0) + std::log(eps) * d + 0.5 * d * d / eps;
    }
    if (s > inv) {
        const double d = s - inv;
        return (inv * std::log(inv) - inv + 1.0) + std::log(inv) * d + 0.5 * eps * d * d;
    }
    return s * std::log(s) - s + 1.0;
}

LambdaField build_lambda(const ScalarField& u_p1, double eps) {
    if (u_p1.space->degree() != 1)
        throw std::invalid_argument("build_lambda: u must be a P1 field");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("build_lambda: eps must lie in (0,1)");

    const auto& mesh = u_p1.space->mesh();
    const double inv_eps = 1.0 / eps;
    LambdaField lam;
    lam.elems.resize(static_cast<std::size_t>(mesh.n_triangles()));

    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(e)];
        const Vec2 p0 = mesh.vertex(tri[0]);
        const Vec2 leg1 = mesh.vertex(tri[1]) - p0;
        const Vec2 leg2 = mesh.vertex(tri[2]) - p0;
        if (std::abs(dot(leg1, leg2)) > 1e-12 * norm(leg1) * norm(leg2))
            throw std::runtime_error("build_lambda: element has no right angle at its first vertex");

        const double u0 = u_p1.coeffs[tri[0]];
        const auto quotient = [&](double ui) {
            if (std::abs(ui - u0) <= 1e-14 * std::max(1.0, std::abs(u0)))
                return lambda_eps(0.5 * (ui + u0), eps);
            const double d = (ui - u0) / (Fp_eps(ui, eps) - Fp_eps(u0, eps));
            return std::clamp(d, eps, inv_eps); // mean-value theorem puts d in range
        };
        const double d1 = quotient(u_p1.coeffs[tri[1]]);
        const double d2 = quotient(u_p1.coeffs[tri[2]]);

        const Vec2 n1 = (1.0 / norm(leg1)) * leg1;
        const Vec2 n2 = (1.0 / norm(leg2)) * leg2;
        auto& m = lam.elems[static_cast<std::size_t>(e)];
        m.a11 = d1 * n1.x * n1.x + d2 * n2.x * n2.x;
        m.a12 = d1 * n1.x * n1.y + d2 * n2.x * n2.y;
        m.a22 = d1 * n1.y * n1.y + d2 * n2.y * n2.y;
        m.eig1 = d1;
        m.eig2 = d2;
    }
    return lam;
}

double USEnergyLawTerms::max_term() const {
    return std::max({std::abs(dt_energy), std::abs(k_half_dtu_sq), std::abs(k_quarter_dtsigma_sq),
                     std::abs(uhat_h1_sq), std::abs(half_sigma_h1_sq)});
}

VRecovery::VRecovery(const FESpace& p1_space, double k)
    : space_(&p1_space), k_(k), lumped_(assemble_lumped_mass(p1_space)) {
    SparseOperator sys;
    sys.mat = SpMat(lumped_.mat * (1.0 / k + 1.0)) + assemble_stiffness(p1_space).mat;
    sys.symmetric = true;
    solver_.compute(sys);
}

ScalarField VRecovery::solve(const ScalarField& prev_v, const ScalarField& u_new) const {
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space_->basis_table(rule);
    Eigen::VectorXd rhs = lumped_.mat * (prev_v.coeffs / k_);
    for (int e = 0; e < space_->mesh().n_triangles(); ++e) {
        const auto dofs = space_->element_dofs(e);
        const double scale = 2.0 * space_->geometry(e).area;
        for (int q = 0; q < tab.n_points; ++q) {
            double uq = 0.0;
            for (int i = 0; i < 3; ++i) uq += u_new.coeffs[dofs[static_cast<std::size_t>(i)]] * tab.value(q, i);
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale * uq * uq;
            for (int i = 0; i < 3; ++i) rhs[dofs[static_cast<std::size_t>(i)]] += w * tab.value(q, i);
        }
    }
    ScalarField out;
    out.space = space_;
    out.coeffs = solver_.solve(rhs);
    return out;
}

ScalarField recover_v(const ScalarField& prev_v, const ScalarField& u_new, double k) {
    return VRecovery(*prev_v.space, k).solve(prev_v, u_new);
}

USScheme::USScheme(const StructuredMesh& mesh, USConfig cfg)
    : cfg_(cfg),
      space_(mesh, 1),
      sigma_(build_sigma_space(space_)),
      mass_(assemble_mass(space_)),
      lumped_(assemble_lumped_mass(space_)),
      stiff_(assemble_stiffness(space_)),
      sigma_mass_(assemble_sigma_mass(sigma_)),
      b_raw_(assemble_B(sigma_)),
      ah_(space_) {
    if (!(cfg_.k > 0.0)) throw std::invalid_argument("USScheme: time step must be positive");
    if (cfg_.variant == USVariant::Regularized && !(cfg_.eps > 0.0 && cfg_.eps < 1.0))
        throw std::invalid_argument("USScheme: eps must lie in (0,1)");
    area_ = mesh.lx * mesh.ly;
    int_weights_ = mass_.mat * Eigen::VectorXd::Ones(space_.n_dofs());

    SparseOperator usys;
    usys.mat = SpMat(lumped_.mat / cfg_.k) + stiff_.mat;
    usys.symmetric = true;
    u_solver_.compute(usys);

    sigma_sys_.mat = SpMat(sigma_mass_.mat / cfg_.k) + b_raw_.mat;
    sigma_sys_.symmetric = true;
    pin_constrained(sigma_sys_, sigma_);
    sigma_solver_.compute(sigma_sys_);

    v_recovery_ = std::make_unique<VRecovery>(space_, cfg_.k);

    if (cfg_.variant == USVariant::Plain) {
        // Constant Jacobian blocks: M_L/k + K and pinned M_sigma/k + B.
        const int nu = space_.n_dofs();
        const SpMat a0 = SpMat(lumped_.mat / cfg_.k) + stiff_.mat;
        for (int r = 0; r < a0.outerSize(); ++r)
            for (SpMat::InnerIterator it(a0, r); it; ++it)
                jac_const_.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                        it.value());
        for (int r = 0; r < sigma_sys_.mat.outerSize(); ++r)
            for (SpMat::InnerIterator it(sigma_sys_.mat, r); it; ++it)
                jac_const_.emplace_back(nu + static_cast<int>(it.row()),
                                        nu + static_cast<int>(it.col()), it.value());
    }
}

USState USScheme::init(const std::function<double(double, double)>& u0,
                       const std::function<double(double, double)>& v0,
                       const std::function<Vec2(double, double)>& grad_v0) {
    const auto& init_rule = QuadratureRule::degree14();
    m0_ = integrate_mesh(space_.mesh(), u0, init_rule) / area_;

    USState s;
    s.u = l2_project_lumped(space_, u0, init_rule);
    s.v = l2_project_lumped(space_, v0, init_rule);
    s.sigma = l2_project_sigma(sigma_, grad_v0, init_rule);
    s.t = 0.0;
    s.step = 0;
    if (s.u.coeffs.minCoeff() < 0.0 || s.v.coeffs.minCoeff() < 0.0)
        std::cerr << "USScheme::init: warning: negative nodal values in initial data\n";
    return s;
}

Eigen::VectorXd USScheme::coupling_u(const LambdaField* lam, const ScalarField* uscal,
                                     const VectorField& sigma) const {
    // (mob sigma, grad phi_i): P1 test gradients are constant per element.
    const auto& mesh = space_.mesh();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(space_.n_dofs());
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space_.basis_table(rule);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto dofs = space_.element_dofs(e);
        const auto& geom = space_.geometry(e);
        if (lam) {
            // Lambda constant and sigma affine: the element integral is
            // Lambda * (area/3) * sum of nodal sigma.
            Vec2 ssum{0.0, 0.0};
            for (int i = 0; i < 3; ++i) {
                ssum.x += sigma.coeffs[2 * dofs[static_cast<std::size_t>(i)]];
                ssum.y += sigma.coeffs[2 * dofs[static_cast<std::size_t>(i)] + 1];
            }
            const Vec2 flux = lam->apply(e, (geom.area / 3.0) * ssum);
            for (int i = 0; i < 3; ++i)
                g[dofs[static_cast<std::size_t>(i)]] += dot(flux, geom.grad_lambda[static_cast<std::size_t>(i)]);
        } else {
            const double scale = 2.0 * geom.area;
            for (int q = 0; q < tab.n_points; ++q) {
                double uq = 0.0;
                Vec2 sq{0.0, 0.0};
                for (int i = 0; i < 3; ++i) {
                    const double phi = tab.value(q, i);
                    uq += uscal->coeffs[dofs[static_cast<std::size_t>(i)]] * phi;
                    sq.x += sigma.coeffs[2 * dofs[static_cast<std::size_t>(i)]] * phi;
                    sq.y += sigma.coeffs[2 * dofs[static_cast<std::size_t>(i)] + 1] * phi;
                }
                const double w = rule.weights[static_cast<std::size_t>(q)] * scale * uq;
                for (int i = 0; i < 3; ++i)
                    g[dofs[static_cast<std::size_t>(i)]] += w * dot(sq, geom.grad_lambda[static_cast<std::size_t>(i)]);
            }
        }
    }
    return g;
}

Eigen::VectorXd USScheme::coupling_sigma(const LambdaField* lam, const ScalarField* uscal,
                                         const ScalarField& u) const {
    // (mob grad u, e_d phi_j): grad u is constant per element for P1.
    const auto& mesh = space_.mesh();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(sigma_.n_dofs());
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space_.basis_table(rule);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto dofs = space_.element_dofs(e);
        const auto& geom = space_.geometry(e);
        Vec2 gu{0.0, 0.0};
        for (int i = 0; i < 3; ++i) {
            const double c = u.coeffs[dofs[static_cast<std::size_t>(i)]];
            gu.x += c * geom.grad_lambda[static_cast<std::size_t>(i)].x;
            gu.y += c * geom.grad_lambda[static_cast<std::size_t>(i)].y;
        }
        if (lam) {
            const Vec2 flux = lam->apply(e, gu);
            const double third = geom.area / 3.0;
            for (int j = 0; j < 3; ++j) {
                h[2 * dofs[static_cast<std::size_t>(j)]] += third * flux.x;
                h[2 * dofs[static_cast<std::size_t>(j)] + 1] += third * flux.y;
            }
        } else {
            const double scale = 2.0 * geom.area;
            for (int q = 0; q < tab.n_points; ++q) {
                double uq = 0.0;
                for (int i = 0; i < 3; ++i) uq += uscal->coeffs[dofs[static_cast<std::size_t>(i)]] * tab.value(q, i);
                const double w = rule.weights[static_cast<std::size_t>(q)] * scale * uq;
                for (int j = 0; j < 3; ++j) {
                    const double phi = tab.value(q, j);
                    h[2 * dofs[static_cast<std::size_t>(j)]] += w * phi * gu.x;
                    h[2 * dofs[static_cast<std::size_t>(j)] + 1] += w * phi * gu.y;
                }
            }
        }
    }
    zero_constrained(h, sigma_);
    return h;
}

std::pair<double, double> USScheme::scheme_residuals(const USState& prev, const USState& next,
                                                     double k) const {
    Eigen::VectorXd ru = lumped_.mat * ((next.u.coeffs - prev.u.coeffs) / k) +
                         stiff_.mat * next.u.coeffs;
    Eigen::VectorXd rs = sigma_mass_.mat * ((next.sigma.coeffs - prev.sigma.coeffs) / k) +
                         b_raw_.mat * next.sigma.coeffs;
    if (cfg_.variant == USVariant::Regularized) {
        const LambdaField lam = build_lambda(next.u, cfg_.eps);
        ru += coupling_u(&lam, nullptr, next.sigma);
        rs -= 2.0 * coupling_sigma(&lam, nullptr, next.u);
    } else {
        ru += coupling_u(nullptr, &next.u, next.sigma);
        rs -= 2.0 * coupling_sigma(nullptr, &next.u, next.u);
    }
    zero_constrained(rs, sigma_);
    return {ru.norm(), rs.norm()};
}

USStepResult USScheme::step(const USState& prev) const {
    if (cfg_.variant == USVariant::Plain) return step_plain(prev);
    return step_regularized(prev, cfg_.k, 0);
}

USStepResult USScheme::step_regularized(const USState& prev, double k, int retries) const {
    const bool base_k = (k == cfg_.k);
    SpdSolver u_solver_local, sigma_solver_local;
    const SpdSolver* usolve = &u_solver_;
    const SpdSolver* ssolve = &sigma_solver_;
    if (!base_k) {
        SparseOperator usys;
        usys.mat = SpMat(lumped_.mat / k) + stiff_.mat;
        usys.symmetric = true;
        u_solver_local.compute(usys);
        SparseOperator ssys;
        ssys.mat = SpMat(sigma_mass_.mat / k) + b_raw_.mat;
        ssys.symmetric = true;
        pin_constrained(ssys, sigma_);
        sigma_solver_local.compute(ssys);
        usolve = &u_solver_local;
        ssolve = &sigma_solver_local;
    }

    const Eigen::VectorXd u_time = lumped_.mat * (prev.u.coeffs / k);
    Eigen::VectorXd sigma_time = sigma_mass_.mat * (prev.sigma.coeffs / k);
    zero_constrained(sigma_time, sigma_);

    ScalarField u_cur = prev.u;
    VectorField sigma_cur = prev.sigma;
    double change = 0.0;
    double prev_change = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    int iters = 0;
    bool converged = false;

    for (int l = 0; l < cfg_.picard.max_iter; ++l) {
        const LambdaField lam_old = build_lambda(u_cur, cfg_.eps);
        ScalarField u_next;
        u_next.space = &space_;
        u_next.coeffs = usolve->solve(u_time - coupling_u(&lam_old, nullptr, sigma_cur));

        const LambdaField lam_new = build_lambda(u_next, cfg_.eps);
        VectorField sigma_next;
        sigma_next.space = &sigma_;
        sigma_next.coeffs =
            ssolve->solve(sigma_time + 2.0 * coupling_sigma(&lam_new, nullptr, u_next));

        const auto rel = [](const Eigen::VectorXd& d, const Eigen::VectorXd& ref,
                            const SpMat& metric) {
            const double dn = std::sqrt(d.dot(metric * d));
            const double rn = std::sqrt(ref.dot(metric * ref));
            if (dn <= 1e-14 * (1.0 + rn)) return 0.0; // at machine level
            return dn / std::max(rn, 1e-30);
        };
        const double cu = rel(u_next.coeffs - u_cur.coeffs, u_cur.coeffs, mass_.mat);
        const double cs = rel(sigma_next.coeffs - sigma_cur.coeffs, sigma_cur.coeffs,
                              sigma_mass_.mat);
        change = std::max(cu, cs);

        u_cur = std::move(u_next);
        sigma_cur = std::move(sigma_next);
        ++iters;

        if (change <= cfg_.picard.tol) {
            converged = true;
            break;
        }
        growth_streak = (change > prev_change) ? growth_streak + 1 : 0;
        prev_change = change;
        if (growth_streak >= cfg_.divergence_window) break;
    }

    if (!converged) {
        if (retries < cfg_.max_step_retries) {
            std::cerr << "USScheme: Picard stalled at step " << prev.step + 1
                      << " (change " << change << "); retrying with k/2\n";
            return step_regularized(prev, 0.5 * k, retries + 1);
        }
        throw StepError("US_eps step: Picard did not converge", change);
    }

    USStepResult out;
    out.state.u = u_cur;
    out.state.sigma = sigma_cur;
    out.state.v = base_k ? v_recovery_->solve(prev.v, u_cur)
                         : VRecovery(space_, k).solve(prev.v, u_cur);
    out.state.t = prev.t + k;
    out.state.step = prev.step + 1;
    out.iters = iters;
    out.final_change = change;
    out.used_k = k;
    out.retries = retries;
    std::tie(out.residual_u, out.residual_sigma) = scheme_residuals(prev, out.state, k);
    return out;
}

USStepResult USScheme::step_plain(const USState& prev) const {
    const int nu = space_.n_dofs();
    const int ns = sigma_.n_dofs();
    const double k = cfg_.k;
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space_.basis_table(rule);

    const auto residual = [&](const Eigen::VectorXd& x) {
        ScalarField u;
        u.space = &space_;
        u.coeffs = x.head(nu);
        VectorField s;
        s.space = &sigma_;
        s.coeffs = x.tail(ns);
        Eigen::VectorXd r(nu + ns);
        r.head(nu) = lumped_.mat * ((u.coeffs - prev.u.coeffs) / k) + stiff_.mat * u.coeffs +
                     coupling_u(nullptr, &u, s);
        Eigen::VectorXd rs = sigma_mass_.mat * ((s.coeffs - prev.sigma.coeffs) / k) +
                             b_raw_.mat * s.coeffs - 2.0 * coupling_sigma(nullptr, &u, u);
        // Pinned rows enforce sigma_c = 0.
        for (int i = 0; i < ns; ++i)
            if (sigma_.is_constrained(i)) rs[i] = s.coeffs[i];
        r.tail(ns) = rs;
        return r;
    };

    const auto jacobian = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd u = x.head(nu);
        const Eigen::VectorXd s = x.tail(ns);
        std::vector<Eigen::Triplet<double>> trip = jac_const_;
        std::array<double, 9> juu{};
        std::array<double, 18> jus{};
        std::array<double, 18> jsu{};
        for (int e = 0; e < space_.mesh().n_triangles(); ++e) {
            const auto dofs = space_.element_dofs(e);
            const auto& geom = space_.geometry(e);
            const double scale = 2.0 * geom.area;
            Vec2 gu{0.0, 0.0};
            for (int i = 0; i < 3; ++i) {
                const double c = u[dofs[static_cast<std::size_t>(i)]];
                gu.x += c * geom.grad_lambda[static_cast<std::size_t>(i)].x;
                gu.y += c * geom.grad_lambda[static_cast<std::size_t>(i)].y;
            }
            juu.fill(0.0);
            jus.fill(0.0);
            jsu.fill(0.0);
            for (int q = 0; q < tab.n_points; ++q) {
                const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
                double uq = 0.0;
                Vec2 sq{0.0, 0.0};
                for (int i = 0; i < 3; ++i) {
                    const double phi = tab.value(q, i);
                    uq += u[dofs[static_cast<std::size_t>(i)]] * phi;
                    sq.x += s[2 * dofs[static_cast<std::size_t>(i)]] * phi;
                    sq.y += s[2 * dofs[static_cast<std::size_t>(i)] + 1] * phi;
                }
                for (int i = 0; i < 3; ++i) {
                    const Vec2 gi = geom.grad_lambda[static_cast<std::size_t>(i)];
                    for (int j = 0; j < 3; ++j) {
                        const double phj = tab.value(q, j);
                        // d/du_j of (u sigma, grad phi_i)
                        juu[static_cast<std::size_t>(i * 3 + j)] += w * phj * dot(sq, gi);
                        // d/ds_(j,d) of (u sigma, grad phi_i)
                        jus[static_cast<std::size_t>(i * 6 + 2 * j)] += w * uq * phj * gi.x;
                        jus[static_cast<std::size_t>(i * 6 + 2 * j + 1)] += w * uq * phj * gi.y;
                        // d/du_j of -2 (u grad u, e_d phi_i)
                        const Vec2 gj = geom.grad_lambda[static_cast<std::size_t>(j)];
                        const double phi = tab.value(q, i);
                        jsu[static_cast<std::size_t>((2 * i) * 3 + j)] -=
                            2.0 * w * phi * (phj * gu.x + uq * gj.x);
                        jsu[static_cast<std::size_t>((2 * i + 1) * 3 + j)] -=
                            2.0 * w * phi * (phj * gu.y + uq * gj.y);
                    }
                }
            }
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j)
                    trip.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)],
                                      juu[static_cast<std::size_t>(i * 3 + j)]);
                for (int j = 0; j < 3; ++j)
                    for (int d = 0; d < 2; ++d) {
                        const int col = 2 * dofs[static_cast<std::size_t>(j)] + d;
                        if (!sigma_.is_constrained(col))
                            trip.emplace_back(dofs[static_cast<std::size_t>(i)], nu + col,
                                              jus[static_cast<std::size_t>(i * 6 + 2 * j + d)]);
                    }
                for (int d = 0; d < 2; ++d) {
                    const int row = 2 * dofs[static_cast<std::size_t>(i)] + d;
                    if (sigma_.is_constrained(row)) continue;
                    for (int j = 0; j < 3; ++j)
                        trip.emplace_back(nu + row, dofs[static_cast<std::size_t>(j)],
                                          jsu[static_cast<std::size_t>((2 * i + d) * 3 + j)]);
                }
            }
        }
        SparseOperator jac;
        jac.mat.resize(nu + ns, nu + ns);
        jac.mat.setFromTriplets(trip.begin(), trip.end());
        jac.symmetric = false;
        return jac;
    };

    Eigen::VectorXd x0(nu + ns);
    x0 << prev.u.coeffs, prev.sigma.coeffs;
    NewtonResult nr = newton_solve(residual, jacobian, std::move(x0), cfg_.newton, &newton_lu_);
    if (!nr.converged)
        throw StepError("US step: Newton did not converge within max_iter", nr.residual_norm);

    USStepResult out;
    out.state.u.space = &space_;
    out.state.u.coeffs = nr.x.head(nu);
    out.state.sigma.space = &sigma_;
    out.state.sigma.coeffs = nr.x.tail(ns);
    out.state.v = v_recovery_->solve(prev.v, out.state.u);
    out.state.t = prev.t + k;
    out.state.step = prev.step + 1;
    out.iters = nr.iterations;
    out.final_change = nr.residual_norm;
    out.used_k = k;
    std::tie(out.residual_u, out.residual_sigma) = scheme_residuals(prev, out.state, k);
    return out;
}

double USScheme::modified_energy(const USState& s) const {
    return 0.5 * quadratic_form(mass_, s.u.coeffs) +
           0.25 * quadratic_form(sigma_mass_, s.sigma.coeffs);
}

USEnergyLawTerms USScheme::energy_law_terms(const USState& prev, const USState& next,
                                            double used_k) const {
    const double k = used_k;
    const Eigen::VectorXd lump_diag = lumped_.mat.diagonal();
    const auto hat_energy = [&](const USState& s) {
        const Eigen::VectorXd uhat = s.u.coeffs.array() - m0_;
        return 0.5 * uhat.dot(lump_diag.cwiseProduct(uhat)) +
               0.25 * quadratic_form(sigma_mass_, s.sigma.coeffs);
    };

    USEnergyLawTerms t;
    t.dt_energy = (hat_energy(next) - hat_energy(prev)) / k;
    const Eigen::VectorXd du = next.u.coeffs - prev.u.coeffs;
    const Eigen::VectorXd ds = next.sigma.coeffs - prev.sigma.coeffs;
    t.k_half_dtu_sq = du.dot(lump_diag.cwiseProduct(du)) / (2.0 * k);
    t.k_quarter_dtsigma_sq = quadratic_form(sigma_mass_, ds) / (4.0 * k);
    const Eigen::VectorXd uhat = next.u.coeffs.array() - m0_;
    const double int_uhat = lump_diag.dot(uhat);
    t.uhat_h1_sq = quadratic_form(stiff_, uhat) + int_uhat * int_uhat;
    t.half_sigma_h1_sq = 0.5 * quadratic_form(b_raw_, next.sigma.coeffs);
    return t;
}

} // namespace chemrep
