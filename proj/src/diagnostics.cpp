#include "chemrep/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "chemrep/solvers.hpp"

namespace chemrep {

double poincare_constant(const FESpace& p1_space, double tol, int max_iter) {
    if (p1_space.degree() != 1)
        throw std::invalid_argument("poincare_constant: requires a P1 space");
    const SparseOperator k_op = assemble_stiffness(p1_space);
    const SparseOperator m_op = assemble_mass(p1_space);
    const int n = p1_space.n_dofs();

    // Shifted pencil (K + M) x = (lambda + 1) M x shares eigenvectors with
    // K x = lambda M x and is SPD; inverse-iterate with constants deflated.
    SparseOperator shifted;
    shifted.mat = k_op.mat + m_op.mat;
    shifted.symmetric = true;
    SpdSolver solver(shifted);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd m_ones = m_op.mat * ones;
    const double m_ones_sq = m_ones.dot(ones);
    const auto deflate = [&](Eigen::VectorXd& x) {
        x -= (m_ones.dot(x) / m_ones_sq) * ones;
    };

    // Deterministic pseudo-random start vector.
    Eigen::VectorXd x(n);
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < n; ++i) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        x[i] = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
    deflate(x);
    x /= x.norm();

    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = solver.solve(m_op.mat * x);
        deflate(y);
        y /= y.norm();
        const double num = y.dot(k_op.mat * y);
        const double den = y.dot(m_op.mat * y);
        const double next = num / den;
        x = std::move(y);
        if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    throw std::runtime_error("poincare_constant: inverse iteration did not converge");
}

RateConstants rate_constants(const FESpace& p1_space) {
    RateConstants rc;
    rc.c_p = poincare_constant(p1_space);
    rc.k_p = std::min(rc.c_p, 1.0);
    return rc;
}

double EnergyResidual::energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return 0.5 * quadratic_form(*mass_u_, u) + 0.25 * quadratic_form(ah_v_->stiffness(), v);
}

double EnergyResidual::residual(const Eigen::VectorXd& u_prev, const Eigen::VectorXd& v_prev,
                                const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                double k) const {
    const double dt_e = (energy(u, v) - energy(u_prev, v_prev)) / k;
    return dt_e + quadratic_form(*stiff_u_, u) + 0.5 * ah_v_->minus_identity_norm_sq(v) +
           0.5 * quadratic_form(ah_v_->stiffness(), v);
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y,
                   double tail_fraction, double floor) {
    if (t.size() != y.size() || t.size() < 2)
        throw std::invalid_argument("decay_fit: need at least two samples");

    DecayFit out;
    std::size_t end = y.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > floor)) {
            end = i;
            out.hit_floor = true;
            break;
        }
    }
    if (end < 2) throw std::invalid_argument("decay_fit: series sits at the floor");

    const std::size_t start = static_cast<std::size_t>((1.0 - tail_fraction) * end);
    const std::size_t n = end - start;
    if (n < 2) throw std::invalid_argument("decay_fit: window too short");

    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0, sll = 0.0;
    for (std::size_t i = start; i < end; ++i) {
        const double ti = t[i];
        const double li = std::log(y[i]);
        st += ti;
        sl += li;
        stt += ti * ti;
        stl += ti * li;
        sll += li * li;
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (denom == 0.0) throw std::invalid_argument("decay_fit: degenerate time samples");
    const double slope = (dn * stl - st * sl) / denom;
    out.rate = -slope;
    out.n_used = static_cast<int>(n);

    const double ss_tot = sll - sl * sl / dn;
    if (ss_tot <= 0.0) {
        out.r_squared = 1.0; // constant series
        if (std::abs(slope) < 1e-300) out.rate = 0.0;
    } else {
        const double ss_reg = slope * (stl - st * sl / dn);
        out.r_squared = ss_reg / ss_tot;
    }
    return out;
}

double min_field(const ScalarField& f) {
    double m = f.coeffs.minCoeff();
    if (f.space->degree() == 1) return m;
    const auto& rule = QuadratureRule::degree8();
    const auto& tab = f.space->basis_table(rule);
    for (int e = 0; e < f.space->mesh().n_triangles(); ++e)
        for (int q = 0; q < tab.n_points; ++q) m = std::min(m, f.eval(tab, e, q));
    return m;
}

double negative_part_norm_sq(const ScalarField& p1_field, const SparseOperator& lumped) {
    double s = 0.0;
    const Eigen::VectorXd diag = lumped.mat.diagonal();
    for (int i = 0; i < p1_field.coeffs.size(); ++i) {
        const double neg = std::min(p1_field.coeffs[i], 0.0);
        s += diag[i] * neg * neg;
    }
    return s;
}

double w16_norm_sq(const ScalarField& f) {
    const auto& rule = QuadratureRule::degree8();
    const auto& tab = f.space->basis_table(rule);
    double i_val = 0.0, i_grad = 0.0;
    for (int e = 0; e < f.space->mesh().n_triangles(); ++e) {
        const double scale = 2.0 * f.space->geometry(e).area;
        for (int q = 0; q < tab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            const double v = f.eval(tab, e, q);
            const Vec2 g = f.eval_grad(tab, e, q);
            const double g2 = dot(g, g);
            i_val += w * v * v * v * v * v * v;
            i_grad += w * g2 * g2 * g2;
        }
    }
    return std::cbrt(i_val + i_grad);
}

const char* RunReport::csv_header() {
    return "step,t,mass_u,mass_u_h,energy,energy_mod,residual_re,min_u,min_v,uhat_sq,"
           "grad_or_sigma_sq,vhat_sq,cum_k_uhat_h1_sq,cum_k_vhat_w16_sq,iters,negpart_u_sq,"
           "uniq_small";
}

void RunReport::write_csv(std::ostream& os) const {
    os << "# chemrep run report v1\n" << csv_header() << "\n";
    char buf[64];
    const auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
        os << buf;
    };
    for (const auto& r : records) {
        os << r.step << ',';
        put(r.t, ',');
        put(r.mass_u, ',');
        put(r.mass_u_h, ',');
        put(r.energy, ',');
        put(r.energy_mod, ',');
        put(r.residual_re, ',');
        put(r.min_u, ',');
        put(r.min_v, ',');
        put(r.uhat_sq, ',');
        put(r.grad_or_sigma_sq, ',');
        put(r.vhat_sq, ',');
        put(r.cum_k_uhat_h1_sq, ',');
        put(r.cum_k_vhat_w16_sq, ',');
        os << r.iters << ',';
        put(r.negpart_u_sq, ',');
        put(r.uniq_small, '\n');
    }
    if (failed) os << "# failed: " << failure_reason << "\n";
}

} // namespace chemrep
