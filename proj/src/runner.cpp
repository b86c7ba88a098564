#include "chemrep/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "chemrep/expression.hpp"

namespace chemrep {

namespace fs = std::filesystem;
using nlohmann::json;

std::string scheme_name(SchemeKind s) {
    switch (s) {
    case SchemeKind::UV: return "UV";
    case SchemeKind::US: return "US";
    case SchemeKind::US_EPS: return "US_EPS";
    }
    return "?";
}

SchemeKind scheme_from_name(const std::string& name) {
    if (name == "UV" || name == "uv") return SchemeKind::UV;
    if (name == "US" || name == "us") return SchemeKind::US;
    if (name == "US_EPS" || name == "us_eps" || name == "USeps") return SchemeKind::US_EPS;
    throw std::invalid_argument("scheme: unknown value '" + name + "' (UV, US, US_EPS)");
}

int ExperimentConfig::resolved_steps() const {
    if (n_steps > 0) return n_steps;
    if (t_final > 0.0) return static_cast<int>(std::llround(t_final / k));
    return 0;
}

void ExperimentConfig::validate() const {
    if (!(mesh.lx > 0.0) || !(mesh.ly > 0.0))
        throw std::invalid_argument("mesh.lx/mesh.ly: must be positive");
    if (mesh.nx < 1 || mesh.ny < 1) throw std::invalid_argument("mesh.nx/mesh.ny: must be >= 1");
    if (!(k > 0.0)) throw std::invalid_argument("k: must be positive");
    if (resolved_steps() < 1)
        throw std::invalid_argument("n_steps/t_final: run must take at least one step");
    if (scheme == SchemeKind::US_EPS && !(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("eps: must lie in (0,1)");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol: must be positive");
    if (!(picard_tol > 0.0)) throw std::invalid_argument("picard_tol: must be positive");
    if (uv_v_degree != 1 && uv_v_degree != 2)
        throw std::invalid_argument("uv_v_degree: must be 1 or 2");
    if (u0_expr.empty() || v0_expr.empty())
        throw std::invalid_argument("u0/v0: initial data missing (set a preset or expressions)");
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = {
        {"positivity-5.1",
         "-10*x*y*(2-x)*(2-y)*exp(-10*(y-1)^2-10*(x-1)^2)+10.0001",
         "100*x*y*(2-x)*(2-y)*exp(-30*(y-1)^2-30*(x-1)^2)+0.0001", 1e-5, 20, 1e-6, 1e-3},
        {"oscillation-5.2",
         "5*cos(2*pi*x)*cos(2*pi*y)+5.0001",
         "-170*cos(2*pi*x)*cos(2*pi*y)+170.0001", 1e-5, 25, 1e-6, 7e-4},
        {"energy-5.3",
         "-10*x*y*(2-x)*(2-y)*exp(-10*(y-1)^2-10*(x-1)^2)+10.0001",
         "20*x*y*(2-x)*(2-y)*exp(-30*(y-1)^2-30*(x-1)^2)+0.0001", 1e-4, 30, 1e-6, 0.1},
        {"asymptotic-5.4-test1",
         "5*cos(2*pi*x)*cos(2*pi*y)+5.0001",
         "-15*cos(2*pi*x)*cos(2*pi*y)+24", 1e-3, 25, 1e-5, 10.0},
        {"asymptotic-5.4-test2",
         "5*cos(2*pi*x)*cos(2*pi*y)+5.0001",
         "15*cos(2*pi*x)*cos(2*pi*y)+24", 1e-3, 25, 1e-5, 10.0},
    };
    return table;
}

const Preset* find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return &p;
    return nullptr;
}

ExperimentConfig config_from_preset(const std::string& preset_name, SchemeKind scheme) {
    const Preset* p = find_preset(preset_name);
    if (!p) throw std::invalid_argument("preset: unknown name '" + preset_name + "'");
    ExperimentConfig cfg;
    cfg.scheme = scheme;
    cfg.preset = p->name;
    cfg.mesh.lx = 2.0;
    cfg.mesh.ly = 2.0;
    cfg.mesh.nx = static_cast<int>(std::lround(p->cells_per_unit * cfg.mesh.lx));
    cfg.mesh.ny = static_cast<int>(std::lround(p->cells_per_unit * cfg.mesh.ly));
    cfg.k = p->k;
    cfg.eps = p->eps;
    cfg.t_final = p->t_final;
    cfg.u0_expr = p->u0;
    cfg.v0_expr = p->v0;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_config: " + std::string(e.what()));
    }

    static const std::vector<std::string> known = {
        "scheme", "mesh", "k", "n_steps", "t_final", "eps", "newton_tol", "newton_max_iter",
        "picard_tol", "picard_max_iter", "uv_v_degree", "preset", "u0", "v0", "out_dir",
        "snapshot_every", "seed", "compute_rates"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("load_config: unknown key '" + key + "'");
    }

    ExperimentConfig cfg;
    if (j.contains("preset"))
        cfg = config_from_preset(j.at("preset").get<std::string>(),
                                 j.contains("scheme")
                                     ? scheme_from_name(j.at("scheme").get<std::string>())
                                     : SchemeKind::UV);
    if (j.contains("scheme")) cfg.scheme = scheme_from_name(j.at("scheme").get<std::string>());
    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        static const std::vector<std::string> mesh_keys = {"lx", "ly", "nx", "ny"};
        for (const auto& [key, value] : m.items()) {
            (void)value;
            if (std::find(mesh_keys.begin(), mesh_keys.end(), key) == mesh_keys.end())
                throw std::invalid_argument("load_config: unknown key 'mesh." + key + "'");
        }
        if (m.contains("lx")) cfg.mesh.lx = m.at("lx").get<double>();
        if (m.contains("ly")) cfg.mesh.ly = m.at("ly").get<double>();
        if (m.contains("nx")) cfg.mesh.nx = m.at("nx").get<int>();
        if (m.contains("ny")) cfg.mesh.ny = m.at("ny").get<int>();
    }
    if (j.contains("k")) cfg.k = j.at("k").get<double>();
    if (j.contains("n_steps")) cfg.n_steps = j.at("n_steps").get<int>();
    if (j.contains("t_final")) cfg.t_final = j.at("t_final").get<double>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
    if (j.contains("newton_tol")) cfg.newton_tol = j.at("newton_tol").get<double>();
    if (j.contains("newton_max_iter")) cfg.newton_max_iter = j.at("newton_max_iter").get<int>();
    if (j.contains("picard_tol")) cfg.picard_tol = j.at("picard_tol").get<double>();
    if (j.contains("picard_max_iter")) cfg.picard_max_iter = j.at("picard_max_iter").get<int>();
    if (j.contains("uv_v_degree")) cfg.uv_v_degree = j.at("uv_v_degree").get<int>();
    if (j.contains("u0")) cfg.u0_expr = j.at("u0").get<std::string>();
    if (j.contains("v0")) cfg.v0_expr = j.at("v0").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("snapshot_every")) cfg.snapshot_every = j.at("snapshot_every").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<unsigned>();
    if (j.contains("compute_rates")) cfg.compute_rates = j.at("compute_rates").get<bool>();

    cfg.validate();
    return cfg;
}

std::string config_echo(const ExperimentConfig& cfg) {
    json j;
    j["scheme"] = scheme_name(cfg.scheme);
    j["mesh"] = {{"lx", cfg.mesh.lx}, {"ly", cfg.mesh.ly}, {"nx", cfg.mesh.nx}, {"ny", cfg.mesh.ny}};
    j["k"] = cfg.k;
    j["n_steps"] = cfg.resolved_steps();
    j["eps"] = cfg.eps;
    j["newton_tol"] = cfg.newton_tol;
    j["newton_max_iter"] = cfg.newton_max_iter;
    j["picard_tol"] = cfg.picard_tol;
    j["picard_max_iter"] = cfg.picard_max_iter;
    j["uv_v_degree"] = cfg.uv_v_degree;
    j["preset"] = cfg.preset;
    j["u0"] = cfg.u0_expr;
    j["v0"] = cfg.v0_expr;
    j["out_dir"] = cfg.out_dir;
    j["snapshot_every"] = cfg.snapshot_every;
    j["seed"] = cfg.seed;
    j["compute_rates"] = cfg.compute_rates;
    return j.dump(2);
}

void write_fields_vtk(const StructuredMesh& mesh, std::ostream& os,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& vertex_fields,
                      const std::string& title) {
    write_mesh_vtk(mesh, os, title);
    os << "POINT_DATA " << mesh.n_vertices() << "\n";
    os << std::setprecision(12);
    for (const auto& [name, data] : vertex_fields) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < mesh.n_vertices(); ++i) os << data[i] << "\n";
    }
}

namespace {

struct OutputSink {
    const ExperimentConfig* cfg = nullptr;
    const StructuredMesh* mesh = nullptr;
    bool enabled = false;

    void prepare() {
        if (cfg->out_dir.empty()) return;
        fs::create_directories(cfg->out_dir);
        enabled = true;
        std::ofstream echo(fs::path(cfg->out_dir) / "config_echo.json");
        echo << config_echo(*cfg) << "\n";
    }

    void snapshot(int step, const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields) {
        if (!enabled || cfg->snapshot_every <= 0) return;
        if (step % cfg->snapshot_every != 0) return;
        char name[64];
        std::snprintf(name, sizeof(name), "fields_%06d.vtk", step);
        std::ofstream os(fs::path(cfg->out_dir) / name);
        write_fields_vtk(*mesh, os, fields, scheme_name(cfg->scheme));
    }

    void report(const RunReport& rep) {
        if (!enabled) return;
        std::ofstream os(fs::path(cfg->out_dir) / "report.csv");
        rep.write_csv(os);
    }
};

Eigen::VectorXd vertex_part(const Eigen::VectorXd& coeffs, const StructuredMesh& mesh) {
    return coeffs.head(mesh.n_vertices());
}

Eigen::VectorXd sigma_magnitude(const Eigen::VectorXd& coeffs, const StructuredMesh& mesh) {
    Eigen::VectorXd mag(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i)
        mag[i] = std::hypot(coeffs[2 * i], coeffs[2 * i + 1]);
    return mag;
}

RunReport run_uv(const ExperimentConfig& cfg, const StructuredMesh& mesh, const Expression& u0,
                 const Expression& v0) {
    UVConfig scfg;
    scfg.k = cfg.k;
    scfg.v_degree = cfg.uv_v_degree;
    scfg.newton.tol = cfg.newton_tol;
    scfg.newton.max_iter = cfg.newton_max_iter;
    UVScheme scheme(mesh, scfg);

    UVState state = scheme.init([&](double x, double y) { return u0.eval(x, y); },
                                [&](double x, double y) { return v0.eval(x, y); });

    const auto& mass_u = scheme.mass_u();
    const auto& stiff_u = scheme.stiffness_u();
    const auto& lumped_u = scheme.lumped_mass_u();
    const auto& ah = scheme.ah_v();
    const Eigen::VectorXd int_w = mass_u.mat * Eigen::VectorXd::Ones(scheme.u_space().n_dofs());
    const Eigen::VectorXd lump_diag = lumped_u.mat.diagonal();
    EnergyResidual re(mass_u, stiff_u, ah);
    const double m0 = scheme.m0();

    RunReport rep;
    rep.m0 = m0;
    if (cfg.compute_rates) {
        const RateConstants rc = rate_constants(scheme.u_space());
        rep.c_p = rc.c_p;
        rep.k_p = rc.k_p;
    }

    OutputSink sink{&cfg, &mesh};
    sink.prepare();

    double cum_h1 = 0.0, cum_w16 = 0.0;
    const auto record_state = [&](const UVState& s, const UVState* prev, int iters) {
        StepRecord r;
        r.step = s.step;
        r.t = s.t;
        r.mass_u = int_w.dot(s.u.coeffs);
        r.mass_u_h = lump_diag.dot(s.u.coeffs);
        r.energy = scheme.energy(s);
        r.energy_mod = r.energy;
        r.residual_re = prev ? re.residual(prev->u.coeffs, prev->v.coeffs, s.u.coeffs,
                                           s.v.coeffs, cfg.k)
                             : 0.0;
        r.min_u = s.u.coeffs.minCoeff();
        r.min_v = min_field(s.v);
        Eigen::VectorXd uhat = s.u.coeffs.array() - m0;
        r.uhat_sq = uhat.dot(mass_u.mat * uhat);
        r.grad_or_sigma_sq = quadratic_form(ah.stiffness(), s.v.coeffs);
        Eigen::VectorXd vhat = s.v.coeffs.array() - m0 * m0;
        r.vhat_sq = vhat.dot(ah.mass().mat * vhat);
        if (prev) {
            const double int_uhat = int_w.dot(uhat);
            cum_h1 += cfg.k * (uhat.dot(stiff_u.mat * uhat) + int_uhat * int_uhat);
            ScalarField vhat_field{&scheme.v_space(), vhat};
            cum_w16 += cfg.k * w16_norm_sq(vhat_field);
        }
        r.cum_k_uhat_h1_sq = cum_h1;
        r.cum_k_vhat_w16_sq = cum_w16;
        r.iters = iters;
        r.negpart_u_sq = negative_part_norm_sq(s.u, lumped_u);
        const double u_h1 = s.u.coeffs.dot(stiff_u.mat * s.u.coeffs) +
                            std::pow(int_w.dot(s.u.coeffs), 2);
        const double gv_h1 = quadratic_form(ah.stiffness(), s.v.coeffs) +
                             ah.minus_identity_norm_sq(s.v.coeffs);
        r.uniq_small = cfg.k * std::pow(u_h1 + gv_h1, 2);
        rep.records.push_back(r);

        sink.snapshot(s.step, {{"u", vertex_part(s.u.coeffs, mesh)},
                               {"v", vertex_part(s.v.coeffs, mesh)}});
    };

    record_state(state, nullptr, 0);
    const int n_steps = cfg.resolved_steps();
    for (int n = 1; n <= n_steps; ++n) {
        try {
            UVStepResult sr = scheme.step(state);
            record_state(sr.state, &state, sr.newton_iters);
            state = std::move(sr.state);
        } catch (const StepError& e) {
            rep.failed = true;
            rep.failure_reason = "step " + std::to_string(n) + ": " + e.what();
            std::cerr << "run: " << rep.failure_reason << "\n";
            break;
        }
    }
    sink.report(rep);
    return rep;
}

RunReport run_us(const ExperimentConfig& cfg, const StructuredMesh& mesh, const Expression& u0,
                 const Expression& v0) {
    USConfig scfg;
    scfg.k = cfg.k;
    scfg.eps = cfg.eps;
    scfg.variant = cfg.scheme == SchemeKind::US ? USVariant::Plain : USVariant::Regularized;
    scfg.picard.tol = cfg.picard_tol;
    scfg.picard.max_iter = cfg.picard_max_iter;
    scfg.newton.tol = cfg.newton_tol;
    scfg.newton.max_iter = cfg.newton_max_iter;
    USScheme scheme(mesh, scfg);

    USState state = scheme.init([&](double x, double y) { return u0.eval(x, y); },
                                [&](double x, double y) { return v0.eval(x, y); },
                                [&](double x, double y) { return v0.grad(x, y); });

    const auto& mass = scheme.mass();
    const auto& stiff = scheme.stiffness();
    const auto& lumped = scheme.lumped_mass();
    const auto& ah = scheme.ah();
    const Eigen::VectorXd int_w = mass.mat * Eigen::VectorXd::Ones(scheme.space().n_dofs());
    const Eigen::VectorXd lump_diag = lumped.mat.diagonal();
    EnergyResidual re(mass, stiff, ah);
    const double m0 = scheme.m0();

    RunReport rep;
    rep.m0 = m0;
    if (cfg.compute_rates) {
        const RateConstants rc = rate_constants(scheme.space());
        rep.c_p = rc.c_p;
        rep.k_p = rc.k_p;
    }

    OutputSink sink{&cfg, &mesh};
    sink.prepare();

    double cum_h1 = 0.0, cum_w16 = 0.0;
    const auto record_state = [&](const USState& s, const USState* prev, int iters,
                                  double used_k) {
        StepRecord r;
        r.step = s.step;
        r.t = s.t;
        r.mass_u = int_w.dot(s.u.coeffs);
        r.mass_u_h = lump_diag.dot(s.u.coeffs);
        r.energy = re.energy(s.u.coeffs, s.v.coeffs);
        r.energy_mod = scheme.modified_energy(s);
        r.residual_re = prev ? re.residual(prev->u.coeffs, prev->v.coeffs, s.u.coeffs,
                                           s.v.coeffs, used_k)
                             : 0.0;
        r.min_u = s.u.coeffs.minCoeff();
        r.min_v = s.v.coeffs.minCoeff();
        Eigen::VectorXd uhat = s.u.coeffs.array() - m0;
        r.uhat_sq = uhat.dot(mass.mat * uhat);
        r.grad_or_sigma_sq = quadratic_form(scheme.sigma_mass(), s.sigma.coeffs);
        Eigen::VectorXd vhat = s.v.coeffs.array() - m0 * m0;
        r.vhat_sq = vhat.dot(mass.mat * vhat);
        if (prev) {
            const double int_uhat = lump_diag.dot(uhat);
            cum_h1 += used_k * (uhat.dot(stiff.mat * uhat) + int_uhat * int_uhat);
            ScalarField vhat_field{&scheme.space(), vhat};
            cum_w16 += used_k * w16_norm_sq(vhat_field);
        }
        r.cum_k_uhat_h1_sq = cum_h1;
        r.cum_k_vhat_w16_sq = cum_w16;
        r.iters = iters;
        r.negpart_u_sq = negative_part_norm_sq(s.u, lumped);
        rep.records.push_back(r);

        sink.snapshot(s.step, {{"u", vertex_part(s.u.coeffs, mesh)},
                               {"v", vertex_part(s.v.coeffs, mesh)},
                               {"sigma_mag", sigma_magnitude(s.sigma.coeffs, mesh)}});
    };

    record_state(state, nullptr, 0, cfg.k);
    const int n_steps = cfg.resolved_steps();
    for (int n = 1; n <= n_steps; ++n) {
        try {
            USStepResult sr = scheme.step(state);
            record_state(sr.state, &state, sr.iters, sr.used_k);
            state = std::move(sr.state);
        } catch (const StepError& e) {
            rep.failed = true;
            rep.failure_reason = "step " + std::to_string(n) + ": " + e.what();
            std::cerr << "run: " << rep.failure_reason << "\n";
            break;
        }
    }
    sink.report(rep);
    return rep;
}

} // namespace

RunReport run(const ExperimentConfig& cfg) {
    cfg.validate();
    const StructuredMesh mesh = build_rect_mesh(cfg.mesh.lx, cfg.mesh.ly, cfg.mesh.nx, cfg.mesh.ny);
    const Expression u0 = Expression::parse(cfg.u0_expr);
    const Expression v0 = Expression::parse(cfg.v0_expr);
    if (cfg.scheme == SchemeKind::UV) return run_uv(cfg, mesh, u0, v0);
    return run_us(cfg, mesh, u0, v0);
}

std::vector<EpsSweepRow> sweep_eps(const ExperimentConfig& cfg,
                                   const std::vector<double>& eps_list) {
    if (cfg.scheme != SchemeKind::US_EPS)
        throw std::invalid_argument("sweep_eps: scheme must be US_EPS");
    if (eps_list.empty()) throw std::invalid_argument("sweep_eps: empty eps list");
    std::vector<EpsSweepRow> rows;
    for (const double eps : eps_list) {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("sweep_eps: eps values must lie in (0,1)");
        ExperimentConfig c = cfg;
        c.eps = eps;
        if (!c.out_dir.empty()) {
            std::ostringstream dir;
            dir << c.out_dir << "/eps_" << std::scientific << std::setprecision(0) << eps;
            c.out_dir = dir.str();
        }
        const RunReport rep = run(c);
        if (rep.failed) throw std::runtime_error("sweep_eps: run failed: " + rep.failure_reason);
        EpsSweepRow row;
        row.eps = eps;
        row.min_u = std::numeric_limits<double>::infinity();
        for (const auto& r : rep.records) {
            row.max_negpart_sq = std::max(row.max_negpart_sq, r.negpart_u_sq);
            row.min_u = std::min(row.min_u, r.min_u);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace chemrep
