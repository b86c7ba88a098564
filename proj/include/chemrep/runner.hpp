#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chemrep/diagnostics.hpp"
#include "chemrep/scheme_us.hpp"
#include "chemrep/scheme_uv.hpp"

namespace chemrep {

enum class SchemeKind { UV, US, US_EPS };

std::string scheme_name(SchemeKind s);
SchemeKind scheme_from_name(const std::string& name);

struct MeshSpec {
    double lx = 2.0, ly = 2.0;
    int nx = 40, ny = 40;
};

struct ExperimentConfig {
    SchemeKind scheme = SchemeKind::UV;
    MeshSpec mesh;
    double k = 1e-4;
    int n_steps = 0;       // derived from t_final when 0
    double t_final = 0.0;  // ignored when n_steps > 0
    double eps = 1e-6;     // US_EPS only
    double newton_tol = 1e-8;
    int newton_max_iter = 30;
    double picard_tol = 1e-4;
    int picard_max_iter = 200;
    int uv_v_degree = 2;
    std::string preset;            // preset name, or empty with u0/v0 given
    std::string u0_expr, v0_expr;  // closed-form initial data
    std::string out_dir;           // empty: no file output
    int snapshot_every = 0;        // 0: no snapshots
    unsigned seed = 0;             // reserved
    bool compute_rates = true;     // Poincare constant per run

    int resolved_steps() const;
    void validate() const; // throws std::invalid_argument naming the field
};

struct Preset {
    std::string name;
    std::string u0, v0;
    double k = 0.0;
    int cells_per_unit = 0; // nx = ny = cells_per_unit * side length
    double eps = 0.0;
    double t_final = 0.0;
};

const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);

/// Reads a JSON config file; unknown keys are rejected, defaults are filled.
ExperimentConfig load_config(const std::string& path);
/// Effective configuration echoed as JSON.
std::string config_echo(const ExperimentConfig& cfg);

ExperimentConfig config_from_preset(const std::string& preset_name, SchemeKind scheme);

/// Advances the configured scheme from t=0, recording one StepRecord per
/// accepted step (plus step 0); writes report.csv and VTK snapshots when
/// out_dir is set. A step failure leaves the partial report with the
/// failure flagged.
RunReport run(const ExperimentConfig& cfg);

struct EpsSweepRow {
    double eps = 0.0;
    double max_negpart_sq = 0.0; // max_n |Pi^h(u_-)|_h^2
    double min_u = 0.0;          // min_n min_x u
};

std::vector<EpsSweepRow> sweep_eps(const ExperimentConfig& cfg, const std::vector<double>& eps_list);

/// Legacy-VTK ASCII snapshot of vertex data on the mesh.
void write_fields_vtk(const StructuredMesh& mesh, std::ostream& os,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& vertex_fields,
                      const std::string& title);

} // namespace chemrep
