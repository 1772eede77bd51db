#include "kvn/runner.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "kvn/error.hpp"
#include "kvn/io.hpp"
#include "kvn/statistics.hpp"

namespace kvn {

using nlohmann::json;
namespace fs = std::filesystem;

std::string run_name(const ScenarioConfig& config, const std::string& config_text)
{
    if (!config.name.empty()) return config.name;
    return method_name(config.method) + "-" + io::sha256_hex(config_text).substr(0, 12);
}

namespace {

/// Collects output files and checks for one run directory.
class RunWriter {
public:
    explicit RunWriter(fs::path dir) : dir_(std::move(dir)) {}

    void file(const std::string& name, const std::string& bytes)
    {
        io::write_file_atomic(dir_ / name, bytes);
        files_.push_back({{"path", name}, {"sha256", io::sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }

    /// Check with optional bounds; without bounds it is informational.
    void check(const std::string& name, double value, std::optional<double> lower, std::optional<double> upper)
    {
        const bool ok = std::isfinite(value) && (!lower || value >= *lower) && (!upper || value <= *upper);
        json c = {{"name", name}, {"value", value}, {"passed", ok}};
        c["lower"] = lower ? json(*lower) : json(nullptr);
        c["upper"] = upper ? json(*upper) : json(nullptr);
        checks_.push_back(c);
    }
    void info(const std::string& name, double value) { check(name, value, std::nullopt, std::nullopt); }

    const fs::path& dir() const { return dir_; }
    json& files() { return files_; }
    const json& checks() const { return checks_; }

private:
    fs::path dir_;
    json files_ = json::array();
    json checks_ = json::array();
};

std::vector<double> output_times(const ScenarioConfig& c)
{
    if (!c.snapshots.empty()) return c.snapshots;
    return {c.final_time};
}

std::string indexed(const std::string& stem, std::size_t k, const std::string& ext)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", k);
    return stem + "_" + buf + ext;
}

std::string times_csv(const std::vector<double>& times)
{
    std::string out = "index,t\n";
    for (std::size_t k = 0; k < times.size(); ++k) out += std::to_string(k) + "," + io::format_double(times[k]) + "\n";
    return out;
}

void run_flow(const ScenarioConfig& c, RunWriter& w)
{
    auto points = c.flow.points;
    if (!c.flow.points_csv.empty()) points = io::read_points_csv(io::read_file(c.flow.points_csv));
    if (points.empty()) throw validation_error("no starting points");
    const double T = c.final_time;

    std::vector<std::vector<TrajectorySample>> kept;
    double reversibility = 0.0, det = 0.0, energy = 0.0;
    for (const auto& x : points) {
        const auto full = flow_trajectory(x, T, c.problem, c.flow.settings);
        std::vector<TrajectorySample> thin;
        for (std::size_t k = 0; k < full.size(); ++k) {
            if (k % c.flow.output_every == 0 || k + 1 == full.size()) thin.push_back(full[k]);
        }
        kept.push_back(std::move(thin));

        const auto end = flow_map(x, T, c.problem, c.flow.settings);
        reversibility = std::max(reversibility, distance(flow_map(end, -T, c.problem, c.flow.settings), x));
        det = std::max(det, std::abs(flow_jacobian(x, T, c.problem, c.flow.settings).determinant() - 1.0));
        const double e0 = c.problem.one_body_energy(x);
        for (const auto& s : full) {
            const double de = std::abs(c.problem.one_body_energy(s.x) - e0);
            energy = std::max(energy, e0 != 0.0 ? de / std::abs(e0) : de);
        }
    }
    w.file("trajectory.csv", io::trajectory_csv(kept));
    w.check("reversibility", reversibility, std::nullopt, 1e-10);
    w.check("jacobian_determinant_error", det, std::nullopt, 1e-6);
    w.check("energy_drift_relative", energy, std::nullopt, 1e-3);
    const StepPlan half = plan_steps(T / 2.0, c.flow.settings.dt);
    if (half.remainder == 0.0 && plan_steps(T, c.flow.settings.dt).remainder == 0.0) {
        double group = 0.0;
        for (const auto& x : points) {
            group = std::max(group, group_property_residual(x, T / 2.0, T / 2.0, c.problem, c.flow.settings));
        }
        w.check("group_property", group, std::nullopt, 1e-12);
    }
}

void run_vlasov(const ScenarioConfig& c, RunWriter& w)
{
    const auto start = density_from_function(c.grid, c.initial.as_function());
    w.info("resolution_warning", start.resolution_warning ? 1.0 : 0.0);
    w.info("boundary_warning", start.boundary_warning ? 1.0 : 0.0);
    const auto times = output_times(c);
    const auto sol = vlasov_solve(start, c.final_time, c.problem, c.vlasov, times);
    for (std::size_t k = 0; k < sol.snapshots.size(); ++k) {
        w.file(indexed("vlasov", k, ".kvng"), io::encode_grid(sol.snapshots[k]));
        w.file(indexed("marginal_q", k, ".csv"), io::marginal_q_csv(sol.snapshots[k]));
        w.file(indexed("marginal_p", k, ".csv"), io::marginal_p_csv(sol.snapshots[k]));
    }
    w.file("snapshots.csv", times_csv(sol.times));
    const double m0 = sol.diagnostics.mass_history.front();
    double drift = 0.0;
    for (double m : sol.diagnostics.mass_history) drift = std::max(drift, std::abs(m - m0) / m0);
    w.check("mass_drift_relative", drift, std::nullopt, 1e-6);
    w.info("clip_count", static_cast<double>(sol.diagnostics.clip_count));
    w.info("steps", static_cast<double>(sol.diagnostics.steps));
}

void run_perturbation(const ScenarioConfig& c, RunWriter& w)
{
    const auto analytic = AnalyticDensity::from(c.initial);
    PerturbativeExpansion expansion(analytic, c.problem, c.perturbation,
                                    c.perturbation.aux_grid ? *c.perturbation.aux_grid : c.grid);
    const auto times = output_times(c);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const auto first = expansion.first_order(c.grid, t);
        DensityField total(c.grid);
        for (std::size_t cell = 0; cell < c.grid.size(); ++cell) {
            total.values[cell] = expansion.rho0(c.grid.center(cell), t) + first.values[cell];
        }
        w.file(indexed("perturbative", k, ".kvng"), io::encode_grid(total));
        w.file(indexed("first_order", k, ".kvng"), io::encode_grid(first));
        w.info(indexed("first_order_mass", k, ""), first.mass());
        w.info(indexed("first_order_linf", k, ""), linf_distance(first, DensityField(c.grid)));
    }
    w.file("snapshots.csv", times_csv(times));
}

std::vector<cplx> product_wave_function(const ScenarioConfig& c)
{
    // phi = sqrt(rho) with unit L2 norm on the grid.
    std::vector<cplx> phi(c.grid.size());
    double norm2 = 0.0;
    for (std::size_t cell = 0; cell < c.grid.size(); ++cell) {
        const double v = std::sqrt(std::max(0.0, c.initial(c.grid.center(cell))));
        phi[cell] = v;
        norm2 += v * v * c.grid.cell_volume();
    }
    if (!(norm2 > 0.0)) throw validation_error("initial density vanishes on the grid");
    for (auto& v : phi) v /= std::sqrt(norm2);
    return phi;
}

void run_fock(const ScenarioConfig& c, RunWriter& w)
{
    const std::size_t m = c.grid.size();
    const std::size_t n = c.fock.particles;
    const FockBasis basis(m, n, c.fock.cap);
    const auto h = build_one_body(c.grid, c.problem);
    const auto g = build_two_body(c.grid, c.problem);
    const auto l = assemble_L(h, g, basis, c.fock.cap);
    const Propagator prop(l, c.fock.propagation);
    const auto start = embed_product(product_wave_function(c), n, basis, c.grid);

    const auto times = output_times(c);
    double norm_drift = 0.0, density_mass = 0.0;
    DensityField last;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto st = prop.apply(start, times[k]);
        norm_drift = std::max(norm_drift, std::abs(st.norm() - start.norm()));
        last = density_expectation(st, basis, c.grid);
        density_mass = std::max(density_mass, std::abs(last.mass() - static_cast<double>(n)));
        w.file(indexed("fock_density", k, ".kvng"), io::encode_grid(last));
    }
    w.file("snapshots.csv", times_csv(times));
    w.file("fock_state.kvnf", io::encode_fock_state(prop.apply(start, c.final_time), n, m, c.grid));
    if (c.fock.write_operator) w.file("fock_operator.kvnf", io::encode_fock_operator(l, n, m, c.grid));

    const auto qv = check_quantum_vlasov(start, prop, basis, c.grid, c.problem, c.final_time, c.fock.dt_fd);
    const auto sym = check_Q_antihermitian(c.grid, c.problem, last);

    w.info("dimension", static_cast<double>(basis.size()));
    w.check("one_body_hermiticity", h.hermiticity_error, std::nullopt, 1e-12);
    w.check("operator_hermiticity", l.hermiticity_error, std::nullopt, 1e-12);
    w.check("number_commutator", number_commutator_norm(l, basis), std::nullopt, 0.0);
    w.check("norm_drift", norm_drift, std::nullopt, 1e-10);
    w.check("density_mass_error", density_mass, std::nullopt, 1e-10);
    w.check("quantum_vlasov_residual", qv.max_residual, std::nullopt, 1e-6);
    w.info("quantum_vlasov_time_term", qv.max_time_term);
    w.check("q_antihermitian", sym.q_antihermitian_error, std::nullopt, 1e-12);
    w.check("f_hermitian", sym.f_hermitian_error, std::nullopt, 0.0);
    w.check("two_body_diagonal_block", two_body_diagonal_block_max(c.grid, c.problem), std::nullopt, 0.0);
}

json ensemble_metadata(const ScenarioConfig& c)
{
    const auto& s = c.ensemble.settings;
    return {{"seed", c.seed},
            {"rng_algorithm", rng_algorithm},
            {"particles_per_system", s.particles_per_system},
            {"dt", s.dt},
            {"coupling", coupling_scaling_name(s.coupling)},
            {"coupling_note", "mean-field 1/(N-1) pair scaling is a modelling choice for the Vlasov limit"},
            {"final_time", c.final_time}};
}

void run_ensemble_method(const ScenarioConfig& c, RunWriter& w)
{
    auto settings = c.ensemble.settings;
    settings.seed = c.seed;
    const auto points = run_ensemble(c.initial, c.problem, c.final_time, settings, settings.n_samples);
    const auto hist = histogram_density(points, c.grid);
    w.file("particles.csv", io::points_csv(points));
    w.file("histogram.kvng", io::encode_grid(hist.density));
    json meta = ensemble_metadata(c);
    meta["n_samples"] = settings.n_samples;
    meta["outside"] = hist.outside;
    w.file("ensemble.json", meta.dump(2) + "\n");
    w.check("outside_fraction", static_cast<double>(hist.outside) / static_cast<double>(points.size()), std::nullopt,
            0.01);
    w.info("histogram_mass", hist.density.mass());
}

void run_compare(const ScenarioConfig& c, RunWriter& w)
{
    if (c.compare.kind == Comparison::perturbation_vlasov) {
        const ResidualStudy study{c.grid, c.vlasov, c.perturbation};
        const auto& eps = c.compare.epsilons;
        ResidualTable table;
        if (eps.size() >= 3) {
            table = residual_vs_vlasov(c.final_time, c.initial, c.problem, eps, study);
        } else {
            table.time = c.final_time;
            table.floor = residual_at(c.final_time, c.initial, c.problem, 0.0, study);
            for (double e : eps) table.rows.push_back({e, residual_at(c.final_time, c.initial, c.problem, e, study)});
            for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
                table.ratios.push_back(table.rows[k].linf / table.rows[k + 1].linf);
            }
            if (table.rows.size() >= 2) {
                std::vector<double> xs, ys;
                for (const auto& r : table.rows) {
                    xs.push_back(r.epsilon);
                    ys.push_back(r.linf);
                }
                table.fitted_order = loglog_slope(xs, ys);
            }
        }
        std::string csv = "epsilon,linf\n";
        json rows = json::array();
        for (const auto& r : table.rows) {
            csv += io::format_double(r.epsilon) + "," + io::format_double(r.linf) + "\n";
            rows.push_back({{"epsilon", r.epsilon}, {"linf", r.linf}});
        }
        if (table.rows.size() >= 2) csv += "fitted_order," + io::format_double(table.fitted_order) + "\n";
        w.file("residual_table.csv", csv);
        json side = {{"kind", "perturbation_vs_vlasov"}, {"time", table.time}, {"floor", table.floor},
                     {"rows", rows}, {"ratios", table.ratios}};
        side["fitted_order"] = table.rows.size() >= 2 ? json(table.fitted_order) : json(nullptr);
        w.file("residual_table.json", side.dump(2) + "\n");
        w.info("floor", table.floor);
        for (std::size_t k = 0; k < table.ratios.size(); ++k) {
            const double step = table.rows[k].epsilon / table.rows[k + 1].epsilon;
            if (std::abs(step - 2.0) < 1e-9) {
                w.check("ratio_" + std::to_string(k), table.ratios[k], 3.0, 5.0);
            } else {
                w.info("ratio_" + std::to_string(k), table.ratios[k]);
            }
        }
        if (table.rows.size() >= 3) w.check("fitted_order", table.fitted_order, 1.7, 2.3);
        return;
    }

    EnsembleStudy study;
    study.initial = c.initial;
    study.spec = c.problem;
    study.T = c.final_time;
    study.vlasov_grid = c.grid;
    study.vlasov = c.vlasov;
    study.coarsen = c.ensemble.coarsen;
    study.replicates = c.ensemble.replicates;
    study.settings = c.ensemble.settings;
    study.settings.seed = c.seed;
    const auto table = ensemble_vs_vlasov(study, c.ensemble.n_list);

    std::string csv = "n,l1\n";
    json rows = json::array();
    for (const auto& r : table.rows) {
        csv += std::to_string(r.n) + "," + io::format_double(r.l1) + "\n";
        rows.push_back({{"n", r.n}, {"l1", r.l1}, {"replicate_l1", r.replicate_l1}, {"outside", r.outside}});
    }
    csv += "fitted_slope," + io::format_double(table.fitted_slope) + "\n";
    w.file("ensemble_table.csv", csv);
    json side = ensemble_metadata(c);
    side["kind"] = "ensemble_vs_vlasov";
    side["replicates"] = c.ensemble.replicates;
    side["coarsen"] = c.ensemble.coarsen;
    side["rows"] = rows;
    side["ratios"] = table.ratios;
    side["fitted_slope"] = table.fitted_slope;
    w.file("ensemble_table.json", side.dump(2) + "\n");
    for (std::size_t k = 0; k < table.ratios.size(); ++k) {
        const double step = static_cast<double>(table.rows[k + 1].n) / static_cast<double>(table.rows[k].n);
        if (step == 10.0) {
            w.check("decade_ratio_" + std::to_string(k), table.ratios[k], 2.5, 4.0);
        } else {
            w.info("ratio_" + std::to_string(k), table.ratios[k]);
        }
    }
    w.info("fitted_slope", table.fitted_slope);
    w.info("vlasov_clip_count", static_cast<double>(table.vlasov_clip_count));
}

void clear_previous(const fs::path& dir)
{
    // Only files a previous run of this tool wrote are removed.
    const auto manifest = dir / "manifest.json";
    if (fs::exists(manifest)) {
        try {
            const auto doc = json::parse(io::read_file(manifest));
            for (const auto& f : doc.at("files")) fs::remove(dir / f.at("path").get<std::string>());
        } catch (const std::exception&) {
        }
        fs::remove(manifest);
    }
    fs::remove(dir / "error.json");
}

}  // namespace

RunOutcome run_scenario(ScenarioConfig config, const std::string& config_text, const RunOptions& options)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (options.seed) config.seed = *options.seed;
    config.ensemble.settings.seed = config.seed;

    RunOutcome outcome;
    outcome.run_dir = options.out_root / run_name(config, config_text);
    fs::create_directories(outcome.run_dir);
    clear_previous(outcome.run_dir);
    RunWriter w(outcome.run_dir);

    try {
        w.file("config.json", to_json(config));
        switch (config.method) {
        case Method::flow: run_flow(config, w); break;
        case Method::vlasov: run_vlasov(config, w); break;
        case Method::perturbation: run_perturbation(config, w); break;
        case Method::fock: run_fock(config, w); break;
        case Method::ensemble: run_ensemble_method(config, w); break;
        case Method::compare: run_compare(config, w); break;
        }
        w.file("checks.json", w.checks().dump(2) + "\n");
    } catch (const std::exception& e) {
        json err = {{"method", method_name(config.method)}, {"message", e.what()}};
        if (const auto* cap = dynamic_cast<const capacity_error*>(&e)) {
            err["kind"] = "capacity";
            err["requested"] = cap->requested();
            err["cap"] = cap->cap();
        } else if (dynamic_cast<const numerical_error*>(&e)) {
            err["kind"] = "numerical";
        } else if (dynamic_cast<const validation_error*>(&e)) {
            err["kind"] = "validation";
        } else {
            err["kind"] = "runtime";
        }
        io::write_file_atomic(outcome.run_dir / "error.json", err.dump(2) + "\n");
        outcome.exit_code = exit_runtime;
        outcome.message = e.what();
        return outcome;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = {{"tool", tool_name},
                     {"version", tool_version},
                     {"run", run_name(config, config_text)},
                     {"method", method_name(config.method)},
                     {"config_sha256", io::sha256_hex(config_text)},
                     {"seed", config.seed},
                     {"rng_algorithm", rng_algorithm},
                     {"wall_time_seconds", wall},
                     {"files", w.files()}};
    io::write_file_atomic(outcome.run_dir / "manifest.json", manifest.dump(2) + "\n");
    return outcome;
}

// ---------------------------------------------------------------------------

ReportOutcome report_runs(const std::vector<fs::path>& run_dirs, const fs::path& out_dir)
{
    ReportOutcome outcome;
    json runs = json::array();
    std::map<double, std::vector<double>> eps_rows;
    std::string md = "# Run report\n\n";

    for (const auto& dir : run_dirs) {
        json entry = {{"directory", dir.string()}};
        md += "## " + dir.string() + "\n\n";
        const auto manifest_path = dir / "manifest.json";
        json manifest;
        try {
            manifest = json::parse(io::read_file(manifest_path));
            manifest.at("files");
        } catch (const std::exception& e) {
            const bool missing = !fs::exists(manifest_path);
            entry["status"] = missing ? "missing manifest" : "corrupt manifest";
            ++outcome.missing_manifests;
            if (fs::exists(dir / "error.json")) {
                try {
                    entry["error"] = json::parse(io::read_file(dir / "error.json"));
                } catch (const std::exception&) {
                }
            }
            md += "- " + entry["status"].get<std::string>() + "\n";
            if (entry.contains("error")) md += "- run error: " + entry["error"].value("message", "") + "\n";
            md += "\n";
            runs.push_back(entry);
            continue;
        }
        entry["method"] = manifest.value("method", "");
        entry["run"] = manifest.value("run", "");
        md += "method: " + entry["method"].get<std::string>() + "\n\n";

        json mismatches = json::array();
        std::set<std::string> listed;
        for (const auto& f : manifest["files"]) {
            const auto name = f.value("path", "");
            listed.insert(name);
            std::string problem;
            try {
                const auto bytes = io::read_file(dir / name);
                if (io::sha256_hex(bytes) != f.value("sha256", "")) problem = "checksum mismatch";
                else if (bytes.size() != f.value("bytes", std::size_t{0})) problem = "size mismatch";
            } catch (const std::exception&) {
                problem = "missing file";
            }
            if (!problem.empty()) {
                mismatches.push_back({{"path", name}, {"problem", problem}});
                md += "- FLAGGED " + name + ": " + problem + "\n";
            }
        }
        outcome.checksum_mismatches += mismatches.size();
        entry["file_problems"] = mismatches;

        json checks = json::array();
        if (listed.count("checks.json")) {
            try {
                checks = json::parse(io::read_file(dir / "checks.json"));
            } catch (const std::exception&) {
            }
        }
        std::size_t failed = 0;
        if (!checks.empty()) md += "\n| check | value | bounds | status |\n|---|---|---|---|\n";
        for (const auto& c : checks) {
            const bool passed = c.value("passed", false);
            if (!passed) ++failed;
            std::string bounds;
            if (!c["lower"].is_null()) bounds += ">= " + io::format_double(c["lower"].get<double>());
            if (!c["upper"].is_null()) bounds += (bounds.empty() ? "" : ", ") + std::string("<= ") + io::format_double(c["upper"].get<double>());
            if (bounds.empty()) bounds = "info";
            md += "| " + c.value("name", "") + " | " + io::format_double(c.value("value", 0.0)) + " | " + bounds +
                  " | " + (bounds == "info" ? "info" : passed ? "pass" : "FAIL") + " |\n";
        }
        outcome.failed_checks += failed;
        entry["checks"] = checks;
        entry["failed_checks"] = failed;

        if (listed.count("residual_table.json")) {
            try {
                const auto side = json::parse(io::read_file(dir / "residual_table.json"));
                for (const auto& r : side.at("rows")) eps_rows[r.at("epsilon").get<double>()].push_back(r.at("linf").get<double>());
                entry["residual_table"] = side;
            } catch (const std::exception&) {
            }
        }
        if (listed.count("ensemble_table.json")) {
            try {
                entry["ensemble_table"] = json::parse(io::read_file(dir / "ensemble_table.json"));
            } catch (const std::exception&) {
            }
        }
        entry["status"] = (failed == 0 && mismatches.empty()) ? "ok" : "flagged";
        md += "\n";
        runs.push_back(entry);
    }

    json summary = {{"tool", tool_name}, {"version", tool_version}, {"runs", runs}};
    if (eps_rows.size() >= 2) {
        std::vector<double> xs, ys;
        for (const auto& [eps, values] : eps_rows) {
            double mean = 0.0;
            for (double v : values) mean += v;
            xs.push_back(eps);
            ys.push_back(mean / static_cast<double>(values.size()));
        }
        const double order = loglog_slope(xs, ys);
        summary["combined_fitted_order"] = order;
        summary["combined_couplings"] = xs.size();
        md += "Fitted convergence order over " + std::to_string(xs.size()) + " couplings: " + io::format_double(order) +
              "\n\n";
    }
    summary["failed_checks"] = outcome.failed_checks;
    summary["checksum_mismatches"] = outcome.checksum_mismatches;
    summary["missing_manifests"] = outcome.missing_manifests;
    const bool all_ok = outcome.failed_checks == 0 && outcome.checksum_mismatches == 0 && outcome.missing_manifests == 0;
    summary["all_passed"] = all_ok;
    if (all_ok) {
        md += "All checks passed.\n";
    } else {
        md += "Problems: " + std::to_string(outcome.failed_checks) + " failed checks, " +
              std::to_string(outcome.checksum_mismatches) + " file problems, " +
              std::to_string(outcome.missing_manifests) + " missing or corrupt manifests.\n";
    }

    fs::create_directories(out_dir);
    outcome.summary_md = out_dir / "summary.md";
    outcome.summary_json = out_dir / "summary.json";
    io::write_file_atomic(outcome.summary_md, md);
    io::write_file_atomic(outcome.summary_json, summary.dump(2) + "\n");
    outcome.exit_code = all_ok ? exit_ok : exit_tolerance;
    return outcome;
}

}  // namespace kvn
