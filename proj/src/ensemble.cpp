#include "kvn/ensemble.hpp"

#include <cmath>
#include <sstream>

#include "kvn/error.hpp"
#include "kvn/flow.hpp"
#include "kvn/statistics.hpp"

namespace kvn {

std::string coupling_scaling_name(CouplingScaling c)
{
    return c == CouplingScaling::mean_field ? "mean_field" : "bare";
}

void EnsembleSettings::validate(const ProblemSpec& spec) const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw validation_error("ensemble dt must be > 0");
    if (particles_per_system == 0) throw validation_error("particles_per_system must be >= 1");
    if (has_pair_interaction(spec.pair) && particles_per_system < 2) {
        throw validation_error("interacting ensembles need particles_per_system >= 2");
    }
    if (n_samples == 0 || n_samples % particles_per_system != 0) {
        throw validation_error("n_samples must be a positive multiple of particles_per_system");
    }
}

std::uint64_t CounterRng::bits(std::uint64_t k) const
{
    std::uint64_t z = seed_ + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t k) const
{
    return (static_cast<double>(bits(k) >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<PhasePoint> sample_initial(const InitialDensity& density, std::size_t n, std::uint64_t seed)
{
    const auto* mixture = std::get_if<GaussianMixtureDensity>(&density.spec);
    if (!mixture) {
        throw validation_error("sampling is only available for gaussian mixtures, not " + density.name());
    }
    density.validate();
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& c : mixture->components) cumulative.push_back(total += c.weight);

    const CounterRng rng(seed);
    std::vector<PhasePoint> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double pick = rng.uniform(3 * k) * total;
        std::size_t comp = 0;
        while (comp + 1 < cumulative.size() && pick >= cumulative[comp]) ++comp;
        const double r = std::sqrt(-2.0 * std::log(rng.uniform(3 * k + 1)));
        const double theta = 2.0 * M_PI * rng.uniform(3 * k + 2);
        const auto& c = mixture->components[comp];
        out[k] = {c.q0 + c.sigma_q * r * std::cos(theta), c.p0 + c.sigma_p * r * std::sin(theta)};
    }
    return out;
}

namespace {

double pair_scale(std::size_t n, CouplingScaling coupling)
{
    if (coupling == CouplingScaling::bare || n < 2) return 1.0;
    return 1.0 / static_cast<double>(n - 1);
}

void total_forces(std::span<const PhasePoint> x, const ProblemSpec& spec, double scale, std::vector<double>& f)
{
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) f[i] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double g = -pair_gradient(spec.pair, x[i].q - x[j].q);
            f[i] += g;
            f[j] -= g;
        }
    }
    for (std::size_t i = 0; i < n; ++i) f[i] = eval_force_external(spec, x[i].q) + scale * f[i];
}

}  // namespace

std::vector<PhasePoint> integrate_nbody(std::vector<PhasePoint> points, double T, const ProblemSpec& spec,
                                        double dt, CouplingScaling coupling)
{
    spec.validate();
    if (!(dt > 0.0)) throw validation_error("ensemble dt must be > 0");
    const double sign = T < 0.0 ? -1.0 : 1.0;
    const StepPlan plan = plan_steps(T, dt);
    std::vector<double> steps(plan.full_steps, sign * dt);
    if (plan.remainder > 0.0) steps.push_back(sign * plan.remainder);

    if (!has_pair_interaction(spec.pair)) {
        for (auto& x : points) {
            for (double h : steps) x = verlet_step(x, h, spec);
        }
        return points;
    }

    const double scale = pair_scale(points.size(), coupling);
    std::vector<double> force(points.size());
    total_forces(points, spec, scale, force);
    for (double h : steps) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double p_half = points[i].p + 0.5 * h * force[i];
            points[i].q += h * p_half / spec.mass;
            points[i].p = p_half;
        }
        total_forces(points, spec, scale, force);
        for (std::size_t i = 0; i < points.size(); ++i) points[i].p += 0.5 * h * force[i];
    }
    return points;
}

double total_energy(std::span<const PhasePoint> points, const ProblemSpec& spec, CouplingScaling coupling)
{
    double kinetic = 0.0, pair = 0.0;
    for (const auto& x : points) kinetic += spec.one_body_energy(x);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) pair += pair_value(spec.pair, points[i].q - points[j].q);
    }
    return kinetic + pair_scale(points.size(), coupling) * pair;
}

Histogram histogram_density(std::span<const PhasePoint> points, const PhaseGrid& grid)
{
    grid.validate();
    Histogram h;
    h.density = DensityField(grid);
    std::vector<std::size_t> counts(grid.size(), 0);
    auto cell_of = [](double v, const GridAxis& axis, std::size_t& idx) {
        if (axis.periodic) v = axis.lower + std::fmod(std::fmod(v - axis.lower, axis.length()) + axis.length(), axis.length());
        if (!(v >= axis.lower) || !(v < axis.upper)) return false;
        idx = std::min(static_cast<std::size_t>((v - axis.lower) / axis.spacing()), axis.cells - 1);
        return true;
    };
    for (const auto& x : points) {
        std::size_t iq = 0, ip = 0;
        if (cell_of(x.q, grid.q, iq) && cell_of(x.p, grid.p, ip)) {
            ++counts[grid.index(iq, ip)];
            ++h.inside;
        } else {
            ++h.outside;
        }
    }
    if (!points.empty()) {
        const double norm = 1.0 / (static_cast<double>(points.size()) * grid.cell_volume());
        for (std::size_t c = 0; c < grid.size(); ++c) h.density.values[c] = static_cast<double>(counts[c]) * norm;
    }
    h.outside_warning = static_cast<double>(h.outside) > 0.01 * static_cast<double>(points.size());
    return h;
}

DensityField block_average(const DensityField& fine, std::size_t factor)
{
    const auto& g = fine.grid;
    if (factor == 0 || g.q.cells % factor != 0 || g.p.cells % factor != 0) {
        throw validation_error("block size must divide both cell counts");
    }
    PhaseGrid coarse = g;
    coarse.q.cells /= factor;
    coarse.p.cells /= factor;
    coarse.validate();
    DensityField out(coarse);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t iq = 0; iq < coarse.q.cells; ++iq) {
        for (std::size_t ip = 0; ip < coarse.p.cells; ++ip) {
            double sum = 0.0;
            for (std::size_t a = 0; a < factor; ++a)
                for (std::size_t b = 0; b < factor; ++b) sum += fine.at(iq * factor + a, ip * factor + b);
            out.at(iq, ip) = sum * inv;
        }
    }
    return out;
}

double l1_distance(const DensityField& a, const DensityField& b)
{
    if (!(a.grid == b.grid)) throw validation_error("density fields live on different grids");
    double sum = 0.0;
    for (std::size_t c = 0; c < a.values.size(); ++c) sum += std::abs(a.values[c] - b.values[c]);
    return sum * a.grid.cell_volume();
}

std::vector<PhasePoint> run_ensemble(const InitialDensity& initial, const ProblemSpec& spec, double T,
                                     const EnsembleSettings& settings, std::size_t n_samples)
{
    EnsembleSettings s = settings;
    s.n_samples = n_samples;
    s.validate(spec);
    const auto start = sample_initial(initial, n_samples, settings.seed);
    std::vector<PhasePoint> out;
    out.reserve(n_samples);
    const std::size_t per = settings.particles_per_system;
    for (std::size_t first = 0; first < n_samples; first += per) {
        std::vector<PhasePoint> system(start.begin() + first, start.begin() + first + per);
        const auto moved = integrate_nbody(std::move(system), T, spec, settings.dt, settings.coupling);
        out.insert(out.end(), moved.begin(), moved.end());
    }
    return out;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate)
{
    if (replicate == 0) return seed;
    return CounterRng(seed).bits((1ULL << 63) + replicate);
}

EnsembleTable ensemble_vs_vlasov(const EnsembleStudy& study, std::span<const std::size_t> n_list)
{
    if (n_list.size() < 2) throw validation_error("ensemble study needs at least two sample sizes");
    for (std::size_t k = 0; k + 1 < n_list.size(); ++k) {
        if (!(n_list[k] < n_list[k + 1])) throw validation_error("ensemble sample sizes must increase");
    }
    if (!(study.T > 0.0)) throw validation_error("ensemble study needs T > 0");
    if (study.replicates == 0) throw validation_error("ensemble study needs at least one replicate");

    const auto start = density_from_function(study.vlasov_grid, study.initial.as_function());
    const auto solved = vlasov_solve(start, study.T, study.spec, study.vlasov);
    const auto reference = block_average(solved.snapshots.back(), study.coarsen);

    EnsembleTable table;
    table.vlasov_clip_count = solved.diagnostics.clip_count;
    std::vector<double> xs, ys;
    for (std::size_t n : n_list) {
        EnsembleRow row;
        row.n = n;
        for (std::size_t r = 0; r < study.replicates; ++r) {
            EnsembleSettings s = study.settings;
            s.seed = replicate_seed(study.settings.seed, r);
            const auto points = run_ensemble(study.initial, study.spec, study.T, s, n);
            const auto hist = histogram_density(points, reference.grid);
            row.replicate_l1.push_back(l1_distance(hist.density, reference));
            row.l1 += row.replicate_l1.back();
            row.outside += hist.outside;
        }
        row.l1 /= static_cast<double>(study.replicates);
        xs.push_back(static_cast<double>(n));
        ys.push_back(row.l1);
        table.rows.push_back(std::move(row));
    }
    for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
        table.ratios.push_back(table.rows[k].l1 / table.rows[k + 1].l1);
    }
    table.fitted_slope = loglog_slope(xs, ys);
    return table;
}

}  // namespace kvn
