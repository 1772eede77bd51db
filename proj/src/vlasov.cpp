#include "kvn/vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvn/error.hpp"
#include "kvn/flow.hpp"

namespace kvn {

void VlasovSettings::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw validation_error("vlasov dt must be > 0");
}

void check_cfl(const PhaseGrid& grid, const ProblemSpec& spec, double dt)
{
    const double pmax = std::max(std::abs(grid.p.lower), std::abs(grid.p.upper));
    if (!(dt * pmax / spec.mass < grid.q.length())) {
        std::ostringstream os;
        os << "CFL sanity bound violated: dt * max|p| / m = " << dt * pmax / spec.mass
           << " is not below the q-domain length " << grid.q.length();
        throw numerical_error(os.str());
    }
}

namespace {

void advect_q(DensityField& rho, double dt, double mass, Interpolation kind)
{
    const auto& grid = rho.grid;
    const std::size_t nq = grid.q.cells;
    const std::size_t np = grid.p.cells;
    PeriodicShifter shifter(nq, kind);
    std::vector<double> row(nq);
    const double dq = grid.q.spacing();
    for (std::size_t ip = 0; ip < np; ++ip) {
        for (std::size_t iq = 0; iq < nq; ++iq) row[iq] = rho.at(iq, ip);
        shifter.shift(row, grid.p.center(ip) * dt / mass / dq, row);
        for (std::size_t iq = 0; iq < nq; ++iq) rho.at(iq, ip) = row[iq];
    }
}

void kick_p(DensityField& rho, const std::vector<double>& force, double dt, Interpolation kind)
{
    const auto& grid = rho.grid;
    const std::size_t np = grid.p.cells;
    PeriodicShifter shifter(np, kind);
    const double dp = grid.p.spacing();
    for (std::size_t iq = 0; iq < grid.q.cells; ++iq) {
        std::span<double> row(rho.values.data() + iq * np, np);
        shifter.shift(row, force[iq] * dt / dp, row);
    }
}

}  // namespace

DensityField vlasov_step(const DensityField& rho, const ProblemSpec& spec, const VlasovSettings& settings,
                         VlasovDiagnostics* diagnostics)
{
    return vlasov_step(rho, spec, settings, settings.dt, diagnostics);
}

DensityField vlasov_step(const DensityField& rho, const ProblemSpec& spec, const VlasovSettings& settings,
                         double dt, VlasovDiagnostics* diagnostics)
{
    check_cfl(rho.grid, spec, dt);
    const double mass_before = rho.mass();

    DensityField next = rho;
    next.resolution_warning = false;
    next.boundary_warning = false;
    advect_q(next, 0.5 * dt, spec.mass, settings.interpolation);
    const auto force = mean_field_force(next, spec);
    kick_p(next, force, dt, settings.interpolation);
    advect_q(next, 0.5 * dt, spec.mass, settings.interpolation);

    std::size_t clipped = 0;
    for (double& v : next.values) {
        if (v < -1e-12) {
            v = 0.0;
            ++clipped;
        }
    }
    if (clipped > 0) {
        const double mass_after = next.mass();
        if (mass_after > 0.0) {
            const double scale = mass_before / mass_after;
            for (double& v : next.values) v *= scale;
        }
    }
    if (diagnostics) {
        diagnostics->clip_count += clipped;
        diagnostics->steps += 1;
    }
    return next;
}

VlasovSolution vlasov_solve(const DensityField& initial, double T, const ProblemSpec& spec,
                            const VlasovSettings& settings, std::vector<double> snapshot_times)
{
    spec.validate();
    settings.validate();
    initial.grid.validate();
    if (!(T >= 0.0) || !std::isfinite(T)) throw validation_error("final time must be >= 0");
    if (!initial.grid.p.periodic && initial.edge_mass_fraction_p(2) > 1e-8) {
        throw validation_error("initial density has more than 1e-8 of its mass in the outermost two p rows");
    }

    VlasovSolution out;
    out.diagnostics.mass_history.push_back(initial.mass());
    if (T == 0.0) {
        out.times.push_back(0.0);
        out.snapshots.push_back(initial);
        return out;
    }
    check_cfl(initial.grid, spec, settings.dt);
    if (snapshot_times.empty()) snapshot_times.push_back(T);

    const StepPlan plan = plan_steps(T, settings.dt);
    const std::size_t total_steps = plan.full_steps + (plan.remainder > 0.0 ? 1 : 0);
    // Snapshot k is taken after step index target[k].
    std::vector<std::size_t> target;
    for (double s : snapshot_times) {
        if (!(s >= 0.0) || s > T * (1.0 + 1e-12)) throw validation_error("snapshot times must lie in [0, T]");
        const auto idx = static_cast<std::size_t>(std::llround(s / settings.dt));
        target.push_back(std::min(idx, total_steps));
    }

    auto record = [&](std::size_t step, double time, const DensityField& field) {
        for (std::size_t k = 0; k < target.size(); ++k) {
            if (target[k] == step) {
                out.times.push_back(time);
                out.snapshots.push_back(field);
            }
        }
    };

    DensityField rho = initial;
    record(0, 0.0, rho);
    double time = 0.0;
    for (std::size_t step = 1; step <= total_steps; ++step) {
        const bool partial = step > plan.full_steps;
        const double h = partial ? plan.remainder : settings.dt;
        rho = vlasov_step(rho, spec, settings, h, &out.diagnostics);
        time = partial ? T : static_cast<double>(step) * settings.dt;
        out.diagnostics.mass_history.push_back(rho.mass());
        record(step, time, rho);
    }
    return out;
}

}  // namespace kvn
