#pragma once

// Semi-Lagrangian solver for the self-consistent Vlasov equation
//   d_t rho + (p/m) d_q rho + F(q, t) d_p rho = 0,
//   F = -U'(q) - int dq' n(q') v'(q - q'),
// Strang split as half q-advection / full p-kick / half q-advection with the
// force frozen from the half-advected density.

#include <cstddef>
#include <vector>

#include "kvn/interpolation.hpp"
#include "kvn/phase_space.hpp"

namespace kvn {

enum class Splitting { strang };
enum class ForceUpdate { half_step_frozen };

struct VlasovSettings {
    double dt = 1e-2;
    Interpolation interpolation = Interpolation::cubic_spline;
    Splitting splitting = Splitting::strang;
    ForceUpdate force_update = ForceUpdate::half_step_frozen;

    void validate() const;
};

struct VlasovDiagnostics {
    std::size_t steps = 0;
    /// Cells whose value fell below -1e-12 and were clipped to zero.
    std::size_t clip_count = 0;
    std::vector<double> mass_history;
};

/// dt * max|p| / m must stay below the q-domain length.
void check_cfl(const PhaseGrid& grid, const ProblemSpec& spec, double dt);

/// One Strang step of length settings.dt. Both axes are interpolated
/// periodically; on open axes the density is assumed negligible at the edges.
DensityField vlasov_step(const DensityField& rho, const ProblemSpec& spec, const VlasovSettings& settings,
                         VlasovDiagnostics* diagnostics = nullptr);

/// Same as vlasov_step with an explicit step length (used for the final
/// partial step).
DensityField vlasov_step(const DensityField& rho, const ProblemSpec& spec, const VlasovSettings& settings,
                         double dt, VlasovDiagnostics* diagnostics);

struct VlasovSolution {
    std::vector<double> times;
    std::vector<DensityField> snapshots;
    VlasovDiagnostics diagnostics;
};

/// Integrates from the initial field to T, keeping the snapshot nearest (in
/// whole steps) to each requested time. T == 0 returns the initial field.
/// Refuses initial data with more than 1e-8 of its mass in the outermost two
/// p rows of an open p axis.
VlasovSolution vlasov_solve(const DensityField& initial, double T, const ProblemSpec& spec,
                            const VlasovSettings& settings, std::vector<double> snapshot_times = {});

}  // namespace kvn
