#pragma once

// First-order expansion of the coherent-state density expectation in the
// pair potential:
//
//   rho_0(x, t) = varrho(Phi_{-t}(x))
//   rho_1(x, t) = int_0^t ds f(Phi_{s-t}(x), s)
//   f(q, p, t)  = d_p rho_0(q, p, t) * int dq' [int dp' rho_0(q', p', t)] v'(q - q')
//
// The initial density is always an analytic callable; the q' marginal of
// rho_0 is rebuilt on an auxiliary grid by pulling the initial density back
// along the flow, so nothing here depends on the Vlasov solver.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kvn/flow.hpp"
#include "kvn/initial_density.hpp"
#include "kvn/phase_space.hpp"
#include "kvn/vlasov.hpp"

namespace kvn {

enum class TimeQuadrature { trapezoid, gauss_legendre };

struct PerturbationSettings {
    TimeQuadrature quadrature = TimeQuadrature::gauss_legendre;
    std::size_t n_s = 16;
    /// Central-difference step for d/dp of rho_0.
    double h_p = 1e-4;
    /// Grid carrying the q' marginal of rho_0. Defaults to the output grid.
    std::optional<PhaseGrid> aux_grid;
    FlowSettings flow;

    void validate() const;
};

/// Analytic initial density with its exact mass.
struct AnalyticDensity {
    DensityFunction value;
    double mass = 1.0;

    static AnalyticDensity from(const InitialDensity& density);
};

/// Evaluator that caches the rho_0 marginal per time node. Not thread-safe.
class PerturbativeExpansion {
public:
    PerturbativeExpansion(AnalyticDensity initial, ProblemSpec spec, PerturbationSettings settings, PhaseGrid aux_grid);

    double rho0(const PhasePoint& x, double t) const;
    double drho0_dp(const PhasePoint& x, double t) const;

    /// int dq' n_0(q', t) v'(q - q') by midpoint quadrature on the auxiliary grid.
    double pair_field(double q, double t);

    double source(const PhasePoint& x, double t);
    double rho1(const PhasePoint& x, double t);

    DensityField density(const PhaseGrid& grid, double t);
    DensityField first_order(const PhaseGrid& grid, double t);

    const ProblemSpec& spec() const { return spec_; }

private:
    const std::vector<double>& marginal(double t);

    AnalyticDensity initial_;
    ProblemSpec spec_;
    PerturbationSettings settings_;
    PhaseGrid aux_;
    std::map<double, std::vector<double>> marginals_;
};

double rho0(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
            const FlowSettings& flow);

/// f(x, t). The auxiliary grid must be set in `settings`.
double source_f(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
                const PerturbationSettings& settings);

double rho1(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
            const PerturbationSettings& settings);

/// rho_0 + rho_1 at every cell centre of `grid`.
DensityField perturbative_density(const PhaseGrid& grid, double t, const AnalyticDensity& initial,
                                  const ProblemSpec& spec, const PerturbationSettings& settings);

struct ResidualStudy {
    PhaseGrid grid;
    VlasovSettings vlasov;
    PerturbationSettings perturbation;
};

struct ResidualRow {
    double epsilon = 0.0;
    double linf = 0.0;
};

struct ResidualTable {
    double time = 0.0;
    /// epsilon = 0 mismatch: pure discretisation difference between the two routes.
    double floor = 0.0;
    std::vector<ResidualRow> rows;
    /// linf[k] / linf[k + 1] for consecutive couplings.
    std::vector<double> ratios;
    double fitted_order = 0.0;
};

/// L-infinity distance between the perturbative density and the Vlasov
/// solution at time t for one coupling.
double residual_at(double t, const InitialDensity& initial, const ProblemSpec& spec, double epsilon,
                   const ResidualStudy& study);

/// Sup-norm distance between the perturbative density and the Vlasov solution
/// at time t for each coupling (the pair strength is replaced by each
/// epsilon). Needs at least three strictly decreasing couplings.
ResidualTable residual_vs_vlasov(double t, const InitialDensity& initial, const ProblemSpec& spec,
                                 std::span<const double> epsilons, const ResidualStudy& study);

}  // namespace kvn
