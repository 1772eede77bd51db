#include "kvn/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvn/error.hpp"
#include "kvn/quadrature.hpp"
#include "kvn/statistics.hpp"

namespace kvn {

void PerturbationSettings::validate() const
{
    if (n_s < 2) throw validation_error("perturbation n_s must be >= 2");
    if (!(h_p > 0.0)) throw validation_error("perturbation h_p must be > 0");
    if (aux_grid) aux_grid->validate();
    flow.validate();
}

AnalyticDensity AnalyticDensity::from(const InitialDensity& density)
{
    return {density.as_function(), density.mass()};
}

PerturbativeExpansion::PerturbativeExpansion(AnalyticDensity initial, ProblemSpec spec,
                                             PerturbationSettings settings, PhaseGrid aux_grid)
    : initial_(std::move(initial)), spec_(std::move(spec)), settings_(std::move(settings)), aux_(aux_grid)
{
    spec_.validate();
    settings_.validate();
    aux_.validate();
}

double PerturbativeExpansion::rho0(const PhasePoint& x, double t) const
{
    if (t == 0.0) return initial_.value(x);
    return initial_.value(flow_map(x, -t, spec_, settings_.flow));
}

double PerturbativeExpansion::drho0_dp(const PhasePoint& x, double t) const
{
    const double h = settings_.h_p;
    return (rho0({x.q, x.p + h}, t) - rho0({x.q, x.p - h}, t)) / (2.0 * h);
}

const std::vector<double>& PerturbativeExpansion::marginal(double t)
{
    if (auto it = marginals_.find(t); it != marginals_.end()) return it->second;

    const double dp = aux_.p.spacing();
    std::vector<double> n(aux_.q.cells, 0.0);
    for (std::size_t iq = 0; iq < aux_.q.cells; ++iq) {
        const double q = aux_.q.center(iq);
        double sum = 0.0;
        for (std::size_t ip = 0; ip < aux_.p.cells; ++ip) sum += rho0({q, aux_.p.center(ip)}, t);
        n[iq] = sum * dp;
    }
    double mass = 0.0;
    for (double v : n) mass += v;
    mass *= aux_.q.spacing();
    if (std::abs(mass - initial_.mass) > 1e-3 * std::abs(initial_.mass)) {
        std::ostringstream os;
        os << "auxiliary grid too coarse or too small: marginal mass " << mass << " at t=" << t
           << " deviates from the initial mass " << initial_.mass << " by more than 1e-3";
        throw numerical_error(os.str());
    }
    return marginals_.emplace(t, std::move(n)).first->second;
}

double PerturbativeExpansion::pair_field(double q, double t)
{
    if (!has_pair_interaction(spec_.pair)) return 0.0;
    const auto& n = marginal(t);
    const auto& axis = aux_.q;
    double sum = 0.0;
    for (std::size_t j = 0; j < axis.cells; ++j) {
        double d = q - axis.center(j);
        if (axis.periodic) d = wrap_separation(d, axis.length());
        sum += n[j] * pair_gradient(spec_.pair, d);
    }
    return sum * axis.spacing();
}

double PerturbativeExpansion::source(const PhasePoint& x, double t)
{
    if (!has_pair_interaction(spec_.pair)) return 0.0;
    return drho0_dp(x, t) * pair_field(x.q, t);
}

double PerturbativeExpansion::rho1(const PhasePoint& x, double t)
{
    if (t < 0.0) throw validation_error("rho1 needs t >= 0");
    if (t == 0.0 || !has_pair_interaction(spec_.pair)) return 0.0;
    const QuadratureRule rule = settings_.quadrature == TimeQuadrature::gauss_legendre
                                    ? gauss_legendre(settings_.n_s, 0.0, t)
                                    : trapezoid(settings_.n_s, 0.0, t);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double s = rule.nodes[k];
        const PhasePoint y = flow_map(x, s - t, spec_, settings_.flow);
        sum += rule.weights[k] * source(y, s);
    }
    return sum;
}

DensityField PerturbativeExpansion::first_order(const PhaseGrid& grid, double t)
{
    DensityField out(grid);
    for (std::size_t cell = 0; cell < grid.size(); ++cell) out.values[cell] = rho1(grid.center(cell), t);
    return out;
}

DensityField PerturbativeExpansion::density(const PhaseGrid& grid, double t)
{
    if (t < 0.0) throw validation_error("perturbative density needs t >= 0");
    grid.validate();
    DensityField out(grid);
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        const PhasePoint x = grid.center(cell);
        out.values[cell] = rho0(x, t) + rho1(x, t);
    }
    return out;
}

double rho0(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
            const FlowSettings& flow)
{
    if (t < 0.0) throw validation_error("rho0 needs t >= 0");
    if (t == 0.0) return initial.value(x);
    return initial.value(flow_map(x, -t, spec, flow));
}

namespace {

PerturbativeExpansion make_expansion(const AnalyticDensity& initial, const ProblemSpec& spec,
                                     const PerturbationSettings& settings, const PhaseGrid* fallback)
{
    if (!settings.aux_grid && !fallback) throw validation_error("perturbation needs an auxiliary grid");
    return PerturbativeExpansion(initial, spec, settings, settings.aux_grid ? *settings.aux_grid : *fallback);
}

}  // namespace

double source_f(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
                const PerturbationSettings& settings)
{
    if (t < 0.0) throw validation_error("source_f needs t >= 0");
    if (!has_pair_interaction(spec.pair)) return 0.0;
    auto expansion = make_expansion(initial, spec, settings, nullptr);
    return expansion.source(x, t);
}

double rho1(const PhasePoint& x, double t, const AnalyticDensity& initial, const ProblemSpec& spec,
            const PerturbationSettings& settings)
{
    if (t < 0.0) throw validation_error("rho1 needs t >= 0");
    if (t == 0.0 || !has_pair_interaction(spec.pair)) return 0.0;
    auto expansion = make_expansion(initial, spec, settings, nullptr);
    return expansion.rho1(x, t);
}

DensityField perturbative_density(const PhaseGrid& grid, double t, const AnalyticDensity& initial,
                                  const ProblemSpec& spec, const PerturbationSettings& settings)
{
    auto expansion = make_expansion(initial, spec, settings, &grid);
    return expansion.density(grid, t);
}

double residual_at(double t, const InitialDensity& initial, const ProblemSpec& spec, double epsilon,
                   const ResidualStudy& study)
{
    if (!(t > 0.0)) throw validation_error("residual study needs t > 0");
    if (!(epsilon >= 0.0)) throw validation_error("coupling must be >= 0");
    const DensityField start = density_from_function(study.grid, initial.as_function());
    ProblemSpec scaled = spec;
    scaled.pair = with_pair_strength(spec.pair, epsilon);
    const auto solved = vlasov_solve(start, t, scaled, study.vlasov);
    const auto predicted = perturbative_density(study.grid, t, AnalyticDensity::from(initial), scaled, study.perturbation);
    return linf_distance(solved.snapshots.back(), predicted);
}

ResidualTable residual_vs_vlasov(double t, const InitialDensity& initial, const ProblemSpec& spec,
                                 std::span<const double> epsilons, const ResidualStudy& study)
{
    if (epsilons.size() < 3) throw validation_error("residual study needs at least three couplings");
    for (std::size_t k = 0; k + 1 < epsilons.size(); ++k) {
        if (!(epsilons[k] > epsilons[k + 1]) || !(epsilons[k + 1] > 0.0)) {
            throw validation_error("residual study couplings must be positive and strictly decreasing");
        }
    }
    if (!has_pair_interaction(spec.pair)) throw validation_error("residual study needs a pair potential");
    if (!(t > 0.0)) throw validation_error("residual study needs t > 0");

    auto distance_at = [&](double eps) { return residual_at(t, initial, spec, eps, study); };

    ResidualTable table;
    table.time = t;
    table.floor = distance_at(0.0);
    std::vector<double> xs, ys;
    for (double eps : epsilons) {
        const double d = distance_at(eps);
        table.rows.push_back({eps, d});
        xs.push_back(eps);
        ys.push_back(d);
    }
    for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
        table.ratios.push_back(table.rows[k].linf / table.rows[k + 1].linf);
    }
    table.fitted_order = loglog_slope(xs, ys);
    return table;
}

}  // namespace kvn
