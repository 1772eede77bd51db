#include "kvn/flow.hpp"

#include <cmath>

#include "kvn/error.hpp"

namespace kvn {

void FlowSettings::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw validation_error("flow dt must be > 0");
}

StepPlan plan_steps(double duration, double dt)
{
    duration = std::abs(duration);
    const double ratio = duration / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
        return {static_cast<std::size_t>(nearest), 0.0};
    }
    const double whole = std::floor(ratio);
    return {static_cast<std::size_t>(whole), duration - whole * dt};
}

PhasePoint verlet_step(const PhasePoint& x, double h, const ProblemSpec& spec)
{
    const double p_half = x.p + 0.5 * h * eval_force_external(spec, x.q);
    const double q = x.q + h * p_half / spec.mass;
    const double p = p_half + 0.5 * h * eval_force_external(spec, q);
    return {q, p};
}

namespace {

bool closed_form(const PhasePoint& x, double t, const ProblemSpec& spec, PhasePoint& out)
{
    if (std::holds_alternative<FreePotential>(spec.external)) {
        out = {x.q + x.p * t / spec.mass, x.p};
        return true;
    }
    if (const auto* h = std::get_if<HarmonicPotential>(&spec.external)) {
        const double w = h->omega;
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        out = {x.q * c + x.p / (spec.mass * w) * s, -spec.mass * w * x.q * s + x.p * c};
        return true;
    }
    return false;
}

}  // namespace

PhasePoint flow_map(const PhasePoint& x, double t, const ProblemSpec& spec, const FlowSettings& settings)
{
    PhasePoint out;
    if (settings.exact_shortcut && closed_form(x, t, spec, out)) return out;

    const double sign = t < 0.0 ? -1.0 : 1.0;
    const StepPlan plan = plan_steps(t, settings.dt);
    const double h = sign * settings.dt;
    out = x;
    for (std::size_t i = 0; i < plan.full_steps; ++i) out = verlet_step(out, h, spec);
    if (plan.remainder > 0.0) out = verlet_step(out, sign * plan.remainder, spec);
    return out;
}

std::vector<TrajectorySample> flow_trajectory(const PhasePoint& x, double t, const ProblemSpec& spec,
                                              const FlowSettings& settings)
{
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const StepPlan plan = plan_steps(t, settings.dt);
    std::vector<TrajectorySample> out;
    out.reserve(plan.full_steps + 2);
    out.push_back({0.0, x});
    PhasePoint cur = x;
    for (std::size_t i = 0; i < plan.full_steps; ++i) {
        cur = verlet_step(cur, sign * settings.dt, spec);
        out.push_back({sign * static_cast<double>(i + 1) * settings.dt, cur});
    }
    if (plan.remainder > 0.0) {
        cur = verlet_step(cur, sign * plan.remainder, spec);
        out.push_back({t, cur});
    }
    return out;
}

Jacobian flow_jacobian(const PhasePoint& x, double t, const ProblemSpec& spec, const FlowSettings& settings,
                       double h)
{
    if (!(h > 0.0)) throw validation_error("finite-difference step must be > 0");
    const PhasePoint qp = flow_map({x.q + h, x.p}, t, spec, settings);
    const PhasePoint qm = flow_map({x.q - h, x.p}, t, spec, settings);
    const PhasePoint pp = flow_map({x.q, x.p + h}, t, spec, settings);
    const PhasePoint pm = flow_map({x.q, x.p - h}, t, spec, settings);
    Jacobian j;
    j.m[0] = (qp.q - qm.q) / (2.0 * h);
    j.m[2] = (qp.p - qm.p) / (2.0 * h);
    j.m[1] = (pp.q - pm.q) / (2.0 * h);
    j.m[3] = (pp.p - pm.p) / (2.0 * h);
    return j;
}

double distance(const PhasePoint& a, const PhasePoint& b)
{
    return std::hypot(a.q - b.q, a.p - b.p);
}

double group_property_residual(const PhasePoint& x, double s, double t, const ProblemSpec& spec,
                               const FlowSettings& settings)
{
    const PhasePoint composed = flow_map(flow_map(x, s, spec, settings), t, spec, settings);
    const PhasePoint direct = flow_map(x, t + s, spec, settings);
    return distance(composed, direct);
}

}  // namespace kvn
