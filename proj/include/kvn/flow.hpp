#pragma once

// Characteristic flow Phi_t of the non-interacting vector field
// V(x) = (p/m, -U'(q)), integrated with velocity Verlet.

#include <array>
#include <cstddef>
#include <vector>

#include "kvn/phase_space.hpp"

namespace kvn {

enum class Integrator { velocity_verlet };

struct FlowSettings {
    double dt = 1e-3;
    Integrator integrator = Integrator::velocity_verlet;
    /// Use the closed-form flow for free and harmonic potentials.
    bool exact_shortcut = false;

    void validate() const;
};

/// Step plan for reaching time |t| with step dt: `full_steps` steps of dt
/// followed by one partial step of length `remainder` (possibly 0). A
/// duration within 1e-9 relative of an integer multiple of dt counts as
/// aligned and has no partial step.
struct StepPlan {
    std::size_t full_steps = 0;
    double remainder = 0.0;
};

StepPlan plan_steps(double duration, double dt);

/// One velocity-Verlet step of signed length h under -U'.
PhasePoint verlet_step(const PhasePoint& x, double h, const ProblemSpec& spec);

/// Phi_t(x). Negative t integrates with the negated step.
PhasePoint flow_map(const PhasePoint& x, double t, const ProblemSpec& spec, const FlowSettings& settings);

/// Phi_t(x) sampled after every step, including t = 0.
struct TrajectorySample {
    double t;
    PhasePoint x;
};
std::vector<TrajectorySample> flow_trajectory(const PhasePoint& x, double t, const ProblemSpec& spec,
                                              const FlowSettings& settings);

struct Jacobian {
    // Row-major [[dq/dq, dq/dp], [dp/dq, dp/dp]].
    std::array<double, 4> m{};

    double determinant() const { return m[0] * m[3] - m[1] * m[2]; }
};

/// Central finite-difference Jacobian of Phi_t at x with step h.
Jacobian flow_jacobian(const PhasePoint& x, double t, const ProblemSpec& spec, const FlowSettings& settings,
                       double h = 1e-5);

/// || Phi_t(Phi_s(x)) - Phi_{t+s}(x) ||_2
double group_property_residual(const PhasePoint& x, double s, double t, const ProblemSpec& spec,
                               const FlowSettings& settings);

double distance(const PhasePoint& a, const PhasePoint& b);

}  // namespace kvn
