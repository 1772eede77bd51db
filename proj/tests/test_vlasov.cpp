#include <doctest.h>

#include <cmath>

#include "kvn/error.hpp"
#include "kvn/flow.hpp"
#include "kvn/initial_density.hpp"
#include "kvn/vlasov.hpp"

using namespace kvn;

namespace {

PhaseGrid open_grid(std::size_t n, double half)
{
    return {{-half, half, n, false}, {-half, half, n, false}};
}

DensityField shifted_exact(const PhaseGrid& g, const InitialDensity& rho, double t)
{
    return density_from_function(g, [&](const PhasePoint& x) { return rho({x.q - x.p * t, x.p}); });
}

double free_streaming_error(std::size_t n, double dt)
{
    const auto g = open_grid(n, 8.0);
    const auto rho = gaussian_density(1.0, 1.0, 0.5, 0.0);
    VlasovSettings vs;
    vs.dt = dt;
    const auto sol = vlasov_solve(density_from_function(g, rho.as_function()), 1.0, ProblemSpec{}, vs);
    return linf_distance(sol.snapshots.back(), shifted_exact(g, rho, 1.0));
}

}  // namespace

TEST_CASE("free streaming is exact advection")
{
    const auto g = open_grid(128, 8.0);
    const auto rho = gaussian_density(1.0, 1.0, 0.5, 0.0);
    VlasovSettings vs;
    vs.dt = 0.01;
    const auto sol = vlasov_solve(density_from_function(g, rho.as_function()), 1.0, ProblemSpec{}, vs, {0.4, 1.0});
    REQUIRE(sol.snapshots.size() == 2);
    CHECK(sol.times[0] == doctest::Approx(0.4));
    CHECK(linf_distance(sol.snapshots[0], shifted_exact(g, rho, 0.4)) < 1e-3);
    CHECK(linf_distance(sol.snapshots[1], shifted_exact(g, rho, 1.0)) < 1e-3);
    CHECK(sol.diagnostics.clip_count == 0);
    for (double m : sol.diagnostics.mass_history) CHECK(std::abs(m - 1.0) < 1e-6);
}

TEST_CASE("halving dt and doubling resolution shrinks the error")
{
    const double coarse = free_streaming_error(32, 0.02);
    const double fine = free_streaming_error(64, 0.01);
    CHECK(coarse / fine >= 3.0);
}

TEST_CASE("isotropic gaussian is stationary in a harmonic well")
{
    const auto g = open_grid(128, 8.0);
    ProblemSpec s;
    s.external = HarmonicPotential{1.0};
    const auto start = density_from_function(g, gaussian_density().as_function());
    VlasovSettings vs;
    vs.dt = 0.01;
    const auto sol = vlasov_solve(start, 2.0 * M_PI, s, vs);
    CHECK(linf_distance(sol.snapshots.back(), start) < 1e-3);
    CHECK(sol.diagnostics.clip_count == 0);
}

TEST_CASE("without interaction the solver follows the characteristics")
{
    const auto g = open_grid(128, 8.0);
    ProblemSpec s;
    s.external = HarmonicPotential{1.0};
    const auto rho = gaussian_density(0.7, 1.2, 1.0, -0.5);
    VlasovSettings vs;
    vs.dt = 0.01;
    FlowSettings exact;
    exact.exact_shortcut = true;
    const auto sol = vlasov_solve(density_from_function(g, rho.as_function()), 2.0, s, vs);
    const auto oracle =
        density_from_function(g, [&](const PhasePoint& x) { return rho(flow_map(x, -2.0, s, exact)); });
    CHECK(linf_distance(sol.snapshots.back(), oracle) < 1e-3);
}

TEST_CASE("mass conservation with a periodic self-consistent force")
{
    PhaseGrid g{{0.0, 2.0 * M_PI, 64, true}, {-6.0, 6.0, 64, false}};
    ProblemSpec s;
    s.pair = CosinePairPotential{0.5, 1.0};
    const InitialDensity init{PerturbedUniformDensity{0.0, 2.0 * M_PI, 0.2, 1.0, 1.0}};
    const auto start = density_from_function(g, init.as_function());
    VlasovSettings vs;
    vs.dt = 0.01;
    VlasovDiagnostics diag;
    auto rho = start;
    const double m0 = start.mass();
    double worst_step = 0.0, worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double before = rho.mass();
        rho = vlasov_step(rho, s, vs, &diag);
        worst_step = std::max(worst_step, std::abs(rho.mass() - before) / before);
        worst = std::max(worst, std::abs(rho.mass() - m0) / m0);
    }
    CHECK(worst_step < 1e-8);
    CHECK(worst < 1e-6);
    CHECK(diag.steps == 1000);
}

TEST_CASE("solver refusals and trivial cases")
{
    const auto g = open_grid(32, 4.0);
    const auto start = density_from_function(g, gaussian_density(0.5, 0.5).as_function());

    const auto zero = vlasov_solve(start, 0.0, ProblemSpec{}, VlasovSettings{});
    REQUIRE(zero.snapshots.size() == 1);
    CHECK(zero.snapshots[0].values == start.values);

    VlasovSettings huge;
    huge.dt = 5.0;
    CHECK_THROWS_AS(vlasov_step(start, ProblemSpec{}, huge), numerical_error);

    const auto wide = density_from_function(open_grid(32, 2.0), gaussian_density().as_function());
    CHECK_THROWS_AS(vlasov_solve(wide, 1.0, ProblemSpec{}, VlasovSettings{}), validation_error);

    VlasovSettings bad;
    bad.dt = -1.0;
    CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("periodic shifter")
{
    for (auto kind : {Interpolation::cubic_spline, Interpolation::linear}) {
        PeriodicShifter shifter(16, kind);
        std::vector<double> f(16), out(16);
        double sum = 0.0;
        for (std::size_t i = 0; i < 16; ++i) sum += f[i] = 1.0 + std::sin(2.0 * M_PI * i / 16.0);
        shifter.shift(f, 0.37, out);
        double after = 0.0;
        for (double v : out) after += v;
        CHECK(after == doctest::Approx(sum).epsilon(1e-13));
        shifter.shift(f, 3.0, out);
        for (std::size_t i = 0; i < 16; ++i) CHECK(out[i] == doctest::Approx(f[(i + 13) % 16]).epsilon(1e-12));
    }
}
