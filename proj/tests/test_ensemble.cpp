#include <doctest.h>

#include <cmath>

#include "kvn/ensemble.hpp"
#include "kvn/error.hpp"
#include "kvn/flow.hpp"

using namespace kvn;

TEST_CASE("sampling")
{
    const std::size_t n = 100000;
    const auto pts = sample_initial(gaussian_density(), n, 42);
    double mq = 0.0, mp = 0.0, vq = 0.0;
    for (const auto& x : pts) {
        mq += x.q;
        mp += x.p;
        vq += x.q * x.q;
    }
    mq /= n;
    mp /= n;
    vq /= n;
    CHECK(std::abs(mq) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(mp) < 4.0 / std::sqrt(double(n)));
    // Var of the sample second moment is 2/n for a unit gaussian.
    CHECK(std::abs(vq - 1.0) < 4.0 * std::sqrt(2.0 / n));

    const auto again = sample_initial(gaussian_density(), n, 42);
    CHECK(again == pts);
    const auto prefix = sample_initial(gaussian_density(), 10, 42);
    CHECK(std::equal(prefix.begin(), prefix.end(), pts.begin()));
    CHECK(sample_initial(gaussian_density(), 10, 43) != prefix);

    const InitialDensity mixture{GaussianMixtureDensity{{{0.5, -5.0, 0.0, 0.5, 0.5}, {0.5, 5.0, 0.0, 0.5, 0.5}}}};
    const auto mix = sample_initial(mixture, n, 9);
    std::size_t left = 0;
    for (const auto& x : mix) left += x.q < 0.0;
    CHECK(std::abs(double(left) - n / 2.0) < 4.0 * std::sqrt(n / 4.0));

    const InitialDensity uniform{PerturbedUniformDensity{0.0, 2.0 * M_PI, 0.1, 1.0, 1.0}};
    CHECK_THROWS_AS(sample_initial(uniform, 10, 1), validation_error);
}

TEST_CASE("counter stream")
{
    const CounterRng rng(5);
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const double u = rng.uniform(k);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    CHECK(rng.bits(3) == CounterRng(5).bits(3));
    CHECK(rng.bits(3) != rng.bits(4));
    CHECK(replicate_seed(7, 0) == 7);
    CHECK(replicate_seed(7, 1) != replicate_seed(7, 2));
}

TEST_CASE("non-interacting transport is the flow map")
{
    ProblemSpec s;
    s.external = QuarticPotential{-0.5, 0.2};
    const auto pts = sample_initial(gaussian_density(), 50, 3);
    const auto moved = integrate_nbody(pts, 1.234, s, 1e-2, CouplingScaling::mean_field);
    FlowSettings fs;
    fs.dt = 1e-2;
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(moved[i] == flow_map(pts[i], 1.234, s, fs));
}

TEST_CASE("interacting pair conserves energy")
{
    ProblemSpec s;
    s.external = HarmonicPotential{1.0};
    s.pair = GaussianPairPotential{1.0, 1.0};
    const std::vector<PhasePoint> pts{{-0.5, 0.3}, {0.7, -0.1}};
    const double e0 = total_energy(pts, s, CouplingScaling::bare);
    const auto moved = integrate_nbody(pts, 10.0, s, 1e-3, CouplingScaling::bare);
    CHECK(std::abs(total_energy(moved, s, CouplingScaling::bare) - e0) < 1e-4 * std::abs(e0));
}

TEST_CASE("free interacting system conserves momentum")
{
    ProblemSpec s;
    s.pair = GaussianPairPotential{2.0, 0.7};
    const auto pts = sample_initial(gaussian_density(), 40, 8);
    double p0 = 0.0;
    for (const auto& x : pts) p0 += x.p;
    for (auto c : {CouplingScaling::bare, CouplingScaling::mean_field}) {
        const auto moved = integrate_nbody(pts, 2.0, s, 1e-2, c);
        double p1 = 0.0;
        for (const auto& x : moved) p1 += x.p;
        CHECK(std::abs(p1 - p0) < 1e-10);
    }
}

TEST_CASE("histogram")
{
    const PhaseGrid g{{-2.0, 2.0, 8, false}, {-2.0, 2.0, 8, false}};
    const std::vector<PhasePoint> one_cell(17, PhasePoint{0.1, 0.1});
    const auto h = histogram_density(one_cell, g);
    CHECK(h.density.at(4, 4) == doctest::Approx(1.0 / g.cell_volume()));
    CHECK(h.density.mass() == doctest::Approx(1.0));

    const auto empty = histogram_density({}, g);
    CHECK(empty.density.mass() == 0.0);
    CHECK_FALSE(empty.outside_warning);

    std::vector<PhasePoint> some_out(100, PhasePoint{0.0, 0.0});
    some_out[0] = {5.0, 0.0};
    some_out[1] = {0.0, -3.0};
    const auto ho = histogram_density(some_out, g);
    CHECK(ho.outside == 2);
    CHECK(ho.outside_warning);
    CHECK(ho.density.mass() == doctest::Approx(0.98));

    PhaseGrid periodic = g;
    periodic.q.periodic = true;
    const std::vector<PhasePoint> wrapped{{4.1, 0.1}};
    CHECK(histogram_density(wrapped, periodic).inside == 1);

    // Uniform points: per-cell counts fluctuate like Poisson(n / cells).
    const std::size_t n = 64000;
    const CounterRng rng(1);
    std::vector<PhasePoint> uniform(n);
    for (std::size_t k = 0; k < n; ++k) uniform[k] = {-2.0 + 4.0 * rng.uniform(2 * k), -2.0 + 4.0 * rng.uniform(2 * k + 1)};
    const auto hu = histogram_density(uniform, g);
    const double expect = 1.0 / 16.0;
    double var = 0.0;
    for (double v : hu.density.values) var += (v - expect) * (v - expect);
    var /= hu.density.values.size();
    const double per_cell = double(n) / 64.0;
    const double rel = std::sqrt(var) / expect;
    CHECK(rel == doctest::Approx(1.0 / std::sqrt(per_cell)).epsilon(0.3));
}

TEST_CASE("block average and L1")
{
    const PhaseGrid g{{-2.0, 2.0, 8, false}, {-2.0, 2.0, 8, false}};
    const auto f = density_from_function(g, [](const PhasePoint& x) { return 7.0 + x.q + 2.0 * x.p; });
    const auto c = block_average(f, 2);
    CHECK(c.grid.q.cells == 4);
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
        const auto x = c.grid.center(k);
        CHECK(c.values[k] == doctest::Approx(7.0 + x.q + 2.0 * x.p));
    }
    CHECK(c.mass() == doctest::Approx(f.mass()));
    CHECK_THROWS_AS(block_average(f, 3), validation_error);
    CHECK(l1_distance(f, f) == 0.0);
}

TEST_CASE("ensemble against Vlasov")
{
    EnsembleStudy st;
    st.initial = gaussian_density();
    st.spec.pair = GaussianPairPotential{0.1, 1.0};
    st.T = 0.5;
    st.vlasov_grid = {{-8.0, 8.0, 64, false}, {-8.0, 8.0, 64, false}};
    st.vlasov.dt = 0.02;
    st.coarsen = 4;
    st.settings.particles_per_system = 50;
    st.settings.dt = 0.02;
    const std::vector<std::size_t> ns{1000, 10000, 100000};
    const auto table = ensemble_vs_vlasov(st, ns);
    CHECK(table.rows[0].l1 > table.rows[1].l1);
    CHECK(table.rows[1].l1 > table.rows[2].l1);

    // Two seeds at fixed n agree within noise.
    EnsembleStudy other = st;
    other.settings.seed = 99;
    const std::vector<std::size_t> small{1000, 2000};
    const auto a = ensemble_vs_vlasov(st, small), b = ensemble_vs_vlasov(other, small);
    const double r = a.rows[0].l1 / b.rows[0].l1;
    CHECK(r < 3.0);
    CHECK(r > 1.0 / 3.0);

    const std::vector<std::size_t> bad{1000, 1000};
    CHECK_THROWS_AS(ensemble_vs_vlasov(st, bad), validation_error);
    EnsembleSettings es;
    es.particles_per_system = 1;
    CHECK_THROWS_AS(es.validate(st.spec), validation_error);
}
