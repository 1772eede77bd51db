#include "kvn/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvn/error.hpp"

namespace kvn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& message)
{
    if (!ok) throw validation_error(message);
}

}  // namespace

std::string potential_name(const PotentialSpec& u)
{
    return std::visit(overloaded{
                          [](const FreePotential&) { return std::string("free"); },
                          [](const HarmonicPotential&) { return std::string("harmonic"); },
                          [](const QuarticPotential&) { return std::string("quartic"); },
                          [](const CosinePotential&) { return std::string("cosine"); },
                      },
                      u);
}

std::string pair_potential_name(const PairPotentialSpec& v)
{
    return std::visit(overloaded{
                          [](const NoPairPotential&) { return std::string("none"); },
                          [](const GaussianPairPotential&) { return std::string("gaussian"); },
                          [](const CosinePairPotential&) { return std::string("cosine"); },
                      },
                      v);
}

double pair_value(const PairPotentialSpec& v, double q)
{
    return std::visit(overloaded{
                          [](const NoPairPotential&) { return 0.0; },
                          [q](const GaussianPairPotential& g) {
                              return g.strength * std::exp(-q * q / (2.0 * g.width * g.width));
                          },
                          [q](const CosinePairPotential& c) { return c.strength * std::cos(c.k * q); },
                      },
                      v);
}

double pair_gradient(const PairPotentialSpec& v, double q)
{
    // Both closed forms are odd in q and vanish identically at q == 0.
    return std::visit(overloaded{
                          [](const NoPairPotential&) { return 0.0; },
                          [q](const GaussianPairPotential& g) {
                              const double s2 = g.width * g.width;
                              return -g.strength * (q / s2) * std::exp(-q * q / (2.0 * s2));
                          },
                          [q](const CosinePairPotential& c) { return -c.strength * c.k * std::sin(c.k * q); },
                      },
                      v);
}

bool has_pair_interaction(const PairPotentialSpec& v)
{
    return !std::holds_alternative<NoPairPotential>(v);
}

double pair_strength(const PairPotentialSpec& v)
{
    return std::visit(overloaded{
                          [](const NoPairPotential&) { return 0.0; },
                          [](const GaussianPairPotential& g) { return g.strength; },
                          [](const CosinePairPotential& c) { return c.strength; },
                      },
                      v);
}

PairPotentialSpec with_pair_strength(const PairPotentialSpec& v, double strength)
{
    return std::visit(overloaded{
                          [](const NoPairPotential& n) -> PairPotentialSpec { return n; },
                          [strength](GaussianPairPotential g) -> PairPotentialSpec {
                              g.strength = strength;
                              return g;
                          },
                          [strength](CosinePairPotential c) -> PairPotentialSpec {
                              c.strength = strength;
                              return c;
                          },
                      },
                      v);
}

double ProblemSpec::external_value(double q) const
{
    return std::visit(overloaded{
                          [](const FreePotential&) { return 0.0; },
                          [&](const HarmonicPotential& h) { return 0.5 * mass * h.omega * h.omega * q * q; },
                          [q](const QuarticPotential& u) { return u.a * q * q + u.b * q * q * q * q; },
                          [q](const CosinePotential& c) { return c.amplitude * std::cos(c.k * q); },
                      },
                      external);
}

double ProblemSpec::external_gradient(double q) const
{
    return std::visit(overloaded{
                          [](const FreePotential&) { return 0.0; },
                          [&](const HarmonicPotential& h) { return mass * h.omega * h.omega * q; },
                          [q](const QuarticPotential& u) { return 2.0 * u.a * q + 4.0 * u.b * q * q * q; },
                          [q](const CosinePotential& c) { return -c.amplitude * c.k * std::sin(c.k * q); },
                      },
                      external);
}

double ProblemSpec::one_body_energy(const PhasePoint& x) const
{
    return x.p * x.p / (2.0 * mass) + external_value(x.q);
}

void ProblemSpec::validate() const
{
    require(std::isfinite(mass) && mass > 0.0, "mass must be > 0");
    require(dimension == 1, "only dimension 1 is supported");
    std::visit(overloaded{
                   [](const FreePotential&) {},
                   [](const HarmonicPotential& h) { require(std::isfinite(h.omega) && h.omega > 0.0, "omega must be > 0"); },
                   [](const QuarticPotential& u) {
                       require(std::isfinite(u.a) && std::isfinite(u.b), "quartic coefficients must be finite");
                   },
                   [](const CosinePotential& c) {
                       require(std::isfinite(c.k) && std::isfinite(c.amplitude), "cosine parameters must be finite");
                   },
               },
               external);
    std::visit(overloaded{
                   [](const NoPairPotential&) {},
                   [](const GaussianPairPotential& g) {
                       require(std::isfinite(g.strength) && g.strength >= 0.0, "strength must be >= 0");
                       require(std::isfinite(g.width) && g.width > 0.0, "width must be > 0");
                   },
                   [](const CosinePairPotential& c) {
                       require(std::isfinite(c.strength) && c.strength >= 0.0, "strength must be >= 0");
                       require(std::isfinite(c.k) && c.k > 0.0, "wavenumber must be > 0");
                   },
               },
               pair);
}

double eval_force_external(const ProblemSpec& spec, double q)
{
    return -spec.external_gradient(q);
}

void PhaseGrid::validate() const
{
    for (const auto* axis : {&q, &p}) {
        const char* name = axis == &q ? "q" : "p";
        require(axis->cells >= 4, std::string("grid axis ") + name + " needs at least 4 cells");
        require(std::isfinite(axis->lower) && std::isfinite(axis->upper) && axis->lower < axis->upper,
                std::string("grid axis ") + name + " bounds must be finite and ordered");
    }
}

DensityField::DensityField(PhaseGrid g, std::vector<double> v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.size()) {
        throw validation_error("density values do not match the grid size");
    }
}

DensityField::DensityField(PhaseGrid g) : grid(g), values(g.size(), 0.0) {}

double DensityField::mass() const
{
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * grid.cell_volume();
}

double DensityField::edge_mass_fraction_p(std::size_t rows) const
{
    const double total = mass();
    if (total == 0.0) return 0.0;
    double edge = 0.0;
    const std::size_t np = grid.p.cells;
    rows = std::min(rows, np / 2);
    for (std::size_t iq = 0; iq < grid.q.cells; ++iq) {
        for (std::size_t r = 0; r < rows; ++r) {
            edge += std::abs(at(iq, r)) + std::abs(at(iq, np - 1 - r));
        }
    }
    return edge * grid.cell_volume() / std::abs(total);
}

double DensityField::edge_mass_fraction_q(std::size_t rows) const
{
    const double total = mass();
    if (total == 0.0) return 0.0;
    double edge = 0.0;
    const std::size_t nq = grid.q.cells;
    rows = std::min(rows, nq / 2);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t ip = 0; ip < grid.p.cells; ++ip) {
            edge += std::abs(at(r, ip)) + std::abs(at(nq - 1 - r, ip));
        }
    }
    return edge * grid.cell_volume() / std::abs(total);
}

void DensityField::validate() const
{
    grid.validate();
    require(values.size() == grid.size(), "density values do not match the grid size");
    for (double v : values) {
        require(std::isfinite(v), "density contains non-finite values");
        require(v >= -1e-12, "density contains negative values below -1e-12");
    }
    require(std::isfinite(mass()), "density mass is not finite");
}

DensityField density_from_function(const PhaseGrid& grid, const DensityFunction& rho)
{
    grid.validate();
    DensityField field(grid);
    const double dq = grid.q.spacing();
    const double dp = grid.p.spacing();
    double refined_sum = 0.0;
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        const PhasePoint x = grid.center(cell);
        const double value = rho(x);
        if (!(value >= 0.0) || !std::isfinite(value)) {
            std::ostringstream os;
            os << "initial density is negative or non-finite at (q=" << x.q << ", p=" << x.p << ")";
            throw validation_error(os.str());
        }
        field.values[cell] = value;
        for (int a = -1; a <= 1; ++a) {
            for (int b = -1; b <= 1; ++b) {
                refined_sum += rho({x.q + a * dq / 3.0, x.p + b * dp / 3.0});
            }
        }
    }
    const double mass = field.mass();
    const double refined_mass = refined_sum / 9.0 * grid.cell_volume();
    const double scale = std::max(std::abs(mass), std::abs(refined_mass));
    field.resolution_warning = scale > 0.0 && std::abs(mass - refined_mass) > 1e-2 * scale;
    const bool edge_q = !grid.q.periodic && field.edge_mass_fraction_q(1) > 1e-8;
    const bool edge_p = !grid.p.periodic && field.edge_mass_fraction_p(1) > 1e-8;
    field.boundary_warning = edge_q || edge_p;
    return field;
}

std::vector<double> spatial_density(const DensityField& density)
{
    const auto& grid = density.grid;
    const double dp = grid.p.spacing();
    std::vector<double> n(grid.q.cells, 0.0);
    for (std::size_t iq = 0; iq < grid.q.cells; ++iq) {
        double sum = 0.0;
        for (std::size_t ip = 0; ip < grid.p.cells; ++ip) sum += density.at(iq, ip);
        n[iq] = sum * dp;
    }
    return n;
}

double wrap_separation(double d, double length)
{
    d = std::fmod(d, length);
    if (d >= 0.5 * length) d -= length;
    if (d < -0.5 * length) d += length;
    return d;
}

std::vector<double> mean_field_force(const DensityField& density, const ProblemSpec& spec)
{
    const auto& axis = density.grid.q;
    if (const auto* g = std::get_if<GaussianPairPotential>(&spec.pair)) {
        if (axis.length() < 4.0 * g->width) {
            std::ostringstream os;
            os << "q extent " << axis.length() << " is smaller than 4 widths of the gaussian pair potential";
            throw validation_error(os.str());
        }
    }
    const double mass_total = density.mass();
    if (!std::isfinite(mass_total)) throw validation_error("density mass is not finite");

    std::vector<double> force(axis.cells);
    for (std::size_t i = 0; i < axis.cells; ++i) force[i] = eval_force_external(spec, axis.center(i));
    if (!has_pair_interaction(spec.pair)) return force;

    const auto n = spatial_density(density);
    const double dq = axis.spacing();
    for (std::size_t i = 0; i < axis.cells; ++i) {
        const double qi = axis.center(i);
        double pair = 0.0;
        for (std::size_t j = 0; j < axis.cells; ++j) {
            if (n[j] == 0.0) continue;
            double d = qi - axis.center(j);
            if (axis.periodic) d = wrap_separation(d, axis.length());
            pair += n[j] * pair_gradient(spec.pair, d);
        }
        force[i] -= pair * dq;
    }
    return force;
}

double linf_distance(const DensityField& a, const DensityField& b)
{
    if (!(a.grid == b.grid)) throw validation_error("density fields live on different grids");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    return worst;
}

}  // namespace kvn
