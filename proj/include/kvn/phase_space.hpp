#pragma once

// Phase-space primitives: points, the potential catalog, rectangular grids,
// sampled densities and the self-consistent mean-field force.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kvn {

/// A point x = (q, p) of single-particle phase space. Only d = 1 is carried;
/// ProblemSpec::dimension guards the higher-dimensional case.
struct PhasePoint {
    double q = 0.0;
    double p = 0.0;

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

// ---------------------------------------------------------------------------
// External potentials U(q)

struct FreePotential {};

/// U = m w^2 q^2 / 2
struct HarmonicPotential {
    double omega = 1.0;
};

/// U = a q^2 + b q^4
struct QuarticPotential {
    double a = 0.0;
    double b = 1.0;
};

/// U = amplitude * cos(k q)
struct CosinePotential {
    double k = 1.0;
    double amplitude = 1.0;
};

using PotentialSpec = std::variant<FreePotential, HarmonicPotential, QuarticPotential, CosinePotential>;

// ---------------------------------------------------------------------------
// Pair potentials v(q). Every member is even in q, so v'(0) == 0 exactly.

struct NoPairPotential {};

/// v = strength * exp(-q^2 / (2 width^2))
struct GaussianPairPotential {
    double strength = 0.0;
    double width = 1.0;
};

/// v = strength * cos(k q)
struct CosinePairPotential {
    double strength = 0.0;
    double k = 1.0;
};

using PairPotentialSpec = std::variant<NoPairPotential, GaussianPairPotential, CosinePairPotential>;

std::string potential_name(const PotentialSpec& u);
std::string pair_potential_name(const PairPotentialSpec& v);

double pair_value(const PairPotentialSpec& v, double q);
double pair_gradient(const PairPotentialSpec& v, double q);
bool has_pair_interaction(const PairPotentialSpec& v);

/// Strength used as the perturbative bookkeeping parameter (0 for none).
double pair_strength(const PairPotentialSpec& v);
PairPotentialSpec with_pair_strength(const PairPotentialSpec& v, double strength);

/// Mass, external potential, pair potential and dimension: the classical
/// Hamiltonian H = sum_i [p_i^2/2m + U(q_i)] + 1/2 sum_{i != j} v(q_i - q_j).
struct ProblemSpec {
    double mass = 1.0;
    PotentialSpec external = FreePotential{};
    PairPotentialSpec pair = NoPairPotential{};
    int dimension = 1;

    double external_value(double q) const;
    double external_gradient(double q) const;

    /// Single-particle energy p^2/2m + U(q).
    double one_body_energy(const PhasePoint& x) const;

    /// Throws validation_error on m <= 0, negative strength, d != 1, ...
    void validate() const;
};

/// -grad U(q), from the closed form.
double eval_force_external(const ProblemSpec& spec, double q);

// ---------------------------------------------------------------------------
// Grids

struct GridAxis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t cells = 4;
    bool periodic = false;

    double length() const { return upper - lower; }
    double spacing() const { return (upper - lower) / static_cast<double>(cells); }
    double center(std::size_t i) const { return lower + (static_cast<double>(i) + 0.5) * spacing(); }

    friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

/// Rectangular (q, p) grid. Cells are stored q-major: index = iq * p.cells + ip.
struct PhaseGrid {
    GridAxis q;
    GridAxis p;

    std::size_t size() const { return q.cells * p.cells; }
    double cell_volume() const { return q.spacing() * p.spacing(); }
    std::size_t index(std::size_t iq, std::size_t ip) const { return iq * p.cells + ip; }
    std::size_t q_index(std::size_t cell) const { return cell / p.cells; }
    std::size_t p_index(std::size_t cell) const { return cell % p.cells; }
    PhasePoint center(std::size_t cell) const { return {q.center(q_index(cell)), p.center(p_index(cell))}; }

    /// N_q, N_p >= 4 and ordered bounds.
    void validate() const;

    friend bool operator==(const PhaseGrid&, const PhaseGrid&) = default;
};

// ---------------------------------------------------------------------------
// Densities

/// Density per unit phase-space volume sampled at cell centres.
struct DensityField {
    PhaseGrid grid;
    std::vector<double> values;
    bool resolution_warning = false;
    bool boundary_warning = false;

    DensityField() = default;
    DensityField(PhaseGrid g, std::vector<double> v);
    explicit DensityField(PhaseGrid g);

    double& at(std::size_t iq, std::size_t ip) { return values[grid.index(iq, ip)]; }
    double at(std::size_t iq, std::size_t ip) const { return values[grid.index(iq, ip)]; }

    /// Midpoint-rule total mass, summed in storage order.
    double mass() const;

    /// Fraction of the mass sitting in the outermost `rows` rows of a
    /// non-periodic axis.
    double edge_mass_fraction_p(std::size_t rows) const;
    double edge_mass_fraction_q(std::size_t rows) const;

    /// Values >= -1e-12 and finite mass.
    void validate() const;
};

using DensityFunction = std::function<double(const PhasePoint&)>;

/// Samples a non-negative density at cell centres. Negative samples are
/// rejected. Sets resolution_warning when a 3x3 sub-sampled mass disagrees
/// with the centre-sampled mass by more than 1%, and boundary_warning when
/// more than 1e-8 of the mass sits in boundary cells of an open axis.
DensityField density_from_function(const PhaseGrid& grid, const DensityFunction& rho);

/// n(q) = sum_p rho(q, p) dp, one value per q cell.
std::vector<double> spatial_density(const DensityField& density);

/// F(q) = -U'(q) - sum_q' n(q') v'(q - q') dq at every q cell centre. The
/// separation q - q' is wrapped into [-L/2, L/2) on a periodic q axis.
std::vector<double> mean_field_force(const DensityField& density, const ProblemSpec& spec);

/// Minimum-image separation on a periodic axis of length `length`.
double wrap_separation(double d, double length);

/// Sup-norm distance between two fields on the same grid.
double linf_distance(const DensityField& a, const DensityField& b);

}  // namespace kvn
