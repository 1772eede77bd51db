#pragma once

// Monte Carlo N-body oracle: sample the initial density, integrate the full
// interacting dynamics and histogram the particles onto a phase grid.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kvn/initial_density.hpp"
#include "kvn/phase_space.hpp"
#include "kvn/vlasov.hpp"

namespace kvn {

enum class CouplingScaling { mean_field, bare };

std::string coupling_scaling_name(CouplingScaling c);

struct EnsembleSettings {
    /// Particles per interacting system. n_samples is split into
    /// n_samples / particles_per_system independent systems.
    std::size_t particles_per_system = 100;
    std::size_t n_samples = 1000;
    std::uint64_t seed = 1;
    double dt = 1e-2;
    CouplingScaling coupling = CouplingScaling::mean_field;

    void validate(const ProblemSpec& spec) const;
};

/// Name and version of the sampling stream, recorded with every output.
inline constexpr const char* rng_algorithm = "splitmix64-counter/box-muller v1";

/// Counter-based uniform stream: element k depends only on (seed, k).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    /// 64 random bits for counter k.
    std::uint64_t bits(std::uint64_t k) const;
    /// Uniform in (0, 1) with 53-bit resolution.
    double uniform(std::uint64_t k) const;

private:
    std::uint64_t seed_;
};

/// n i.i.d. samples of a gaussian mixture. Sample k uses counters 3k..3k+2,
/// so any prefix of a larger draw is reproduced exactly. Other densities are
/// refused.
std::vector<PhasePoint> sample_initial(const InitialDensity& density, std::size_t n, std::uint64_t seed);

/// Velocity Verlet for the whole point set as one interacting system. The pair
/// force on i is scale * sum_{j != i} -v'(q_i - q_j), scale = 1/(N-1) for
/// mean-field coupling and 1 for bare coupling. Without a pair potential each
/// point follows flow_map exactly.
std::vector<PhasePoint> integrate_nbody(std::vector<PhasePoint> points, double T, const ProblemSpec& spec,
                                        double dt, CouplingScaling coupling);

/// sum p^2/2m + U(q) + scale * sum_{i<j} v(q_i - q_j).
double total_energy(std::span<const PhasePoint> points, const ProblemSpec& spec, CouplingScaling coupling);

struct Histogram {
    DensityField density;
    std::size_t inside = 0;
    std::size_t outside = 0;
    /// More than 1% of the points fell outside the grid.
    bool outside_warning = false;
};

/// Cell counts / (n * cell_volume). q is wrapped on a periodic q axis.
Histogram histogram_density(std::span<const PhasePoint> points, const PhaseGrid& grid);

/// Mean over factor x factor blocks of a fine field. Both cell counts must be
/// divisible by factor.
DensityField block_average(const DensityField& fine, std::size_t factor);

/// sum |a - b| * cell_volume.
double l1_distance(const DensityField& a, const DensityField& b);

struct EnsembleStudy {
    InitialDensity initial;
    ProblemSpec spec;
    double T = 1.0;
    PhaseGrid vlasov_grid;
    VlasovSettings vlasov;
    /// Histogram cells are coarsen x coarsen blocks of Vlasov cells.
    std::size_t coarsen = 4;
    /// Independent repetitions averaged per sample size; replicate r draws
    /// with replicate_seed(settings.seed, r).
    std::size_t replicates = 1;
    EnsembleSettings settings;
};

struct EnsembleRow {
    std::size_t n = 0;
    /// Mean over replicates.
    double l1 = 0.0;
    std::vector<double> replicate_l1;
    std::size_t outside = 0;
};

struct EnsembleTable {
    std::vector<EnsembleRow> rows;
    /// l1[k] / l1[k + 1].
    std::vector<double> ratios;
    /// Least-squares slope of log l1 against log n; -0.5 for pure sampling noise.
    double fitted_slope = 0.0;
    std::size_t vlasov_clip_count = 0;
};

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate);

/// L1 distance between the ensemble histogram at T and the block-averaged
/// Vlasov solution for each n (strictly increasing). settings.n_samples is
/// ignored; the other settings apply to every n.
EnsembleTable ensemble_vs_vlasov(const EnsembleStudy& study, std::span<const std::size_t> n_list);

/// Samples, splits into systems and integrates: the particle set at T.
std::vector<PhasePoint> run_ensemble(const InitialDensity& initial, const ProblemSpec& spec, double T,
                                     const EnsembleSettings& settings, std::size_t n_samples);

}  // namespace kvn
