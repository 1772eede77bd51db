#include "kvn/fock.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <cmath>
#include <limits>
#include <sstream>

#include "kvn/error.hpp"

namespace kvn {

namespace {

constexpr cplx minus_i{0.0, -1.0};

void require_periodic(const PhaseGrid& grid)
{
    grid.validate();
    if (!grid.q.periodic || !grid.p.periodic) {
        throw validation_error(
            "the Fock truncation needs periodic q and p axes: only then is the centred difference "
            "antisymmetric and (1/i) d Hermitian");
    }
}

std::size_t wrap(long long i, std::size_t n)
{
    const long long m = static_cast<long long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
}

/// Separation convention shared by the two-body tensor and the residual checks.
double column_separation(const PhaseGrid& grid, std::size_t col_a, std::size_t col_b)
{
    const double d = grid.q.center(col_a) - grid.q.center(col_b);
    return grid.q.periodic ? wrap_separation(d, grid.q.length()) : d;
}

struct Neighbour {
    std::size_t cell;
    double weight;
};

/// Nonzeros of row `cell` of the centred difference matrix.
std::array<Neighbour, 2> stencil(const PhaseGrid& grid, std::size_t cell, bool along_q)
{
    const auto iq = static_cast<long long>(grid.q_index(cell));
    const auto ip = static_cast<long long>(grid.p_index(cell));
    if (along_q) {
        const double w = 1.0 / (2.0 * grid.q.spacing());
        return {Neighbour{grid.index(wrap(iq + 1, grid.q.cells), ip), w},
                Neighbour{grid.index(wrap(iq - 1, grid.q.cells), ip), -w}};
    }
    const double w = 1.0 / (2.0 * grid.p.spacing());
    return {Neighbour{grid.index(iq, wrap(ip + 1, grid.p.cells)), w},
            Neighbour{grid.index(iq, wrap(ip - 1, grid.p.cells)), -w}};
}

double hermiticity_gap(const SparseMatrixC& m)
{
    const SparseMatrixC adjoint = m.adjoint();
    const SparseMatrixC diff = m - adjoint;
    return max_abs(diff);
}

}  // namespace

// ---------------------------------------------------------------------------

ModeBasis::ModeBasis(PhaseGrid grid) : grid_(grid)
{
    grid_.validate();
}

double ModeBasis::amplitude_scale() const
{
    return std::sqrt(grid_.cell_volume());
}

Eigen::MatrixXd ModeBasis::gram() const
{
    const std::size_t m = size();
    const double vol = grid_.cell_volume();
    const double height = 1.0 / std::sqrt(vol);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    // Midpoint quadrature: indicator i is nonzero only at the centre of cell i.
    for (std::size_t cell = 0; cell < m; ++cell) {
        const auto c = static_cast<Eigen::Index>(cell);
        g(c, c) = height * height * vol;
    }
    return g;
}

SparseMatrixC difference_matrix(const PhaseGrid& grid, bool along_q)
{
    require_periodic(grid);
    std::vector<Eigen::Triplet<cplx>> triplets;
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        for (const auto& nb : stencil(grid, cell, along_q)) {
            triplets.emplace_back(static_cast<int>(cell), static_cast<int>(nb.cell), cplx(nb.weight, 0.0));
        }
    }
    SparseMatrixC d(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(grid.size()));
    d.setFromTriplets(triplets.begin(), triplets.end());
    return d;
}

OneBodyMatrix build_one_body(const PhaseGrid& grid, const ProblemSpec& spec)
{
    require_periodic(grid);
    spec.validate();
    std::vector<Eigen::Triplet<cplx>> triplets;
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        const PhasePoint x = grid.center(cell);
        const double velocity = x.p / spec.mass;
        const double force = eval_force_external(spec, x.q);
        for (const auto& nb : stencil(grid, cell, true)) {
            if (velocity != 0.0) triplets.emplace_back(cell, nb.cell, minus_i * velocity * nb.weight);
        }
        for (const auto& nb : stencil(grid, cell, false)) {
            if (force != 0.0) triplets.emplace_back(cell, nb.cell, minus_i * force * nb.weight);
        }
    }
    OneBodyMatrix h;
    h.matrix.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(grid.size()));
    h.matrix.setFromTriplets(triplets.begin(), triplets.end());
    h.hermiticity_error = hermiticity_gap(h.matrix);
    return h;
}

TwoBodyTensor build_two_body(const PhaseGrid& grid, const ProblemSpec& spec)
{
    require_periodic(grid);
    spec.validate();
    TwoBodyTensor tensor;
    tensor.modes = grid.size();
    if (!has_pair_interaction(spec.pair)) return tensor;

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto ci = grid.q_index(i);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double w = -pair_gradient(spec.pair, column_separation(grid, ci, grid.q_index(j)));
            if (w == 0.0) continue;
            for (const auto& nb : stencil(grid, i, false)) {
                tensor.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                          static_cast<std::uint32_t>(nb.cell), static_cast<std::uint32_t>(j),
                                          minus_i * w * nb.weight});
            }
        }
    }
    return tensor;
}

double two_body_diagonal_block_max(const PhaseGrid& grid, const ProblemSpec& spec)
{
    double worst = 0.0;
    for (std::size_t col = 0; col < grid.q.cells; ++col) {
        worst = std::max(worst, std::abs(pair_gradient(spec.pair, column_separation(grid, col, col))));
    }
    return worst;
}

Eigen::MatrixXcd two_particle_matrix(const TwoBodyTensor& tensor, bool symmetrized)
{
    const auto m = static_cast<Eigen::Index>(tensor.modes);
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m * m, m * m);
    for (const auto& e : tensor.entries) {
        g(e.i * m + e.j, e.k * m + e.l) += e.value;
        if (symmetrized) g(e.j * m + e.i, e.l * m + e.k) += e.value;
    }
    return g;
}

// ---------------------------------------------------------------------------

std::size_t FockBasis::sector_dimension(std::size_t modes, std::size_t particles)
{
    if (modes == 0) return particles == 0 ? 1 : 0;
    // C(M + N - 1, N) accumulated multiplicatively with saturation.
    constexpr std::size_t max = std::numeric_limits<std::size_t>::max();
    std::size_t result = 1;
    for (std::size_t k = 1; k <= particles; ++k) {
        const std::size_t num = modes - 1 + k;
        // result * num / k stays integral at each stage.
        const std::size_t g = std::gcd(result, k);
        const std::size_t r = result / g;
        const std::size_t kk = k / g;
        const std::size_t n = num / kk;
        if (n != 0 && r > max / n) return max;
        result = r * n;
    }
    return result;
}

FockBasis::FockBasis(std::size_t modes, std::size_t particles, std::size_t cap)
    : FockBasis(modes, particles, particles, cap)
{
}

FockBasis FockBasis::truncated(std::size_t modes, std::size_t max_particles, std::size_t cap)
{
    return FockBasis(modes, 0, max_particles, cap);
}

FockBasis::FockBasis(std::size_t modes, std::size_t min_n, std::size_t max_n, std::size_t cap)
    : modes_(modes), min_n_(min_n), max_n_(max_n)
{
    if (modes == 0) throw validation_error("Fock basis needs at least one mode");
    if (max_n > std::numeric_limits<Occupation>::max()) throw validation_error("particle number too large");

    std::size_t total = 0;
    for (std::size_t n = min_n; n <= max_n; ++n) {
        sector_offset_.push_back(total);
        const std::size_t d = sector_dimension(modes, n);
        if (d > cap || total > cap - d) {
            std::ostringstream os;
            os << "Fock space dimension for M=" << modes << ", N=" << max_n << " exceeds the cap " << cap
               << " (sector dimension " << d << ")";
            throw capacity_error(os.str(), d == std::numeric_limits<std::size_t>::max() ? d : total + d, cap);
        }
        total += d;
    }
    size_ = total;

    count_table_.assign((modes + 1) * (max_n + 1), 0);
    for (std::size_t m = 0; m <= modes; ++m) {
        for (std::size_t n = 0; n <= max_n; ++n) count_table_[m * (max_n + 1) + n] = sector_dimension(m, n);
    }

    occupations_.reserve(size_ * modes);
    std::vector<Occupation> occ(modes, 0);
    for (std::size_t n = min_n; n <= max_n; ++n) {
        std::fill(occ.begin(), occ.end(), 0);
        occ[0] = static_cast<Occupation>(n);
        while (true) {
            occupations_.insert(occupations_.end(), occ.begin(), occ.end());
            // Next state in descending lexicographic order.
            const Occupation tail = occ[modes - 1];
            occ[modes - 1] = 0;
            std::size_t k = modes - 1;
            bool found = false;
            while (k-- > 0) {
                if (occ[k] > 0) {
                    found = true;
                    break;
                }
            }
            if (!found) break;
            occ[k] -= 1;
            occ[k + 1] = static_cast<Occupation>(tail + 1);
        }
    }
}

std::size_t FockBasis::count(std::size_t m, std::size_t n) const
{
    return count_table_[m * (max_n_ + 1) + n];
}

std::size_t FockBasis::particle_number(std::size_t index) const
{
    std::size_t n = 0;
    for (auto o : occupation(index)) n += o;
    return n;
}

std::optional<std::size_t> FockBasis::index_of(std::span<const Occupation> occupation) const
{
    if (occupation.size() != modes_) return std::nullopt;
    std::size_t total = 0;
    for (auto o : occupation) total += o;
    if (total < min_n_ || total > max_n_) return std::nullopt;

    std::size_t index = sector_offset_[total - min_n_];
    std::size_t remaining = total;
    for (std::size_t k = 0; k + 1 < modes_; ++k) {
        const std::size_t n = occupation[k];
        // States whose k-th entry exceeds n come first.
        if (remaining > n) index += count(modes_ - k, remaining - n - 1);
        remaining -= n;
    }
    return index;
}

// ---------------------------------------------------------------------------

double max_abs(const SparseMatrixC& m)
{
    double worst = 0.0;
    for (int r = 0; r < m.outerSize(); ++r) {
        for (SparseMatrixC::InnerIterator it(m, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

FockOperator assemble_L(const OneBodyMatrix& one_body, const TwoBodyTensor& two_body, const FockBasis& basis,
                        std::size_t cap)
{
    const std::size_t modes = basis.modes();
    if (static_cast<std::size_t>(one_body.matrix.rows()) != modes) {
        throw validation_error("one-body matrix does not match the number of Fock modes");
    }
    if (!two_body.entries.empty() && two_body.modes != modes) {
        throw validation_error("two-body tensor does not match the number of Fock modes");
    }
    if (basis.max_particles() < 1) throw validation_error("assemble_L needs N >= 1");
    if (basis.size() > cap) {
        std::ostringstream os;
        os << "Fock space dimension " << basis.size() << " exceeds the cap " << cap;
        throw capacity_error(os.str(), basis.size(), cap);
    }

    // Terms grouped by the annihilated mode k.
    struct OneTerm {
        std::size_t i;
        cplx value;
    };
    struct TwoTerm {
        std::size_t i, j, l;
        cplx value;
    };
    std::vector<std::vector<OneTerm>> one_by_k(modes);
    for (int r = 0; r < one_body.matrix.outerSize(); ++r) {
        for (SparseMatrixC::InnerIterator it(one_body.matrix, r); it; ++it) {
            one_by_k[static_cast<std::size_t>(it.col())].push_back({static_cast<std::size_t>(it.row()), it.value()});
        }
    }
    std::vector<std::vector<TwoTerm>> two_by_k(modes);
    for (const auto& e : two_body.entries) two_by_k[e.k].push_back({e.i, e.j, e.l, e.value});

    std::vector<Eigen::Triplet<cplx>> triplets;
    std::vector<FockBasis::Occupation> occ(modes);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const auto src = basis.occupation(s);
        for (std::size_t k = 0; k < modes; ++k) {
            if (src[k] == 0) continue;
            for (const auto& term : one_by_k[k]) {
                std::copy(src.begin(), src.end(), occ.begin());
                double factor = std::sqrt(static_cast<double>(occ[k]));
                occ[k] -= 1;
                occ[term.i] += 1;
                factor *= std::sqrt(static_cast<double>(occ[term.i]));
                const auto target = basis.index_of(occ);
                triplets.emplace_back(static_cast<int>(*target), static_cast<int>(s), term.value * factor);
            }
            for (const auto& term : two_by_k[k]) {
                std::copy(src.begin(), src.end(), occ.begin());
                // a+_i a+_j a_l a_k, rightmost first.
                double factor = std::sqrt(static_cast<double>(occ[k]));
                occ[k] -= 1;
                if (occ[term.l] == 0) continue;
                factor *= std::sqrt(static_cast<double>(occ[term.l]));
                occ[term.l] -= 1;
                occ[term.j] += 1;
                factor *= std::sqrt(static_cast<double>(occ[term.j]));
                occ[term.i] += 1;
                factor *= std::sqrt(static_cast<double>(occ[term.i]));
                const auto target = basis.index_of(occ);
                triplets.emplace_back(static_cast<int>(*target), static_cast<int>(s), term.value * factor);
            }
        }
    }

    FockOperator op;
    op.matrix.resize(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    op.hermiticity_error = hermiticity_gap(op.matrix);
    op.hermitian = op.hermiticity_error < 1e-12;
    return op;
}

double number_commutator_norm(const FockOperator& op, const FockBasis& basis)
{
    double worst = 0.0;
    for (int r = 0; r < op.matrix.outerSize(); ++r) {
        const auto nr = static_cast<double>(basis.particle_number(static_cast<std::size_t>(r)));
        for (SparseMatrixC::InnerIterator it(op.matrix, r); it; ++it) {
            const auto nc = static_cast<double>(basis.particle_number(static_cast<std::size_t>(it.col())));
            worst = std::max(worst, std::abs(it.value()) * std::abs(nr - nc));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

double multinomial_weight(std::span<const FockBasis::Occupation> occ, std::size_t particles)
{
    // sqrt(N! / prod n_i!) via lgamma.
    double log_w = std::lgamma(static_cast<double>(particles) + 1.0);
    for (auto n : occ) log_w -= std::lgamma(static_cast<double>(n) + 1.0);
    return std::exp(0.5 * log_w);
}

}  // namespace

FockState embed_product_state(std::span<const cplx> psi, std::size_t particles, const FockBasis& basis,
                              const PhaseGrid& grid)
{
    const std::size_t m = basis.modes();
    if (m != grid.size()) throw validation_error("Fock basis does not match the grid");
    if (particles < 1) throw validation_error("embedding needs N >= 1");
    std::size_t expected = 1;
    for (std::size_t k = 0; k < particles; ++k) expected *= m;
    if (psi.size() != expected) throw validation_error("wave function size is not M^N");

    // Exchange symmetry: every adjacent transposition must leave Psi unchanged.
    if (particles >= 2) {
        std::vector<std::size_t> idx(particles);
        for (std::size_t flat = 0; flat < psi.size(); ++flat) {
            std::size_t rest = flat;
            for (std::size_t k = particles; k-- > 0;) {
                idx[k] = rest % m;
                rest /= m;
            }
            for (std::size_t k = 0; k + 1 < particles; ++k) {
                std::swap(idx[k], idx[k + 1]);
                std::size_t other = 0;
                for (auto v : idx) other = other * m + v;
                std::swap(idx[k], idx[k + 1]);
                if (std::abs(psi[flat] - psi[other]) > 1e-12) {
                    throw validation_error("wave function is not symmetric under particle exchange");
                }
            }
        }
    }

    const double scale = std::pow(grid.cell_volume(), 0.5 * static_cast<double>(particles));
    FockState state;
    state.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t s = 0; s < basis.size(); ++s) {
        if (basis.particle_number(s) != particles) continue;
        const auto occ = basis.occupation(s);
        // Representative coordinate tuple: modes in ascending order.
        std::size_t flat = 0;
        for (std::size_t mode = 0; mode < m; ++mode) {
            for (std::size_t c = 0; c < occ[mode]; ++c) flat = flat * m + mode;
        }
        state.amplitudes(static_cast<Eigen::Index>(s)) = psi[flat] * scale * multinomial_weight(occ, particles);
    }
    return state;
}

FockState embed_product(std::span<const cplx> phi, std::size_t particles, const FockBasis& basis,
                        const PhaseGrid& grid)
{
    if (phi.size() != basis.modes() || basis.modes() != grid.size()) {
        throw validation_error("single-particle function does not match the Fock basis");
    }
    const double scale = std::sqrt(grid.cell_volume());
    FockState state;
    state.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t s = 0; s < basis.size(); ++s) {
        if (basis.particle_number(s) != particles) continue;
        const auto occ = basis.occupation(s);
        cplx amp = multinomial_weight(occ, particles);
        for (std::size_t mode = 0; mode < occ.size(); ++mode) {
            for (std::size_t c = 0; c < occ[mode]; ++c) amp *= phi[mode] * scale;
        }
        state.amplitudes(static_cast<Eigen::Index>(s)) = amp;
    }
    return state;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const FockOperator& op, PropagationMethod method) : matrix_(op.matrix)
{
    if (!op.hermitian) throw validation_error("refusing to propagate with an operator not flagged Hermitian");
    dense_ = method == PropagationMethod::dense ||
             (method == PropagationMethod::automatic && op.matrix.rows() <= 2000);
    if (!dense_) return;
    const Eigen::MatrixXcd full = Eigen::MatrixXcd(op.matrix);
    // Average with the adjoint so the solver sees an exactly Hermitian input.
    const Eigen::MatrixXcd herm = 0.5 * (full + full.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
    if (solver.info() != Eigen::Success) throw numerical_error("eigendecomposition of L failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
}

FockState Propagator::apply(const FockState& state, double t) const
{
    if (state.amplitudes.size() != matrix_.rows()) throw validation_error("state does not match the operator");
    if (t == 0.0) return state;
    if (!dense_) return {krylov_expm(matrix_, state.amplitudes, t)};
    Eigen::VectorXcd coeffs = eigenvectors_.adjoint() * state.amplitudes;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) coeffs(k) *= std::exp(cplx(0.0, -eigenvalues_(k) * t));
    return {eigenvectors_ * coeffs};
}

FockState propagate(const FockState& state, const FockOperator& op, double t, PropagationMethod method)
{
    return Propagator(op, method).apply(state, t);
}

Eigen::VectorXcd krylov_expm(const SparseMatrixC& a, const Eigen::VectorXcd& v, double t, std::size_t krylov_dim)
{
    const Eigen::Index n = a.rows();
    if (v.size() != n) throw validation_error("vector does not match the operator");
    double anorm = 0.0;
    {
        Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(n);
        for (int r = 0; r < a.outerSize(); ++r) {
            for (SparseMatrixC::InnerIterator it(a, r); it; ++it) col_sums(it.col()) += std::abs(it.value());
        }
        anorm = n > 0 ? col_sums.maxCoeff() : 0.0;
    }
    Eigen::VectorXcd w = v;
    if (anorm == 0.0 || t == 0.0) return w;

    const auto m_max = static_cast<Eigen::Index>(std::min<std::size_t>(krylov_dim, static_cast<std::size_t>(n)));
    const double sign = t < 0.0 ? -1.0 : 1.0;
    double remaining = std::abs(t);
    // Keep ||A tau|| <= 4 so a 30-dimensional subspace is accurate to roundoff.
    const double tau_max = 4.0 / anorm;
    while (remaining > 0.0) {
        const double tau = std::min(remaining, tau_max);
        const double beta = w.norm();
        if (beta == 0.0) return w;

        Eigen::MatrixXcd basis(n, m_max);
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_max);
        Eigen::VectorXd offdiag = Eigen::VectorXd::Zero(m_max);
        basis.col(0) = w / beta;
        Eigen::Index m = m_max;
        for (Eigen::Index j = 0; j < m_max; ++j) {
            Eigen::VectorXcd u = a * basis.col(j);
            alpha(j) = basis.col(j).dot(u).real();
            // Full reorthogonalisation, twice.
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index k = 0; k <= j; ++k) u -= basis.col(k) * basis.col(k).dot(u);
            }
            if (j + 1 == m_max) break;
            const double b = u.norm();
            if (b < 1e-13 * anorm) {
                m = j + 1;
                break;
            }
            offdiag(j) = b;
            basis.col(j + 1) = u / b;
        }

        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            tri(j, j) = alpha(j);
            if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = offdiag(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
        Eigen::VectorXcd y(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            y(k) = std::exp(cplx(0.0, -sign * tau * solver.eigenvalues()(k))) * solver.eigenvectors()(0, k);
        }
        const Eigen::VectorXcd small = solver.eigenvectors().cast<cplx>() * y;
        w = beta * (basis.leftCols(m) * small);
        remaining -= tau;
        if (remaining < 1e-15 * std::abs(t)) remaining = 0.0;
    }
    return w;
}

DensityField density_expectation(const FockState& state, const FockBasis& basis, const PhaseGrid& grid)
{
    if (basis.modes() != grid.size()) throw validation_error("Fock basis does not match the grid");
    std::vector<double> occupancy(grid.size(), 0.0);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const double w = std::norm(state.amplitudes(static_cast<Eigen::Index>(s)));
        if (w == 0.0) continue;
        const auto occ = basis.occupation(s);
        for (std::size_t c = 0; c < occ.size(); ++c) {
            if (occ[c] != 0) occupancy[c] += w * occ[c];
        }
    }
    const double vol = grid.cell_volume();
    for (double& v : occupancy) v /= vol;
    return DensityField(grid, std::move(occupancy));
}

QuantumVlasovResidual check_quantum_vlasov(const FockState& initial, const Propagator& propagator,
                                           const FockBasis& basis, const PhaseGrid& grid, const ProblemSpec& spec,
                                           double t, double dt_fd)
{
    require_periodic(grid);
    if (!(dt_fd > 0.0)) throw validation_error("dt_fd must be > 0");
    const std::size_t m = grid.size();
    if (basis.modes() != m) throw validation_error("Fock basis does not match the grid");

    const FockState now = propagator.apply(initial, t);
    const auto plus = density_expectation(propagator.apply(initial, t + dt_fd), basis, grid);
    const auto minus = density_expectation(propagator.apply(initial, t - dt_fd), basis, grid);

    QuantumVlasovResidual out;
    out.time_term.resize(m);
    out.streaming_term.assign(m, 0.0);
    out.force_term.assign(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) out.time_term[c] = (plus.values[c] - minus.values[c]) / (2.0 * dt_fd);

    // Neighbour lists: rows of D_q and D_p. Both are antisymmetric, so the
    // cells c with D_ck != 0 are the stencil of k with D_ck = -D_kc.
    const std::size_t nq = grid.q.cells;
    std::vector<double> column_force(nq);
    std::vector<FockBasis::Occupation> occ(m);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const cplx amp = now.amplitudes(static_cast<Eigen::Index>(s));
        if (amp == cplx(0.0, 0.0)) continue;
        const auto src = basis.occupation(s);
        for (std::size_t col = 0; col < nq; ++col) {
            double f = eval_force_external(spec, grid.q.center(col));
            for (std::size_t j = 0; j < m; ++j) {
                if (src[j] != 0) f -= pair_gradient(spec.pair, column_separation(grid, col, grid.q_index(j))) * src[j];
            }
            column_force[col] = f;
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (src[k] == 0) continue;
            for (int axis = 0; axis < 2; ++axis) {
                const bool along_q = axis == 0;
                for (const auto& nb : stencil(grid, k, along_q)) {
                    const std::size_t c = nb.cell;
                    const double d_ck = -nb.weight;
                    std::copy(src.begin(), src.end(), occ.begin());
                    double factor = std::sqrt(static_cast<double>(occ[k]));
                    occ[k] -= 1;
                    double middle = 1.0;
                    if (!along_q) {
                        // F_c evaluated after removing the particle from k.
                        middle = column_force[grid.q_index(c)] +
                                 pair_gradient(spec.pair, column_separation(grid, grid.q_index(c), grid.q_index(k)));
                    }
                    occ[c] += 1;
                    factor *= std::sqrt(static_cast<double>(occ[c]));
                    const auto target = basis.index_of(occ);
                    const cplx expectation =
                        std::conj(now.amplitudes(static_cast<Eigen::Index>(*target))) * amp * factor * middle;
                    if (along_q) {
                        out.streaming_term[c] += 2.0 * grid.center(c).p / spec.mass * d_ck * expectation.real();
                    } else {
                        out.force_term[c] += 2.0 * d_ck * expectation.real();
                    }
                }
            }
        }
    }

    const double vol = grid.cell_volume();
    out.residual.resize(m);
    for (std::size_t c = 0; c < m; ++c) {
        out.streaming_term[c] /= vol;
        out.force_term[c] /= vol;
        out.residual[c] = out.time_term[c] + out.streaming_term[c] + out.force_term[c];
        out.max_residual = std::max(out.max_residual, std::abs(out.residual[c]));
        out.max_time_term = std::max(out.max_time_term, std::abs(out.time_term[c]));
    }
    return out;
}

OperatorSymmetry check_Q_antihermitian(const PhaseGrid& grid, const ProblemSpec& spec,
                                       const DensityField& density_ref)
{
    require_periodic(grid);
    if (!(density_ref.grid.q == grid.q)) throw validation_error("reference density must share the q axis");
    const std::size_t m = grid.size();
    OperatorSymmetry out;

    // F: multiplication by the mean-field force of the reference density.
    const auto force = mean_field_force(density_ref, spec);
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) f(c, c) = force[grid.q_index(c)];
    out.f_hermitian_error = (f - f.adjoint()).cwiseAbs().maxCoeff();

    // Q(q_r) = sum_jk v'(q_r - q_j) D^p_jk a+_j a_k, one kernel per q column.
    const SparseMatrixC dp = difference_matrix(grid, false);
    for (std::size_t r = 0; r < grid.q.cells; ++r) {
        Eigen::MatrixXcd kernel = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (int j = 0; j < dp.outerSize(); ++j) {
            const double weight = pair_gradient(spec.pair, column_separation(grid, r, grid.q_index(j)));
            for (SparseMatrixC::InnerIterator it(dp, j); it; ++it) kernel(j, it.col()) = weight * it.value();
        }
        out.q_antihermitian_error =
            std::max(out.q_antihermitian_error, (kernel + kernel.adjoint()).cwiseAbs().maxCoeff());
    }
    return out;
}

}  // namespace kvn
