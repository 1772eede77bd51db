#pragma once

// Finite-mode truncation of the second-quantized Liouvillian
//
//   L = sum_ik h_ik a+_i a_k + sum_ijkl g_(ij)(kl) a+_i a+_j a_l a_k
//
// over the cell-indicator modes of a periodic phase grid. The two-body term
// carries no 1/2: the first-quantized generator is sum_i h(x_i) +
// sum_{i != j} g(x_i, x_j) over ordered pairs, and the N = 2 sector matches
// it exactly with unit prefactor.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kvn/phase_space.hpp"

namespace kvn {

using cplx = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr std::size_t default_fock_dimension_cap = 200000;

/// Orthonormal cell-indicator modes e_i = 1_cell / sqrt(cell_volume). Mode
/// index equals the grid cell index.
class ModeBasis {
public:
    explicit ModeBasis(PhaseGrid grid);

    std::size_t size() const { return grid_.size(); }
    const PhaseGrid& grid() const { return grid_; }

    /// Conversion factor between grid-function values and mode amplitudes.
    double amplitude_scale() const;

    /// <e_i, e_j> by midpoint quadrature over the grid.
    Eigen::MatrixXd gram() const;

private:
    PhaseGrid grid_;
};

/// Centred first-difference matrix along q or p with periodic wrap. Real
/// antisymmetric, so -i D is Hermitian.
SparseMatrixC difference_matrix(const PhaseGrid& grid, bool along_q);

struct OneBodyMatrix {
    SparseMatrixC matrix;
    double hermiticity_error = 0.0;
};

/// h = (p/m) (1/i) D_q - U'(q) (1/i) D_p. Both axes must be periodic.
OneBodyMatrix build_one_body(const PhaseGrid& grid, const ProblemSpec& spec);

struct TwoBodyEntry {
    std::uint32_t i, j, k, l;
    cplx value;
};

/// g_(ij)(kl) = <e_i e_j| -v'(q - q') (1/i) D_p |e_k e_l>; nonzero only for
/// l == j and cells i, k in the same q column.
struct TwoBodyTensor {
    std::size_t modes = 0;
    std::vector<TwoBodyEntry> entries;
};

TwoBodyTensor build_two_body(const PhaseGrid& grid, const ProblemSpec& spec);

/// Largest |v'(q_i - q_j)| over cell pairs in the same q column; zero by parity.
double two_body_diagonal_block_max(const PhaseGrid& grid, const ProblemSpec& spec);

/// Dense M^2 x M^2 matrix of g(x, x') (+ g(x', x) when symmetrized) acting on
/// two-particle amplitudes c(i, j) stored at i * M + j.
Eigen::MatrixXcd two_particle_matrix(const TwoBodyTensor& tensor, bool symmetrized);

/// Occupation-number basis. A fixed-N basis lists the states with sum n_i = N
/// in descending lexicographic order; a truncated basis concatenates the
/// sectors 0..N_max.
class FockBasis {
public:
    using Occupation = std::uint16_t;

    FockBasis(std::size_t modes, std::size_t particles, std::size_t cap = default_fock_dimension_cap);
    static FockBasis truncated(std::size_t modes, std::size_t max_particles,
                               std::size_t cap = default_fock_dimension_cap);

    /// C(M + N - 1, N), saturating at SIZE_MAX.
    static std::size_t sector_dimension(std::size_t modes, std::size_t particles);

    std::size_t size() const { return size_; }
    std::size_t modes() const { return modes_; }
    std::size_t min_particles() const { return min_n_; }
    std::size_t max_particles() const { return max_n_; }

    std::span<const Occupation> occupation(std::size_t index) const
    {
        return {occupations_.data() + index * modes_, modes_};
    }
    std::size_t particle_number(std::size_t index) const;

    std::optional<std::size_t> index_of(std::span<const Occupation> occupation) const;

private:
    FockBasis(std::size_t modes, std::size_t min_n, std::size_t max_n, std::size_t cap);
    std::size_t count(std::size_t m, std::size_t n) const;

    std::size_t modes_;
    std::size_t min_n_;
    std::size_t max_n_;
    std::size_t size_ = 0;
    std::vector<std::size_t> sector_offset_;
    std::vector<std::size_t> count_table_;
    std::vector<Occupation> occupations_;
};

struct FockState {
    Eigen::VectorXcd amplitudes;

    double norm() const { return amplitudes.norm(); }
};

struct FockOperator {
    SparseMatrixC matrix;
    bool hermitian = false;
    double hermiticity_error = 0.0;
};

/// Second-quantized L on `basis`. Refuses bases above `cap` with a
/// capacity_error naming the dimension.
FockOperator assemble_L(const OneBodyMatrix& one_body, const TwoBodyTensor& two_body, const FockBasis& basis,
                        std::size_t cap = default_fock_dimension_cap);

/// max |L_rs| * |N(r) - N(s)| : the entries of [L, N].
double number_commutator_norm(const FockOperator& op, const FockBasis& basis);

double max_abs(const SparseMatrixC& m);

/// Embeds a symmetric N-particle grid function Psi(x_1..x_N) (M^N values,
/// first coordinate slowest). Amplitudes carry sqrt(N! / prod n_i!) so a
/// unit-norm Psi maps to a unit-norm Fock state.
FockState embed_product_state(std::span<const cplx> psi, std::size_t particles, const FockBasis& basis,
                              const PhaseGrid& grid);

/// Embeds phi x ... x phi (N copies) without materialising the tensor.
FockState embed_product(std::span<const cplx> phi, std::size_t particles, const FockBasis& basis,
                        const PhaseGrid& grid);

enum class PropagationMethod { automatic, dense, krylov };

/// exp(-i L t) applied to states. Dense eigendecomposition up to 2000 basis
/// states (or when forced), Lanczos-Krylov above.
class Propagator {
public:
    explicit Propagator(const FockOperator& op, PropagationMethod method = PropagationMethod::automatic);

    FockState apply(const FockState& state, double t) const;

    bool dense() const { return dense_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::MatrixXcd& eigenvectors() const { return eigenvectors_; }

private:
    SparseMatrixC matrix_;
    bool dense_ = true;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd eigenvectors_;
};

FockState propagate(const FockState& state, const FockOperator& op, double t,
                    PropagationMethod method = PropagationMethod::automatic);

/// Lanczos approximation of exp(-i A t) v for Hermitian A.
Eigen::VectorXcd krylov_expm(const SparseMatrixC& a, const Eigen::VectorXcd& v, double t,
                             std::size_t krylov_dim = 30);

/// <a+_i a_i> / cell_volume per cell.
DensityField density_expectation(const FockState& state, const FockBasis& basis, const PhaseGrid& grid);

struct QuantumVlasovResidual {
    std::vector<double> time_term;
    std::vector<double> streaming_term;
    std::vector<double> force_term;
    std::vector<double> residual;
    double max_residual = 0.0;
    double max_time_term = 0.0;
};

/// Residual of d_t <rho> + (p/m) <psi+ D_q psi + h.c.> + <(D_p psi)+ F psi + h.c.>
/// at time t for the state evolved from `initial`, with d_t by a central
/// difference of step dt_fd and the same stencils used in build_one_body.
QuantumVlasovResidual check_quantum_vlasov(const FockState& initial, const Propagator& propagator,
                                           const FockBasis& basis, const PhaseGrid& grid, const ProblemSpec& spec,
                                           double t, double dt_fd);

struct OperatorSymmetry {
    /// ||Q + Q+||_max over the per-column one-body Q kernels.
    double q_antihermitian_error = 0.0;
    /// ||F - F+||_max of the mean-field force multiplication operator.
    double f_hermitian_error = 0.0;
};

OperatorSymmetry check_Q_antihermitian(const PhaseGrid& grid, const ProblemSpec& spec,
                                       const DensityField& density_ref);

}  // namespace kvn
