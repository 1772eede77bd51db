#pragma once

// On-disk formats.
//
// Grid file (.kvng), little-endian, 64-byte header then payload:
//   0  char[8]  magic "KVNGRID\0"
//   8  u32      version (1)
//   12 u32      flags: bit 0 q periodic, bit 1 p periodic
//   16 u32      N_q
//   20 u32      N_p
//   24 f64 x4   q lower, q upper, p lower, p upper
//   56 f64      midpoint mass of the field
//   64 f64      N_q * N_p values, q-major (index = iq * N_p + ip)
//
// Fock file (.kvnf), little-endian, 80-byte header then payload:
//   0  char[8]  magic "KVNFOCK\0"
//   8  u32      version (1)
//   12 u32      kind: 0 state, 1 operator
//   16 u64      basis dimension
//   24 u32      particle number N
//   28 u32      mode count M
//   32 u32      grid flags (as above)
//   36 u32      N_q
//   40 u32      N_p
//   44 u32      reserved (0)
//   48 f64 x4   q lower, q upper, p lower, p upper
//   state payload:    dim x (f64 re, f64 im)
//   operator payload: u64 nnz, then nnz x (u64 row, u64 col, f64 re, f64 im), row-major order

#include <filesystem>
#include <string>
#include <vector>

#include "kvn/fock.hpp"
#include "kvn/flow.hpp"
#include "kvn/phase_space.hpp"

namespace kvn::io {

inline constexpr std::uint32_t grid_format_version = 1;
inline constexpr std::uint32_t fock_format_version = 1;

std::string encode_grid(const DensityField& field);
DensityField decode_grid(const std::string& bytes);

struct FockFileHeader {
    std::uint32_t kind = 0;
    std::uint64_t dimension = 0;
    std::uint32_t particles = 0;
    std::uint32_t modes = 0;
    PhaseGrid grid;
};

std::string encode_fock_state(const FockState& state, std::size_t particles, std::size_t modes,
                              const PhaseGrid& grid);
std::string encode_fock_operator(const FockOperator& op, std::size_t particles, std::size_t modes,
                                 const PhaseGrid& grid);
FockFileHeader decode_fock_header(const std::string& bytes);
FockState decode_fock_state(const std::string& bytes);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Columns point,t,q,p; one block of rows per starting point.
std::string trajectory_csv(const std::vector<std::vector<TrajectorySample>>& trajectories);

/// q,n(q) and p,m(p).
std::string marginal_q_csv(const DensityField& field);
std::string marginal_p_csv(const DensityField& field);

std::string points_csv(const std::vector<PhasePoint>& points);
/// Reads a CSV whose header names columns q and p (any order, extra columns ignored).
std::vector<PhasePoint> read_points_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

std::string sha256_hex(const std::string& bytes);

}  // namespace kvn::io
