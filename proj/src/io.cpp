#include "kvn/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "kvn/error.hpp"

namespace kvn::io {

namespace {

constexpr char grid_magic[8] = {'K', 'V', 'N', 'G', 'R', 'I', 'D', '\0'};
constexpr char fock_magic[8] = {'K', 'V', 'N', 'F', 'O', 'C', 'K', '\0'};

class Writer {
public:
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void pad_to(std::size_t n) { out_.resize(n, '\0'); }
    std::string take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int bytes)
    {
        for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}
    void expect_magic(const char (&magic)[8], const char* what)
    {
        need(8);
        if (std::memcmp(in_.data(), magic, 8) != 0) throw validation_error(std::string("not a ") + what + " file");
        pos_ = 8;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    void seek(std::size_t p) { pos_ = p; }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > in_.size()) throw validation_error("file is truncated");
    }
    std::uint64_t get(int bytes)
    {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }
    const std::string& in_;
    std::size_t pos_ = 0;
};

std::uint32_t grid_flags(const PhaseGrid& g)
{
    return (g.q.periodic ? 1u : 0u) | (g.p.periodic ? 2u : 0u);
}

void write_grid_descriptor(Writer& w, const PhaseGrid& g)
{
    w.u32(grid_flags(g));
    w.u32(static_cast<std::uint32_t>(g.q.cells));
    w.u32(static_cast<std::uint32_t>(g.p.cells));
}

void write_bounds(Writer& w, const PhaseGrid& g)
{
    w.f64(g.q.lower);
    w.f64(g.q.upper);
    w.f64(g.p.lower);
    w.f64(g.p.upper);
}

PhaseGrid read_grid(Reader& r, std::uint32_t flags, std::uint32_t nq, std::uint32_t np)
{
    PhaseGrid g;
    g.q.cells = nq;
    g.p.cells = np;
    g.q.periodic = flags & 1u;
    g.p.periodic = flags & 2u;
    g.q.lower = r.f64();
    g.q.upper = r.f64();
    g.p.lower = r.f64();
    g.p.upper = r.f64();
    return g;
}

void write_fock_header(Writer& w, std::uint32_t kind, std::uint64_t dim, std::size_t particles, std::size_t modes,
                       const PhaseGrid& grid)
{
    w.raw(fock_magic, 8);
    w.u32(fock_format_version);
    w.u32(kind);
    w.u64(dim);
    w.u32(static_cast<std::uint32_t>(particles));
    w.u32(static_cast<std::uint32_t>(modes));
    write_grid_descriptor(w, grid);
    w.u32(0);
    write_bounds(w, grid);
}

}  // namespace

std::string encode_grid(const DensityField& field)
{
    Writer w;
    w.raw(grid_magic, 8);
    w.u32(grid_format_version);
    w.u32(grid_flags(field.grid));
    w.u32(static_cast<std::uint32_t>(field.grid.q.cells));
    w.u32(static_cast<std::uint32_t>(field.grid.p.cells));
    write_bounds(w, field.grid);
    w.f64(field.mass());
    for (double v : field.values) w.f64(v);
    return w.take();
}

DensityField decode_grid(const std::string& bytes)
{
    Reader r(bytes);
    r.expect_magic(grid_magic, "grid");
    if (r.u32() != grid_format_version) throw validation_error("unsupported grid file version");
    const auto flags = r.u32();
    const auto nq = r.u32();
    const auto np = r.u32();
    const PhaseGrid g = read_grid(r, flags, nq, np);
    r.f64();
    const std::size_t n = static_cast<std::size_t>(nq) * np;
    if (r.remaining() != 8 * n) throw validation_error("grid payload size does not match the header");
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    return DensityField(g, std::move(values));
}

std::string encode_fock_state(const FockState& state, std::size_t particles, std::size_t modes,
                              const PhaseGrid& grid)
{
    Writer w;
    write_fock_header(w, 0, static_cast<std::uint64_t>(state.amplitudes.size()), particles, modes, grid);
    for (Eigen::Index k = 0; k < state.amplitudes.size(); ++k) {
        w.f64(state.amplitudes(k).real());
        w.f64(state.amplitudes(k).imag());
    }
    return w.take();
}

std::string encode_fock_operator(const FockOperator& op, std::size_t particles, std::size_t modes,
                                 const PhaseGrid& grid)
{
    Writer w;
    write_fock_header(w, 1, static_cast<std::uint64_t>(op.matrix.rows()), particles, modes, grid);
    w.u64(static_cast<std::uint64_t>(op.matrix.nonZeros()));
    for (int r = 0; r < op.matrix.outerSize(); ++r) {
        for (SparseMatrixC::InnerIterator it(op.matrix, r); it; ++it) {
            w.u64(static_cast<std::uint64_t>(it.row()));
            w.u64(static_cast<std::uint64_t>(it.col()));
            w.f64(it.value().real());
            w.f64(it.value().imag());
        }
    }
    return w.take();
}

FockFileHeader decode_fock_header(const std::string& bytes)
{
    Reader r(bytes);
    r.expect_magic(fock_magic, "Fock");
    if (r.u32() != fock_format_version) throw validation_error("unsupported Fock file version");
    FockFileHeader h;
    h.kind = r.u32();
    h.dimension = r.u64();
    h.particles = r.u32();
    h.modes = r.u32();
    const auto flags = r.u32();
    const auto nq = r.u32();
    const auto np = r.u32();
    r.u32();
    h.grid = read_grid(r, flags, nq, np);
    return h;
}

FockState decode_fock_state(const std::string& bytes)
{
    const auto h = decode_fock_header(bytes);
    if (h.kind != 0) throw validation_error("Fock file does not hold a state");
    Reader r(bytes);
    r.seek(80);
    if (r.remaining() != 16 * h.dimension) throw validation_error("Fock payload size does not match the header");
    FockState s;
    s.amplitudes.resize(static_cast<Eigen::Index>(h.dimension));
    for (Eigen::Index k = 0; k < s.amplitudes.size(); ++k) {
        const double re = r.f64();
        const double im = r.f64();
        s.amplitudes(k) = {re, im};
    }
    return s;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trajectory_csv(const std::vector<std::vector<TrajectorySample>>& trajectories)
{
    std::string out = "point,t,q,p\n";
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        for (const auto& s : trajectories[k]) {
            out += std::to_string(k) + ',' + format_double(s.t) + ',' + format_double(s.x.q) + ',' +
                   format_double(s.x.p) + '\n';
        }
    }
    return out;
}

std::string marginal_q_csv(const DensityField& field)
{
    const auto n = spatial_density(field);
    std::string out = "q,n\n";
    for (std::size_t i = 0; i < n.size(); ++i) out += format_double(field.grid.q.center(i)) + ',' + format_double(n[i]) + '\n';
    return out;
}

std::string marginal_p_csv(const DensityField& field)
{
    const auto& g = field.grid;
    std::string out = "p,m\n";
    for (std::size_t ip = 0; ip < g.p.cells; ++ip) {
        double sum = 0.0;
        for (std::size_t iq = 0; iq < g.q.cells; ++iq) sum += field.at(iq, ip);
        out += format_double(g.p.center(ip)) + ',' + format_double(sum * g.q.spacing()) + '\n';
    }
    return out;
}

std::string points_csv(const std::vector<PhasePoint>& points)
{
    std::string out = "q,p\n";
    for (const auto& x : points) out += format_double(x.q) + ',' + format_double(x.p) + '\n';
    return out;
}

std::vector<PhasePoint> read_points_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw validation_error("points CSV is empty");
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string c;
        while (std::getline(ss, c, ',')) {
            while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
            while (!c.empty() && c.front() == ' ') c.erase(c.begin());
            cells.push_back(c);
        }
        return cells;
    };
    const auto header = split(line);
    int qi = -1, pi = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "q") qi = static_cast<int>(k);
        if (header[k] == "p") pi = static_cast<int>(k);
    }
    if (qi < 0 || pi < 0) throw validation_error("points CSV header must name columns q and p");
    std::vector<PhasePoint> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        const auto need = static_cast<std::size_t>(std::max(qi, pi));
        if (cells.size() <= need) throw validation_error("points CSV row " + std::to_string(row) + " is short");
        PhasePoint x;
        for (auto [idx, dst] : {std::pair{qi, &x.q}, std::pair{pi, &x.p}}) {
            const auto& c = cells[static_cast<std::size_t>(idx)];
            const auto res = std::from_chars(c.data(), c.data() + c.size(), *dst);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
                throw validation_error("points CSV row " + std::to_string(row) + ": '" + c + "' is not a number");
            }
        }
        out.push_back(x);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace kvn::io
