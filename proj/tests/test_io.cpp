#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "kvn/error.hpp"
#include "kvn/io.hpp"

using namespace kvn;

namespace {

PhaseGrid small_grid(bool periodic)
{
    return {{-2.0, 3.0, 5, periodic}, {-1.5, 1.5, 4, !periodic}};
}

template <class T>
T read_le(const std::string& bytes, std::size_t offset)
{
    T v;
    std::memcpy(&v, bytes.data() + offset, sizeof v);
    return v;
}

std::size_t count_lines(const std::string& s)
{
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("grid file has a 64-byte header and round-trips bit for bit")
{
    DensityField f(small_grid(true));
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
    const auto bytes = io::encode_grid(f);
    REQUIRE(bytes.size() == 64 + 8 * f.values.size());
    CHECK(std::memcmp(bytes.data(), "KVNGRID", 8) == 0);
    CHECK(read_le<std::uint32_t>(bytes, 8) == io::grid_format_version);
    CHECK(read_le<std::uint32_t>(bytes, 12) == 0b01u);
    CHECK(read_le<std::uint32_t>(bytes, 16) == 5u);
    CHECK(read_le<std::uint32_t>(bytes, 20) == 4u);
    CHECK(read_le<double>(bytes, 24) == -2.0);
    CHECK(read_le<double>(bytes, 48) == 1.5);
    CHECK(read_le<double>(bytes, 64) == f.values[0]);
    CHECK(read_le<double>(bytes, 64 + 8 * 7) == f.values[7]);

    const auto back = io::decode_grid(bytes);
    CHECK(back.grid == f.grid);
    CHECK(back.values == f.values);
    CHECK(io::encode_grid(back) == bytes);
}

TEST_CASE("damaged grid files are refused")
{
    DensityField f(small_grid(false));
    auto bytes = io::encode_grid(f);
    CHECK_THROWS(io::decode_grid(bytes.substr(0, 40)));
    CHECK_THROWS(io::decode_grid(bytes.substr(0, bytes.size() - 8)));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS(io::decode_grid(bad));
}

TEST_CASE("fock state and operator files")
{
    const PhaseGrid g{{-1.0, 1.0, 4, true}, {-1.0, 1.0, 4, true}};
    FockState st;
    st.amplitudes.resize(3);
    st.amplitudes << cplx(1.0, -2.0), cplx(0.25, 0.0), cplx(-1e-300, 7.0);
    const auto bytes = io::encode_fock_state(st, 2, 16, g);
    REQUIRE(bytes.size() == 80 + 16 * 3);
    const auto h = io::decode_fock_header(bytes);
    CHECK(h.kind == 0);
    CHECK(h.dimension == 3);
    CHECK(h.particles == 2);
    CHECK(h.modes == 16);
    CHECK(h.grid == g);
    CHECK(io::decode_fock_state(bytes).amplitudes == st.amplitudes);

    FockOperator op;
    op.matrix.resize(3, 3);
    op.matrix.insert(0, 1) = cplx(0.0, 1.0);
    op.matrix.insert(1, 0) = cplx(0.0, -1.0);
    op.matrix.makeCompressed();
    const auto ob = io::encode_fock_operator(op, 2, 16, g);
    CHECK(io::decode_fock_header(ob).kind == 1);
    CHECK(read_le<std::uint64_t>(ob, 80) == 2u);
    CHECK(ob.size() == 80 + 8 + 2 * 32);
    CHECK(read_le<std::uint64_t>(ob, 88) == 0u);
    CHECK(read_le<std::uint64_t>(ob, 96) == 1u);
    CHECK_THROWS(io::decode_fock_state(ob));
}

TEST_CASE("decimal output round-trips doubles")
{
    for (double v : {0.0, -0.0, 1.0 / 3.0, 6.02214076e23, -4.9e-324, 0.1 + 0.2}) {
        const auto s = io::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("marginal and point csv layouts")
{
    DensityField f(small_grid(false));
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 1.0;
    const auto mq = io::marginal_q_csv(f);
    CHECK(mq.rfind("q,n\n", 0) == 0);
    CHECK(count_lines(mq) == 1 + 5);
    const auto mp = io::marginal_p_csv(f);
    CHECK(mp.rfind("p,m\n", 0) == 0);
    CHECK(count_lines(mp) == 1 + 4);

    const std::vector<PhasePoint> pts{{1.0, -2.0}, {0.125, 1e-17}};
    const auto back = io::read_points_csv(io::points_csv(pts));
    REQUIRE(back.size() == 2);
    CHECK(back[1].q == pts[1].q);
    CHECK(back[1].p == pts[1].p);

    const auto swapped = io::read_points_csv("p,q\n2,1\n");
    REQUIRE(swapped.size() == 1);
    CHECK(swapped[0].q == 1.0);
    CHECK(swapped[0].p == 2.0);
    CHECK_THROWS(io::read_points_csv("x,y\n1,2\n"));
}

TEST_CASE("trajectory csv lists every point")
{
    std::vector<std::vector<TrajectorySample>> traj(2);
    traj[0] = {{0.0, {1.0, 0.0}}, {0.5, {1.5, 1.0}}};
    traj[1] = {{0.0, {2.0, 0.0}}};
    const auto csv = io::trajectory_csv(traj);
    CHECK(csv.rfind("point,t,q,p\n", 0) == 0);
    CHECK(count_lines(csv) == 4);
    CHECK(csv.find("1,0,2,0\n") != std::string::npos);
}

TEST_CASE("sha256 and atomic writes")
{
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    const auto dir = std::filesystem::temp_directory_path() / ("kvn_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto path = dir / "blob.bin";
    const std::string payload("a\0b\nc", 5);
    io::write_file_atomic(path, payload);
    io::write_file_atomic(path, payload);
    CHECK(io::read_file(path) == payload);
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(io::read_file(dir / "missing"));
}
