#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "kvn/error.hpp"
#include "kvn/fock.hpp"
#include "fock_oracles.hpp"

using namespace kvn;
using namespace kvn::oracle;

TEST_CASE("mode basis is orthonormal")
{
    ModeBasis basis(periodic_grid(5, 4, 2.0, 3.0));
    CHECK(basis.size() == 20);
    CHECK(max_diff(basis.gram().cast<cplx>(), Eigen::MatrixXcd::Identity(20, 20)) < 1e-14);
}

TEST_CASE("one-body matrix")
{
    const auto g = periodic_grid(8, 8, 4.0, 4.0);

    SUBCASE("harmonic h is Hermitian and matches the stencil oracle")
    {
        ProblemSpec s;
        s.external = HarmonicPotential{1.3};
        const auto h = build_one_body(g, s);
        CHECK(h.hermiticity_error < 1e-14);
        CHECK(max_diff(Eigen::MatrixXcd(h.matrix), oracle_h(g, s)) < 1e-14);
    }

    SUBCASE("free h vanishes on p = 0 rows and has a symmetric real spectrum")
    {
        const auto g0 = periodic_grid(8, 9, 4.0, 4.5);
        const auto h = build_one_body(g0, ProblemSpec{});
        const Eigen::MatrixXcd dense(h.matrix);
        for (std::size_t c = 0; c < g0.size(); ++c) {
            if (g0.center(c).p == 0.0) CHECK(dense.row(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff() == 0.0);
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(build_one_body(g, {}).matrix));
        std::vector<double> ev;
        for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
            CHECK(std::abs(solver.eigenvalues()(k).imag()) < 1e-10);
            ev.push_back(solver.eigenvalues()(k).real());
        }
        std::sort(ev.begin(), ev.end());
        for (std::size_t k = 0; k < ev.size(); ++k) CHECK(std::abs(ev[k] + ev[ev.size() - 1 - k]) < 1e-10);
    }

    SUBCASE("open axes are rejected")
    {
        PhaseGrid open = g;
        open.p.periodic = false;
        CHECK_THROWS_AS(build_one_body(open, ProblemSpec{}), validation_error);
        CHECK_THROWS_AS(build_two_body(open, interacting(0.1)), validation_error);
    }
}

TEST_CASE("two-body tensor")
{
    const auto g = periodic_grid(6, 6, 3.0, 3.0);
    CHECK(build_two_body(g, ProblemSpec{}).entries.empty());

    const auto s = interacting(0.7);
    const auto tensor = build_two_body(g, s);
    const auto sym = two_particle_matrix(tensor, true);
    CHECK(max_diff(sym, sym.adjoint()) < 1e-12);

    // The full first-quantized operator agrees with the independent oracle.
    const Eigen::MatrixXcd h(build_one_body(g, s).matrix);
    const auto m = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd full = sym;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index k = 0; k < m; ++k) {
                full(i * m + j, k * m + j) += h(i, k);
                full(i * m + j, i * m + k) += h(j, k);
            }
    CHECK(max_diff(full, oracle_two_particle(g, s)) < 1e-13);

    CHECK(two_body_diagonal_block_max(g, s) == 0.0);
    for (const auto& e : tensor.entries) {
        if (g.q_index(e.i) == g.q_index(e.j)) CHECK(e.value == cplx(0.0, 0.0));
    }
}

TEST_CASE("Fock basis ordering and index map")
{
    CHECK(FockBasis::sector_dimension(16, 2) == 136);
    CHECK(FockBasis::sector_dimension(36, 2) == 666);
    CHECK(FockBasis::sector_dimension(1, 7) == 1);
    CHECK(FockBasis::sector_dimension(100000, 100) == std::numeric_limits<std::size_t>::max());

    const FockBasis basis(4, 3);
    CHECK(basis.size() == 20);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        CHECK(basis.particle_number(s) == 3);
        CHECK(basis.index_of(basis.occupation(s)) == s);
        if (s + 1 < basis.size()) {
            const auto a = basis.occupation(s), b = basis.occupation(s + 1);
            CHECK(std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()));
        }
    }
    CHECK(basis.occupation(0)[0] == 3);
    CHECK(basis.occupation(basis.size() - 1)[3] == 3);

    const auto trunc = FockBasis::truncated(3, 2);
    CHECK(trunc.size() == 1 + 3 + 6);
    for (std::size_t s = 0; s < trunc.size(); ++s) CHECK(trunc.index_of(trunc.occupation(s)) == s);

    const std::vector<FockBasis::Occupation> wrong{1, 1};
    CHECK_FALSE(basis.index_of(wrong).has_value());

    try {
        FockBasis big(200, 4);
        FAIL("expected a capacity refusal");
    } catch (const capacity_error& e) {
        CHECK(e.requested() == FockBasis::sector_dimension(200, 4));
        CHECK(e.cap() == default_fock_dimension_cap);
    }
}

TEST_CASE("second-quantized L")
{
    const auto g = periodic_grid(4, 4, 2.0, 2.0);
    const auto s = interacting(0.1);
    const auto h = build_one_body(g, s);
    const auto tensor = build_two_body(g, s);

    SUBCASE("N = 1 sector equals h")
    {
        const FockBasis b1(16, 1);
        const auto l = assemble_L(h, tensor, b1);
        // Mode k is the occupation with a single 1 at k; order is descending.
        Eigen::MatrixXcd permuted(16, 16);
        const Eigen::MatrixXcd dense(l.matrix);
        for (std::size_t r = 0; r < 16; ++r) {
            for (std::size_t c = 0; c < 16; ++c) {
                std::vector<FockBasis::Occupation> orow(16, 0), ocol(16, 0);
                orow[r] = 1;
                ocol[c] = 1;
                permuted(r, c) = dense(*b1.index_of(orow), *b1.index_of(ocol));
            }
        }
        CHECK(max_diff(permuted, Eigen::MatrixXcd(h.matrix)) == 0.0);
    }

    SUBCASE("N = 2 is Hermitian and number conserving")
    {
        const FockBasis b2(16, 2);
        const auto l = assemble_L(h, tensor, b2);
        CHECK(l.hermitian);
        CHECK(l.hermiticity_error < 1e-12);
        CHECK(number_commutator_norm(l, b2) == 0.0);

        const auto trunc = FockBasis::truncated(16, 2);
        const auto lt = assemble_L(h, tensor, trunc);
        CHECK(number_commutator_norm(lt, trunc) == 0.0);
        CHECK(lt.hermiticity_error < 1e-12);
    }

    SUBCASE("cap refusal names the dimension")
    {
        const FockBasis b2(16, 2);
        try {
            assemble_L(h, tensor, b2, 100);
            FAIL("expected a capacity refusal");
        } catch (const capacity_error& e) {
            CHECK(e.requested() == 136);
        }
    }
}

TEST_CASE("embedding")
{
    const auto g = periodic_grid(4, 4, 2.0, 2.0);
    const std::size_t m = g.size();
    const double vol = g.cell_volume();

    SUBCASE("N = 1 is a basis change")
    {
        const FockBasis b1(m, 1);
        const auto phi = wave_packet(g, 0.3, -0.2, 0.5);
        const auto st = embed_product_state(phi, 1, b1, g);
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<FockBasis::Occupation> o(m, 0);
            o[c] = 1;
            CHECK(std::abs(st.amplitudes(*b1.index_of(o)) - phi[c] * std::sqrt(vol)) < 1e-15);
        }
        CHECK(std::abs(st.norm() - 1.0) < 1e-12);
    }

    SUBCASE("symmetrized orthogonal pair occupies one state")
    {
        const FockBasis b2(m, 2);
        const std::size_t i = 3, j = 11;
        std::vector<cplx> psi(m * m, 0.0);
        const double a = 1.0 / (std::sqrt(2.0) * vol);
        psi[i * m + j] = a;
        psi[j * m + i] = a;
        const auto st = embed_product_state(psi, 2, b2, g);
        std::vector<FockBasis::Occupation> o(m, 0);
        o[i] = o[j] = 1;
        const auto target = *b2.index_of(o);
        for (std::size_t s = 0; s < b2.size(); ++s) {
            CHECK(std::abs(st.amplitudes(s) - (s == target ? cplx(1.0) : cplx(0.0))) < 1e-12);
        }
    }

    SUBCASE("phi x phi matches the two-particle part of a coherent state")
    {
        const FockBasis b2(m, 2);
        const auto phi = wave_packet(g, -0.4, 0.6, 1.1);
        std::vector<cplx> psi(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) psi[a * m + b] = phi[a] * phi[b];
        const auto st = embed_product_state(psi, 2, b2, g);
        const auto fast = embed_product(phi, 2, b2, g);
        CHECK((st.amplitudes - fast.amplitudes).cwiseAbs().maxCoeff() < 1e-14);

        // Coherent state with alpha_k = phi_k sqrt(vol): amplitude on |n> is
        // prod alpha^n / sqrt(n!); project onto N = 2 and renormalise.
        Eigen::VectorXcd coherent(b2.size());
        for (std::size_t s = 0; s < b2.size(); ++s) {
            const auto occ = b2.occupation(s);
            cplx amp = 1.0;
            for (std::size_t k = 0; k < m; ++k) {
                const cplx alpha = phi[k] * std::sqrt(vol);
                for (int n = 0; n < occ[k]; ++n) amp *= alpha;
                if (occ[k] == 2) amp /= std::sqrt(2.0);
            }
            coherent(s) = amp;
        }
        coherent /= coherent.norm();
        CHECK((coherent - st.amplitudes).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(st.norm() - 1.0) < 1e-12);
    }

    SUBCASE("asymmetric input is rejected")
    {
        const FockBasis b2(m, 2);
        std::vector<cplx> psi(m * m, 0.0);
        psi[1] = 1.0;
        CHECK_THROWS_AS(embed_product_state(psi, 2, b2, g), validation_error);
    }
}

TEST_CASE("density expectation")
{
    const auto g = periodic_grid(4, 4, 2.0, 2.0);
    const double vol = g.cell_volume();
    const FockBasis b2(16, 2);
    std::vector<FockBasis::Occupation> o(16, 0);
    o[2] = o[9] = 1;
    FockState st{Eigen::VectorXcd::Zero(b2.size())};
    st.amplitudes(*b2.index_of(o)) = 1.0;
    const auto rho = density_expectation(st, b2, g);
    for (std::size_t c = 0; c < 16; ++c) CHECK(rho.values[c] == doctest::Approx(c == 2 || c == 9 ? 1.0 / vol : 0.0));

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    FockState random{Eigen::VectorXcd(b2.size())};
    for (Eigen::Index k = 0; k < random.amplitudes.size(); ++k) random.amplitudes(k) = cplx(nd(rng), nd(rng));
    random.amplitudes /= random.norm();
    CHECK(std::abs(density_expectation(random, b2, g).mass() - 2.0) < 1e-10);
}

TEST_CASE("propagation")
{
    const auto g = periodic_grid(6, 6, 3.0, 3.0);
    const auto s = interacting(0.5);
    const auto h = build_one_body(g, s);
    const auto tensor = build_two_body(g, s);
    const std::size_t m = g.size();

    SUBCASE("t = 0 is the identity and non-Hermitian operators are refused")
    {
        const FockBasis b1(m, 1);
        const auto l = assemble_L(h, tensor, b1);
        const auto st = embed_product(wave_packet(g, 0.0, 0.0, 0.0), 1, b1, g);
        CHECK((propagate(st, l, 0.0).amplitudes - st.amplitudes).norm() == 0.0);
        FockOperator bad = l;
        bad.hermitian = false;
        CHECK_THROWS_AS(Propagator{bad}, validation_error);
    }

    SUBCASE("N = 1 matches the matrix exponential of h")
    {
        const FockBasis b1(m, 1);
        const auto l = assemble_L(h, tensor, b1);
        const auto phi = wave_packet(g, 0.5, -0.5, 0.8);
        const auto out = propagate(embed_product(phi, 1, b1, g), l, 1.0);
        Eigen::VectorXcd v(m);
        for (std::size_t c = 0; c < m; ++c) v(c) = phi[c] * std::sqrt(g.cell_volume());
        const Eigen::MatrixXcd u = (cplx(0.0, -1.0) * oracle_h(g, s)).exp();
        const Eigen::VectorXcd ref = u * v;
        double worst = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<FockBasis::Occupation> o(m, 0);
            o[c] = 1;
            worst = std::max(worst, std::abs(out.amplitudes(*b1.index_of(o)) - ref(c)));
        }
        CHECK(worst < 1e-8);
    }

    SUBCASE("N = 2 matches first-quantized propagation")
    {
        const FockBasis b2(m, 2);
        const auto l = assemble_L(h, tensor, b2);
        const auto phi = wave_packet(g, 0.8, 0.2, 0.4), chi = wave_packet(g, -0.6, -0.3, -0.7);
        std::vector<cplx> psi(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) psi[a * m + b] = phi[a] * chi[b] + chi[a] * phi[b];
        Eigen::Map<Eigen::VectorXcd> pv(psi.data(), static_cast<Eigen::Index>(psi.size()));
        pv /= pv.norm() * g.cell_volume();

        const auto start = embed_product_state(psi, 2, b2, g);
        CHECK(std::abs(start.norm() - 1.0) < 1e-12);
        const auto fock_dense = propagate(start, l, 1.0, PropagationMethod::dense);
        const auto fock_krylov = propagate(start, l, 1.0, PropagationMethod::krylov);

        const Eigen::VectorXcd evolved = taylor_expmv(oracle_two_particle(g, s), pv, 1.0);
        std::vector<cplx> out(evolved.data(), evolved.data() + evolved.size());
        const auto ref = embed_product_state(out, 2, b2, g);

        CHECK((fock_dense.amplitudes - ref.amplitudes).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((fock_krylov.amplitudes - ref.amplitudes).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(std::abs(fock_dense.norm() - 1.0) < 1e-10);
        CHECK(std::abs(fock_krylov.norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("quantum Vlasov identity")
{
    const auto g = periodic_grid(4, 4, 2.0, 2.0);

    SUBCASE("free single particle")
    {
        const ProblemSpec s;
        const FockBasis b1(16, 1);
        const auto l = assemble_L(build_one_body(g, s), build_two_body(g, s), b1);
        const Propagator prop(l);
        const auto st = embed_product(wave_packet(g, 0.2, 0.4, 0.3), 1, b1, g);
        CHECK(check_quantum_vlasov(st, prop, b1, g, s, 0.3, 1e-4).max_residual < 1e-8);
    }

    SUBCASE("interacting pair")
    {
        const auto s = interacting(0.1);
        const FockBasis b2(16, 2);
        const auto l = assemble_L(build_one_body(g, s), build_two_body(g, s), b2);
        const Propagator prop(l);
        const auto st = embed_product(wave_packet(g, 0.3, -0.2, 0.6), 2, b2, g);
        const double t = 0.7;
        const auto r1 = check_quantum_vlasov(st, prop, b2, g, s, t, 1e-4);
        const auto r2 = check_quantum_vlasov(st, prop, b2, g, s, t, 5e-5);
        CHECK(r1.max_residual < 1e-6);
        CHECK(r1.max_time_term > 1e-3);

        // Exact time derivative: d/dt |c|^2 = 2 Re(conj(c) (-i L c)).
        const auto now = prop.apply(st, t);
        const Eigen::VectorXcd dc = cplx(0.0, -1.0) * (l.matrix * now.amplitudes);
        std::vector<double> exact(16, 0.0);
        for (std::size_t k = 0; k < b2.size(); ++k) {
            const double w = 2.0 * (std::conj(now.amplitudes(k)) * dc(k)).real();
            const auto occ = b2.occupation(k);
            for (std::size_t c = 0; c < 16; ++c) exact[c] += w * occ[c] / g.cell_volume();
        }
        double e1 = 0.0, e2 = 0.0;
        for (std::size_t c = 0; c < 16; ++c) {
            e1 = std::max(e1, std::abs(r1.time_term[c] - exact[c]));
            e2 = std::max(e2, std::abs(r2.time_term[c] - exact[c]));
        }
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    }

    SUBCASE("stationary state")
    {
        const auto s = interacting(0.1);
        const FockBasis b2(16, 2);
        const auto l = assemble_L(build_one_body(g, s), build_two_body(g, s), b2);
        const Propagator prop(l, PropagationMethod::dense);
        FockState eig{prop.eigenvectors().col(7)};
        const auto r = check_quantum_vlasov(eig, prop, b2, g, s, 0.0, 1e-3);
        CHECK(r.max_time_term < 1e-10);
        CHECK(r.max_residual < 1e-10);
    }
}

TEST_CASE("operator symmetry")
{
    const auto g = periodic_grid(8, 8, 4.0, 4.0);
    const auto rho = density_from_function(g, [](const PhasePoint& x) {
        return std::exp(-0.5 * (x.q * x.q + x.p * x.p)) / (2.0 * M_PI);
    });
    const auto none = check_Q_antihermitian(g, ProblemSpec{}, rho);
    CHECK(none.q_antihermitian_error == 0.0);
    CHECK(none.f_hermitian_error == 0.0);

    const auto sym = check_Q_antihermitian(g, interacting(0.3), rho);
    CHECK(sym.q_antihermitian_error < 1e-12);
    CHECK(sym.f_hermitian_error == 0.0);
}
