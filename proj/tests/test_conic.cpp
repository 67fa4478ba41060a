#include <doctest.h>

#include <cmath>
#include <sstream>

#include "blockspec/conic.hpp"
#include "blockspec/signal.hpp"
#include "blockspec/solver.hpp"
#include "blockspec/trigpoly.hpp"

using namespace blockspec;

namespace {

const BlockPrior fig2_prior{{FrequencyBand(0.35, 0.48), FrequencyBand(0.60, 0.80),
                             FrequencyBand(0.85, 0.90)}};

Observation random_instance(Rng& rng, int n, int s, int m, const BlockPrior& prior,
                            LineSpectralSignal* truth = nullptr) {
    const LineSpectralSignal sig = random_signal(rng, s, prior);
    if (truth != nullptr) *truth = sig;
    return sample(synthesize(sig, n), random_mask(rng, n, m));
}

Eigen::MatrixXcd random_hermitian(Rng& rng, int d) {
    Eigen::MatrixXcd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = cplx(rng.normal(), rng.normal());
    return Eigen::MatrixXcd(0.5 * (M + M.adjoint()));
}

}  // namespace

TEST_CASE("embed_hermitian on hand examples") {
    {
        Eigen::MatrixXcd M(1, 1);
        M(0, 0) = cplx(3.5, 0.0);
        const Eigen::MatrixXd E = HermitianEmbedding::embed(M);
        Eigen::MatrixXd want(2, 2);
        want << 3.5, 0.0, 0.0, 3.5;
        CHECK((E - want).cwiseAbs().maxCoeff() < 1e-15);
    }
    {
        Eigen::MatrixXcd M(2, 2);
        M << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
        const Eigen::MatrixXd E = HermitianEmbedding::embed(M);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(E);
        CHECK(eig.eigenvalues()(0) == doctest::Approx(-1.0));
        CHECK(eig.eigenvalues()(1) == doctest::Approx(-1.0));
        CHECK(eig.eigenvalues()(2) == doctest::Approx(1.0));
        CHECK(eig.eigenvalues()(3) == doctest::Approx(1.0));
    }
    {
        const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(3, 3);
        CHECK((HermitianEmbedding::embed(I) - Eigen::MatrixXd::Identity(6, 6))
                  .cwiseAbs()
                  .maxCoeff() < 1e-15);
    }
}

TEST_CASE("embedding pack/unpack round-trips") {
    Rng rng(17);
    const HermitianEmbedding emb(7);
    const Eigen::MatrixXcd M = random_hermitian(rng, 7);
    std::vector<double> coords(static_cast<std::size_t>(emb.dim()), 0.0);
    emb.pack(M, coords.data());
    double asym = 1.0;
    const Eigen::MatrixXcd back = emb.unpack(coords.data(), &asym);
    CHECK((back - M).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(asym < 1e-12);
}

TEST_CASE("block dual structure matches the n=64 configuration") {
    Rng rng(7);
    const Observation obs = random_instance(rng, 64, 5, 20, fig2_prior);
    const BuiltProblem built = build_block_dual(64, obs, fig2_prior);
    const auto& prog = built.program;
    prog.validate();

    REQUIRE(prog.cones.size() == 7);
    CHECK(prog.cones[0].kind == ConeBlock::Kind::Free);
    CHECK(prog.cones[0].dim == 128);
    REQUIRE(built.layout.certs.size() == 3);  // no band touches f = 0.5, no splits
    for (const auto& cert : built.layout.certs) {
        CHECK(prog.cones[cert.bordered_block].side == 130);
        CHECK(prog.cones[cert.bordered_block].complex_side == 65);
        CHECK(prog.cones[cert.q2_block].side == 126);
        CHECK(prog.cones[cert.q2_block].complex_side == 63);
    }
    // 44 complex zero pins + per band: 64 complex L rows, corner pin, 64 complex ties
    CHECK(prog.equalities.size() == 88 + 3 * (128 + 1 + 128));

    int nonzeros = 0;
    for (double c : prog.objective)
        if (c != 0.0) ++nonzeros;
    CHECK(nonzeros <= 40);
    for (std::size_t j = 0; j < obs.values.size(); ++j) {
        const int l = obs.sample_set.observed[j];
        CHECK(prog.objective[built.layout.q_re(l)] == obs.values[j].real());
        CHECK(prog.objective[built.layout.q_im(l)] == obs.values[j].imag());
    }
}

TEST_CASE("global dual and primal structure") {
    Rng rng(8);
    const Observation obs = random_instance(rng, 64, 5, 20, fig2_prior);
    {
        const BuiltProblem built = build_global_dual(64, obs);
        built.program.validate();
        REQUIRE(built.program.cones.size() == 2);
        CHECK(built.program.cones[1].complex_side == 65);
        CHECK(built.program.equalities.size() == 88 + 128 + 1 + 128);
    }
    {
        const BuiltProblem built = build_primal_sdp(64, obs);
        built.program.validate();
        REQUIRE(built.program.cones.size() == 1);
        CHECK(built.program.cones[0].complex_side == 65);
        // Toeplitz ties: 63 real rows on the main diagonal, 2*(63-k) for k>=1
        std::size_t ties = 63;
        for (int k = 1; k < 64; ++k) ties += 2 * static_cast<std::size_t>(63 - k);
        CHECK(built.program.equalities.size() == ties + 40);
    }
}

TEST_CASE("extract_solution inverts the layout") {
    Rng rng(23);
    const int n = 6;
    const Observation obs = random_instance(rng, n, 2, 4, fig2_prior);
    const BuiltProblem built = build_block_dual(n, obs, fig2_prior);
    std::vector<double> v(static_cast<std::size_t>(built.program.num_vars), 0.0);

    std::vector<cplx> q(n);
    for (auto& val : q) val = cplx(rng.normal(), rng.normal());
    for (int l = 0; l < n; ++l) {
        v[built.layout.q_re(l)] = q[l].real();
        v[built.layout.q_im(l)] = q[l].imag();
    }
    const HermitianEmbedding emb_b(n + 1);
    const HermitianEmbedding emb_2(n - 1);
    std::vector<Eigen::MatrixXcd> borders, q2s;
    for (const auto& cert : built.layout.certs) {
        borders.push_back(random_hermitian(rng, n + 1));
        q2s.push_back(random_hermitian(rng, n - 1));
        emb_b.pack(borders.back(), v.data() + built.program.cones[cert.bordered_block].offset);
        emb_2.pack(q2s.back(), v.data() + built.program.cones[cert.q2_block].offset);
    }
    const ExtractedSolution ex = extract_solution(built, v);
    CHECK(ex.max_embedding_asym < 1e-12);
    for (int l = 0; l < n; ++l) CHECK(std::abs(ex.q[l] - q[l]) < 1e-15);
    for (std::size_t b = 0; b < built.layout.certs.size(); ++b) {
        const double s = built.layout.certs[b].d_scale;
        CHECK((ex.pairs[b].Q1 - borders[b].topLeftCorner(n, n)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((ex.pairs[b].Q2 * s - q2s[b]).cwiseAbs().maxCoeff() < 1e-12);
    }

    // inconsistent copies must be rejected
    v[built.program.cones[built.layout.certs[0].bordered_block].offset] += 1e-3;
    CHECK_THROWS_AS(extract_solution(built, v), std::runtime_error);
}

TEST_CASE("solved block dual satisfies pins and trace equalities") {
    Rng rng(31);
    const int n = 8;
    const BlockPrior prior{{FrequencyBand(0.1, 0.3), FrequencyBand(0.55, 0.7)}};
    const Observation obs = random_instance(rng, n, 2, 6, prior);
    const BuiltProblem built = build_block_dual(n, obs, prior);
    const SolverResult res = solve(built.program);
    REQUIRE(res.status == SolveStatus::Solved);
    const ExtractedSolution ex = extract_solution(built, res.v);

    std::size_t next = 0;
    for (int l = 0; l < n; ++l) {
        const bool observed = next < obs.sample_set.observed.size() &&
                              obs.sample_set.observed[next] == l;
        if (observed) {
            ++next;
            continue;
        }
        CHECK(std::abs(ex.q[l]) <= 1e-7);
    }
    for (std::size_t b = 0; b < built.layout.certs.size(); ++b) {
        const auto& cert = built.layout.certs[b];
        for (int k = 0; k < n; ++k) {
            const cplx want = k == 0 ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
            CHECK(std::abs(l_op(k, cert.aband, ex.pairs[b]) - want) < 1e-5);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig1(ex.pairs[b].Q1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig2(ex.pairs[b].Q2);
        CHECK(eig1.eigenvalues().minCoeff() >= -1e-8);
        CHECK(eig2.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("weak duality against the true decomposition") {
    Rng rng(47);
    const int n = 10;
    const BlockPrior prior{{FrequencyBand(0.1, 0.3), FrequencyBand(0.55, 0.7)}};
    for (int rep = 0; rep < 5; ++rep) {
        LineSpectralSignal truth({0.2}, {1.0}, {0.0});
        const Observation obs = random_instance(rng, n, 2, 7, prior, &truth);
        double sum_amp = 0.0;
        for (double a : truth.amps) sum_amp += a;
        const BuiltProblem built = build_block_dual(n, obs, prior);
        const SolverResult res = solve(built.program);
        REQUIRE(res.status == SolveStatus::Solved);
        CHECK(res.objective <= sum_amp + 1e-6);
    }
}

TEST_CASE("certificate modulus stays within the unit bound on the prior") {
    Rng rng(53);
    const int n = 10;
    const BlockPrior prior{{FrequencyBand(0.1, 0.3), FrequencyBand(0.55, 0.7)}};
    for (int rep = 0; rep < 3; ++rep) {
        const Observation obs = random_instance(rng, n, 2, 7, prior);
        const BuiltProblem built = build_block_dual(n, obs, prior);
        const SolverResult res = solve(built.program);
        REQUIRE(res.status == SolveStatus::Solved);
        DualVector q;
        q.q = extract_solution(built, res.v).q;
        const int G = 1 << 16;
        const auto grid = eval_dual_poly_grid(q, G);
        double worst = 0.0;
        for (int j = 0; j < G; ++j) {
            if (!contains(prior, static_cast<double>(j) / G)) continue;
            worst = std::max(worst, std::abs(grid[j]));
        }
        CHECK(worst <= 1.0 + 1e-6);
    }
}

TEST_CASE("single full-circle band matches the global dual") {
    Rng rng(61);
    const int n = 8;
    const BlockPrior full{{FrequencyBand(0.0, 1.0)}};
    for (int rep = 0; rep < 10; ++rep) {
        const Observation obs = random_instance(rng, n, 2, 6, full);
        const BuiltProblem block = build_block_dual(n, obs, full);
        REQUIRE(block.layout.certs.size() == 2);  // image wraps, split at 0.5
        const SolverResult rb = solve(block.program);
        const SolverResult rg = solve(build_global_dual(n, obs).program);
        REQUIRE(rb.status == SolveStatus::Solved);
        REQUIRE(rg.status == SolveStatus::Solved);
        CHECK(std::abs(rb.objective - rg.objective) <= 1e-5);
    }
}

TEST_CASE("shrinking the prior never decreases the dual value") {
    Rng rng(71);
    const int n = 10;
    const BlockPrior active{{FrequencyBand(0.1, 0.25)}};
    const BlockPrior padded{{FrequencyBand(0.1, 0.25), FrequencyBand(0.5, 0.65)}};
    SolverConfig tight;
    tight.eps_abs = tight.eps_rel = 1e-9;
    for (int rep = 0; rep < 20; ++rep) {
        const Observation obs = random_instance(rng, n, 2, 7, active);
        const SolverResult with_extra = solve(build_block_dual(n, obs, padded).program, tight);
        const SolverResult shrunk = solve(build_block_dual(n, obs, active).program, tight);
        REQUIRE(with_extra.status == SolveStatus::Solved);
        REQUIRE(shrunk.status == SolveStatus::Solved);
        CHECK(shrunk.objective >= with_extra.objective - 1e-7);
    }
}

TEST_CASE("n=2 dual value matches a grid-search oracle") {
    Rng rng(83);
    const FrequencyBand band(0.1, 0.35);
    const BlockPrior prior{{band}};
    const LineSpectralSignal truth({0.22}, {1.3}, {0.8});
    const Observation obs = sample(synthesize(truth, 2), SampleSet(2, {0, 1}));

    const SolverResult res = solve(build_block_dual(2, obs, prior).program);
    REQUIRE(res.status == SolveStatus::Solved);

    // Oracle: dense polar grid over q in C^2 with band feasibility sampled
    // finely, then pattern-search refinement.
    const int n_check = 2048;
    std::vector<cplx> atoms(n_check);
    for (int j = 0; j < n_check; ++j) {
        const double f = band.f_lo + band.width() * j / (n_check - 1.0);
        atoms[j] = std::exp(cplx(0.0, -2.0 * M_PI * f));
    }
    auto feasible = [&](cplx q0, cplx q1) {
        for (const cplx& a : atoms)
            if (std::norm(q0 + q1 * a) > 1.0 + 1e-12) return false;
        return true;
    };
    auto objective = [&](cplx q0, cplx q1) {
        return (q0 * std::conj(obs.values[0]) + q1 * std::conj(obs.values[1])).real();
    };
    double best = 0.0;
    double br0 = 0, bp0 = 0, br1 = 0, bp1 = 0;
    for (double r0 = 0.0; r0 <= 1.0001; r0 += 0.125)
        for (double p0 = 0.0; p0 < 2.0 * M_PI; p0 += M_PI / 12)
            for (double r1 = 0.0; r1 <= 1.0001; r1 += 0.125)
                for (double p1 = 0.0; p1 < 2.0 * M_PI; p1 += M_PI / 12) {
                    const cplx q0 = std::polar(r0, p0), q1 = std::polar(r1, p1);
                    if (!feasible(q0, q1)) continue;
                    const double val = objective(q0, q1);
                    if (val > best) {
                        best = val;
                        br0 = r0;
                        bp0 = p0;
                        br1 = r1;
                        bp1 = p1;
                    }
                }
    double step = 0.125;
    while (step > 1e-6) {
        bool improved = false;
        const double cand[4][4] = {{step, 0, 0, 0}, {0, step, 0, 0}, {0, 0, step, 0},
                                   {0, 0, 0, step}};
        for (const auto& d : cand)
            for (double sign : {1.0, -1.0}) {
                const double r0 = br0 + sign * d[0], p0 = bp0 + sign * d[1];
                const double r1 = br1 + sign * d[2], p1 = bp1 + sign * d[3];
                if (r0 < 0 || r1 < 0) continue;
                const cplx q0 = std::polar(r0, p0), q1 = std::polar(r1, p1);
                if (!feasible(q0, q1)) continue;
                const double val = objective(q0, q1);
                if (val > best) {
                    best = val;
                    br0 = r0;
                    bp0 = p0;
                    br1 = r1;
                    bp1 = p1;
                    improved = true;
                }
            }
        if (!improved) step *= 0.6;
    }
    CHECK(std::abs(res.objective - best) <= 3e-3);
    (void)rng;
}

TEST_CASE("primal SDP values on analytic cases") {
    {
        // single atom, fully observed: the atomic norm equals the amplitude
        const LineSpectralSignal sig({0.4321}, {1.7}, {2.1});
        const int n = 8;
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        const Observation obs = sample(synthesize(sig, n), SampleSet(n, all));
        const BuiltProblem built = build_primal_sdp(n, obs);
        const SolverResult res = solve(built.program);
        REQUIRE(res.status == SolveStatus::Solved);
        CHECK(std::abs(reported_value(built, res.objective) - 1.7) <= 1e-4);
        const ExtractedSolution ex = extract_solution(built, res.v);
        for (int l = 0; l < n; ++l)
            CHECK(std::abs(ex.xhat[l] - synthesize(sig, n)[l]) <= 1e-5);
    }
    {
        // zero observation: everything collapses to zero
        const int n = 6;
        const Observation obs(SampleSet(n, {0, 2, 4}), {cplx{0, 0}, cplx{0, 0}, cplx{0, 0}});
        const BuiltProblem built = build_primal_sdp(n, obs);
        const SolverResult res = solve(built.program);
        REQUIRE(res.status == SolveStatus::Solved);
        CHECK(std::abs(reported_value(built, res.objective)) <= 1e-6);
    }
}

TEST_CASE("zero observation gives zero dual value") {
    const int n = 6;
    const Observation obs(SampleSet(n, {0, 2, 4}), {cplx{0, 0}, cplx{0, 0}, cplx{0, 0}});
    const SolverResult res = solve(build_global_dual(n, obs).program);
    REQUIRE(res.status == SolveStatus::Solved);
    CHECK(std::abs(res.objective) <= 1e-6);
}

TEST_CASE("program dump uses the documented plain-text format") {
    ConicProgram prog;
    prog.add_psd_block(2);
    prog.add_free_block(3);
    prog.objective.assign(prog.num_vars, 0.0);
    Equality eq;
    eq.terms = {{0, 1.0}, {4, -2.0}};
    eq.rhs = 0.5;
    prog.equalities = {eq};
    std::ostringstream os;
    dump_program(prog, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "6 1 2");
    std::getline(is, line);
    CHECK(line == "PSD 2");
    std::getline(is, line);
    CHECK(line == "FREE 3");
    std::getline(is, line);
    CHECK(line == "0 0 1");
    std::getline(is, line);
    CHECK(line == "0 4 -2");
    std::getline(is, line);
    CHECK(line == "rhs 0.5");
}
