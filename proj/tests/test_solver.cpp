#include <doctest.h>

#include <cmath>

#include "blockspec/conic.hpp"
#include "blockspec/signal.hpp"
#include "blockspec/solver.hpp"

using namespace blockspec;

namespace {

/// maximize x subject to [[1, x],[x, 1]] >= 0
ConicProgram corner_program() {
    ConicProgram prog;
    prog.add_psd_block(2);
    prog.objective.assign(prog.num_vars, 0.0);
    prog.objective[Svec::idx(2, 1, 0)] = M_SQRT1_2;
    Equality e0;
    e0.terms = {{Svec::idx(2, 0, 0), 1.0}};
    e0.rhs = 1.0;
    Equality e1;
    e1.terms = {{Svec::idx(2, 1, 1), 1.0}};
    e1.rhs = 1.0;
    prog.equalities = {e0, e1};
    return prog;
}

Observation single_atom_observation(int n, double amp, double phase, double freq) {
    const LineSpectralSignal sig({freq}, {amp}, {phase});
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return sample(synthesize(sig, n), SampleSet(n, all));
}

}  // namespace

TEST_CASE("analytic SDP: determinant boundary") {
    const ConicProgram prog = corner_program();
    const SolverResult res = solve(prog);
    REQUIRE(res.status == SolveStatus::Solved);
    const double x = res.v[Svec::idx(2, 1, 0)] * M_SQRT1_2;
    CHECK(std::abs(x - 1.0) <= 1e-6);
    CHECK(std::abs(res.objective - 1.0) <= 1e-6);
}

TEST_CASE("analytic SDP: eigenvalue bound") {
    // minimize t subject to [[t, 1],[1, t]] >= 0
    ConicProgram prog;
    prog.add_psd_block(2);
    prog.objective.assign(prog.num_vars, 0.0);
    prog.objective[Svec::idx(2, 0, 0)] = -1.0;
    Equality tie;
    tie.terms = {{Svec::idx(2, 0, 0), 1.0}, {Svec::idx(2, 1, 1), -1.0}};
    Equality pin;
    pin.terms = {{Svec::idx(2, 1, 0), 1.0}};
    pin.rhs = M_SQRT2;
    prog.equalities = {tie, pin};
    const SolverResult res = solve(prog);
    REQUIRE(res.status == SolveStatus::Solved);
    CHECK(std::abs(res.v[Svec::idx(2, 0, 0)] - 1.0) <= 1e-6);
}

TEST_CASE("project_psd clips eigenvalues") {
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 0.0, 0.0, -1.0;
    const Eigen::MatrixXd P = project_psd(A);
    CHECK(std::abs(P(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(P(1, 1)) < 1e-12);
    CHECK(std::abs(P(0, 1)) < 1e-12);
}

TEST_CASE("project_psd is the identity on the cone") {
    Rng rng(8);
    Eigen::MatrixXd G(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) G(i, j) = rng.normal();
    const Eigen::MatrixXd psd = G * G.transpose();
    CHECK((project_psd(psd) - psd).cwiseAbs().maxCoeff() < 1e-12 * psd.norm());
}

TEST_CASE("project_psd satisfies the projection optimality conditions") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd A(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) A(i, j) = rng.normal();
        A = Eigen::MatrixXd(0.5 * (A + A.transpose()));
        const Eigen::MatrixXd P = project_psd(A);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
        const double inner = ((A - P).transpose() * P).trace();
        CHECK(std::abs(inner) <= 1e-9 * (1.0 + A.squaredNorm()));
    }
}

TEST_CASE("project_psd is nonexpansive") {
    Rng rng(34);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd A(5, 5), B(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                A(i, j) = rng.normal();
                B(i, j) = rng.normal();
            }
        A = Eigen::MatrixXd(0.5 * (A + A.transpose()));
        B = Eigen::MatrixXd(0.5 * (B + B.transpose()));
        const double lhs = (project_psd(A) - project_psd(B)).norm();
        CHECK(lhs <= (A - B).norm() + 1e-9);
    }
}

TEST_CASE("solver is deterministic") {
    SolverConfig cfg;
    cfg.max_iter = 123;
    const ConicProgram prog = corner_program();
    const SolverResult a = solve(prog, cfg);
    const SolverResult b = solve(prog, cfg);
    REQUIRE(a.v.size() == b.v.size());
    for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("solved iterates lie in the cone") {
    const SolverResult res = solve(corner_program());
    Eigen::MatrixXd S(2, 2);
    S(0, 0) = res.v[0];
    S(1, 0) = S(0, 1) = res.v[1] * M_SQRT1_2;
    S(1, 1) = res.v[2];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
}

TEST_CASE("single-atom dual value matches the amplitude and the primal") {
    const int n = 8;
    const Observation obs = single_atom_observation(n, 2.0, M_PI / 3.0, 0.3123);
    const BuiltProblem dual = build_global_dual(n, obs);
    const SolverResult rd = solve(dual.program);
    REQUIRE(rd.status == SolveStatus::Solved);
    CHECK(std::abs(reported_value(dual, rd.objective) - 2.0) <= 1e-4);

    const BuiltProblem primal = build_primal_sdp(n, obs);
    const SolverResult rp = solve(primal.program);
    REQUIRE(rp.status == SolveStatus::Solved);
    CHECK(std::abs(reported_value(primal, rp.objective) - reported_value(dual, rd.objective)) <=
          1e-4);
}

TEST_CASE("residuals of a solved pair are small") {
    const ConicProgram prog = corner_program();
    const SolverResult res = solve(prog);
    const ResidualReport rep = residuals(prog, res.v, res.y);
    CHECK(rep.primal <= 1e-6 * 2.0);
    CHECK(rep.dual <= 1e-6 * 2.0);
    CHECK(rep.gap <= 1e-5);
}

TEST_CASE("residuals of the zero point equal the rhs norm") {
    const ConicProgram prog = corner_program();
    const std::vector<double> v(static_cast<std::size_t>(prog.num_vars), 0.0);
    const std::vector<double> y(prog.equalities.size(), 0.0);
    const ResidualReport rep = residuals(prog, v, y);
    CHECK(rep.primal == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("residual response to a coordinate perturbation is Lipschitz") {
    const ConicProgram prog = corner_program();
    const SolverResult res = solve(prog);
    std::vector<double> v = res.v;
    const double delta = 1e-3;
    v[Svec::idx(2, 0, 0)] += delta;  // touched by one unit-coefficient row
    const ResidualReport rep = residuals(prog, v, res.y);
    CHECK(rep.primal <= residuals(prog, res.v, res.y).primal + delta + 1e-12);
}

TEST_CASE("inconsistent equalities are flagged") {
    ConicProgram prog;
    prog.add_free_block(2);
    prog.objective.assign(2, 0.0);
    Equality a;
    a.terms = {{0, 1.0}};
    a.rhs = 0.0;
    Equality b;
    b.terms = {{0, 1.0}};
    b.rhs = 1.0;
    prog.equalities = {a, b};
    const SolverResult res = solve(prog);
    CHECK(res.status == SolveStatus::InfeasibleLikely);
}
