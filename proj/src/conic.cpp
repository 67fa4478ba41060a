#include "blockspec/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace blockspec {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

/// Accumulates coefficients per coordinate so that algebraically canceling
/// contributions (e.g. the k = 0 cross terms) drop out of the stored row.
class RowBuilder {
public:
    void add(int idx, double coeff) {
        if (coeff != 0.0) acc_[idx] += coeff;
    }
    void add(const std::vector<std::pair<int, double>>& terms, double scale, int offset) {
        for (const auto& [i, c] : terms) add(offset + i, scale * c);
    }
    Equality finish(double rhs) {
        Equality eq;
        eq.rhs = rhs;
        eq.terms.reserve(acc_.size());
        for (const auto& [i, c] : acc_)
            if (c != 0.0) eq.terms.emplace_back(i, c);
        return eq;
    }

private:
    std::map<int, double> acc_;
};

}  // namespace

int ConicProgram::add_psd_block(int real_side, int complex_side) {
    ConeBlock b;
    b.kind = ConeBlock::Kind::Psd;
    b.side = real_side;
    b.complex_side = complex_side;
    b.offset = num_vars;
    b.dim = Svec::dim(real_side);
    num_vars += b.dim;
    cones.push_back(b);
    return static_cast<int>(cones.size()) - 1;
}

int ConicProgram::add_free_block(int len) {
    ConeBlock b;
    b.kind = ConeBlock::Kind::Free;
    b.side = len;
    b.complex_side = 0;
    b.offset = num_vars;
    b.dim = len;
    num_vars += len;
    cones.push_back(b);
    return static_cast<int>(cones.size()) - 1;
}

void ConicProgram::validate() const {
    int expect = 0;
    for (const auto& b : cones) {
        if (b.offset != expect) throw std::logic_error("ConicProgram: block offsets must be contiguous");
        if (b.kind == ConeBlock::Kind::Psd) {
            if (b.side < 1 || b.dim != Svec::dim(b.side))
                throw std::logic_error("ConicProgram: PSD block dim mismatch");
            if (b.complex_side != 0 && b.side != 2 * b.complex_side)
                throw std::logic_error("ConicProgram: embedded block side must be twice the complex side");
        } else if (b.dim != b.side || b.dim < 1) {
            throw std::logic_error("ConicProgram: free block dim mismatch");
        }
        expect += b.dim;
    }
    if (expect != num_vars) throw std::logic_error("ConicProgram: blocks must partition the variables");
    if (static_cast<int>(objective.size()) != num_vars)
        throw std::logic_error("ConicProgram: objective length mismatch");
    for (const auto& eq : equalities)
        for (const auto& [i, c] : eq.terms) {
            (void)c;
            if (i < 0 || i >= num_vars) throw std::logic_error("ConicProgram: row index out of range");
        }
}

HermitianEmbedding::HermitianEmbedding(int complex_side) : d_(complex_side) {
    if (d_ < 1) throw std::invalid_argument("HermitianEmbedding: side must be >= 1");
}

std::vector<std::pair<int, double>> HermitianEmbedding::re_entry(int i, int j) const {
    const int D = 2 * d_;
    if (i < j || j < 0 || i >= d_) throw std::out_of_range("HermitianEmbedding::re_entry");
    if (i == j)
        return {{Svec::idx(D, i, i), 0.5}, {Svec::idx(D, d_ + i, d_ + i), 0.5}};
    return {{Svec::idx(D, i, j), 0.5 * kInvSqrt2},
            {Svec::idx(D, d_ + i, d_ + j), 0.5 * kInvSqrt2}};
}

std::vector<std::pair<int, double>> HermitianEmbedding::im_entry(int i, int j) const {
    const int D = 2 * d_;
    if (i < j || j < 0 || i >= d_) throw std::out_of_range("HermitianEmbedding::im_entry");
    if (i == j) return {{Svec::idx(D, d_ + i, i), kInvSqrt2}};
    return {{Svec::idx(D, d_ + i, j), 0.5 * kInvSqrt2},
            {Svec::idx(D, d_ + j, i), -0.5 * kInvSqrt2}};
}

Eigen::MatrixXd HermitianEmbedding::embed(const Eigen::MatrixXcd& M) {
    const int d = static_cast<int>(M.rows());
    if (M.cols() != d) throw std::invalid_argument("embed: matrix must be square");
    Eigen::MatrixXd E(2 * d, 2 * d);
    E.topLeftCorner(d, d) = M.real();
    E.bottomRightCorner(d, d) = M.real();
    E.topRightCorner(d, d) = -M.imag();
    E.bottomLeftCorner(d, d) = M.imag();
    return E;
}

void HermitianEmbedding::pack(const Eigen::MatrixXcd& M, double* block) const {
    if (M.rows() != d_ || M.cols() != d_) throw std::invalid_argument("pack: size mismatch");
    const Eigen::MatrixXd E = embed(M);
    const int D = 2 * d_;
    for (int c = 0; c < D; ++c)
        for (int r = c; r < D; ++r)
            block[Svec::idx(D, r, c)] = (r == c) ? E(r, c) : std::sqrt(2.0) * E(r, c);
}

Eigen::MatrixXcd HermitianEmbedding::unpack(const double* block, double* max_asym) const {
    const int D = 2 * d_;
    auto at = [&](int r, int c) {
        if (r < c) std::swap(r, c);
        const double v = block[Svec::idx(D, r, c)];
        return (r == c) ? v : v * kInvSqrt2;
    };
    double asym = 0.0;
    Eigen::MatrixXcd M(d_, d_);
    for (int j = 0; j < d_; ++j) {
        for (int i = j; i < d_; ++i) {
            const double re_a = at(i, j);
            const double re_d = at(d_ + i, d_ + j);
            const double re = 0.5 * (re_a + re_d);
            asym = std::max(asym, std::abs(re_a - re_d));
            double im = 0.0;
            if (i == j) {
                asym = std::max(asym, std::abs(at(d_ + i, i)));
            } else {
                const double c1 = at(d_ + i, j);
                const double c2 = at(d_ + j, i);
                im = 0.5 * (c1 - c2);
                asym = std::max(asym, std::abs(c1 + c2));
            }
            M(i, j) = cplx(re, im);
            M(j, i) = std::conj(M(i, j));
        }
    }
    if (max_asym != nullptr) *max_asym = asym;
    return M;
}

const char* to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::BlockDual: return "BLOCK_DUAL";
        case ProblemKind::GlobalDual: return "GLOBAL_DUAL";
        case ProblemKind::Primal: return "PRIMAL";
    }
    return "?";
}

int VariableLayout::q_re(int l) const { return q_free_offset + 2 * l; }
int VariableLayout::q_im(int l) const { return q_free_offset + 2 * l + 1; }

namespace {

/// Adds coefficients reading Re/Im of tr[Theta_j Q2] into a row. Negative j
/// resolves through Hermitian symmetry, j beyond the last diagonal vanishes.
void accumulate_q2_trace(RowBuilder& rb, const HermitianEmbedding& emb, int offset, int side,
                         int j, double coeff_re, double coeff_im) {
    if (j < 0) {
        accumulate_q2_trace(rb, emb, offset, side, -j, coeff_re, -coeff_im);
        return;
    }
    if (j > side - 1) return;
    for (int i = 0; i + j < side; ++i) {
        rb.add(emb.re_entry(i + j, i), coeff_re, offset);
        rb.add(emb.im_entry(i + j, i), coeff_im, offset);
    }
}

struct CertRowContext {
    const HermitianEmbedding& emb_b;  // bordered block, complex side n+1
    int off_b;
    const HermitianEmbedding* emb_2;  // null for the global dual
    int off_2;
    int n;
    cplx d1;     // already divided by d_scale
    double d0;   // already divided by d_scale
};

void add_l_rows(ConicProgram& prog, const CertRowContext& ctx) {
    const int q2_side = ctx.n - 1;
    for (int k = 0; k < ctx.n; ++k) {
        {
            RowBuilder rb;
            for (int i = 0; i + k < ctx.n; ++i) rb.add(ctx.emb_b.re_entry(i + k, i), 1.0, ctx.off_b);
            if (ctx.emb_2 != nullptr) {
                // Re(d1 t_{k-1}) + d0 Re(t_k) + Re(conj(d1) t_{k+1})
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k - 1, ctx.d1.real(),
                                    -ctx.d1.imag());
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k, ctx.d0, 0.0);
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k + 1, ctx.d1.real(),
                                    ctx.d1.imag());
            }
            prog.equalities.push_back(rb.finish(k == 0 ? 1.0 : 0.0));
        }
        {
            RowBuilder rb;
            for (int i = 0; i + k < ctx.n; ++i) rb.add(ctx.emb_b.im_entry(i + k, i), 1.0, ctx.off_b);
            if (ctx.emb_2 != nullptr) {
                // Im(d1 t_{k-1}) + d0 Im(t_k) + Im(conj(d1) t_{k+1})
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k - 1, ctx.d1.imag(),
                                    ctx.d1.real());
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k, 0.0, ctx.d0);
                accumulate_q2_trace(rb, *ctx.emb_2, ctx.off_2, q2_side, k + 1, -ctx.d1.imag(),
                                    ctx.d1.real());
            }
            prog.equalities.push_back(rb.finish(0.0));
        }
    }
}

void add_corner_pin(ConicProgram& prog, const HermitianEmbedding& emb_b, int off_b, int n) {
    RowBuilder rb;
    rb.add(emb_b.re_entry(n, n), 1.0, off_b);
    prog.equalities.push_back(rb.finish(1.0));
}

/// Ties the border row of a certificate block to the shared free q variables.
/// B(n, l) holds conj(q_l).
void add_border_ties(ConicProgram& prog, const VariableLayout& lay, const HermitianEmbedding& emb_b,
                     int off_b, int n) {
    for (int l = 0; l < n; ++l) {
        {
            RowBuilder rb;
            rb.add(emb_b.re_entry(n, l), 1.0, off_b);
            rb.add(lay.q_re(l), -1.0);
            prog.equalities.push_back(rb.finish(0.0));
        }
        {
            RowBuilder rb;
            rb.add(emb_b.im_entry(n, l), 1.0, off_b);
            rb.add(lay.q_im(l), 1.0);
            prog.equalities.push_back(rb.finish(0.0));
        }
    }
}

void add_zero_pins(ConicProgram& prog, const VariableLayout& lay, const Observation& obs) {
    std::size_t next = 0;
    for (int l = 0; l < lay.n; ++l) {
        if (next < obs.sample_set.observed.size() && obs.sample_set.observed[next] == l) {
            ++next;
            continue;
        }
        RowBuilder re;
        re.add(lay.q_re(l), 1.0);
        prog.equalities.push_back(re.finish(0.0));
        RowBuilder im;
        im.add(lay.q_im(l), 1.0);
        prog.equalities.push_back(im.finish(0.0));
    }
}

void set_dual_objective(ConicProgram& prog, const VariableLayout& lay, const Observation& obs) {
    prog.objective.assign(prog.num_vars, 0.0);
    for (std::size_t j = 0; j < obs.values.size(); ++j) {
        const int l = obs.sample_set.observed[j];
        // Re <q_M, x_M> = sum Re(q_l) Re(x_l) + Im(q_l) Im(x_l)
        prog.objective[static_cast<std::size_t>(lay.q_re(l))] = obs.values[j].real();
        prog.objective[static_cast<std::size_t>(lay.q_im(l))] = obs.values[j].imag();
    }
}

void check_dual_inputs(int n, const Observation& observation) {
    if (n < 2) throw std::invalid_argument("builder: n must be >= 2");
    if (observation.sample_set.n != n)
        throw std::invalid_argument("builder: observation sample grid does not match n");
    if (observation.values.empty()) throw std::invalid_argument("builder: empty observation");
}

}  // namespace

BuiltProblem build_block_dual(int n, const Observation& observation, const BlockPrior& prior) {
    check_dual_inputs(n, observation);
    BuiltProblem built;
    auto& prog = built.program;
    auto& lay = built.layout;
    lay.n = n;
    lay.q_free_block = prog.add_free_block(2 * n);
    lay.q_free_offset = prog.cones[static_cast<std::size_t>(lay.q_free_block)].offset;

    for (int b = 0; b < prior.band_count(); ++b) {
        for (const AngleBand& ab : band_to_angles(prior.bands[static_cast<std::size_t>(b)])) {
            const DCoefficients d = d_coeffs(ab);
            BandCertificate cert{ab, 0, 0, 1.0, b};
            cert.bordered_block = prog.add_psd_block(2 * (n + 1), n + 1);
            cert.q2_block = prog.add_psd_block(2 * (n - 1), n - 1);
            cert.d_scale = std::max({1.0, std::abs(d.d0), std::abs(d.d1)});
            lay.certs.push_back(cert);
        }
    }
    set_dual_objective(prog, lay, observation);
    add_zero_pins(prog, lay, observation);

    const HermitianEmbedding emb_b(n + 1);
    const HermitianEmbedding emb_2(n - 1);
    for (const auto& cert : lay.certs) {
        const DCoefficients d = d_coeffs(cert.aband);
        CertRowContext ctx{emb_b,
                           prog.cones[static_cast<std::size_t>(cert.bordered_block)].offset,
                           &emb_2,
                           prog.cones[static_cast<std::size_t>(cert.q2_block)].offset,
                           n,
                           d.d1 / cert.d_scale,
                           d.d0 / cert.d_scale};
        add_l_rows(prog, ctx);
        add_corner_pin(prog, emb_b, ctx.off_b, n);
        add_border_ties(prog, lay, emb_b, ctx.off_b, n);
    }
    built.meta = ProblemMeta{ProblemKind::BlockDual, n,
                             static_cast<int>(observation.values.size()), prior.bands};
    prog.validate();
    return built;
}

BuiltProblem build_global_dual(int n, const Observation& observation) {
    check_dual_inputs(n, observation);
    BuiltProblem built;
    auto& prog = built.program;
    auto& lay = built.layout;
    lay.n = n;
    lay.q_free_block = prog.add_free_block(2 * n);
    lay.q_free_offset = prog.cones[static_cast<std::size_t>(lay.q_free_block)].offset;

    BandCertificate cert{AngleBand(-3.141592653589793, 3.141592653589793), 0, -1, 1.0, 0};
    cert.bordered_block = prog.add_psd_block(2 * (n + 1), n + 1);
    lay.certs.push_back(cert);

    set_dual_objective(prog, lay, observation);
    add_zero_pins(prog, lay, observation);

    const HermitianEmbedding emb_b(n + 1);
    const int off_b = prog.cones[static_cast<std::size_t>(cert.bordered_block)].offset;
    CertRowContext ctx{emb_b, off_b, nullptr, 0, n, cplx{0.0, 0.0}, 0.0};
    add_l_rows(prog, ctx);
    add_corner_pin(prog, emb_b, off_b, n);
    add_border_ties(prog, lay, emb_b, off_b, n);

    built.meta =
        ProblemMeta{ProblemKind::GlobalDual, n, static_cast<int>(observation.values.size()), {}};
    prog.validate();
    return built;
}

BuiltProblem build_primal_sdp(int n, const Observation& observation) {
    check_dual_inputs(n, observation);
    BuiltProblem built;
    auto& prog = built.program;
    auto& lay = built.layout;
    lay.n = n;
    lay.primal_block = prog.add_psd_block(2 * (n + 1), n + 1);
    const int off = prog.cones[0].offset;
    const HermitianEmbedding emb(n + 1);

    // maximize -(Tr(T)/(2n) + t/2)
    {
        RowBuilder rb;
        for (int i = 0; i < n; ++i) rb.add(emb.re_entry(i, i), -1.0 / (2.0 * n), off);
        rb.add(emb.re_entry(n, n), -0.5, off);
        prog.objective.assign(prog.num_vars, 0.0);
        for (const auto& [idx, c] : rb.finish(0.0).terms)
            prog.objective[static_cast<std::size_t>(idx)] = c;
    }
    // Toeplitz structure: entries along each diagonal of T agree.
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i + k + 1 < n; ++i) {
            {
                RowBuilder rb;
                rb.add(emb.re_entry(i + k, i), 1.0, off);
                rb.add(emb.re_entry(i + k + 1, i + 1), -1.0, off);
                prog.equalities.push_back(rb.finish(0.0));
            }
            if (k >= 1) {
                RowBuilder rb;
                rb.add(emb.im_entry(i + k, i), 1.0, off);
                rb.add(emb.im_entry(i + k + 1, i + 1), -1.0, off);
                prog.equalities.push_back(rb.finish(0.0));
            }
        }
    }
    // Interpolation pins on the observed set; the border row holds conj(xhat).
    for (std::size_t j = 0; j < observation.values.size(); ++j) {
        const int l = observation.sample_set.observed[j];
        {
            RowBuilder rb;
            rb.add(emb.re_entry(n, l), 1.0, off);
            prog.equalities.push_back(rb.finish(observation.values[j].real()));
        }
        {
            RowBuilder rb;
            rb.add(emb.im_entry(n, l), 1.0, off);
            prog.equalities.push_back(rb.finish(-observation.values[j].imag()));
        }
    }
    built.meta =
        ProblemMeta{ProblemKind::Primal, n, static_cast<int>(observation.values.size()), {}};
    prog.validate();
    return built;
}

ExtractedSolution extract_solution(const BuiltProblem& built, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != built.program.num_vars)
        throw std::invalid_argument("extract_solution: iterate length mismatch");
    const int n = built.layout.n;
    ExtractedSolution out;
    double asym = 0.0;

    if (built.meta.kind == ProblemKind::Primal) {
        const HermitianEmbedding emb(n + 1);
        const auto& blk = built.program.cones[static_cast<std::size_t>(built.layout.primal_block)];
        double a = 0.0;
        const Eigen::MatrixXcd B = emb.unpack(v.data() + blk.offset, &a);
        asym = std::max(asym, a);
        out.T = B.topLeftCorner(n, n);
        out.xhat.resize(static_cast<std::size_t>(n));
        for (int l = 0; l < n; ++l) out.xhat[static_cast<std::size_t>(l)] = B(l, n);
        out.t = B(n, n).real();
    } else {
        out.q.resize(static_cast<std::size_t>(n));
        for (int l = 0; l < n; ++l)
            out.q[static_cast<std::size_t>(l)] =
                cplx(v[static_cast<std::size_t>(built.layout.q_re(l))],
                     v[static_cast<std::size_t>(built.layout.q_im(l))]);
        const HermitianEmbedding emb_b(n + 1);
        const HermitianEmbedding emb_2(n - 1);
        for (const auto& cert : built.layout.certs) {
            const auto& bblk = built.program.cones[static_cast<std::size_t>(cert.bordered_block)];
            double a = 0.0;
            const Eigen::MatrixXcd B = emb_b.unpack(v.data() + bblk.offset, &a);
            asym = std::max(asym, a);
            GramPair pair;
            pair.Q1 = B.topLeftCorner(n, n);
            if (cert.q2_block >= 0) {
                const auto& qblk = built.program.cones[static_cast<std::size_t>(cert.q2_block)];
                pair.Q2 = emb_2.unpack(v.data() + qblk.offset, &a) / cert.d_scale;
                asym = std::max(asym, a);
            } else {
                pair.Q2 = Eigen::MatrixXcd::Zero(n - 1, n - 1);
            }
            out.pairs.push_back(std::move(pair));
        }
    }
    out.max_embedding_asym = asym;
    if (asym > 1e-7)
        throw std::runtime_error("extract_solution: embedding copies disagree beyond 1e-7");
    return out;
}

double reported_value(const BuiltProblem& built, double objective_value) {
    return built.meta.kind == ProblemKind::Primal ? -objective_value : objective_value;
}

void dump_program(const ConicProgram& program, std::ostream& os) {
    char buf[64];
    os << program.num_vars << ' ' << program.equalities.size() << ' ' << program.cones.size()
       << '\n';
    for (const auto& b : program.cones)
        os << (b.kind == ConeBlock::Kind::Psd ? "PSD " : "FREE ") << b.side << '\n';
    for (std::size_t r = 0; r < program.equalities.size(); ++r) {
        for (const auto& [c, val] : program.equalities[r].terms) {
            std::snprintf(buf, sizeof buf, "%.17g", val);
            os << r << ' ' << c << ' ' << buf << '\n';
        }
    }
    os << "rhs";
    for (const auto& eq : program.equalities) {
        std::snprintf(buf, sizeof buf, "%.17g", eq.rhs);
        os << ' ' << buf;
    }
    os << '\n';
}

}  // namespace blockspec
