#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "blockspec/signal.hpp"
#include "blockspec/trigpoly.hpp"

namespace blockspec {

/// One cone in the variable product. PSD blocks hold the lower triangle of a
/// real symmetric side x side matrix, column-major, off-diagonal entries
/// scaled by sqrt(2) (isometric svec). complex_side > 0 marks a block that
/// embeds a Hermitian complex matrix as [[Re, -Im],[Im, Re]].
struct ConeBlock {
    enum class Kind { Psd, Free };
    Kind kind;
    int side;          // matrix side (Psd) or vector length (Free)
    int complex_side;  // 0 for plain blocks
    int offset;        // first coordinate in v
    int dim;           // number of real coordinates owned
};

struct Equality {
    std::vector<std::pair<int, double>> terms;  // (coordinate, coefficient)
    double rhs = 0.0;
};

/// Standard-form conic problem: maximize objective . v subject to the
/// equalities, with v constrained to the cone product.
struct ConicProgram {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<Equality> equalities;
    std::vector<ConeBlock> cones;

    int add_psd_block(int real_side, int complex_side = 0);
    int add_free_block(int len);

    /// Structural invariants: blocks partition [0, num_vars), rows in range.
    void validate() const;
};

/// svec bookkeeping for the lower triangle of a side x side symmetric matrix.
struct Svec {
    static int dim(int side) { return side * (side + 1) / 2; }
    /// Position of entry (r, c), r >= c, column-major within the triangle.
    static int idx(int side, int r, int c) { return c * side - c * (c - 1) / 2 + (r - c); }
};

/// Coordinate maps for a Hermitian d x d matrix stored through its real
/// 2d x 2d embedding. Reads average the two Re copies and antisymmetrize the
/// Im copies, so constraint rows see a well-defined Hermitian value even
/// before the solver has equalized the copies.
class HermitianEmbedding {
public:
    explicit HermitianEmbedding(int complex_side);

    int complex_side() const { return d_; }
    int real_side() const { return 2 * d_; }
    int dim() const { return Svec::dim(2 * d_); }

    /// svec coordinates (relative to block start) whose weighted sum is
    /// Re M(i, j). Requires i >= j.
    std::vector<std::pair<int, double>> re_entry(int i, int j) const;
    /// Same for Im M(i, j), i >= j. For i == j this reads the lower-left
    /// copy's diagonal, which is zero for any exact embedding.
    std::vector<std::pair<int, double>> im_entry(int i, int j) const;

    void pack(const Eigen::MatrixXcd& M, double* block) const;
    /// Reassembles M by averaging the copies; *max_asym reports the largest
    /// disagreement between them.
    Eigen::MatrixXcd unpack(const double* block, double* max_asym = nullptr) const;

    /// Dense 2d x 2d embedding of a Hermitian matrix.
    static Eigen::MatrixXd embed(const Eigen::MatrixXcd& M);

private:
    int d_;
};

enum class ProblemKind { BlockDual, GlobalDual, Primal };

const char* to_string(ProblemKind kind);

/// Per-angle-band certificate bookkeeping inside a built program.
struct BandCertificate {
    AngleBand aband;
    int bordered_block;  // cone index of [[Q1, q],[q^H, 1]]
    int q2_block;        // cone index of Q2, -1 when absent (global dual)
    double d_scale;      // assembled rows divide the D coefficients by this
    int source_band;     // index into the originating prior band list
};

struct VariableLayout {
    int n = 0;
    int q_free_block = -1;  // dual kinds: free block holding q (re, im interleaved)
    std::vector<BandCertificate> certs;
    int primal_block = -1;  // primal: block holding [[T, xhat],[xhat^H, t]]

    int q_re(int l) const;
    int q_im(int l) const;
    int q_free_offset = 0;
};

struct ProblemMeta {
    ProblemKind kind;
    int n = 0;
    int m = 0;
    std::vector<FrequencyBand> bands;
};

struct BuiltProblem {
    ConicProgram program;
    VariableLayout layout;
    ProblemMeta meta;
};

/// Named complex quantities recovered from a solver iterate.
struct ExtractedSolution {
    std::vector<cplx> q;          // dual kinds
    std::vector<GramPair> pairs;  // one per certificate, paper-scale Q2
    Eigen::MatrixXcd T;           // primal
    std::vector<cplx> xhat;       // primal
    double t = 0.0;               // primal
    double max_embedding_asym = 0.0;
};

/// Dual of the band-constrained atomic norm problem: maximize Re<q_M, x_M>
/// over q and one Gram certificate pair per angle band.
BuiltProblem build_block_dual(int n, const Observation& observation, const BlockPrior& prior);

/// No-prior dual: the single full-circle bounded-real certificate.
BuiltProblem build_global_dual(int n, const Observation& observation);

/// Primal atomic-norm SDP: minimize Tr(T)/(2n) + t/2 over Toeplitz T, xhat, t
/// with [[T, xhat],[xhat^H, t]] PSD and xhat agreeing with x on M.
/// The program stores the negated objective (maximize convention).
BuiltProblem build_primal_sdp(int n, const Observation& observation);

/// Inverts the layout on a real iterate. Throws if the two embedding copies
/// of any block disagree by more than 1e-7.
ExtractedSolution extract_solution(const BuiltProblem& built, const std::vector<double>& v);

/// Problem value in the natural sense of the source formulation
/// (negates the stored objective for the primal kind).
double reported_value(const BuiltProblem& built, double objective_value);

/// Plain-text sparse dump: header `n_vars n_eq n_cones`, one cone line each
/// (`PSD d` / `FREE d`), triplet lines `row col val`, then a final line
/// `rhs v0 v1 ...`.
void dump_program(const ConicProgram& program, std::ostream& os);

}  // namespace blockspec
