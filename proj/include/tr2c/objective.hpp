#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tr2c {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sliding-window temporal graph: w_ij = 1 iff |i - j| <= s/2.
// The Laplacian is L = Diag(W 1) - W; diagonal self-loops are kept in W
// (they add 1 to each degree and cancel against the diagonal of W in L).
struct TemporalGraph {
    int n = 0;
    int window = 2;  // s, even

    Matrix affinity() const;   // dense W, for tests and small problems
    Matrix laplacian() const;  // dense L

    // Z L without forming L, O(N * s * d)
    Matrix apply_laplacian(const Matrix& z) const;
};

TemporalGraph temporal_laplacian(int n, int window);

struct CodingConfig {
    double epsilon = 0.1;
    double lambda1 = 0.1;
    double lambda2 = 12.0;
    bool enable_rho = true;
    bool enable_rho_c = true;
    bool enable_temporal = true;
};

// Which Gram side to factor in logdet(I + a Z Z^T) = logdet(I + a Z^T Z).
enum class GramSide { Auto, Left, Right };  // Left: d x d, Right: N x N

// 1/2 logdet(I + (d / (N eps^2)) Z Z^T), factoring the smaller Gram side.
double coding_rate(const Matrix& z, double epsilon, GramSide side = GramSide::Auto);

// sum_j (n_j / 2N) logdet(I + (d / (n_j eps^2)) Z_j Z_j^T) over label classes.
double class_coding_rate(const Matrix& z, const std::vector<int>& labels, int k, double epsilon);

// (1/N) sum_j logdet(I + (d / eps^2) Z Diag(Gamma_j) Z^T)
double relaxed_class_coding_rate(const Matrix& z, const Matrix& gamma, double epsilon);

// tr(Z L Z^T)
double temporal_regularizer(const Matrix& z, const TemporalGraph& g);

struct LossTerms {
    double rho = 0.0;    // coding rate of Z
    double rho_c = 0.0;  // relaxed class rate given Gamma
    double reg = 0.0;    // temporal regularizer
    double total = 0.0;  // -[g0] rho + lambda1 [g1] rho_c + lambda2 [g2] reg
};

LossTerms total_loss(const Matrix& z, const Matrix& gamma, const TemporalGraph& g,
                     const CodingConfig& cfg);

struct LossAdjoints {
    LossTerms terms;
    Matrix d_z;      // d x N
    Matrix d_gamma;  // N x N
};

// Analytic gradients of total_loss with respect to Z and Gamma:
//   d rho / dZ        = a (I + a Z Z^T)^-1 Z,              a = d / (N eps^2)
//   d rho_c / dZ      = sum_j (2b/N) M_j^-1 Z Diag(Gamma_j), b = d / eps^2,
//                       M_j = I + b Z Diag(Gamma_j) Z^T
//   d rho_c / dG_ij   = (b/N) z_i^T M_j^-1 z_i
//   d reg / dZ        = 2 Z L
LossAdjoints loss_adjoints(const Matrix& z, const Matrix& gamma, const TemporalGraph& g,
                           const CodingConfig& cfg);

}  // namespace tr2c
