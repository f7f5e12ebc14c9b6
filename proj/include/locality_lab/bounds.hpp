#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "locality_lab/locality_graph.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

enum class DeltaSource { graphical, diagonal_dominant };

std::string to_string(DeltaSource s);

struct DeltaBound {
  double value = 0.0;
  DeltaSource source = DeltaSource::graphical;
  // graphical inputs
  double S = 0.0;
  int nu = 0;
  double m = 0.0;
  double M = 0.0;
  double kappa = 0.0;
  // diagonal-dominant inputs
  double c = 0.0;
  Index worst_row = 0;
  Matrix dominance;
};

// delta = S nu! kappa^nu / m with kappa = M / m.
DeltaBound delta_graphical(double S, int nu, double m, double M);

// c = min_i (M_ii - sum_{j != i} M_ij), delta = 1 / c. The same c is a
// strong log-concavity constant of the model.
DeltaBound delta_diag_dominant(const Matrix& dominance);

// Gershgorin lower bound for the smallest eigenvalue of the symmetrized
// comparison matrix (diagonal M_ii, off-diagonal -(M_ij + M_ji)/2).
double gershgorin_lower_bound(const Matrix& dominance);

// M_ii = min_x lambda_min(-H_ii(x)), M_ij = max_x ||H_ij(x)||.
Matrix dominance_matrix_from_model(const BlockedDensityModel& model, const Matrix& probe_points);

// P(Poisson(tM) >= distance); 0 for an infinite distance.
double diffusion_decay_bound(HopDistance distance, double t, double M);
double diffusion_decay_bound(Index distance, double t, double M);

using MatrixPath = std::function<Matrix(double)>;

struct DiffusionLemmaReport {
  // min over checked (t, i, j) of bound + slack - ||G_t(i,j)||
  double worst_margin = 0.0;
  // same without the discretization slack
  double raw_margin = 0.0;
  double slack = 0.0;
  double worst_time = 0.0;
  Index worst_i = 0;
  Index worst_j = 0;
  Index checks = 0;
  bool ok = false;
};

// Integrates dG/dt = -H_t G with RK4 from G_0 = I and checks every block of
// G_t against the Poisson tail of the graph distance. Every H_t evaluated
// must be symmetric, supported on the graph, and satisfy 0 <= H_t <= M I.
DiffusionLemmaReport verify_diffusion_lemma(const MatrixPath& h_path, const BlockStructure& blocks,
                                            const DependencyGraph& graph, double M, double t_max, double dt,
                                            Index check_every = 10);

// Symmetric time-varying H_t on a banded scalar graph with spectrum in
// [0, M]: weighted Laplacian-type bond terms plus a nonnegative diagonal.
MatrixPath random_banded_h_path(Index n, Index bandwidth, double M, std::uint64_t seed);

struct LiSeriesCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
  bool integer_t = false;
};

// lhs = sum_{k>=1} k^t (1-x)^k, rhs = 2 Gamma(t+1) x^{-t-1} (1-x), the
// factor 2 dropped for integer t. ok = lhs <= rhs (1e-12 relative).
LiSeriesCheck li_series_bound_check(double t, double x);

struct InfNormDecayReport {
  double c = 0.0;
  double worst_margin = 0.0;
  double raw_margin = 0.0;
  double slack = 0.0;
  Index checks = 0;
  bool ok = false;
};

// Integrates dG/dt = -M G and checks ||G_t||_inf <= e^{-ct} ||G_0||_inf.
// dt defaults to 0.01 / max_i M_ii.
InfNormDecayReport verify_inf_norm_decay(const Matrix& m_matrix, const Matrix& g0, double t_max,
                                         double dt = 0.0, Index check_every = 10);

// Random c-dominant Z-matrix (nonpositive off-diagonals) on b vertices.
Matrix random_dominant_z_matrix(Index b, double c, std::uint64_t seed, bool symmetric = false);

struct SqrtRowDecayCheck {
  double max_row_sum = 0.0;
  double bound = 0.0;
  double m = 0.0;
  double M = 0.0;
  bool ok = false;
};

// max_j sum_k ||C^{1/2}(j,k)|| against m^{-1/2} S nu! kappa^nu. When m or M
// are given (> 0) the precision spectrum must lie inside [m, M].
SqrtRowDecayCheck sqrt_row_decay_check(const GaussianModel& gauss, double S, int nu, double m = 0.0,
                                       double M = 0.0);

}  // namespace locality_lab
