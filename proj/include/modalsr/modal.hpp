// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/geometry.hpp"
#include "modalsr/propagation.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace modalsr {

/// Thin SVD of a transfer matrix, H = U diag(sigma) V^H, optionally truncated
/// to the K strongest modes.
struct ModalBasis {
    Eigen::MatrixXcd U;     ///< M x r microphone modes
    Eigen::VectorXd sigma;  ///< r singular values, descending
    Eigen::MatrixXcd V;     ///< N x r field modes
    Eigen::Index K = 0;     ///< truncation rank (K == r after svd_decompose)
    double frequency_hz = 0.0;
    /// [begin, end) runs of singular values equal within 1e-8 relative. Column
    /// identity inside a run is arbitrary; compare such modes as subspaces.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_clusters;

    Eigen::Index rank() const noexcept { return sigma.size(); }
};

inline constexpr double kDegeneracyTolerance = 1e-8;
inline constexpr double kSigmaFloor = 1e-6; ///< relative to sigma_1

ModalBasis svd_decompose(const TransferMatrix& H);

/// Keeps the first K modes.
ModalBasis truncate(const ModalBasis& basis, Eigen::Index K);

/// Whitened sparse-recovery problem: observations = Sigma_K^-1 U_K^H y and
/// dictionary = V_K^H, so noiseless y = H x maps to observations = dictionary x.
struct WhitenedProblem {
    Eigen::MatrixXcd observations; ///< K x T
    Eigen::MatrixXcd dictionary;   ///< K x N, orthonormal rows
};

WhitenedProblem whiten(const ModalBasis& basis, const Eigen::MatrixXcd& y);

/// Real spherical harmonics up to `order` sampled on the grid, with columns
/// orthonormalized under the plain discrete inner product (QR, positive R diagonal).
/// Column ordering is (n, m) with n ascending and m = -n..n.
struct SHBasis {
    int order = 0;
    Eigen::MatrixXd matrix; ///< N x (order+1)^2
};

inline constexpr int kMaxShOrder = 6;

/// Unnormalized real SH value; helper for tests and sh_matrix.
double real_spherical_harmonic(int n, int m, const Vec3& direction);

SHBasis sh_matrix(const DirectionGrid& grid, int order);

/// Principal angles (radians, ascending) between the column spans of two
/// N x d matrices with orthonormal columns.
std::vector<double> principal_angles(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B);

/// Mean principal angle in degrees.
double mean_principal_angle(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B);

struct NamedArray {
    std::string name;
    MicArray array;
};

struct AngleSweepRow {
    std::string array;
    double frequency_hz = 0.0;
    Eigen::Index K = 0;
    double mean_angle_deg = 0.0;
};

/// Mean principal angle between V_K of each array's plane-wave operator and
/// the SH subspace of matching dimension; K must be a perfect square.
std::vector<AngleSweepRow> angle_sweep(const std::vector<NamedArray>& arrays, const DirectionGrid& grid,
                                       const std::vector<double>& frequencies_hz,
                                       const std::vector<Eigen::Index>& K_list);

/// Directivity index (dB) of the beamformer `weights` (1 x M) applied to the
/// plane-wave operator, normalized at `steer_index`, with uniform quadrature.
double directivity_from_weights(const Eigen::RowVectorXcd& weights, const TransferMatrix& H,
                                std::size_t steer_index);

/// Directivity index of the rank-K matched-field beamformer: the row of the
/// truncated pseudoinverse V_K Sigma_K^-1 U_K^H that estimates the grid
/// vertex nearest to `steering`.
double directivity_index(const TransferMatrix& H, Eigen::Index K, const DirectionGrid& grid, const Vec3& steering);

} // namespace modalsr
