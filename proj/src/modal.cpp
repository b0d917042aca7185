// SPDX-License-Identifier: Apache-2.0
#include "modalsr/modal.hpp"

#include "modalsr/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace modalsr {

ModalBasis svd_decompose(const TransferMatrix& H) {
    if (H.entries.size() == 0)
        fail(ErrorKind::InvalidArgument, "empty transfer matrix");
    if (!H.entries.allFinite())
        fail(ErrorKind::InvalidArgument, "transfer matrix has non-finite entries");

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(H.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        fail(ErrorKind::NumericalFailure, "SVD did not converge at " + std::to_string(H.frequency_hz) + " Hz");

    ModalBasis basis;
    basis.U = svd.matrixU();
    basis.sigma = svd.singularValues();
    basis.V = svd.matrixV();
    basis.K = basis.sigma.size();
    basis.frequency_hz = H.frequency_hz;

    const Eigen::Index r = basis.sigma.size();
    for (Eigen::Index i = 0; i < r;) {
        Eigen::Index j = i + 1;
        while (j < r && basis.sigma[i] - basis.sigma[j] <= kDegeneracyTolerance * basis.sigma[i])
            ++j;
        if (j - i > 1 && basis.sigma[i] > 0.0)
            basis.degenerate_clusters.emplace_back(i, j);
        i = j;
    }
    return basis;
}

ModalBasis truncate(const ModalBasis& basis, Eigen::Index K) {
    if (K < 1 || K > basis.rank())
        fail(ErrorKind::InvalidArgument, "truncation rank " + std::to_string(K) + " outside [1, " +
                                             std::to_string(basis.rank()) + "]");
    ModalBasis out;
    out.U = basis.U.leftCols(K);
    out.sigma = basis.sigma.head(K);
    out.V = basis.V.leftCols(K);
    out.K = K;
    out.frequency_hz = basis.frequency_hz;
    for (auto [b, e] : basis.degenerate_clusters)
        if (b < K && std::min(e, K) - b > 1)
            out.degenerate_clusters.emplace_back(b, std::min(e, K));
    return out;
}

WhitenedProblem whiten(const ModalBasis& basis, const Eigen::MatrixXcd& y) {
    const Eigen::Index K = basis.K;
    if (K < 1 || K > basis.rank())
        fail(ErrorKind::InvalidArgument, "basis has no valid truncation rank");
    if (y.rows() != basis.U.rows())
        fail(ErrorKind::InvalidArgument, "observation rows (" + std::to_string(y.rows()) +
                                             ") do not match microphone count (" +
                                             std::to_string(basis.U.rows()) + ")");
    const double floor = kSigmaFloor * basis.sigma[0];
    for (Eigen::Index i = 0; i < K; ++i)
        if (!(basis.sigma[i] > floor))
            fail(ErrorKind::RankDeficiency, "mode " + std::to_string(i) + " has singular value " +
                                                std::to_string(basis.sigma[i]) + " below the whitening floor");

    WhitenedProblem out;
    const Eigen::VectorXd inv = basis.sigma.head(K).cwiseInverse();
    out.observations = inv.asDiagonal() * (basis.U.leftCols(K).adjoint() * y);
    out.dictionary = basis.V.leftCols(K).adjoint();
    return out;
}

double real_spherical_harmonic(int n, int m, const Vec3& direction) {
    const Vec3 u = direction.normalized();
    const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    const double phi = std::atan2(u.y(), u.x());
    const auto un = static_cast<unsigned>(n);
    const auto am = static_cast<unsigned>(std::abs(m));
    // std::sph_legendre is the m >= 0 complex SH at phi = 0, fully normalized
    const double p = std::sph_legendre(un, am, theta);
    if (m == 0)
        return p;
    if (m > 0)
        return std::numbers::sqrt2 * p * std::cos(m * phi);
    return std::numbers::sqrt2 * p * std::sin(-m * phi);
}

SHBasis sh_matrix(const DirectionGrid& grid, int order) {
    if (order < 0 || order > kMaxShOrder)
        fail(ErrorKind::InvalidArgument, "SH order must be in [0, " + std::to_string(kMaxShOrder) + "]");
    const Eigen::Index cols = (order + 1) * (order + 1);
    const auto N = static_cast<Eigen::Index>(grid.size());
    if (N < cols)
        fail(ErrorKind::InvalidArgument, "grid of " + std::to_string(N) + " directions cannot hold " +
                                             std::to_string(cols) + " SH columns");

    Eigen::MatrixXd A(N, cols);
    for (Eigen::Index q = 0; q < N; ++q) {
        Eigen::Index c = 0;
        for (int n = 0; n <= order; ++n)
            for (int m = -n; m <= n; ++m)
                A(q, c++) = real_spherical_harmonic(n, m, grid.directions[static_cast<std::size_t>(q)]);
    }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, cols);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < cols; ++c)
        if (R(c, c) < 0.0)
            Q.col(c) *= -1.0;

    return {order, std::move(Q)};
}

namespace {

void require_orthonormal(const Eigen::MatrixXcd& A, const char* name) {
    const Eigen::MatrixXcd gram = A.adjoint() * A;
    const double dev = (gram - Eigen::MatrixXcd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-6)
        fail(ErrorKind::InvalidArgument, std::string(name) + " columns are not orthonormal (Gram deviation " +
                                             std::to_string(dev) + ")");
}

} // namespace

std::vector<double> principal_angles(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        fail(ErrorKind::InvalidArgument, "principal angles need two N x d matrices of equal shape");
    if (A.cols() == 0)
        return {};
    require_orthonormal(A, "A");
    require_orthonormal(B, "B");

    // cos from sigma(A^H B), sin from sigma((I - A A^H) B); pairing the two
    // sorted lists gives angles accurate near 0 as well as near pi/2.
    const Eigen::MatrixXcd cross = A.adjoint() * B;
    const Eigen::MatrixXcd residual = B - A * cross;
    Eigen::JacobiSVD<Eigen::MatrixXcd> cs(cross);
    Eigen::JacobiSVD<Eigen::MatrixXcd> ss(residual);

    const Eigen::Index d = A.cols();
    std::vector<double> cosines(cs.singularValues().data(), cs.singularValues().data() + d);
    std::vector<double> sines(ss.singularValues().data(), ss.singularValues().data() + d);
    std::sort(cosines.begin(), cosines.end(), std::greater<>());
    std::sort(sines.begin(), sines.end());

    std::vector<double> angles(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < angles.size(); ++i)
        angles[i] = std::atan2(std::clamp(sines[i], 0.0, 1.0), std::clamp(cosines[i], 0.0, 1.0));
    std::sort(angles.begin(), angles.end());
    return angles;
}

double mean_principal_angle(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    const auto angles = principal_angles(A, B);
    if (angles.empty())
        return 0.0;
    double sum = 0.0;
    for (double a : angles)
        sum += a;
    return sum / static_cast<double>(angles.size()) * 180.0 / std::numbers::pi;
}

std::vector<AngleSweepRow> angle_sweep(const std::vector<NamedArray>& arrays, const DirectionGrid& grid,
                                       const std::vector<double>& frequencies_hz,
                                       const std::vector<Eigen::Index>& K_list) {
    std::map<Eigen::Index, Eigen::MatrixXcd> sh_bases;
    for (auto K : K_list) {
        const auto order = static_cast<int>(std::lround(std::sqrt(static_cast<double>(K)))) - 1;
        if (K < 1 || (order + 1) * (order + 1) != K)
            fail(ErrorKind::InvalidArgument, "K = " + std::to_string(K) + " is not a complete SH order count");
        sh_bases.emplace(K, sh_matrix(grid, order).matrix.cast<std::complex<double>>());
    }

    std::vector<AngleSweepRow> rows;
    for (const auto& [name, array] : arrays)
        for (double f : frequencies_hz) {
            const ModalBasis basis = svd_decompose(plane_wave_matrix(array, grid, f));
            for (auto K : K_list) {
                if (K > basis.rank())
                    fail(ErrorKind::InvalidArgument, "K = " + std::to_string(K) + " exceeds the rank of " + name);
                const double angle = mean_principal_angle(basis.V.leftCols(K), sh_bases.at(K));
                rows.push_back({name, f, K, angle});
            }
        }
    return rows;
}

double directivity_from_weights(const Eigen::RowVectorXcd& weights, const TransferMatrix& H,
                                std::size_t steer_index) {
    if (weights.size() != H.mics())
        fail(ErrorKind::InvalidArgument, "beamformer weight count does not match microphone count");
    const auto n0 = static_cast<Eigen::Index>(steer_index);
    if (n0 >= H.directions())
        fail(ErrorKind::InvalidArgument, "steering index out of range");

    const Eigen::RowVectorXcd response = weights * H.entries;
    const double main = std::norm(response[n0]);
    const double mean = response.cwiseAbs2().mean();
    if (!(main > 0.0) || !(mean > 0.0))
        fail(ErrorKind::NumericalFailure, "beamformer has no response at the steering direction");
    return 10.0 * std::log10(main / mean);
}

double directivity_index(const TransferMatrix& H, Eigen::Index K, const DirectionGrid& grid, const Vec3& steering) {
    if (static_cast<std::size_t>(H.directions()) != grid.size())
        fail(ErrorKind::InvalidArgument, "transfer matrix and grid sizes differ");
    const std::size_t n0 = grid.nearest(steering);
    const double offset = angular_distance(steering, grid.directions[n0]);
    double cell = 1e-9;
    for (auto j : grid.adjacency[n0])
        cell = std::max(cell, angular_distance(grid.directions[n0], grid.directions[j]));
    if (offset > cell)
        fail(ErrorKind::InvalidArgument, "steering direction is not within one grid cell of a vertex");

    const ModalBasis basis = truncate(svd_decompose(H), K);
    const Eigen::RowVectorXcd weights = basis.V.row(static_cast<Eigen::Index>(n0)) *
                                        basis.sigma.cwiseInverse().asDiagonal() * basis.U.adjoint();
    return directivity_from_weights(weights, H, n0);
}

} // namespace modalsr
