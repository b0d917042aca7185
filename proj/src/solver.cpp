// SPDX-License-Identifier: Apache-2.0
#include "modalsr/solver.hpp"

#include "modalsr/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace modalsr {

void validate(const IrlsParams& params) {
    if (!(params.p_final > 0.0 && params.p_final <= params.p_init && params.p_init <= 2.0))
        fail(ErrorKind::InvalidConfig, "IRLS needs 0 < p_final <= p_init <= 2");
    if (params.iters_p1 < 1 || params.max_iters < 1)
        fail(ErrorKind::InvalidConfig, "IRLS iteration counts must be at least 1");
    if (!(params.eps_floor > 0.0 && params.eps_floor < params.eps_init))
        fail(ErrorKind::InvalidConfig, "IRLS needs 0 < eps_floor < eps_init");
    if (!(params.reg_scale >= 0.0) || !(params.lambda_floor > 0.0) || !(params.tol_rel_change > 0.0))
        fail(ErrorKind::InvalidConfig, "IRLS regularization and tolerance must be positive");
}

double estimate_diffuseness(const Eigen::MatrixXcd& observations) {
    const Eigen::Index K = observations.rows();
    const Eigen::Index T = observations.cols();
    if (T < 2)
        fail(ErrorKind::InvalidArgument, "diffuseness needs at least 2 frames");
    if (K < 2)
        return 1.0;

    const Eigen::MatrixXcd R = observations * observations.adjoint() / static_cast<double>(T);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::NumericalFailure, "covariance eigen-decomposition failed");

    const Eigen::VectorXd& lambda = es.eigenvalues();
    const double mean = lambda.mean();
    if (!(mean > 0.0))
        return 1.0;
    const double kd = static_cast<double>(K);
    const double spread = (lambda.array() - mean).abs().sum() / (mean * kd);
    const double spread_max = 2.0 * (kd - 1.0) / kd;
    return std::clamp(1.0 - spread / spread_max, 0.0, 1.0);
}

double irls_objective(const Eigen::MatrixXcd& dictionary, const Eigen::MatrixXcd& observations,
                      const Eigen::MatrixXcd& X, double p, double eps, double lambda) {
    const Eigen::VectorXd rows = X.rowwise().squaredNorm();
    const double penalty = (rows.array() + eps * eps).pow(0.5 * p).sum();
    const double misfit = (observations - dictionary * X).squaredNorm();
    return penalty + p / (2.0 * lambda) * misfit;
}

namespace {

struct WeightedStep {
    Eigen::MatrixXcd X;
    double lambda = 0.0;
};

// X = D H^H (H D H^H + lambda I)^-1 Y, the minimizer of
// sum_n |x_n|^2 / d_n + |Y - H X|^2 / lambda.
WeightedStep weighted_step(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& Y, const Eigen::VectorXd& d,
                           double psi, const IrlsParams& params) {
    const Eigen::Index K = H.rows();
    const Eigen::VectorXd root = d.cwiseSqrt();
    const Eigen::MatrixXcd G = H * root.asDiagonal();
    // H D H^H = G G^H; only the lower triangle is formed
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(K, K);
    A.selfadjointView<Eigen::Lower>().rankUpdate(G);
    const double trace = A.diagonal().real().sum();
    const double lambda = std::max(params.reg_scale * psi, params.lambda_floor) * trace / static_cast<double>(K);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        fail(ErrorKind::NumericalFailure, "IRLS regularization collapsed to zero");
    A.diagonal().array() += lambda;

    Eigen::LLT<Eigen::MatrixXcd, Eigen::Lower> llt(A);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::NumericalFailure, "IRLS inner system is not positive definite");
    const Eigen::MatrixXcd Z = llt.solve(Y);
    return {root.asDiagonal() * (G.adjoint() * Z), lambda};
}

SparseSolution finish(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& Y, Eigen::MatrixXcd X,
                      SolverDiagnostics diag) {
    SparseSolution out;
    const double ynorm = Y.norm();
    diag.final_residual = ynorm > 0.0 ? (Y - H * X).norm() / ynorm : 0.0;
    out.energy = X.rowwise().squaredNorm();
    out.coefficients = std::move(X);
    out.diagnostics = std::move(diag);
    return out;
}

} // namespace

SparseSolution irls_solve(const Eigen::MatrixXcd& dictionary, const Eigen::MatrixXcd& observations,
                          const IrlsParams& params) {
    validate(params);
    const Eigen::MatrixXcd& H = dictionary;
    const Eigen::MatrixXcd& Y = observations;
    const Eigen::Index K = H.rows();
    const Eigen::Index N = H.cols();
    if (Y.rows() != K)
        fail(ErrorKind::InvalidArgument, "observation rows do not match dictionary rows");
    if (K > N)
        fail(ErrorKind::InvalidArgument, "dictionary must have at least as many columns as rows");
    if (!H.allFinite() || !Y.allFinite())
        fail(ErrorKind::InvalidArgument, "non-finite solver input");

    SolverDiagnostics diag;
    if (Y.squaredNorm() == 0.0) {
        diag.iterations = 1;
        diag.converged = true;
        return finish(H, Y, Eigen::MatrixXcd::Zero(N, Y.cols()), std::move(diag));
    }

    // a single frame carries no covariance information: treat as coherent
    const double psi = Y.cols() >= 2 ? estimate_diffuseness(Y) : 0.0;
    diag.diffuseness = psi;

    Eigen::MatrixXcd X = weighted_step(H, Y, Eigen::VectorXd::Ones(N), psi, params).X;
    const double scale = std::sqrt(X.rowwise().squaredNorm().maxCoeff());
    if (!(scale > 0.0))
        return finish(H, Y, std::move(X), std::move(diag));

    double eps = params.eps_init * scale;
    const double eps_min = params.eps_floor * scale;
    const double tol_anneal = std::sqrt(params.tol_rel_change);

    for (int it = 0; it < params.max_iters; ++it) {
        const double p = it < params.iters_p1 ? params.p_init : params.p_final;
        const Eigen::VectorXd d = (X.rowwise().squaredNorm().array() + eps * eps).pow(1.0 - 0.5 * p);

        WeightedStep step = weighted_step(H, Y, d, psi, params);
        const double xnorm = X.norm();
        const double change = xnorm > 0.0 ? (step.X - X).norm() / xnorm : 0.0;

        if (params.record_trace) {
            IterationRecord rec;
            rec.iteration = it;
            rec.p = p;
            rec.eps = eps;
            rec.lambda = step.lambda;
            rec.objective_before = irls_objective(H, Y, X, p, eps, step.lambda);
            rec.objective_after = irls_objective(H, Y, step.X, p, eps, step.lambda);
            rec.rel_change = change;
            diag.trace.push_back(rec);
        }

        X = std::move(step.X);
        diag.iterations = it + 1;
        diag.lambda = step.lambda;

        if (change < tol_anneal && eps > eps_min)
            eps = std::max(eps / 10.0, eps_min);
        if (it >= params.iters_p1 && change < params.tol_rel_change) {
            diag.converged = true;
            break;
        }
    }
    return finish(H, Y, std::move(X), std::move(diag));
}

SparseSolution recover(const ObservationBlock& block, const ModalBasis& basis, const DirectionGrid& grid,
                       const IrlsParams& params) {
    if (std::abs(block.frequency_hz - basis.frequency_hz) > 1e-9 * std::max(1.0, basis.frequency_hz))
        fail(ErrorKind::InvalidArgument, "observation block frequency does not match the modal basis");
    if (static_cast<std::size_t>(basis.V.rows()) != grid.size())
        fail(ErrorKind::InvalidArgument, "modal basis and grid sizes differ");
    const WhitenedProblem w = whiten(basis, block.snapshots);
    return irls_solve(w.dictionary, w.observations, params);
}

SparseSolution recover_joint(const ObservationBlock& block, const TransferMatrix& H, const IrlsParams& params) {
    if (std::abs(block.frequency_hz - H.frequency_hz) > 1e-9 * std::max(1.0, H.frequency_hz))
        fail(ErrorKind::InvalidArgument, "observation block frequency does not match the transfer matrix");
    if (block.snapshots.rows() != H.mics())
        fail(ErrorKind::InvalidArgument, "observation block and transfer matrix microphone counts differ");
    return irls_solve(H.entries, block.snapshots, params);
}

ObservationBlock select_mics(const ObservationBlock& block, const std::vector<std::size_t>& mics) {
    ObservationBlock out = block;
    out.snapshots.resize(static_cast<Eigen::Index>(mics.size()), block.snapshots.cols());
    for (std::size_t i = 0; i < mics.size(); ++i) {
        if (static_cast<Eigen::Index>(mics[i]) >= block.snapshots.rows())
            fail(ErrorKind::InvalidArgument, "microphone index out of range");
        out.snapshots.row(static_cast<Eigen::Index>(i)) = block.snapshots.row(static_cast<Eigen::Index>(mics[i]));
    }
    return out;
}

TransferMatrix select_mics(const TransferMatrix& H, const std::vector<std::size_t>& mics) {
    TransferMatrix out;
    out.frequency_hz = H.frequency_hz;
    out.grid_ref = H.grid_ref;
    out.array_ref = H.array_ref + "[" + std::to_string(mics.size()) + "]";
    out.entries.resize(static_cast<Eigen::Index>(mics.size()), H.entries.cols());
    for (std::size_t i = 0; i < mics.size(); ++i) {
        if (static_cast<Eigen::Index>(mics[i]) >= H.mics())
            fail(ErrorKind::InvalidArgument, "microphone index out of range");
        out.entries.row(static_cast<Eigen::Index>(i)) = H.entries.row(static_cast<Eigen::Index>(mics[i]));
    }
    return out;
}

} // namespace modalsr
