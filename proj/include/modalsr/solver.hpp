// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/geometry.hpp"
#include "modalsr/modal.hpp"
#include "modalsr/propagation.hpp"

#include <Eigen/Core>

#include <vector>

namespace modalsr {

/// IRLS for min sum_n (|x_n|^2 + eps^2)^(p/2) with a Tikhonov-relaxed data
/// fit, where x_n is row n of X (one direction across all frames).
struct IrlsParams {
    double p_init = 1.0;
    double p_final = 0.7;
    int iters_p1 = 10;        ///< iterations at p_init before switching to p_final
    int max_iters = 50;
    double eps_init = 1e-1;   ///< relative to the largest row norm of the initial estimate
    double eps_floor = 1e-8;  ///< same scale as eps_init
    double reg_scale = 1e-2;
    double tol_rel_change = 1e-6;
    /// Lower bound on reg_scale * psi. Keeps the inner solve positive definite
    /// for coherent (psi = 0) fields on rank-deficient dictionaries.
    double lambda_floor = 1e-9;
    bool record_trace = false;
};

void validate(const IrlsParams& params);

struct IterationRecord {
    int iteration = 0;
    double p = 0.0;
    double eps = 0.0;
    double lambda = 0.0;
    double objective_before = 0.0; ///< at the incoming iterate, this step's (p, eps, lambda)
    double objective_after = 0.0;  ///< at the outgoing iterate, same parameters
    double rel_change = 0.0;
};

struct SolverDiagnostics {
    int iterations = 0;
    double final_residual = 0.0; ///< |Y - H X|_F / |Y|_F
    double diffuseness = 0.0;
    double lambda = 0.0;         ///< regularization used in the last step
    bool converged = false;
    std::vector<IterationRecord> trace; ///< filled when IrlsParams::record_trace
};

struct SparseSolution {
    Eigen::MatrixXcd coefficients; ///< N x T
    Eigen::VectorXd energy;        ///< per direction, sum_t |x_n(t)|^2
    SolverDiagnostics diagnostics;
};

/// Diffuseness of a K x T block from the eigenvalue spread of its sample
/// covariance: 1 for isotropic, 0 for a single coherent component.
double estimate_diffuseness(const Eigen::MatrixXcd& observations);

/// Surrogate objective sum_n (|x_n|^2 + eps^2)^(p/2) + p/(2 lambda) |Y - H X|_F^2.
/// Each IRLS step is a majorize-minimize step on this function.
double irls_objective(const Eigen::MatrixXcd& dictionary, const Eigen::MatrixXcd& observations,
                      const Eigen::MatrixXcd& X, double p, double eps, double lambda);

SparseSolution irls_solve(const Eigen::MatrixXcd& dictionary, const Eigen::MatrixXcd& observations,
                          const IrlsParams& params);

/// Modal pipeline: whiten through the truncated basis, then IRLS on (V_K^H, whitened y).
SparseSolution recover(const ObservationBlock& block, const ModalBasis& basis, const DirectionGrid& grid,
                       const IrlsParams& params);

/// Raw pipeline on the plane-wave dictionary (joint SMA+LMA, or SMA-only when
/// given the SMA rows).
SparseSolution recover_joint(const ObservationBlock& block, const TransferMatrix& H, const IrlsParams& params);

/// Block restricted to the given microphones.
ObservationBlock select_mics(const ObservationBlock& block, const std::vector<std::size_t>& mics);

/// Transfer matrix restricted to the given microphones.
TransferMatrix select_mics(const TransferMatrix& H, const std::vector<std::size_t>& mics);

} // namespace modalsr
