// SPDX-License-Identifier: Apache-2.0
//
// Structured hierarchical sparse Bayesian estimator with adaptive
// distance-parameterized dictionary refinement.

#pragma once

#include "xlmimo/dictionary.hpp"

#include <string>

namespace xlmimo {

// All hyperparameters of the hierarchical prior. Entries stay strictly
// positive through the whole EM loop.
struct HyperState {
    Vec gamma;     // U, block relevance
    Mat alpha;     // U x G, intra-block precisions
    Vec zeta;      // U
    double lambda = 1.0;
    double sigma = 1.0;  // noise precision

    static HyperState init(int n_blocks, int block_len, double sigma0);
};

struct ArmijoParams {
    double c1 = 1e-4;
    double shrink = 0.5;
    double step0 = 1.0;      // first trial moves |1/r| by step0 (gradient-normalized)
    int max_backtracks = 20;
};

struct AssblConfig {
    double beta = 0.5;   // adjacent coupling strength, >= 0
    double chi = 0.9;    // damping of the alpha update, in (0,1)

    // Gamma hyperprior constants (near-noninformative defaults).
    double a_lambda = 1.0, b_lambda = 1e-4;
    double a_zeta = 1.0, b_zeta = 1e-4;
    double a_sigma = 1.0, b_sigma = 1e-4;

    int max_iter = 200;
    double tol = 1e-3;
    bool tol_relative = true;  // eps = tol * ||alpha|| when set
    int n_refine = 4;          // U~, number of blocks refined per iteration
    ArmijoParams armijo;
    double prune_threshold = 1e-8;  // blocks with gamma < thr * max(gamma) leave the E-step

    double init_distance = 20.0;
    double r_clamp_min = 1.0, r_clamp_max = 1000.0;

    std::string trace_path;  // per-iteration CSV when nonempty

    void validate() const;
};

struct Posterior {
    CVec mu;        // K = G U
    CMat sigma_mat; // K x K Hermitian PSD
    // Psi * Sigma for the sensing matrix the E-step ran on. A cheap byproduct
    // of the Woodbury path, reused by the sigma update and the refinement
    // loop; empty when the posterior was assembled by hand.
    CMat psi_sigma;
    int block_len = 1;  // G

    int n_blocks() const { return static_cast<int>(mu.size()) / block_len; }
    Eigen::VectorBlock<const CVec> mu_block(int u) const {
        return mu.segment(u * block_len, block_len);
    }
    Vec sigma_block_diag(int u) const {
        return sigma_mat.diagonal().segment(u * block_len, block_len).real();
    }
};

struct IterationDiag {
    int iter = 0;
    double q = 0;          // dictionary objective after refinement
    double sigma = 0;
    int active_blocks = 0;
    double dalpha = 0;
};

struct AssblResult {
    AdaptiveDictionary adict;
    Posterior posterior;
    CVec h_hat;
    std::vector<IterationDiag> diagnostics;
    int iterations = 0;
};

// diag(Delta_u): delta_{u,g} = (alpha_g + beta alpha_{g-1} + beta alpha_{g+1})^-1,
// out-of-range neighbors zero.
Vec intra_block_covariance(const Vec& alpha_u, double beta);

// diag(Omega) = concat_u gamma_u * delta_{u,.}
Vec prior_covariance(const HyperState& state, double beta);

// Posterior mean/covariance; direct form when M_obs >= K, Woodbury otherwise.
Posterior e_step(const CMat& psi, const CVec& y, double sigma,
                 const Vec& omega_diag, int block_len);

Vec update_gamma(const Posterior& post, const HyperState& state, const AssblConfig& cfg);
Mat update_alpha(const Posterior& post, const HyperState& state, const AssblConfig& cfg);
Vec update_zeta(const HyperState& state, const AssblConfig& cfg);
double update_lambda(const HyperState& state, const AssblConfig& cfg);
double update_sigma(const Posterior& post, const CMat& psi, const CVec& y,
                    const AssblConfig& cfg);

// Q(D(r)) = sigma ||y - Psi mu||^2 + sigma tr(Psi Sigma Psi^H); minimized by
// the distance refinement.
double q_dictionary(const CMat& psi, const CVec& mu, const CMat& sigma_mat,
                    double sigma, const CVec& y);

// Gradient of the dictionary objective with respect to 1/r_u.
double distance_gradient(int u, const CMat& psi, const Combiner& combiner,
                         const AdaptiveDictionary& adict, const CVec& mu,
                         const CMat& sigma_mat, double sigma, const CVec& y);

// One Armijo-backtracked gradient step in 1/r_u for the n_refine blocks with
// largest posterior power; psi is kept in sync with the accepted steps.
// Returns the dictionary objective after refinement.
double refine_distances(AdaptiveDictionary& adict, const Posterior& post,
                        double sigma, const Combiner& combiner, const CVec& y,
                        const AssblConfig& cfg, CMat& psi);

// Full EM driver (Algorithm loop: E-step, gamma, alpha, zeta, lambda, sigma,
// distance refinement, dictionary refresh).
AssblResult assbl_estimate(const CVec& y, const Combiner& combiner,
                           const ArrayGeometry& geom, const SubArrayLayout& layout,
                           int n_angles, const AssblConfig& cfg = {});

}  // namespace xlmimo
