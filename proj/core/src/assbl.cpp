// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/assbl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace xlmimo {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

// Re tr(Psi Sigma Psi^H) given S = Psi * Sigma.
double trace_term(const CMat& s, const CMat& psi) {
    return s.cwiseProduct(psi.conjugate()).sum().real();
}

// Solves A X = B for Hermitian positive definite A, retrying once with a
// diagonal jitter of 1e-10 * trace/K.
CMat hpd_solve(CMat a, const CMat& b) {
    Eigen::LDLT<CMat> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        CMat x = ldlt.solve(b);
        if (x.allFinite()) return x;
    }
    const double jitter = 1e-10 * a.trace().real() / static_cast<double>(a.rows());
    a.diagonal().array() += jitter;
    Eigen::LDLT<CMat> retry(a);
    if (retry.info() != Eigen::Success)
        throw std::runtime_error("e_step: posterior system numerically singular");
    CMat x = retry.solve(b);
    if (!x.allFinite())
        throw std::runtime_error("e_step: posterior system numerically singular");
    return x;
}

}  // namespace

HyperState HyperState::init(int n_blocks, int block_len, double sigma0) {
    HyperState s;
    s.gamma = Vec::Ones(n_blocks);
    s.alpha = Mat::Ones(n_blocks, block_len);
    s.zeta = Vec::Ones(n_blocks);
    s.lambda = 1.0;
    s.sigma = sigma0;
    return s;
}

void AssblConfig::validate() const {
    if (beta < 0) throw std::invalid_argument("AssblConfig: beta must be >= 0");
    if (chi <= 0 || chi >= 1) throw std::invalid_argument("AssblConfig: chi must lie in (0,1)");
    if (a_lambda <= 0 || b_lambda <= 0 || a_zeta <= 0 || b_zeta <= 0 || a_sigma <= 0 || b_sigma <= 0)
        throw std::invalid_argument("AssblConfig: hyperprior constants must be positive");
    if (max_iter < 1) throw std::invalid_argument("AssblConfig: max_iter must be >= 1");
    if (tol <= 0) throw std::invalid_argument("AssblConfig: tol must be positive");
    if (prune_threshold < 0) throw std::invalid_argument("AssblConfig: prune_threshold must be >= 0");
}

Vec intra_block_covariance(const Vec& alpha_u, double beta) {
    const int g = static_cast<int>(alpha_u.size());
    Vec delta(g);
    for (int i = 0; i < g; ++i) {
        if (alpha_u[i] <= 0) throw std::domain_error("intra_block_covariance: alpha must be positive");
        double denom = alpha_u[i];
        if (i > 0) denom += beta * alpha_u[i - 1];
        if (i + 1 < g) denom += beta * alpha_u[i + 1];
        delta[i] = 1.0 / denom;
    }
    return delta;
}

Vec prior_covariance(const HyperState& state, double beta) {
    const int u_count = static_cast<int>(state.gamma.size());
    const int g = static_cast<int>(state.alpha.cols());
    Vec omega(u_count * g);
    for (int u = 0; u < u_count; ++u)
        omega.segment(u * g, g) = state.gamma[u] * intra_block_covariance(state.alpha.row(u), beta);
    return omega;
}

Posterior e_step(const CMat& psi, const CVec& y, double sigma,
                 const Vec& omega_diag, int block_len) {
    const auto m = psi.rows();
    const auto k = psi.cols();
    if (sigma <= 0) throw std::domain_error("e_step: sigma must be positive");
    if (omega_diag.size() != k) throw std::invalid_argument("e_step: omega length != K");
    if ((omega_diag.array() <= 0).any()) throw std::domain_error("e_step: omega entries must be positive");

    Posterior post;
    post.block_len = block_len;
    if (m >= k) {
        CMat a = sigma * (psi.adjoint() * psi);
        a.diagonal() += omega_diag.cwiseInverse().cast<Complex>();
        CMat cov = hpd_solve(std::move(a), CMat::Identity(k, k));
        cov = 0.5 * (cov + cov.adjoint()).eval();
        post.sigma_mat = std::move(cov);
        post.mu = sigma * (post.sigma_mat * (psi.adjoint() * y));
        post.psi_sigma = psi * post.sigma_mat;
    } else {
        // Sigma = Omega - Omega Psi^H (sigma^-1 I + Psi Omega Psi^H)^-1 Psi Omega
        const CMat p = psi * omega_diag.asDiagonal();  // Psi Omega
        CMat c = p * psi.adjoint();
        c.diagonal().array() += 1.0 / sigma;
        Eigen::LLT<CMat> llt(c);
        if (llt.info() != Eigen::Success) {
            c.diagonal().array() += 1e-10 * c.trace().real() / static_cast<double>(c.rows());
            llt.compute(c);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("e_step: posterior system numerically singular");
        }
        const CMat a_half = llt.matrixL().solve(p);  // L^-1 Psi Omega
        CMat cov = CMat::Zero(k, k);
        cov.selfadjointView<Eigen::Lower>().rankUpdate(a_half.adjoint(), -1.0);
        cov.diagonal() += omega_diag.cast<Complex>();
        post.sigma_mat = cov.selfadjointView<Eigen::Lower>();
        // x = (sigma^-1 I + Psi Omega Psi^H)^-1 Psi Omega; then
        // Psi Sigma = x / sigma and mu = sigma Sigma Psi^H y = x^H y.
        const CMat x = llt.matrixU().solve(a_half);
        if (!x.allFinite())
            throw std::runtime_error("e_step: posterior system numerically singular");
        post.mu = x.adjoint() * y;
        post.psi_sigma = x / sigma;
    }
    return post;
}

Vec update_gamma(const Posterior& post, const HyperState& state, const AssblConfig& cfg) {
    const int u_count = static_cast<int>(state.gamma.size());
    const int g = post.block_len;
    const double lambda = state.lambda;
    Vec gamma(u_count);
    for (int u = 0; u < u_count; ++u) {
        const Vec delta = intra_block_covariance(state.alpha.row(u), cfg.beta);
        const Vec second_moment =
            post.mu_block(u).cwiseAbs2() + post.sigma_block_diag(u);
        const double s_u = (second_moment.array() / delta.array()).sum();
        // Positive root of lambda g^2 + G g - S = 0, written without cancellation.
        const double root = 2.0 * s_u / (g + std::sqrt(g * g + 4.0 * lambda * s_u));
        gamma[u] = std::max(root, kTiny);
    }
    return gamma;
}

Mat update_alpha(const Posterior& post, const HyperState& state, const AssblConfig& cfg) {
    const int u_count = static_cast<int>(state.gamma.size());
    const int g = post.block_len;
    Mat alpha(u_count, g);
    for (int u = 0; u < u_count; ++u) {
        const Vec m2 = post.mu_block(u).cwiseAbs2() + post.sigma_block_diag(u);
        for (int i = 0; i < g; ++i) {
            double nu = m2[i];
            if (i > 0) nu += cfg.beta * m2[i - 1];
            if (i + 1 < g) nu += cfg.beta * m2[i + 1];
            alpha(u, i) = cfg.chi * (1.0 + 2.0 * cfg.beta) /
                          (nu / state.gamma[u] + state.zeta[u]);
        }
    }
    return alpha;
}

Vec update_zeta(const HyperState& state, const AssblConfig& cfg) {
    const int g = static_cast<int>(state.alpha.cols());
    return (state.alpha.rowwise().sum().array() + cfg.b_zeta)
        .inverse()
        .matrix() *
        (g + cfg.a_zeta - 1.0);
}

double update_lambda(const HyperState& state, const AssblConfig& cfg) {
    const int u_count = static_cast<int>(state.gamma.size());
    return (u_count + cfg.a_lambda - 1.0) / (state.gamma.sum() + cfg.b_lambda);
}

double update_sigma(const Posterior& post, const CMat& psi, const CVec& y,
                    const AssblConfig& cfg) {
    const double m = static_cast<double>(y.size());
    const double resid = (y - psi * post.mu).squaredNorm();
    const bool cached =
        post.psi_sigma.rows() == psi.rows() && post.psi_sigma.cols() == psi.cols();
    const double tr =
        cached ? trace_term(post.psi_sigma, psi) : trace_term(psi * post.sigma_mat, psi);
    const double denom = resid + tr + cfg.b_sigma;
    if (denom <= 0) throw std::domain_error("update_sigma: nonpositive denominator");
    return (m + cfg.a_sigma - 1.0) / denom;
}

double q_dictionary(const CMat& psi, const CVec& mu, const CMat& sigma_mat,
                    double sigma, const CVec& y) {
    const double resid = (y - psi * mu).squaredNorm();
    return sigma * (resid + trace_term(psi * sigma_mat, psi));
}

namespace {

// M x G derivative block dPsi/d(1/r_u) = W^H diag(da_u) J.
CMat sensing_derivative_block(const Combiner& combiner, const AdaptiveDictionary& adict, int u) {
    const CVec da = steering_inv_distance_derivative(adict.geom(), adict.angles()[u],
                                                     adict.distances()[u]);
    const int ng = adict.layout().per_subarray;
    const int g = adict.layout().n_subarrays;
    CMat block(combiner.w.cols(), g);
    for (int j = 0; j < g; ++j)
        block.col(j) = combiner.w.middleRows(j * ng, ng).adjoint() * da.segment(j * ng, ng);
    return block;
}

// Sensing block W^H diag(a_u) J at an arbitrary inverse distance.
CMat sensing_block_at(const Combiner& combiner, const AdaptiveDictionary& adict,
                      int u, double inv_r) {
    const CVec a = steering_vector(adict.geom(), adict.angles()[u], 1.0 / inv_r);
    const int ng = adict.layout().per_subarray;
    const int g = adict.layout().n_subarrays;
    CMat block(combiner.w.cols(), g);
    for (int j = 0; j < g; ++j)
        block.col(j) = combiner.w.middleRows(j * ng, ng).adjoint() * a.segment(j * ng, ng);
    return block;
}

double gradient_from_parts(const CVec& resid, const CMat& s_block, const CVec& mu_u,
                           double sigma, const CMat& dpsi_u) {
    // [sigma((Psi mu - y) mu^H + Psi Sigma)]_u = sigma(-resid mu_u^H + S_u)
    const CMat t_u = sigma * ((-resid) * mu_u.adjoint() + s_block);
    return 2.0 * t_u.conjugate().cwiseProduct(dpsi_u).sum().real();
}

}  // namespace

double distance_gradient(int u, const CMat& psi, const Combiner& combiner,
                         const AdaptiveDictionary& adict, const CVec& mu,
                         const CMat& sigma_mat, double sigma, const CVec& y) {
    const int g = adict.layout().n_subarrays;
    const CVec resid = y - psi * mu;
    const CMat s_block = psi * sigma_mat.middleCols(u * g, g);
    const CMat dpsi_u = sensing_derivative_block(combiner, adict, u);
    return gradient_from_parts(resid, s_block, mu.segment(u * g, g), sigma, dpsi_u);
}

double refine_distances(AdaptiveDictionary& adict, const Posterior& post,
                        double sigma, const Combiner& combiner, const CVec& y,
                        const AssblConfig& cfg, CMat& psi) {
    const int g = adict.layout().n_subarrays;
    const int u_count = adict.n_angles();

    // Running state: residual, S = Psi Sigma and the current objective.
    CVec resid = y - psi * post.mu;
    CMat s = (post.psi_sigma.rows() == psi.rows() && post.psi_sigma.cols() == psi.cols())
                 ? post.psi_sigma
                 : CMat(psi * post.sigma_mat);
    double q_cur = sigma * (resid.squaredNorm() + trace_term(s, psi));

    if (cfg.n_refine <= 0) return q_cur;

    // Rank blocks by posterior power ||mu_u||^2 + tr(Sigma_u).
    std::vector<int> order(u_count);
    std::iota(order.begin(), order.end(), 0);
    Vec power(u_count);
    for (int u = 0; u < u_count; ++u)
        power[u] = post.mu_block(u).squaredNorm() + post.sigma_block_diag(u).sum();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return power[a] > power[b]; });

    const int n_refine = std::min(cfg.n_refine, u_count);
    for (int rank = 0; rank < n_refine; ++rank) {
        const int u = order[rank];
        const CMat dpsi_u = sensing_derivative_block(combiner, adict, u);
        const double grad = gradient_from_parts(resid, s.middleCols(u * g, g),
                                                post.mu_block(u), sigma, dpsi_u);
        if (grad == 0.0 || !std::isfinite(grad)) continue;

        const double inv_cur = adict.inv_distance(u);
        double eta = cfg.armijo.step0 / std::abs(grad);
        for (int bt = 0; bt <= cfg.armijo.max_backtracks; ++bt, eta *= cfg.armijo.shrink) {
            const double inv_new =
                std::clamp(inv_cur - eta * grad, adict.inv_r_lo(), adict.inv_r_hi());
            if (inv_new == inv_cur) continue;

            const CMat block_new = sensing_block_at(combiner, adict, u, inv_new);
            const CMat delta = block_new - psi.middleCols(u * g, g);
            const CVec resid_new = resid - delta * post.mu_block(u);
            const CMat s_new = s + delta * post.sigma_mat.middleRows(u * g, g);

            CMat psi_new = psi;
            psi_new.middleCols(u * g, g) = block_new;
            const double q_new = sigma * (resid_new.squaredNorm() + trace_term(s_new, psi_new));

            if (q_new <= q_cur - cfg.armijo.c1 * eta * grad * grad) {
                adict.set_inv_distance(u, inv_new);
                psi = std::move(psi_new);
                resid = resid_new;
                s = s_new;
                q_cur = q_new;
                break;
            }
        }
        // Failed line search leaves r_u unchanged.
    }
    return q_cur;
}

AssblResult assbl_estimate(const CVec& y, const Combiner& combiner,
                           const ArrayGeometry& geom, const SubArrayLayout& layout,
                           int n_angles, const AssblConfig& cfg) {
    cfg.validate();
    const int g = layout.n_subarrays;
    const int k = n_angles * g;
    const auto m = y.size();

    AdaptiveDictionary adict(geom, layout, n_angles, cfg.init_distance);
    adict.set_inv_r_clamp(cfg.r_clamp_min, cfg.r_clamp_max);

    const double y_pow = y.squaredNorm();
    HyperState state = HyperState::init(n_angles, g,
                                        y_pow > 0 ? static_cast<double>(m) / y_pow : 1.0);

    std::ofstream trace;
    if (!cfg.trace_path.empty()) {
        trace.open(cfg.trace_path);
        if (!trace) throw std::runtime_error("assbl_estimate: cannot open trace file " + cfg.trace_path);
        trace << "iter,q,sigma,active_blocks,dalpha\n";
    }

    AssblResult result{std::move(adict), Posterior{}, CVec(), {}, 0};
    Posterior post;
    post.block_len = g;

    CMat psi;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        psi = effective_sensing(combiner, result.adict);
        const Vec omega = prior_covariance(state, cfg.beta);

        // Freeze blocks whose relevance collapsed; they keep prior moments.
        const double gamma_max = state.gamma.maxCoeff();
        std::vector<int> active;
        active.reserve(n_angles);
        for (int u = 0; u < n_angles; ++u)
            if (state.gamma[u] >= cfg.prune_threshold * gamma_max) active.push_back(u);

        if (static_cast<int>(active.size()) == n_angles) {
            post = e_step(psi, y, state.sigma, omega, g);
        } else {
            const int ka = static_cast<int>(active.size()) * g;
            CMat psi_a(m, ka);
            Vec omega_a(ka);
            for (size_t i = 0; i < active.size(); ++i) {
                psi_a.middleCols(i * g, g) = psi.middleCols(active[i] * g, g);
                omega_a.segment(i * g, g) = omega.segment(active[i] * g, g);
            }
            const Posterior sub = e_step(psi_a, y, state.sigma, omega_a, g);
            post.mu = CVec::Zero(k);
            post.sigma_mat = CMat::Zero(k, k);
            post.sigma_mat.diagonal() = omega.cast<Complex>();
            // Pruned blocks keep prior moments, so their Psi Sigma columns are
            // psi_u scaled by omega_u; active columns scatter from the sub-run.
            post.psi_sigma.resize(m, k);
            for (int u = 0; u < n_angles; ++u)
                post.psi_sigma.middleCols(u * g, g) =
                    psi.middleCols(u * g, g) * omega.segment(u * g, g).asDiagonal();
            for (size_t i = 0; i < active.size(); ++i) {
                post.mu.segment(active[i] * g, g) = sub.mu.segment(i * g, g);
                post.psi_sigma.middleCols(active[i] * g, g) = sub.psi_sigma.middleCols(i * g, g);
                for (size_t j = 0; j < active.size(); ++j)
                    post.sigma_mat.block(active[i] * g, active[j] * g, g, g) =
                        sub.sigma_mat.block(i * g, j * g, g, g);
            }
        }

        const Mat alpha_prev = state.alpha;
        state.gamma = update_gamma(post, state, cfg);
        state.alpha = update_alpha(post, state, cfg);
        state.zeta = update_zeta(state, cfg);
        state.lambda = update_lambda(state, cfg);
        state.sigma = update_sigma(post, psi, y, cfg);

        const double q = refine_distances(result.adict, post, state.sigma, combiner, y, cfg, psi);

        const double dalpha = (state.alpha - alpha_prev).norm();
        const double eps = cfg.tol_relative ? cfg.tol * alpha_prev.norm() : cfg.tol;
        result.diagnostics.push_back(
            {iter, q, state.sigma, static_cast<int>(active.size()), dalpha});
        if (trace.is_open())
            trace << iter << ',' << q << ',' << state.sigma << ',' << active.size() << ','
                  << dalpha << '\n';

        result.iterations = iter;
        if (dalpha <= eps) break;
    }

    result.posterior = std::move(post);
    result.h_hat = result.adict.materialize() * result.posterior.mu;
    return result;
}

}  // namespace xlmimo
