// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace xlmimo {

OmpResult polar_omp(const CVec& y, const Combiner& combiner, const PolarDictionary& pdict,
                    const SubArrayLayout& layout, int n_iters) {
    if (n_iters < 1) throw std::invalid_argument("polar_omp: n_iters must be >= 1");
    const auto n = pdict.atoms.rows();
    if (combiner.w.rows() != n) throw std::invalid_argument("polar_omp: combiner rows != N");
    const int q_atoms = pdict.q_atoms();
    const int g = layout.n_subarrays;
    const int ng = layout.per_subarray;
    const int n_cols = q_atoms * g;
    const auto m = y.size();

    // Observation-domain columns W^H (a_q .* j_g); column index c = q*G + g.
    CMat phi(m, n_cols);
    for (int q = 0; q < q_atoms; ++q)
        for (int j = 0; j < g; ++j)
            phi.col(q * g + j) =
                combiner.w.middleRows(j * ng, ng).adjoint() * pdict.atoms.col(q).segment(j * ng, ng);
    const Vec col_norms = phi.colwise().norm();

    std::vector<char> used(n_cols, 0);
    std::vector<int> support;
    CVec coeffs;
    CVec resid = y;
    OmpResult result;

    for (int it = 0; it < n_iters; ++it) {
        // Most correlated unused column (norm-weighted).
        const CVec corr = phi.adjoint() * resid;
        int best = -1;
        double best_val = 0;
        for (int c = 0; c < n_cols; ++c) {
            if (used[c] || col_norms[c] <= 1e-12) continue;
            const double v = std::abs(corr[c]) / col_norms[c];
            if (v > best_val) {
                best_val = v;
                best = c;
            }
        }
        if (best < 0) break;
        used[best] = 1;
        support.push_back(best);

        CMat sub(m, support.size());
        for (size_t i = 0; i < support.size(); ++i) sub.col(i) = phi.col(support[i]);
        Eigen::ColPivHouseholderQR<CMat> qr(sub);
        if (qr.rank() < static_cast<Eigen::Index>(support.size())) {
            support.pop_back();  // column linearly dependent on current set
            continue;
        }
        coeffs = qr.solve(y);
        resid = y - sub * coeffs;
        result.residual_norms.push_back(resid.norm());
    }

    // Channel-domain reconstruction from the selected masked atoms.
    CVec h_hat = CVec::Zero(n);
    for (size_t i = 0; i < support.size(); ++i) {
        const int q = support[i] / g;
        const int j = support[i] % g;
        h_hat.segment(j * ng, ng) += coeffs[i] * pdict.atoms.col(q).segment(j * ng, ng);
    }
    result.h_hat = std::move(h_hat);
    result.support.atom_indices = std::move(support);
    result.support.coefficients = std::move(coeffs);
    return result;
}

CVec oracle_ls(const CVec& y, const Combiner& combiner, const ArrayGeometry& geom,
               const SubArrayLayout& layout, const ChannelRealization& truth) {
    const int n = geom.n_antennas;
    const auto l = truth.paths.size();
    const Mat j = expansion_matrix(geom, layout);

    CMat atoms(n, l);
    for (size_t i = 0; i < l; ++i) {
        const auto& p = truth.paths[i];
        const Vec mask = j * p.visibility.cast<double>();
        atoms.col(i) = steering_vector(geom, p.angle, p.distance)
                           .cwiseProduct(mask.cast<Complex>());
    }
    const CMat sensed = combiner.w.adjoint() * atoms;
    const CVec gains = sensed.colPivHouseholderQr().solve(y);
    return atoms * gains;
}

}  // namespace xlmimo
