// SPDX-License-Identifier: Apache-2.0
//
// Comparator estimators: polar-domain simultaneous OMP over sub-array-masked
// atoms and an oracle least-squares bound using the true path parameters.

#pragma once

#include "xlmimo/dictionary.hpp"

namespace xlmimo {

struct SupportEstimate {
    std::vector<int> atom_indices;  // index into the GQ masked-atom column set
    CVec coefficients;
};

struct OmpResult {
    CVec h_hat;
    SupportEstimate support;
    std::vector<double> residual_norms;  // after each greedy iteration
};

// Greedy selection over the columns W^H (a_q .* j_g) for all atoms q and
// sub-array masks g; least-squares refit on the selected set each iteration.
OmpResult polar_omp(const CVec& y, const Combiner& combiner, const PolarDictionary& pdict,
                    const SubArrayLayout& layout, int n_iters);

// Least-squares gain fit on the true atoms a(theta_l, r_l) .* J b_l; the
// per-trial performance bound.
CVec oracle_ls(const CVec& y, const Combiner& combiner, const ArrayGeometry& geom,
               const SubArrayLayout& layout, const ChannelRealization& truth);

}  // namespace xlmimo
