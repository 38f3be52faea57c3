// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace xlmimo {

namespace {

double angle_grid_point(int u, int n_angles) {
    // theta_u = (2u - U - 1)/U, u = 1..U
    return (2.0 * (u + 1) - n_angles - 1.0) / n_angles;
}

}  // namespace

PolarDictionary build_polar_dictionary(const ArrayGeometry& geom, int n_angles,
                                       const PolarGridRule& rule) {
    if (n_angles < 1) throw std::invalid_argument("build_polar_dictionary: U must be >= 1");
    const double n = geom.n_antennas;
    const double d = geom.spacing;
    const double lambda = geom.wavelength;
    // Far-field atoms use a distance large enough that the quadratic phase
    // term is below double rounding.
    const double far_r = 1e12;

    PolarDictionary dict;
    std::vector<CVec> cols;
    for (int u = 0; u < n_angles; ++u) {
        const double theta = angle_grid_point(u, n_angles);
        if (!rule.far_field_only) {
            for (int s = 1; s <= rule.s_max; ++s) {
                const double r = n * n * d * d * (1.0 - theta * theta) /
                                 (2.0 * rule.beta_delta * rule.beta_delta * lambda * s);
                if (r < rule.r_min) break;  // rings shrink with s
                cols.push_back(steering_vector(geom, theta, r));
                dict.grid.push_back({theta, r});
            }
        }
        cols.push_back(steering_vector(geom, theta, far_r));
        dict.grid.push_back({theta, std::numeric_limits<double>::infinity()});
    }

    dict.atoms.resize(geom.n_antennas, static_cast<Eigen::Index>(cols.size()));
    for (size_t q = 0; q < cols.size(); ++q) dict.atoms.col(static_cast<Eigen::Index>(q)) = cols[q];
    return dict;
}

AdaptiveDictionary::AdaptiveDictionary(const ArrayGeometry& geom,
                                       const SubArrayLayout& layout,
                                       int n_angles, double init_distance)
    : geom_(geom), layout_(layout) {
    if (n_angles < 1) throw std::invalid_argument("AdaptiveDictionary: U must be >= 1");
    if (init_distance <= 0) throw std::domain_error("AdaptiveDictionary: init distance must be positive");
    if (layout.n_subarrays * layout.per_subarray != geom.n_antennas)
        throw std::invalid_argument("AdaptiveDictionary: layout does not match geometry");
    angles_.resize(n_angles);
    for (int u = 0; u < n_angles; ++u) angles_[u] = angle_grid_point(u, n_angles);
    distances_ = Vec::Constant(n_angles, init_distance);
}

void AdaptiveDictionary::set_inv_r_clamp(double r_min, double r_max) {
    if (r_min <= 0 || r_max <= r_min)
        throw std::invalid_argument("AdaptiveDictionary: need 0 < r_min < r_max");
    inv_r_lo_ = 1.0 / r_max;
    inv_r_hi_ = 1.0 / r_min;
}

void AdaptiveDictionary::set_inv_distance(int u, double inv_r) {
    const double clamped = std::clamp(inv_r, inv_r_lo_, inv_r_hi_);
    distances_[u] = 1.0 / clamped;
}

CMat AdaptiveDictionary::materialize_block(int u) const {
    const CVec a = steering_vector(geom_, angles_[u], distances_[u]);
    const int ng = layout_.per_subarray;
    CMat block = CMat::Zero(geom_.n_antennas, layout_.n_subarrays);
    for (int g = 0; g < layout_.n_subarrays; ++g)
        block.col(g).segment(g * ng, ng) = a.segment(g * ng, ng);
    return block;
}

CMat AdaptiveDictionary::materialize() const {
    const int g = layout_.n_subarrays;
    CMat d(geom_.n_antennas, n_coeffs());
    for (int u = 0; u < n_angles(); ++u) d.middleCols(u * g, g) = materialize_block(u);
    return d;
}

CMat effective_sensing(const Combiner& combiner, const AdaptiveDictionary& adict) {
    if (combiner.w.rows() != adict.geom().n_antennas)
        throw std::invalid_argument("effective_sensing: combiner rows != N");
    return combiner.w.adjoint() * adict.materialize();
}

CVec steering_inv_distance_derivative(const ArrayGeometry& geom, double angle,
                                      double distance) {
    const CVec a = steering_vector(geom, angle, distance);
    const Vec delta = antenna_offsets(geom);
    const double d = geom.spacing;
    const double two_pi_over_lambda = 2.0 * std::numbers::pi / geom.wavelength;

    CVec da(geom.n_antennas);
    for (int i = 0; i < geom.n_antennas; ++i) {
        const double coeff =
            two_pi_over_lambda * delta[i] * delta[i] * d * d * (1.0 - angle * angle) / 2.0;
        da[i] = a[i] * Complex(0.0, -coeff);
    }
    return da;
}

}  // namespace xlmimo
