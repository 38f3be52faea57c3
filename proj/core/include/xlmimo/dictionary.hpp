// SPDX-License-Identifier: Apache-2.0
//
// Polar-domain baseline dictionary and the distance-parameterized adaptive
// dictionary D(r) with its 1/r derivative machinery.

#pragma once

#include "xlmimo/array_model.hpp"
#include "xlmimo/measurement.hpp"

namespace xlmimo {

struct PolarAtomParams {
    double angle = 0;
    double distance = 0;  // +inf encodes the far-field atom
};

struct PolarDictionary {
    CMat atoms;                        // N x Q, unit-norm columns
    std::vector<PolarAtomParams> grid; // one entry per atom
    int q_atoms() const { return static_cast<int>(atoms.cols()); }
};

// Distance-ring sampling rule: per angle theta_u, ring s (s = 1..s_max) sits
// at r = N^2 d^2 (1 - theta_u^2) / (2 beta_delta^2 lambda s); rings below
// r_min are dropped and one far-field atom is always added per angle.
// Defaults are calibrated so U=256, N=256 at 100 GHz gives Q = 2200.
struct PolarGridRule {
    double beta_delta = 0.6;
    int s_max = 10;
    double r_min = 5.0;
    bool far_field_only = false;
};

PolarDictionary build_polar_dictionary(const ArrayGeometry& geom, int n_angles,
                                       const PolarGridRule& rule = {});

// Angle grid theta_u = (2u - U - 1)/U fixed; one learnable distance per angle.
// Distances are manipulated in the 1/r domain, clamped to
// [1/r_clamp_max, 1/r_clamp_min].
class AdaptiveDictionary {
public:
    AdaptiveDictionary(const ArrayGeometry& geom, const SubArrayLayout& layout,
                       int n_angles, double init_distance = 20.0);

    const ArrayGeometry& geom() const { return geom_; }
    const SubArrayLayout& layout() const { return layout_; }
    int n_angles() const { return static_cast<int>(angles_.size()); }
    int n_coeffs() const { return n_angles() * layout_.n_subarrays; }  // K = G U

    const Vec& angles() const { return angles_; }
    const Vec& distances() const { return distances_; }
    double inv_distance(int u) const { return 1.0 / distances_[u]; }
    void set_inv_distance(int u, double inv_r);

    double inv_r_lo() const { return inv_r_lo_; }
    double inv_r_hi() const { return inv_r_hi_; }
    void set_inv_r_clamp(double r_min, double r_max);

    // D(r): block u is diag(a(theta_u, r_u)) J, N x G.
    CMat materialize() const;
    CMat materialize_block(int u) const;

private:
    ArrayGeometry geom_;
    SubArrayLayout layout_;
    Vec angles_;
    Vec distances_;
    double inv_r_lo_ = 1.0 / 1000.0;
    double inv_r_hi_ = 1.0 / 1.0;
};

// Psi = W^H D(r), M_obs x (G U).
CMat effective_sensing(const Combiner& combiner, const AdaptiveDictionary& adict);

// d a(theta_u, r_u) / d (1/r_u): entrywise
// a_n * (-j (2 pi / lambda) delta_n^2 d^2 (1 - theta_u^2) / 2).
CVec steering_inv_distance_derivative(const ArrayGeometry& geom, double angle,
                                      double distance);

}  // namespace xlmimo
