// SPDX-License-Identifier: Apache-2.0
//
// Physical model of the uniform linear array: near-field steering vectors,
// multipath channel synthesis and the sub-array visibility structure.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

namespace xlmimo {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Half-wavelength ULA with N elements; element n sits at offset
// delta_n = (2n - N - 1)/2 in units of the spacing d = lambda/2.
struct ArrayGeometry {
    int n_antennas = 0;       // N
    double carrier_freq = 0;  // f_c [Hz]
    double wavelength = 0;    // lambda_c = c / f_c [m]
    double spacing = 0;       // d = lambda_c / 2 [m]

    static ArrayGeometry make(int n_antennas, double carrier_freq_hz);
};

// Partition of the ULA into G sub-arrays of N_g consecutive elements.
struct SubArrayLayout {
    int n_subarrays = 0;    // G
    int per_subarray = 0;   // N_g = N / G

    static SubArrayLayout make(int n_antennas, int n_subarrays);
};

// One propagation path: complex gain, normalized spatial angle in [-1, 1],
// distance in meters and the G-length binary visibility vector.
struct PathParams {
    Complex gain;
    double angle = 0;
    double distance = 0;
    Eigen::VectorXi visibility;  // {0,1}^G, at least one nonzero
};

struct ChannelRealization {
    CVec h;
    std::vector<PathParams> paths;  // ground truth, kept for oracles / NMSE
};

// Scenario statistics for drawing random paths. Defaults follow a
// 100 GHz ULA deployment with users in (−√3/2, √3/2) x [5, 100] m.
struct ScenarioConfig {
    int n_antennas = 256;
    double carrier_freq = 100e9;
    int n_subarrays = 4;
    int n_paths = 2;
    double angle_min = -0.8660254037844386;
    double angle_max = 0.8660254037844386;
    double dist_min = 5.0;
    double dist_max = 100.0;
};

// delta_n = (2n - N - 1)/2 for n = 1..N; symmetric about zero.
Vec antenna_offsets(const ArrayGeometry& geom);

// Near-field steering vector under the quadratic (Fresnel) distance
// approximation; unit Euclidean norm. With exact_distance=true the
// per-antenna distance is evaluated without approximation.
CVec steering_vector(const ArrayGeometry& geom, double angle, double distance,
                     bool exact_distance = false);

// J = I_G (x) 1_{N_g}, shape N x G, exactly one 1 per row.
Mat expansion_matrix(const ArrayGeometry& geom, const SubArrayLayout& layout);

// h = sqrt(N/L) * sum_l alpha_l (a(theta_l, r_l) .* J b_l)
ChannelRealization synthesize_channel(const ArrayGeometry& geom,
                                      const SubArrayLayout& layout,
                                      const std::vector<PathParams>& paths,
                                      bool exact_distance = false);

// Draws L paths: angle and distance uniform over the scenario ranges, gain
// standard complex Gaussian, visibility a random contiguous run of
// sub-arrays with length uniform on {ceil(G/2), ..., G}.
std::vector<PathParams> sample_paths(Rng& rng, int n_paths,
                                     const ScenarioConfig& scenario);

}  // namespace xlmimo
