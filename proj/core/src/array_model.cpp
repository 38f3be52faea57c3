// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/array_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xlmimo {

ArrayGeometry ArrayGeometry::make(int n_antennas, double carrier_freq_hz) {
    if (n_antennas < 1) throw std::invalid_argument("ArrayGeometry: N must be >= 1");
    if (carrier_freq_hz <= 0) throw std::invalid_argument("ArrayGeometry: carrier frequency must be positive");
    ArrayGeometry g;
    g.n_antennas = n_antennas;
    g.carrier_freq = carrier_freq_hz;
    g.wavelength = kSpeedOfLight / carrier_freq_hz;
    g.spacing = g.wavelength / 2.0;
    return g;
}

SubArrayLayout SubArrayLayout::make(int n_antennas, int n_subarrays) {
    if (n_subarrays < 1 || n_antennas < 1 || n_antennas % n_subarrays != 0)
        throw std::invalid_argument("SubArrayLayout: G must divide N");
    return SubArrayLayout{n_subarrays, n_antennas / n_subarrays};
}

Vec antenna_offsets(const ArrayGeometry& geom) {
    const int n = geom.n_antennas;
    Vec delta(n);
    for (int i = 0; i < n; ++i) delta[i] = (2.0 * (i + 1) - n - 1.0) / 2.0;
    return delta;
}

CVec steering_vector(const ArrayGeometry& geom, double angle, double distance,
                     bool exact_distance) {
    if (distance <= 0) throw std::domain_error("steering_vector: distance must be positive");
    const int n = geom.n_antennas;
    const double d = geom.spacing;
    const double two_pi_over_lambda = 2.0 * std::numbers::pi / geom.wavelength;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const Vec delta = antenna_offsets(geom);

    CVec a(n);
    for (int i = 0; i < n; ++i) {
        double excess;  // r^(n) - r
        if (exact_distance) {
            const double dn = delta[i] * d;
            excess = std::sqrt(distance * distance - 2.0 * distance * dn * angle + dn * dn) - distance;
        } else {
            excess = -delta[i] * d * angle +
                     delta[i] * delta[i] * d * d * (1.0 - angle * angle) / (2.0 * distance);
        }
        a[i] = std::polar(scale, -two_pi_over_lambda * excess);
    }
    return a;
}

Mat expansion_matrix(const ArrayGeometry& geom, const SubArrayLayout& layout) {
    if (layout.n_subarrays * layout.per_subarray != geom.n_antennas)
        throw std::invalid_argument("expansion_matrix: layout does not match geometry");
    Mat j = Mat::Zero(geom.n_antennas, layout.n_subarrays);
    for (int g = 0; g < layout.n_subarrays; ++g)
        j.block(g * layout.per_subarray, g, layout.per_subarray, 1).setOnes();
    return j;
}

ChannelRealization synthesize_channel(const ArrayGeometry& geom,
                                      const SubArrayLayout& layout,
                                      const std::vector<PathParams>& paths,
                                      bool exact_distance) {
    if (paths.empty()) throw std::invalid_argument("synthesize_channel: need at least one path");
    const int n = geom.n_antennas;
    const Mat j = expansion_matrix(geom, layout);

    CVec h = CVec::Zero(n);
    for (const auto& p : paths) {
        if (p.visibility.size() != layout.n_subarrays)
            throw std::invalid_argument("synthesize_channel: visibility length != G");
        if ((p.visibility.array() != 0).count() == 0)
            throw std::invalid_argument("synthesize_channel: empty visibility region");
        const Vec mask = j * p.visibility.cast<double>();
        const CVec a = steering_vector(geom, p.angle, p.distance, exact_distance);
        h += p.gain * a.cwiseProduct(mask.cast<Complex>());
    }
    h *= std::sqrt(static_cast<double>(n) / static_cast<double>(paths.size()));
    return ChannelRealization{std::move(h), paths};
}

std::vector<PathParams> sample_paths(Rng& rng, int n_paths,
                                     const ScenarioConfig& scenario) {
    if (n_paths < 1) throw std::invalid_argument("sample_paths: L must be >= 1");
    const int g = scenario.n_subarrays;
    const int min_run = (g + 1) / 2;

    std::uniform_real_distribution<double> angle_dist(scenario.angle_min, scenario.angle_max);
    std::uniform_real_distribution<double> r_dist(scenario.dist_min, scenario.dist_max);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::uniform_int_distribution<int> run_dist(min_run, g);

    std::vector<PathParams> paths(n_paths);
    for (auto& p : paths) {
        p.gain = Complex(gauss(rng), gauss(rng));
        p.angle = angle_dist(rng);
        p.distance = r_dist(rng);
        const int run = run_dist(rng);
        std::uniform_int_distribution<int> start_dist(0, g - run);
        const int start = start_dist(rng);
        p.visibility = Eigen::VectorXi::Zero(g);
        p.visibility.segment(start, run).setOnes();
    }
    return paths;
}

}  // namespace xlmimo
