// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/measurement.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xlmimo {

Combiner generate_combiner(Rng& rng, const ArrayGeometry& geom, const PilotConfig& pilot) {
    const int n = geom.n_antennas;
    const int m = pilot.m_obs();
    if (m < 1) throw std::invalid_argument("generate_combiner: T_p * N_RF must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    CMat w(n, m);
    for (int c = 0; c < m; ++c) {
        for (int r = 0; r < n; ++r) {
            double phi = phase(rng);
            if (pilot.phase_bits > 0) {
                const int levels = 1 << pilot.phase_bits;
                const double step = 2.0 * std::numbers::pi / levels;
                phi = step * std::floor(phi / step);
            }
            w(r, c) = std::polar(scale, phi);
        }
    }
    return Combiner{std::move(w)};
}

CVec draw_unit_noise(Rng& rng, int length) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CVec n(length);
    for (int i = 0; i < length; ++i) n[i] = Complex(gauss(rng), gauss(rng));
    return n;
}

Observation observe_with_noise(const ChannelRealization& chan, const Combiner& comb,
                               const PilotConfig& pilot, const CVec& unit_noise) {
    const CVec z = comb.w.adjoint() * chan.h;
    const int m = pilot.m_obs();
    if (z.size() != m) throw std::invalid_argument("observe: combiner shape does not match pilot config");

    if (pilot.noiseless()) return Observation{z, 0.0};

    const double sig_pow = z.squaredNorm();
    if (sig_pow == 0.0) throw std::domain_error("observe: zero channel with finite SNR");
    if (unit_noise.size() != m) throw std::invalid_argument("observe: noise length mismatch");

    const double snr_lin = std::pow(10.0, pilot.snr_db / 10.0);
    const double noise_var = sig_pow / (m * snr_lin);
    return Observation{z + std::sqrt(noise_var) * unit_noise, noise_var};
}

Observation observe(const ChannelRealization& chan, const Combiner& comb,
                    const PilotConfig& pilot, Rng& rng) {
    if (pilot.noiseless()) {
        return observe_with_noise(chan, comb, pilot, CVec());
    }
    return observe_with_noise(chan, comb, pilot, draw_unit_noise(rng, pilot.m_obs()));
}

}  // namespace xlmimo
