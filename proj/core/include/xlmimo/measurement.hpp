// SPDX-License-Identifier: Apache-2.0
//
// Hybrid analog combining and noisy pilot observations y = W^H h + n.

#pragma once

#include "xlmimo/array_model.hpp"

namespace xlmimo {

struct PilotConfig {
    int n_slots = 32;        // T_p
    int n_rf = 4;            // N_RF
    double snr_db = 15.0;    // +inf means noiseless
    int phase_bits = 0;      // 0 = continuous phases; >0 quantizes to 2^bits levels

    int m_obs() const { return n_slots * n_rf; }
    bool noiseless() const { return std::isinf(snr_db) && snr_db > 0; }
};

// Aggregated analog combiner, N x (T_p * N_RF); every entry has modulus 1/sqrt(N).
struct Combiner {
    CMat w;
};

struct Observation {
    CVec y;                // length T_p * N_RF
    double noise_var = 0;  // per-entry complex noise variance (0 when noiseless)
};

// Entries (1/sqrt(N)) exp(j phi) with phi i.i.d. uniform on [0, 2pi),
// optionally quantized to 2^phase_bits levels.
Combiner generate_combiner(Rng& rng, const ArrayGeometry& geom, const PilotConfig& pilot);

// y = W^H h + n. The noise variance is set post-combining:
// SNR = ||W^H h||^2 / (M_obs * noise_var).
Observation observe(const ChannelRealization& chan, const Combiner& comb,
                    const PilotConfig& pilot, Rng& rng);

// Same observation model, but reusing a caller-supplied unit-variance noise
// draw so that different SNR points can share one noise realization.
Observation observe_with_noise(const ChannelRealization& chan, const Combiner& comb,
                               const PilotConfig& pilot, const CVec& unit_noise);

// Unit-variance circular complex Gaussian vector.
CVec draw_unit_noise(Rng& rng, int length);

}  // namespace xlmimo
