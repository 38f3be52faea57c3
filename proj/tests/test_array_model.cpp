// SPDX-License-Identifier: Apache-2.0

#include "xlmimo/array_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace xlmimo;

namespace {

const ArrayGeometry kGeom8 = ArrayGeometry::make(8, 100e9);

// Frozen output of an independent scalar-arithmetic oracle evaluating the
// Fresnel phase formula at N=8, f_c=100 GHz, theta=0.5, r=10 m. The same
// oracle confirmed agreement with the exact per-antenna distance
// sqrt(r^2 - 2 r delta_n d theta + delta_n^2 d^2) to 2.1e-7.
const Complex kSteeringGolden[8] = {
    {2.5054022864301279e-01, 2.4945860143820828e-01},
    {-2.4972392226369255e-01, 2.5027577319676231e-01},
    {-2.5009931345134184e-01, -2.4990064708032958e-01},
    {2.4998896273546969e-01, -2.5001103677726694e-01},
    {2.5001103677726694e-01, 2.4998896273546969e-01},
    {-2.4990064708032964e-01, 2.5009931345134179e-01},
    {-2.5027577319676225e-01, -2.4972392226369261e-01},
    {2.4945860143820861e-01, -2.5054022864301245e-01},
};

// Frozen two-path channel (N=8, G=2): gains 0.7-0.3j / -0.2+1.1j, angles
// 0.25 / -0.6, distances 12 / 30 m, visibilities [1,0] / [1,1].
const Complex kChannelGolden[8] = {
    {-9.1289043937688086e-01, 7.0405647957733952e-01},
    {3.9202657554164849e-01, -2.3449712050704821e-01},
    {-1.1273633338957817e-01, -1.3219116855963922e+00},
    {-3.3628872758208328e-01, -4.2634079151976145e-02},
    {5.4614933349315076e-01, 5.7159505379681796e-01},
    {3.7477984687141297e-01, -6.9608912243982102e-01},
    {-7.7786181906703122e-01, -1.4117715975939302e-01},
    {1.0634116825662017e-01, 7.8338467940968648e-01},
};

std::vector<PathParams> golden_paths() {
    PathParams p1{Complex(0.7, -0.3), 0.25, 12.0, Eigen::VectorXi(2)};
    p1.visibility << 1, 0;
    PathParams p2{Complex(-0.2, 1.1), -0.6, 30.0, Eigen::VectorXi(2)};
    p2.visibility << 1, 1;
    return {p1, p2};
}

}  // namespace

TEST_CASE("antenna offsets follow (2n-N-1)/2") {
    const auto g2 = ArrayGeometry::make(2, 100e9);
    const Vec o2 = antenna_offsets(g2);
    CHECK(o2[0] == doctest::Approx(-0.5));
    CHECK(o2[1] == doctest::Approx(0.5));

    const Vec o4 = antenna_offsets(ArrayGeometry::make(4, 100e9));
    CHECK(o4[0] == -1.5);
    CHECK(o4[1] == -0.5);
    CHECK(o4[2] == 0.5);
    CHECK(o4[3] == 1.5);

    const Vec o256 = antenna_offsets(ArrayGeometry::make(256, 100e9));
    CHECK(o256[0] == -127.5);
    CHECK(o256[255] == 127.5);
    CHECK(o256.sum() == doctest::Approx(0.0));
}

TEST_CASE("geometry invariants") {
    const auto g = ArrayGeometry::make(16, 100e9);
    CHECK(g.wavelength == doctest::Approx(kSpeedOfLight / 100e9));
    CHECK(g.spacing == doctest::Approx(g.wavelength / 2));
    CHECK_THROWS_AS(ArrayGeometry::make(0, 100e9), std::invalid_argument);
}

TEST_CASE("steering vector far-field broadside limit") {
    for (int n : {2, 4, 64}) {
        const CVec a = steering_vector(ArrayGeometry::make(n, 100e9), 0.0, 1e12);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(a[i] - Complex(1.0 / std::sqrt(double(n)), 0.0)) < 1e-9);
    }
}

TEST_CASE("steering vector unit norm") {
    Rng rng(11);
    std::uniform_real_distribution<double> th(-1.0, 1.0), rr(5.0, 100.0);
    for (int i = 0; i < 50; ++i) {
        const CVec a = steering_vector(kGeom8, th(rng), rr(rng));
        CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(steering_vector(kGeom8, 0.0, -1.0), std::domain_error);
    CHECK_THROWS_AS(steering_vector(kGeom8, 0.0, 0.0), std::domain_error);
}

TEST_CASE("steering vector matches golden oracle") {
    const CVec a = steering_vector(kGeom8, 0.5, 10.0);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(a[i] - kSteeringGolden[i]) < 1e-13);

    // Exact-distance mode stays close to the Fresnel approximation here.
    const CVec ae = steering_vector(kGeom8, 0.5, 10.0, true);
    CHECK((a - ae).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("steering far-field limit equals DFT vector") {
    const auto geom = ArrayGeometry::make(64, 100e9);
    const Vec delta = antenna_offsets(geom);
    for (double theta : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
        const CVec a = steering_vector(geom, theta, 1e12);
        for (int n = 0; n < 64; ++n) {
            const Complex dft = std::polar(
                1.0 / 8.0,
                2.0 * std::numbers::pi / geom.wavelength * delta[n] * geom.spacing * theta);
            CHECK(std::abs(a[n] - dft) <= 1e-6);
        }
    }
}

TEST_CASE("expansion matrix structure") {
    const auto geom = ArrayGeometry::make(4, 100e9);
    const Mat j = expansion_matrix(geom, SubArrayLayout::make(4, 2));
    Mat expected(4, 2);
    expected << 1, 0, 1, 0, 0, 1, 0, 1;
    CHECK((j - expected).norm() == 0.0);

    const auto big = ArrayGeometry::make(256, 100e9);
    const Mat j4 = expansion_matrix(big, SubArrayLayout::make(256, 4));
    CHECK(j4.rows() == 256);
    CHECK(j4.cols() == 4);
    for (int c = 0; c < 4; ++c) CHECK(j4.col(c).sum() == 64.0);
    CHECK((j4 * Vec::Ones(4) - Vec::Ones(256)).norm() == 0.0);

    CHECK_THROWS_AS(SubArrayLayout::make(10, 3), std::invalid_argument);
}

TEST_CASE("channel synthesis: single fully visible path") {
    const auto layout = SubArrayLayout::make(8, 4);
    PathParams p{Complex(1.0, 0.0), 0.3, 20.0, Eigen::VectorXi::Ones(4)};
    const auto chan = synthesize_channel(kGeom8, layout, {p});
    const CVec expected = std::sqrt(8.0) * steering_vector(kGeom8, 0.3, 20.0);
    CHECK((chan.h - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("channel synthesis: visibility masking") {
    const auto layout = SubArrayLayout::make(8, 4);
    PathParams p{Complex(1.0, 0.5), -0.2, 15.0, Eigen::VectorXi::Zero(4)};
    p.visibility[0] = 1;
    const auto chan = synthesize_channel(kGeom8, layout, {p});
    for (int i = 0; i < 2; ++i) CHECK(std::abs(chan.h[i]) > 0);
    for (int i = 2; i < 8; ++i) CHECK(chan.h[i] == Complex(0, 0));
}

TEST_CASE("channel synthesis matches golden two-path oracle") {
    const auto layout = SubArrayLayout::make(8, 2);
    const auto chan = synthesize_channel(kGeom8, layout, golden_paths());
    for (int i = 0; i < 8; ++i) CHECK(std::abs(chan.h[i] - kChannelGolden[i]) < 1e-12);
}

TEST_CASE("channel synthesis is invariant to path order") {
    const auto layout = SubArrayLayout::make(8, 2);
    auto paths = golden_paths();
    const auto fwd = synthesize_channel(kGeom8, layout, paths);
    std::reverse(paths.begin(), paths.end());
    const auto rev = synthesize_channel(kGeom8, layout, paths);
    CHECK((fwd.h - rev.h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("channel synthesis error paths") {
    const auto layout = SubArrayLayout::make(8, 2);
    CHECK_THROWS_AS(synthesize_channel(kGeom8, layout, {}), std::invalid_argument);
    PathParams bad{Complex(1, 0), 0.0, 10.0, Eigen::VectorXi::Ones(3)};
    CHECK_THROWS_AS(synthesize_channel(kGeom8, layout, {bad}), std::invalid_argument);
}

TEST_CASE("path sampler respects scenario statistics") {
    ScenarioConfig sc;
    sc.n_subarrays = 4;
    Rng rng(42);
    const double lim = std::sqrt(3.0) / 2.0;
    int min_visible = 4;
    for (int i = 0; i < 10000; ++i) {
        const auto paths = sample_paths(rng, 1, sc);
        CHECK(paths[0].angle > -lim);
        CHECK(paths[0].angle < lim);
        CHECK(paths[0].distance >= 5.0);
        CHECK(paths[0].distance <= 100.0);
        min_visible = std::min<int>(min_visible, paths[0].visibility.sum());
        // contiguous run
        int transitions = 0;
        for (int g = 1; g < 4; ++g)
            if (paths[0].visibility[g] != paths[0].visibility[g - 1]) ++transitions;
        CHECK(transitions <= 2);
    }
    CHECK(min_visible >= 2);  // ceil(G/2)
}

TEST_CASE("path sampler is deterministic under a fixed seed") {
    ScenarioConfig sc;
    Rng a(123), b(123);
    const auto p1 = sample_paths(a, 2, sc);
    const auto p2 = sample_paths(b, 2, sc);
    for (int i = 0; i < 2; ++i) {
        CHECK(p1[i].gain == p2[i].gain);
        CHECK(p1[i].angle == p2[i].angle);
        CHECK(p1[i].distance == p2[i].distance);
        CHECK(p1[i].visibility == p2[i].visibility);
    }
    CHECK_THROWS_AS(sample_paths(a, 0, sc), std::invalid_argument);
}
