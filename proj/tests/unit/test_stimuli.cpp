#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mg/geometry.hpp"
#include "mg/stimuli.hpp"

using namespace mg;

namespace {

std::array<double, 3> centroid(const StimulusVolume& f, int t) {
    double m = 0, cx = 0, cy = 0;
    for (int x = 0; x < f.nx; ++x)
        for (int y = 0; y < f.ny; ++y) {
            const double v = f.at(x, y, t);
            m += v;
            cx += v * x;
            cy += v * y;
        }
    return {m, m > 0 ? cx / m : 0.0, m > 0 ? cy / m : 0.0};
}

}  // namespace

TEST_CASE("plane wave") {
    const auto f = plane_wave(16, 16, 8, kPi / 2, 0.0, 0.5);
    const auto [lo, hi] = std::minmax_element(f.data.begin(), f.data.end());
    CHECK(*lo >= 0.0);
    CHECK(*hi <= 1.0);
    CHECK(*lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(*hi == doctest::Approx(1.0));
    // the pattern at frame t equals frame 0 shifted by v t = 0.5 t pixels; at t = 2 exactly one pixel
    for (int x = 0; x + 1 < 16; ++x)
        for (int y = 0; y < 16; ++y) CHECK(f.at(x + 1, y, 2) == doctest::Approx(f.at(x, y, 0)));
    CHECK_THROWS_AS(plane_wave(8, 8, 4, 4.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("translating bar moves at its velocity") {
    for (double th : {0.0, 0.9, 2.5}) {
        const auto f = translating_bar(40, 40, 10, th, 0.5, 2.0);
        for (double v : f.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const auto a = centroid(f, 2), b = centroid(f, 8);
        const double moved = (b[1] - a[1]) * std::cos(th) + (b[2] - a[2]) * std::sin(th);
        CHECK(moved == doctest::Approx(3.0).epsilon(0.05));
    }
}

TEST_CASE("dashed circle") {
    CircleSpec spec;
    spec.nx = 100;
    spec.ny = 100;
    spec.n_frames = 32;
    spec.radius = 25;
    const auto c = dashed_circle(spec);
    for (double v : c.volume.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // ring centroid follows the center
    const auto a = centroid(c.volume, 4), b = centroid(c.volume, 24);
    CHECK(b[2] - a[2] == doctest::Approx(10.0).epsilon(0.02));
    CHECK(std::abs(b[1] - a[1]) < 0.05);
    // gap centers are dark, segment centers are lit
    const int t = 15;
    const auto ctr = c.center(t);
    for (double phi : c.gap_centers()) {
        CHECK(c.in_gap(phi));
        const int x = static_cast<int>(std::lround(ctr[0] + spec.radius * std::cos(phi)));
        const int y = static_cast<int>(std::lround(ctr[1] + spec.radius * std::sin(phi)));
        CHECK(c.volume.at(x, y, t) == 0.0);
        const double on = phi - kTwoPi * 0.5 / spec.n_segments;
        CHECK_FALSE(c.in_gap(on));
    }
    // normal velocity of an upward translation
    CHECK(c.normal_velocity(kPi / 2) == doctest::Approx(0.5));
    CHECK(c.normal_velocity(0.0) == doctest::Approx(0.0));

    spec.vy = 0.0;
    const auto still = dashed_circle(spec);
    for (int x = 0; x < spec.nx; ++x)
        for (int y = 0; y < spec.ny; ++y) CHECK(still.volume.at(x, y, 0) == still.volume.at(x, y, 31));

    CircleSpec big;
    big.nx = 100;
    big.ny = 100;
    big.n_frames = 32;
    big.radius = 48;
    CHECK_THROWS_AS(dashed_circle(big), std::domain_error);
    big.radius = 10;
    big.gap_fraction = 1.0;
    CHECK_THROWS_AS(dashed_circle(big), std::invalid_argument);

    CircleSpec paper;
    CHECK_NOTHROW(dashed_circle(paper));
}

TEST_CASE("occluded trajectory splitting") {
    TrajectorySpec spec;
    for (int dt : {0, 6, 12, 24})
        for (double dth : {0.0, kPi / 6, 5 * kPi / 12, kPi / 2}) {
            spec.delta_t = dt;
            spec.delta_theta = dth;
            const auto s = occluded_trajectory(spec);
            CHECK(s.t2 - s.t1 == dt);
            for (int x = 0; x < spec.nx; ++x)
                for (int y = 0; y < spec.ny; ++y)
                    for (int t = 0; t < spec.n_frames; ++t) {
                        const double a = s.s1.at(x, y, t), b = s.s2.at(x, y, t), c = s.s3.at(x, y, t);
                        CHECK(c == a + b);
                        CHECK((a == 0.0 || b == 0.0));
                        if (t >= s.t1) CHECK(a == 0.0);
                        if (t < s.t2) CHECK(b == 0.0);
                    }
            for (int t = s.t1; t < s.t2; ++t) CHECK(centroid(s.s3, t)[0] == 0.0);
        }
}

TEST_CASE("trajectory geometry") {
    TrajectorySpec spec;
    spec.delta_t = 0;
    spec.delta_theta = 0.0;
    const auto s = occluded_trajectory(spec);
    // unbroken straight path at the stated speed
    for (int t = 10; t + 10 < spec.n_frames; t += 10) {
        const auto a = centroid(s.s3, t), b = centroid(s.s3, t + 10);
        CHECK(a[0] == doctest::Approx(b[0]).epsilon(0.06));
        CHECK(std::hypot(b[1] - a[1], b[2] - a[2]) == doctest::Approx(5.0).epsilon(0.02));
        CHECK(std::atan2(b[2] - a[2], b[1] - a[1]) == doctest::Approx(spec.theta_init).epsilon(0.02));
    }
    // after the occlusion the direction is rotated by delta_theta
    spec.delta_t = 12;
    spec.delta_theta = kPi / 2;
    const auto r = occluded_trajectory(spec);
    const auto a = centroid(r.s3, r.t2 + 2), b = centroid(r.s3, r.t2 + 22);
    CHECK(std::atan2(b[2] - a[2], b[1] - a[1]) == doctest::Approx(spec.theta_init + kPi / 2).epsilon(0.02));
    // ellipse: extent along motion is the minor axis
    CHECK(centroid(r.s3, 5)[0] == doctest::Approx(kPi * 1.0 * 2.0).epsilon(0.1));

    spec.speed = 1.0;
    CHECK_THROWS_AS(occluded_trajectory(spec), std::domain_error);
    spec.speed = 0.5;
    spec.delta_t = 101;
    CHECK_THROWS_AS(occluded_trajectory(spec), std::invalid_argument);
    spec.delta_t = 12;
    spec.eccentricity = 0.5;
    CHECK_THROWS_AS(occluded_trajectory(spec), std::invalid_argument);
}
