#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mg/gabor.hpp"
#include "mg/geometry.hpp"
#include "mg/stimuli.hpp"
#include "support.hpp"

using namespace mg;

namespace {

ManifoldGrid small_grid(int nx, int ny, int nt, int n_theta = 8, int n_v = 5) {
    ManifoldGrid g;
    g.nx = nx;
    g.ny = ny;
    g.nt = nt;
    g.n_theta = n_theta;
    g.n_v = n_v;
    return g;
}

bool interior(const FiberTaps& k, const ManifoldGrid& g, int x, int y, int t) {
    return x >= k.rx && y >= k.rx && t >= k.rt && x < g.nx - k.rx && y < g.ny - k.rx && t < g.nt - k.rt;
}

}  // namespace

TEST_CASE("Gabor scales") {
    auto [sx, st] = scales_from_frequency(kPi / 2, 1.0);
    CHECK(sx == doctest::Approx(1.25));
    CHECK(st == doctest::Approx(1.0));
    CHECK(scales_from_frequency(kPi, 1.0).first == doctest::Approx(0.625));
    CHECK(scales_from_frequency(kPi / 2, 2.0).second == doctest::Approx(0.5));
    CHECK_THROWS_AS(scales_from_frequency(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(scales_from_frequency(1.0, -1.0), std::domain_error);
}

TEST_CASE("Gabor profile") {
    GaborParams g{3.0, -2.0, 5.0, kPi / 2, 0.6, kPi / 4, 1.25, 1.0};
    const auto c = gabor_profile(g, 3.0, -2.0, 5.0);
    CHECK(c.real() == 1.0);
    CHECK(c.imag() == 0.0);
    const auto e = gabor_profile(g, 3.0 + 1.25 * std::cos(1.1), -2.0 + 1.25 * std::sin(1.1), 5.0);
    CHECK(std::abs(e) == doctest::Approx(std::exp(-1.0)));
    // the zero-phase front moves at nu / |p| along (cos theta, sin theta)
    const double speed = g.nu / g.p_modulus;
    for (double t : {0.5, 1.0, 2.0}) {
        const double d = speed * t;
        const auto z = gabor_profile(g, 3.0 + d * std::cos(0.6) - 0.7 * std::sin(0.6), -2.0 + d * std::sin(0.6) + 0.7 * std::cos(0.6), 5.0 + t);
        CHECK(std::abs(std::arg(z)) < 1e-12);
    }
}

TEST_CASE("sigmoid") {
    CHECK(sigmoid(0.5, 10, 0.5) == 0.5);
    CHECK(sigmoid(1.0, 10, 0.5) == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))));
    CHECK(sigmoid(1.0, 10, 0.5) == doctest::Approx(0.9933).epsilon(1e-4));
    double prev = 0.0;
    for (double x = -2; x <= 3; x += 0.01) {
        const double y = sigmoid(x, 10, 0.5);
        CHECK(y >= prev);
        prev = y;
    }
}

TEST_CASE("filter taps are the truncated Gabor profile") {
    const FilterOptions opt;
    const auto k = fiber_taps(opt.p_modulus, 0.7, 0.5, 1.0, opt);
    GaborParams g{0, 0, 0, opt.p_modulus, 0.7, opt.p_modulus * 0.5, 1.25, 1.0};
    for (int dx = -3; dx <= 3; ++dx)
        for (int dy = -3; dy <= 3; ++dy)
            for (int dt = -3; dt <= 3; ++dt) {
                const auto h = k.ex[dx + k.rx] * k.ey[dy + k.rx] * k.et[dt + k.rt];
                CHECK(std::abs(h - std::conj(gabor_profile(g, dx, dy, dt))) < 1e-14);
            }
    // support is truncated at 3 sigma
    CHECK(k.rx == 3);
    CHECK(k.rt == 3);
}

TEST_CASE("separable filter matches the direct sum") {
    testing::Gen gen(31);
    StimulusVolume f(14, 12, 10);
    for (double& v : f.data) v = gen.uniform(0, 1);
    for (int stride : {1, 2}) {
        ManifoldGrid g = small_grid((14 + stride - 1) / stride, (12 + stride - 1) / stride, 10);
        g.spacing = stride;
        const auto a = energy_filter(f, g);
        const auto b = energy_filter_reference(f, g);
        double worst = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
            peak = std::max(peak, b.values[i]);
        }
        CHECK(peak > 0.01);
        CHECK(worst < 1e-10);
    }
    FilterOptions plain;
    plain.conjugate_correction = false;
    const auto g = small_grid(14, 12, 10);
    const auto a = energy_filter(f, g, plain), b = energy_filter_reference(f, g, plain);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-10);
}

TEST_CASE("grid mismatch is rejected") {
    StimulusVolume f(10, 10, 6);
    CHECK_THROWS_AS(energy_filter(f, small_grid(9, 10, 6)), std::invalid_argument);
    CHECK_THROWS_AS(energy_filter(f, small_grid(10, 10, 5)), std::invalid_argument);
}

TEST_CASE("constant stimulus gives zero energy away from the padding") {
    const auto g = small_grid(24, 24, 14);
    const auto k = fiber_taps(kPi / 2, 0, 0, 1, FilterOptions{});
    for (double level : {0.0, 0.37, 1.0}) {
        StimulusVolume f(24, 24, 14, level);
        const auto F = energy_filter(f, g);
        for (int x = 0; x < g.nx; ++x)
            for (int y = 0; y < g.ny; ++y)
                for (int t = 0; t < g.nt; ++t) {
                    if (!interior(k, g, x, y, t)) continue;
                    for (int th = 0; th < g.n_theta; ++th)
                        for (int v = 0; v < g.n_v; ++v) CHECK(F.at(x, y, t, th, v) == 0.0);
                }
    }
}

TEST_CASE("energy is invariant to adding a constant") {
    testing::Gen gen(32);
    const auto g = small_grid(24, 24, 14);
    const auto k = fiber_taps(kPi / 2, 0, 0, 1, FilterOptions{});
    StimulusVolume f(24, 24, 14);
    for (double& v : f.data) v = gen.uniform(0, 0.5);
    StimulusVolume f2 = f;
    for (double& v : f2.data) v += 0.4;
    const auto a = energy_filter(f, g), b = energy_filter(f2, g);
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t) {
                if (!interior(k, g, x, y, t)) continue;
                for (int th = 0; th < g.n_theta; ++th)
                    for (int v = 0; v < g.n_v; ++v) {
                        CHECK(a.at(x, y, t, th, v) >= 0.0);
                        CHECK(std::abs(a.at(x, y, t, th, v) - b.at(x, y, t, th, v)) < 1e-10);
                    }
            }
}

TEST_CASE("matched plane waves have unit energy") {
    ManifoldGrid g;
    g.nx = 28;
    g.ny = 28;
    g.nt = 14;
    const auto k = fiber_taps(kPi / 2, 0, 0, 1, FilterOptions{});
    for (int th : {0, 3, 6}) {
        for (int iv : {0, 4, 7}) {
            const auto f = plane_wave(28, 28, 14, kPi / 2, g.theta(th), g.v(iv), 0.3);
            const auto F = energy_filter(f, g);
            for (int x = k.rx; x < g.nx - k.rx; ++x)
                for (int y = k.rx; y < g.ny - k.rx; ++y)
                    for (int t = k.rt; t < g.nt - k.rt; ++t) {
                        CHECK(std::abs(F.at(x, y, t, th, iv) - 1.0) < 0.05);
                        CHECK(F.at(x, y, t, (th + 4) % 16, iv) < 0.1);
                    }
        }
    }
    CHECK_THROWS_AS(plane_wave(8, 8, 4, 3.5, 0, 0), std::domain_error);
}

TEST_CASE("quarter-turn rotation permutes the orientation axis") {
    testing::Gen gen(33);
    const int n = 20;
    StimulusVolume f(n, n, 9), r(n, n, 9);
    for (double& v : f.data) v = gen.uniform(0, 1);
    // r(x, y) = f(R^{-1}(x, y)) with R a quarter turn about the grid center
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int t = 0; t < 9; ++t) r.at(x, y, t) = f.at(y, n - 1 - x, t);
    const auto g = small_grid(n, n, 9);
    const auto F = energy_filter(f, g), G = energy_filter(r, g);
    const int quarter = g.n_theta / 4;
    double worst = 0.0;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int t = 0; t < 9; ++t)
                for (int th = 0; th < g.n_theta; ++th)
                    for (int v = 0; v < g.n_v; ++v)
                        worst = std::max(worst, std::abs(G.at(x, y, t, (th + quarter) % g.n_theta, v) -
                                                         F.at(y, n - 1 - x, t, th, v)));
    CHECK(worst < 1e-10);
}

TEST_CASE("one-bin rotation permutes the orientation axis up to resampling") {
    ManifoldGrid g;
    g.nx = 48;
    g.ny = 48;
    g.nt = 12;
    const double th0 = 0.3;
    const double step = kTwoPi / g.n_theta;
    // Smooth translating ridge; sharp edges make bilinear resampling of F the dominant error.
    auto ridge = [](double th) {
        StimulusVolume f(48, 48, 12);
        for (int t = 0; t < 12; ++t)
            for (int x = 0; x < 48; ++x)
                for (int y = 0; y < 48; ++y) {
                    const double u = (x - 23.5) * std::cos(th) + (y - 23.5) * std::sin(th) - 0.5 * (t - 5.5);
                    f.at(x, y, t) = std::exp(-u * u / 18.0);
                }
        return f;
    };
    const auto F = energy_filter(ridge(th0), g);
    const auto G = energy_filter(ridge(th0 + step), g);
    const double c = 23.5;
    const double cs = std::cos(step), sn = std::sin(step);
    double num = 0.0, den = 0.0;
    for (int x = 0; x < 48; ++x)
        for (int y = 0; y < 48; ++y) {
            if (std::hypot(x - c, y - c) > 14) continue;
            // source position R^{-1}(x - c) + c, bilinear in F
            const double sx = cs * (x - c) + sn * (y - c) + c;
            const double sy = -sn * (x - c) + cs * (y - c) + c;
            const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            for (int t = 4; t < 8; ++t)
                for (int th = 0; th < g.n_theta; ++th)
                    for (int v = 0; v < g.n_v; ++v) {
                        const double src = (1 - fx) * (1 - fy) * F.at(x0, y0, t, th, v) +
                                           fx * (1 - fy) * F.at(x0 + 1, y0, t, th, v) +
                                           (1 - fx) * fy * F.at(x0, y0 + 1, t, th, v) +
                                           fx * fy * F.at(x0 + 1, y0 + 1, t, th, v);
                        const double dst = G.at(x, y, t, (th + 1) % g.n_theta, v);
                        num += (dst - src) * (dst - src);
                        den += dst * dst;
                    }
        }
    CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("thresholding and lifting surface") {
    ManifoldGrid g;
    g.nx = 24;
    g.ny = 24;
    g.nt = 10;
    const auto F = energy_filter(plane_wave(24, 24, 10, kPi / 2, g.theta(5), g.v(6)), g);
    const auto FT = threshold_activity(F, 10, 0.5);
    CHECK(FT.kind == ActivityKind::Thresholded);
    for (std::size_t i = 0; i < F.values.size(); ++i) CHECK(FT.values[i] == sigmoid(F.values[i], 10, 0.5));
    CHECK_THROWS_AS(threshold_activity(FT, 10, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lift_surface(FT, 0.1), std::invalid_argument);

    const auto k = fiber_taps(kPi / 2, 0, 0, 1, FilterOptions{});
    int n = 0;
    for (const auto& p : lift_surface(F, 0.5)) {
        if (!interior(k, g, p.x, p.y, p.t)) continue;
        ++n;
        const bool direct = p.theta_bin == 5 && p.v_bin == 6;
        const bool flipped = p.theta_bin == 13 && p.v_bin == 2;
        CHECK((direct || flipped));
    }
    CHECK(n > 0);
    CHECK(lift_surface(F, 1e6).empty());
    CHECK(lift_surface(energy_filter(StimulusVolume(24, 24, 10, 0.0), g), 0.0).empty());
}

TEST_CASE("translating circle lifts to its normal orientation and normal velocity") {
    CircleSpec spec;
    spec.nx = 48;
    spec.ny = 48;
    spec.n_frames = 16;
    spec.radius = 14;
    spec.n_segments = 1;
    spec.gap_fraction = 0.01;
    const auto circ = dashed_circle(spec);
    ManifoldGrid g;
    g.nx = 48;
    g.ny = 48;
    g.nt = 16;
    const auto F = energy_filter(circ.volume, g);
    const int t = 8;
    int total = 0, ok = 0;
    for (int i = 0; i < 64; ++i) {
        const double phi = kTwoPi * (i + 0.5) / 64;
        const auto c = circ.center(t);
        const int x = static_cast<int>(std::lround(c[0] + spec.radius * std::cos(phi)));
        const int y = static_cast<int>(std::lround(c[1] + spec.radius * std::sin(phi)));
        const double* fib = &F.values[F.base_index(x, y, t) * g.n_fibers()];
        const int best = static_cast<int>(std::max_element(fib, fib + g.n_fibers()) - fib);
        const int tb = best / g.n_v, vb = best % g.n_v;
        const int want_t = g.nearest_theta(phi), want_v = g.nearest_v(circ.normal_velocity(phi));
        auto near = [&](int a, int b) {
            int d = std::abs(tb - a) % g.n_theta;
            d = std::min(d, g.n_theta - d);
            return d <= 1 && std::abs(vb - b) <= 1;
        };
        ++total;
        if (near(want_t, want_v) || near((want_t + g.n_theta / 2) % g.n_theta, g.n_v - 1 - want_v)) ++ok;
    }
    CHECK(ok >= 0.9 * total);
}
