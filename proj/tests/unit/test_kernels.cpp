#include <cmath>
#include <numeric>

#include <omp.h>

#include "doctest.h"
#include "mg/kernels.hpp"
#include "support.hpp"

using namespace mg;

namespace {

SdeSpec deterministic_spec(SdeMode mode) {
    SdeSpec s;
    s.mode = mode;
    s.kappa = 0.0;
    s.alpha = 0.0;
    s.T = 1.0;
    s.dt = 0.01;
    s.scale = 3.0;
    s.n_paths = 1;
    return s;
}

KernelLattice small_contour_lattice() {
    ManifoldGrid g;
    g.nx = g.ny = g.nt = 1;
    g.n_theta = 8;
    g.n_v = 3;
    return contour_lattice(g, 4);
}

KernelLattice small_trajectory_lattice() {
    ManifoldGrid g;
    g.nx = g.ny = g.nt = 1;
    g.n_theta = 8;
    g.n_v = 3;
    return trajectory_lattice(g, 4, 5);
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("default sde horizon and units") {
    const auto s = make_sde(SdeMode::Contour, 2.0, 1.0, 12.0, 10, 3);
    CHECK(s.T == doctest::Approx(kPi / 8));
    CHECK(s.dt == doctest::Approx(s.T / 200));
    CHECK(s.n_steps() == 200);
    CHECK(s.scale * s.T == doctest::Approx(12.0));
    SdeSpec bad = s;
    bad.n_paths = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.T = s.dt / 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK(mode_from_name(mode_name(SdeMode::Trajectory)) == SdeMode::Trajectory);
    CHECK_THROWS_AS(mode_from_name("spiral"), std::invalid_argument);
}

TEST_CASE("zero diffusion contour path is the integral curve of X1") {
    const auto spec = deterministic_spec(SdeMode::Contour);
    std::mt19937_64 rng(1);
    const auto start = make_point(1.0, -2.0, 0.0, 0.7, 0.4);
    const auto path = simulate_path(spec, start, rng);
    REQUIRE(path.size() == 101);
    const ContourPoint xi0 = make_contour_point(1.0, -2.0, 0.7, 0.4);
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto c = contour_curve(xi0, 0.0, 0.0, spec.scale * spec.dt * k);
        CHECK(path[k].q1 == doctest::Approx(c.q1).epsilon(1e-12));
        CHECK(path[k].q2 == doctest::Approx(c.q2).epsilon(1e-12));
        CHECK(path[k].theta == doctest::Approx(0.7));
        CHECK(path[k].v == doctest::Approx(0.4));
    }
}

TEST_CASE("zero diffusion trajectory path is the integral curve of X5") {
    const auto spec = deterministic_spec(SdeMode::Trajectory);
    std::mt19937_64 rng(1);
    const auto start = make_point(0.5, 0.5, 2.0, 2.1, 0.8);
    const auto path = simulate_path(spec, start, rng);
    for (std::size_t k = 0; k < path.size(); k += 10) {
        const auto c = trajectory_curve(start, 0.0, 0.0, spec.scale * spec.dt * k);
        CHECK(testing::point_distance(path[k], c) < 1e-12);
    }
}

TEST_CASE("fiber variance grows as 2 kappa^2 t and 2 alpha^2 t") {
    auto spec = make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 1, 9);
    spec.dt = spec.T / 50;
    const int n = 20000;
    double st = 0, st2 = 0, sv = 0, sv2 = 0;
    for (int p = 0; p < n; ++p) {
        auto rng = path_rng(spec.seed, p);
        const auto path = simulate_path(spec, make_point(0, 0, 0, 0, 0), rng);
        // accumulate theta unwrapped: sum the wrapped increments
        double th = 0.0;
        for (std::size_t k = 1; k < path.size(); ++k) {
            double d = path[k].theta - path[k - 1].theta;
            d -= kTwoPi * std::round(d / kTwoPi);
            th += d;
        }
        const double v = path.back().v;
        st += th;
        st2 += th * th;
        sv += v;
        sv2 += v * v;
    }
    const double var_t = (st2 - st * st / n) / (n - 1), var_v = (sv2 - sv * sv / n) / (n - 1);
    const double et = 2 * 4.0 * spec.T, ev = 2 * 1.0 * spec.T;
    CHECK(std::abs(var_t - et) < 3 * et * std::sqrt(2.0 / (n - 1)));
    CHECK(std::abs(var_v - ev) < 3 * ev * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("rng streams are reproducible and distinct") {
    auto a = path_rng(5, 17), b = path_rng(5, 17), c = path_rng(5, 18), d = path_rng(6, 17);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
    CHECK(splitmix64(0) != splitmix64(1));
}

TEST_CASE("contour kernel: unit mass, drift direction, thread independence") {
    const auto lat = small_contour_lattice();
    const auto spec = make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 4000, 21);
    omp_set_num_threads(1);
    const auto k1 = estimate_gamma0(spec, lat);
    omp_set_num_threads(3);
    const auto k3 = estimate_gamma0(spec, lat);
    omp_set_num_threads(omp_get_num_procs());
    const auto ks = estimate_gamma0_reference(spec, lat);
    CHECK(k1.weights == k3.weights);
    CHECK(k1.weights == ks.weights);
    CHECK(k1.totals == ks.totals);
    CHECK(k1.exact_counts);
    CHECK(k1.mass(0) == doctest::Approx(1.0).epsilon(1e-12));
    double m1 = 0, m2 = 0;
    for (int i1 = 0; i1 < lat.n_q(); ++i1)
        for (int i2 = 0; i2 < lat.n_q(); ++i2)
            for (int a = 0; a < lat.n_theta; ++a)
                for (int b = 0; b < lat.n_v; ++b) {
                    const double w = k1.value(0, lat.index(i1, i2, 0, a, b));
                    CHECK(w >= 0.0);
                    m1 += w * (i1 - lat.half_width);
                    m2 += w * (i2 - lat.half_width);
                }
    // theta0 = 0 drifts along +q2
    CHECK(m2 > 1.0);
    CHECK(std::abs(m1) < 0.1);
    auto other = spec;
    other.seed = 22;
    CHECK(estimate_gamma0(other, lat).weights != k1.weights);
    CHECK_THROWS_AS(estimate_gamma(spec, lat), std::invalid_argument);
}

TEST_CASE("trajectory kernel: no mass at delta s = 0, serial equals parallel") {
    const auto lat = small_trajectory_lattice();
    const auto spec = make_sde(SdeMode::Trajectory, 2.0, 1.0, 4.0, 2000, 4);
    omp_set_num_threads(2);
    const auto K = estimate_gamma(spec, lat);
    omp_set_num_threads(omp_get_num_procs());
    const auto R = estimate_gamma_reference(spec, lat);
    CHECK(K.weights == R.weights);
    REQUIRE(K.n_members() == 3);
    for (int m = 0; m < K.n_members(); ++m) {
        CHECK(K.member_v[m] == doctest::Approx(lat.v(m)));
        CHECK(K.mass(m) == doctest::Approx(1.0).epsilon(1e-12));
        double at_zero = 0;
        for (int i1 = 0; i1 < lat.n_q(); ++i1)
            for (int i2 = 0; i2 < lat.n_q(); ++i2)
                for (int a = 0; a < lat.n_theta; ++a)
                    for (int b = 0; b < lat.n_v; ++b) at_zero += K.value(m, lat.index(i1, i2, 0, a, b));
        CHECK(at_zero == 0.0);
    }
    CHECK(K.member_for(0.9) == 2);
    CHECK(K.member_for(-0.2) == 1);
}

TEST_CASE("kernel lookup: nodes, outside support, periodic theta") {
    const auto lat = small_contour_lattice();
    const auto K = estimate_gamma0(make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 3000, 8), lat);
    testing::Gen gen(31);
    for (int trial = 0; trial < 200; ++trial) {
        const int i1 = gen.integer(0, lat.n_q() - 1), i2 = gen.integer(0, lat.n_q() - 1);
        const int a = gen.integer(0, lat.n_theta - 1), b = gen.integer(0, lat.n_v - 1);
        const auto rel = make_contour_point(i1 - lat.half_width, i2 - lat.half_width, lat.theta(a), lat.v(b));
        CHECK(kernel_lookup(K, rel) == K.value(0, lat.index(i1, i2, 0, a, b)));
    }
    CHECK(kernel_lookup(K, make_contour_point(4.5, 0, 0, 0)) == 0.0);
    CHECK(kernel_lookup(K, make_contour_point(0, -4.01, 0, 0)) == 0.0);
    CHECK(kernel_lookup(K, make_contour_point(0, 0, 0, lat.v(lat.n_v - 1) + 0.1)) == 0.0);
    // halfway between the last and the first theta bin
    const double mid = kTwoPi - 0.5 * kTwoPi / lat.n_theta;
    const int c = lat.half_width;
    const double expect = 0.5 * (K.value(0, lat.index(c, c + 1, 0, lat.n_theta - 1, 2)) +
                                 K.value(0, lat.index(c, c + 1, 0, 0, 2)));
    CHECK(kernel_lookup(K, make_contour_point(0, 1, mid, 0)) == doctest::Approx(expect).epsilon(1e-12));
    // halfway between spatial nodes
    const double e2 = 0.5 * (K.value(0, lat.index(c, c + 1, 0, 0, 2)) + K.value(0, lat.index(c, c + 2, 0, 0, 2)));
    CHECK(kernel_lookup(K, make_contour_point(0, 1.5, 0, 0)) == doctest::Approx(e2).epsilon(1e-12));
}

TEST_CASE("trajectory lookup reads the member's lattice") {
    const auto lat = small_trajectory_lattice();
    const auto K = estimate_gamma(make_sde(SdeMode::Trajectory, 2.0, 1.0, 4.0, 1000, 2), lat);
    testing::Gen gen(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = gen.integer(0, 2), i1 = gen.integer(0, 8), i2 = gen.integer(0, 8), is = gen.integer(0, 4);
        const int a = gen.integer(0, 7), b = gen.integer(0, 2);
        const auto rel = make_point(i1 - 4, i2 - 4, is, lat.theta(a), lat.v(b));
        CHECK(kernel_lookup(K, m, rel) == K.value(m, lat.index(i1, i2, is, a, b)));
    }
    CHECK(kernel_lookup(K, 0, make_point(0, 0, -0.5, 0, 0)) == 0.0);
    CHECK(kernel_lookup(K, 0, make_point(0, 0, 4.5, 0, 0)) == 0.0);
    CHECK_THROWS_AS(kernel_lookup(K, make_contour_point(0, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("truncation drops small weights only") {
    auto K = estimate_gamma0(make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 2000, 3), small_contour_lattice());
    const auto before = K.weights;
    const double mx = K.max_value(0);
    truncate_kernel(K, 0.05);
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i] / K.totals[0] >= 0.05 * mx) CHECK(K.weights[i] == before[i]);
        else CHECK(K.weights[i] == 0.0f);
    }
}

TEST_CASE("fp_reference: pure transport moves the point mass along X1") {
    SdeSpec spec = deterministic_spec(SdeMode::Contour);
    spec.scale = 1.0;
    KernelLattice lat;
    lat.half_width = 5;
    lat.n_theta = 4;
    lat.n_v = 1;
    lat.v_min = 0;
    lat.v_step = 1;
    FpOptions opt;
    opt.refine_q = 1;
    opt.refine_theta = 1;
    opt.refine_v = 1;
    opt.pad_v = 0;
    const auto out = fp_reference(spec, lat, 0.0, {0.0, 3.0}, opt);
    REQUIRE(out.size() == 2);
    const int c = lat.half_width;
    CHECK(out[0][lat.index(c, c, 0, 0, 0)] == 1.0);
    // theta = 0: X1 points along +q2
    double mass = 0, mean2 = 0, mean1 = 0;
    for (int i1 = 0; i1 < lat.n_q(); ++i1)
        for (int i2 = 0; i2 < lat.n_q(); ++i2) {
            const double w = out[1][lat.index(i1, i2, 0, 0, 0)];
            mass += w;
            mean1 += w * (i1 - c);
            mean2 += w * (i2 - c);
        }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mean2 == doctest::Approx(3.0).epsilon(0.02));
    // a step size of exactly one cell moves the mass exactly
    opt.dt = 1.0;
    const auto exact = fp_reference(spec, lat, 0.0, {3.0}, opt);
    CHECK(exact[0][lat.index(c, c + 3, 0, 0, 0)] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fp_reference: pure diffusion on the fiber") {
    SdeSpec spec;
    spec.mode = SdeMode::Contour;
    spec.kappa = 0.5;
    spec.alpha = 1.0;
    spec.dt = 0.01;
    spec.T = 1.0;
    spec.scale = 1e-12;  // no spatial motion
    KernelLattice lat;
    lat.half_width = 0;
    lat.n_theta = 64;
    lat.n_v = 81;
    lat.v_step = 0.1;
    lat.v_min = -4.0;
    FpOptions opt;
    opt.refine_q = 1;
    opt.refine_theta = 1;
    opt.refine_v = 1;
    opt.pad_v = 10;
    opt.pad_q = 0;
    const double t = 0.1;
    const auto out = fp_reference(spec, lat, 0.0, {t}, opt)[0];
    CHECK(total(out) == doctest::Approx(1.0).epsilon(1e-9));
    double vt = 0, vv = 0;
    for (int a = 0; a < lat.n_theta; ++a)
        for (int b = 0; b < lat.n_v; ++b) {
            const double w = out[lat.index(0, 0, 0, a, b)];
            double th = lat.theta(a);
            if (th > kPi) th -= kTwoPi;
            vt += w * th * th;
            vv += w * lat.v(b) * lat.v(b);
        }
    // explicit central diffusion grows the lattice variance exactly like the continuum
    CHECK(vt == doctest::Approx(2 * 0.25 * t).epsilon(1e-6));
    CHECK(vv == doctest::Approx(2 * 1.0 * t).epsilon(1e-6));
}

TEST_CASE("fp_reference: stability limit and argument checks") {
    auto spec = make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 1, 1);
    const auto lat = small_contour_lattice();
    FpOptions opt;
    opt.dt = spec.T;
    CHECK_THROWS_AS(fp_reference(spec, lat, 0.0, {spec.T}, opt), CflError);
    opt.dt = 0;
    opt.refine_q = 2;
    CHECK_THROWS_AS(fp_reference(spec, lat, 0.0, {spec.T}, opt), std::invalid_argument);
    opt.refine_q = 1;
    CHECK_THROWS_AS(fp_reference(spec, lat, 50.0, {spec.T}, opt), std::invalid_argument);
    CHECK(fp_reference(spec, lat, 0.0, {}, opt).empty());
}

TEST_CASE("fp_reference stays nonnegative") {
    const auto spec = make_sde(SdeMode::Trajectory, 2.0, 1.0, 2.0, 1, 1);
    ManifoldGrid g;
    g.nx = g.ny = g.nt = 1;
    g.n_theta = 8;
    g.n_v = 5;
    const auto lat = trajectory_lattice(g, 4, 2);
    FpOptions opt;
    opt.refine_q = 3;
    opt.refine_v = 1;
    const auto out = fp_reference(spec, lat, 0.5, {spec.T / 4}, opt)[0];
    for (double w : out) CHECK(w >= -1e-15);
    // mass in the padding is not reported
    CHECK(total(out) <= 1.0 + 1e-12);
    CHECK(total(out) > 0.9);
}

TEST_CASE("parameter slices: start is a point mass, later mass spreads") {
    const auto lat = small_contour_lattice();
    const auto spec = make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 500, 5);
    const auto s = parameter_slices(spec, lat, 0.0, {0, 100, 200});
    const int c = lat.half_width;
    CHECK(s[0][lat.index(c, c, 0, 0, (lat.n_v - 1) / 2)] == 1.0);
    CHECK(total(s[1]) <= 1.0 + 1e-12);
    CHECK(*std::max_element(s[2].begin(), s[2].end()) < 0.5);
    CHECK_THROWS_AS(parameter_slices(spec, lat, 0.0, {201}), std::invalid_argument);
}

TEST_CASE("absolute-start estimate on a grid") {
    ManifoldGrid g;
    g.nx = g.ny = 15;
    g.nt = 1;
    g.n_theta = 8;
    g.n_v = 3;
    const auto spec = make_sde(SdeMode::Contour, 2.0, 1.0, 4.0, 2000, 12);
    const auto a = estimate_on_grid(spec, g, make_point(7, 7, 0, 0, 0));
    CHECK(total(a.values) == doctest::Approx(1.0).epsilon(1e-12));
    // the mass drifts to +y from (7, 7)
    double my = 0;
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int c = 0; c < g.n_theta; ++c)
                for (int d = 0; d < g.n_v; ++d) my += a.at(x, y, 0, c, d) * (y - 7);
    CHECK(my > 1.0);
    ManifoldGrid g3 = g;
    g3.nt = 3;
    CHECK_THROWS_AS(estimate_on_grid(spec, g3, make_point(7, 7, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("fan neighborhood") {
    ManifoldGrid g;
    g.nx = g.ny = 20;
    g.nt = 1;
    g.n_theta = 8;
    g.n_v = 3;
    const auto lat = contour_lattice(g, 5);
    // no diffusion: the kernel is the straight path, which is the whole fan
    auto s0 = make_sde(SdeMode::Contour, 2.0, 1.0, 5.0, 10, 1);
    s0.kappa = 0.0;
    s0.alpha = 0.0;
    const auto K0 = estimate_gamma0(s0, lat);
    CHECK(fan_concentration(K0, 1) == doctest::Approx(1.0));
    const auto m0 = fan_neighborhood(s0, lat, 0);
    CHECK(m0[lat.index(5, 5, 0, 0, lat.n_v / 2)]);       // origin
    CHECK(m0[lat.index(5, 10, 0, 0, lat.n_v / 2)]);      // end of the drift along +q2
    CHECK_FALSE(m0[lat.index(10, 5, 0, 0, lat.n_v / 2)]);
    // dilation grows the mask monotonically
    const auto s = make_sde(SdeMode::Contour, 2.0, 1.0, 5.0, 10, 1);
    std::size_t prev = 0;
    for (int d = 0; d <= 3; ++d) {
        const auto m = fan_neighborhood(s, lat, d);
        std::size_t n = 0;
        for (char c : m) n += c;
        CHECK(n >= prev);
        prev = n;
    }
    CHECK_THROWS(fan_neighborhood(make_sde(SdeMode::Trajectory, 2.0, 1.0, 5.0, 10, 1), lat, 2));
}
