// Times the OpenMP kernels against their serial references and checks that they agree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "mg/gabor.hpp"
#include "mg/kernels.hpp"
#include "mg/population.hpp"
#include "mg/stimuli.hpp"

using namespace mg;

namespace {

double seconds(const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class V>
double max_abs_diff(const V& a, const V& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(double(a[i]) - double(b[i])));
    return d;
}

void row(const std::string& name, double serial, double parallel, double diff) {
    std::printf("%-22s reference %8.3f s  parallel %8.3f s  speedup %5.2f  max|diff| %.3g\n", name.c_str(), serial,
                parallel, serial / parallel, diff);
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial reference vs parallel kernels"};
    int threads = 0;
    std::int64_t paths = 20000;
    int size = 24;
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
    app.add_option("--paths", paths, "sample paths for kernel estimation");
    app.add_option("--size", size, "image side for filtering and facilitation");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);
    std::printf("threads %d\n", omp_get_max_threads());

    ManifoldGrid g;
    g.nx = size;
    g.ny = size;
    g.nt = 6;
    g.n_theta = 8;
    g.n_v = 5;
    CircleSpec cs;
    cs.nx = size;
    cs.ny = size;
    cs.n_frames = g.nt;
    cs.radius = size / 4.0;
    cs.vy = 0.25;
    const auto stim = dashed_circle(cs);

    LiftedActivity fa, fb;
    const double fs = seconds([&] { fa = energy_filter_reference(stim.volume, g); });
    const double fp = seconds([&] { fb = energy_filter(stim.volume, g); });
    row("energy_filter", fs, fp, max_abs_diff(fa.values, fb.values));

    const SdeSpec s = make_sde(SdeMode::Contour, 2.0, 1.0, 6.0, paths, 1);
    const KernelLattice lat = contour_lattice(g, 6);
    KernelGrid ka, kb;
    const double ks = seconds([&] { ka = estimate_gamma0_reference(s, lat); });
    const double kp = seconds([&] { kb = estimate_gamma0(s, lat); });
    row("estimate_gamma0", ks, kp, max_abs_diff(ka.weights, kb.weights));

    ManifoldGrid one = g;
    one.nt = 1;
    one.nx = one.ny = std::min(size, 16);
    LiftedActivity ft(one, ActivityKind::Thresholded);
    for (int x = 0; x < one.nx; ++x)
        for (int y = 0; y < one.ny; ++y)
            for (int th = 0; th < one.n_theta; ++th)
                for (int v = 0; v < one.n_v; ++v) ft.at(x, y, 0, th, v) = fb.at(x, y, g.nt / 2, th, v);
    LiftedActivity pa, pb;
    const double ps = seconds([&] { pa = facilitate_reference(ft, kb); });
    const double pp = seconds([&] { pb = facilitate(ft, kb); });
    row("facilitate", ps, pp, max_abs_diff(pa.values, pb.values));
    return 0;
}
