#include "mg/gabor.hpp"

#include <cmath>
#include <stdexcept>

#include "mg/geometry.hpp"

namespace mg {

using cplx = std::complex<double>;

std::pair<double, double> scales_from_frequency(double p_modulus, double v_max) {
    if (!(p_modulus > 0.0) || !(v_max > 0.0))
        throw std::domain_error("scales_from_frequency: p_modulus and v_max must be positive");
    const double nu_m = p_modulus * v_max;
    return {2.5 * kPi / (4.0 * p_modulus), kPi / (2.0 * nu_m)};
}

cplx gabor_profile(const GaborParams& g, double x1, double x2, double t) {
    const double dx = x1 - g.q1, dy = x2 - g.q2, dt = t - g.s;
    const double phase = g.p_modulus * (std::cos(g.theta) * dx + std::sin(g.theta) * dy) - g.nu * dt;
    const double env = std::exp(-(dx * dx + dy * dy) / (g.sigma_x * g.sigma_x) - dt * dt / (g.sigma_t * g.sigma_t));
    return std::polar(env, phase);
}

double sigmoid(double tau, double mu, double beta) { return 1.0 / (1.0 + std::exp(-mu * (tau - beta))); }

FiberTaps fiber_taps(double p_modulus, double theta, double v, double v_max, const FilterOptions& opt) {
    const auto [sx, st] = scales_from_frequency(p_modulus, v_max);
    const double w = std::max(1.0, opt.dc_width);
    FiberTaps k;
    const int gx_r = static_cast<int>(std::floor(opt.truncation * sx));
    const int gt_r = static_cast<int>(std::floor(opt.truncation * st));
    k.rx = static_cast<int>(std::floor(opt.truncation * w * sx));
    k.rt = static_cast<int>(std::floor(opt.truncation * w * st));
    const double p1 = p_modulus * std::cos(theta), p2 = p_modulus * std::sin(theta);
    const double nu = p_modulus * v;

    auto build = [](int r, int rg, double sigma, double wsigma, double freq, std::vector<cplx>& e,
                    std::vector<double>& g, std::vector<double>& wv, std::vector<cplx>& m) {
        e.assign(2 * r + 1, cplx(0.0));
        g.assign(2 * r + 1, 0.0);
        wv.assign(2 * r + 1, 0.0);
        m.assign(2 * r + 1, cplx(0.0));
        for (int d = -r; d <= r; ++d) {
            if (std::abs(d) <= rg) {
                g[d + r] = std::exp(-double(d) * d / (sigma * sigma));
                // conjugate of e^{i freq d}
                e[d + r] = std::polar(g[d + r], -freq * d);
            }
            wv[d + r] = std::exp(-double(d) * d / (wsigma * wsigma));
            m[d + r] = std::polar(wv[d + r], freq * d);
        }
    };
    build(k.rx, gx_r, sx, w * sx, p1, k.ex, k.gx, k.wx, k.mx);
    build(k.rx, gx_r, sx, w * sx, p2, k.ey, k.gy, k.wy, k.my);
    // temporal phase enters with the opposite sign: e^{-i nu t}
    build(k.rt, gt_r, st, w * st, -nu, k.et, k.gt, k.wt, k.mt);

    // sum_d a[d] e^{i freq d} for real or complex a
    auto mod_sum = [](const auto& a, int r, double freq) {
        cplx s(0.0);
        for (int d = -r; d <= r; ++d) s += a[d + r] * std::polar(1.0, freq * d);
        return s;
    };
    auto box = [&](const auto& ax, const auto& ay, const auto& at, double n) {
        return mod_sum(ax, k.rx, n * p1) * mod_sum(ay, k.rx, n * p2) * mod_sum(at, k.rt, -n * nu);
    };
    // Moments of the pieces against e^{i n (p.d - nu t)}.
    const cplx psi0 = box(k.ex, k.ey, k.et, 0.0);
    const cplx psi_m = box(k.ex, k.ey, k.et, -1.0);
    const double s0 = box(k.wx, k.wy, k.wt, 0.0).real();
    const cplx s1 = box(k.wx, k.wy, k.wt, 1.0);
    const cplx s2 = box(k.wx, k.wy, k.wt, 2.0);
    if (opt.conjugate_correction) {
        // zero response to constants and to the conjugate plane wave e^{-i(p.d - nu t)}:
        // [s0 s1; conj(s1) s0] [c; d] = [psi0; psi_m]
        const double det = s0 * s0 - std::norm(s1);
        k.c = (s0 * psi0 - s1 * psi_m) / det;
        k.d = (s0 * psi_m - std::conj(s1) * psi0) / det;
    } else {
        k.c = psi0 / s0;
        k.d = 0.0;
    }
    const double gsum = box(k.gx, k.gy, k.gt, 0.0).real();
    const cplx a = gsum - k.c * s1 - k.d * s2;
    k.norm = 0.25 * std::abs(a);
    return k;
}

namespace {

void check_dims(const StimulusVolume& f, const ManifoldGrid& grid) {
    grid.validate();
    const double stride = grid.spacing;
    if (stride != std::floor(stride)) throw std::invalid_argument("energy_filter: spatial spacing must be an integer stride");
    const int st = static_cast<int>(stride);
    if (grid.nx != (f.nx + st - 1) / st || grid.ny != (f.ny + st - 1) / st)
        throw std::invalid_argument("energy_filter: grid spatial dims do not match the stimulus");
    if (grid.nt != f.nt || grid.time_spacing != 1.0 || grid.t0 != 0.0)
        throw std::invalid_argument("energy_filter: grid temporal axis does not match the stimulus");
}

// out[i] = sum_d taps[d + r] in[i + d] along one axis of an (nx, ny, nt) array, zero padding.
template <typename In, typename Tap, typename Out>
void correlate_axis(const In* in, Out* out, int nx, int ny, int nt, int axis, const std::vector<Tap>& taps, int r) {
    const int n[3] = {nx, ny, nt};
    const std::ptrdiff_t stride[3] = {static_cast<std::ptrdiff_t>(ny) * nt, nt, 1};
    const int a = axis, b = (axis + 1) % 3, c = (axis + 2) % 3;
    for (int j = 0; j < n[b]; ++j)
        for (int k = 0; k < n[c]; ++k) {
            const std::ptrdiff_t base = j * stride[b] + k * stride[c];
            const In* line_in = in + base;
            Out* line_out = out + base;
            for (int i = 0; i < n[a]; ++i) {
                Out acc{};
                const int lo = std::max(-r, -i), hi = std::min(r, n[a] - 1 - i);
                for (int d = lo; d <= hi; ++d) acc += taps[d + r] * line_in[(i + d) * stride[a]];
                line_out[i * stride[a]] = acc;
            }
        }
}

template <typename T, typename Tap>
std::vector<T> separable(const std::vector<T>& f, int nx, int ny, int nt, const std::vector<Tap>& tx,
                         const std::vector<Tap>& ty, const std::vector<Tap>& tt, int rx, int rt) {
    std::vector<T> a(f.size()), b(f.size());
    correlate_axis(f.data(), a.data(), nx, ny, nt, 0, tx, rx);
    correlate_axis(a.data(), b.data(), nx, ny, nt, 1, ty, rx);
    correlate_axis(b.data(), a.data(), nx, ny, nt, 2, tt, rt);
    return a;
}

double energy(cplx r, double bound, const FiberTaps& k) {
    if (std::abs(r) <= bound) return 0.0;
    return std::norm(r) / (k.norm * k.norm);
}

}  // namespace

LiftedActivity energy_filter(const StimulusVolume& f, const ManifoldGrid& grid, const FilterOptions& opt) {
    check_dims(f, grid);
    LiftedActivity out(grid, ActivityKind::Raw);
    const int nx = f.nx, ny = f.ny, nt = f.nt;
    const int stride = static_cast<int>(grid.spacing);
    const int nth = grid.n_theta, nv = grid.n_v;

    // Fiber-independent envelope sums share the taps of any fiber.
    const FiberTaps k0 = fiber_taps(opt.p_modulus, 0.0, 0.0, grid.v_max, opt);
    std::vector<double> fabs(f.data.size());
    for (std::size_t i = 0; i < fabs.size(); ++i) fabs[i] = std::abs(f.data[i]);
    const auto wf = separable(f.data, nx, ny, nt, k0.wx, k0.wy, k0.wt, k0.rx, k0.rt);
    const auto wabs = separable(fabs, nx, ny, nt, k0.wx, k0.wy, k0.wt, k0.rx, k0.rt);
    const auto gabs = separable(fabs, nx, ny, nt, k0.gx, k0.gy, k0.gt, k0.rx, k0.rt);

#pragma omp parallel for schedule(dynamic, 1)
    for (int th = 0; th < nth; ++th) {
        const FiberTaps kth = fiber_taps(opt.p_modulus, grid.theta(th), 0.0, grid.v_max, opt);
        std::vector<cplx> a(f.data.size()), b(f.data.size()), mb(f.data.size()), m(f.data.size());
        correlate_axis(f.data.data(), a.data(), nx, ny, nt, 0, kth.ex, kth.rx);
        correlate_axis(a.data(), b.data(), nx, ny, nt, 1, kth.ey, kth.rx);
        if (opt.conjugate_correction) {
            correlate_axis(f.data.data(), a.data(), nx, ny, nt, 0, kth.mx, kth.rx);
            correlate_axis(a.data(), mb.data(), nx, ny, nt, 1, kth.my, kth.rx);
        }
        for (int iv = 0; iv < nv; ++iv) {
            const FiberTaps k = fiber_taps(opt.p_modulus, grid.theta(th), grid.v(iv), grid.v_max, opt);
            correlate_axis(b.data(), a.data(), nx, ny, nt, 2, k.et, k.rt);
            if (opt.conjugate_correction) correlate_axis(mb.data(), m.data(), nx, ny, nt, 2, k.mt, k.rt);
            const double cabs = std::abs(k.c) + std::abs(k.d);
            for (int ix = 0; ix < grid.nx; ++ix)
                for (int iy = 0; iy < grid.ny; ++iy)
                    for (int it = 0; it < nt; ++it) {
                        const std::size_t src = f.index(ix * stride, iy * stride, it);
                        cplx r = a[src] - k.c * wf[src];
                        if (opt.conjugate_correction) r -= k.d * m[src];
                        const double bound = opt.noise_floor * (gabs[src] + cabs * wabs[src]);
                        out.values[out.index(ix, iy, it, th, iv)] = energy(r, bound, k);
                    }
        }
    }
    return out;
}

LiftedActivity energy_filter_reference(const StimulusVolume& f, const ManifoldGrid& grid, const FilterOptions& opt) {
    check_dims(f, grid);
    LiftedActivity out(grid, ActivityKind::Raw);
    const int stride = static_cast<int>(grid.spacing);
    for (int th = 0; th < grid.n_theta; ++th)
        for (int iv = 0; iv < grid.n_v; ++iv) {
            const FiberTaps k = fiber_taps(opt.p_modulus, grid.theta(th), grid.v(iv), grid.v_max, opt);
            for (int ix = 0; ix < grid.nx; ++ix)
                for (int iy = 0; iy < grid.ny; ++iy)
                    for (int it = 0; it < grid.nt; ++it) {
                        const int x = ix * stride, y = iy * stride;
                        cplx r(0.0);
                        double gsum = 0.0, wsum = 0.0;
                        for (int dx = -k.rx; dx <= k.rx; ++dx) {
                            if (x + dx < 0 || x + dx >= f.nx) continue;
                            for (int dy = -k.rx; dy <= k.rx; ++dy) {
                                if (y + dy < 0 || y + dy >= f.ny) continue;
                                for (int dt = -k.rt; dt <= k.rt; ++dt) {
                                    if (it + dt < 0 || it + dt >= f.nt) continue;
                                    const double v = f.at(x + dx, y + dy, it + dt);
                                    const double gw = k.wx[dx + k.rx] * k.wy[dy + k.rx] * k.wt[dt + k.rt];
                                    const cplx h = k.ex[dx + k.rx] * k.ey[dy + k.rx] * k.et[dt + k.rt] - k.c * gw -
                                                   k.d * (k.mx[dx + k.rx] * k.my[dy + k.rx] * k.mt[dt + k.rt]);
                                    r += h * v;
                                    gsum += k.gx[dx + k.rx] * k.gy[dy + k.rx] * k.gt[dt + k.rt] * std::abs(v);
                                    wsum += gw * std::abs(v);
                                }
                            }
                        }
                        const double bound = opt.noise_floor * (gsum + (std::abs(k.c) + std::abs(k.d)) * wsum);
                        out.at(ix, iy, it, th, iv) = energy(r, bound, k);
                    }
        }
    return out;
}

LiftedActivity threshold_activity(const LiftedActivity& F, double mu, double beta) {
    if (F.kind != ActivityKind::Raw) throw std::invalid_argument("threshold_activity: input must be raw energy");
    LiftedActivity out(F.grid, ActivityKind::Thresholded);
    const std::size_t n = F.values.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out.values[i] = sigmoid(F.values[i], mu, beta);
    return out;
}

std::vector<LiftPoint> lift_surface(const LiftedActivity& F, double floor) {
    if (F.kind != ActivityKind::Raw) throw std::invalid_argument("lift_surface: input must be raw energy");
    std::vector<LiftPoint> pts;
    const auto& g = F.grid;
    const int nf = g.n_fibers();
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t) {
                const double* fib = &F.values[F.base_index(x, y, t) * nf];
                int best = 0;
                for (int i = 1; i < nf; ++i)
                    if (fib[i] > fib[best]) best = i;
                if (!(fib[best] > floor)) continue;
                LiftPoint p;
                p.x = x;
                p.y = y;
                p.t = t;
                p.theta_bin = best / g.n_v;
                p.v_bin = best % g.n_v;
                p.theta = g.theta(p.theta_bin);
                p.v = g.v(p.v_bin);
                p.value = fib[best];
                pts.push_back(p);
            }
    return pts;
}

}  // namespace mg
