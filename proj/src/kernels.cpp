#include "mg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mg {

std::string mode_name(SdeMode m) { return m == SdeMode::Contour ? "contour" : "trajectory"; }

SdeMode mode_from_name(const std::string& s) {
    if (s == "contour") return SdeMode::Contour;
    if (s == "trajectory") return SdeMode::Trajectory;
    throw std::invalid_argument("unknown kernel mode: " + s);
}

void SdeSpec::validate() const {
    if (!(kappa >= 0.0) || !(alpha >= 0.0)) throw std::invalid_argument("sde: kappa and alpha must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("sde: dt must be positive");
    if (!(T >= dt)) throw std::invalid_argument("sde: T must be >= dt");
    if (n_paths < 1) throw std::invalid_argument("sde: n_paths must be >= 1");
    if (!(scale > 0.0)) throw std::invalid_argument("sde: scale must be positive");
}

int SdeSpec::n_steps() const { return static_cast<int>(std::llround(T / dt)); }

SdeSpec make_sde(SdeMode mode, double kappa, double alpha, double reach, std::int64_t n_paths, std::uint64_t seed) {
    if (!(kappa > 0.0)) throw std::invalid_argument("sde: default horizon needs kappa > 0");
    if (!(reach > 0.0)) throw std::invalid_argument("sde: reach must be positive");
    SdeSpec s;
    s.mode = mode;
    s.kappa = kappa;
    s.alpha = alpha;
    s.T = kPi / (2.0 * kappa * kappa);
    s.dt = s.T / 200.0;
    s.n_paths = n_paths;
    s.seed = seed;
    s.scale = reach / s.T;
    s.validate();
    return s;
}

void KernelLattice::validate() const {
    if (half_width < 0 || n_s < 1 || n_theta < 1 || n_v < 1 || !(v_step > 0.0))
        throw std::invalid_argument("kernel lattice: invalid dimensions");
    if (mode == SdeMode::Contour && n_s != 1) throw std::invalid_argument("kernel lattice: contour mode has no s axis");
}

bool KernelLattice::same_shape(const KernelLattice& o) const {
    return mode == o.mode && half_width == o.half_width && n_s == o.n_s && n_theta == o.n_theta && n_v == o.n_v &&
           v_min == o.v_min && v_step == o.v_step;
}

KernelLattice contour_lattice(const ManifoldGrid& g, int half_width) {
    g.validate();
    KernelLattice l;
    l.mode = SdeMode::Contour;
    l.half_width = half_width;
    l.n_s = 1;
    l.n_theta = g.n_theta;
    l.n_v = 2 * g.n_v - 1;
    l.v_step = g.n_v > 1 ? 2.0 * g.v_max / (g.n_v - 1) : 1.0;
    l.v_min = -(g.n_v - 1) * l.v_step;
    l.validate();
    return l;
}

KernelLattice trajectory_lattice(const ManifoldGrid& g, int half_width, int n_s) {
    g.validate();
    KernelLattice l;
    l.mode = SdeMode::Trajectory;
    l.half_width = half_width;
    l.n_s = n_s;
    l.n_theta = g.n_theta;
    l.n_v = g.n_v;
    l.v_step = g.n_v > 1 ? 2.0 * g.v_max / (g.n_v - 1) : 1.0;
    l.v_min = g.n_v > 1 ? -g.v_max : 0.0;
    l.validate();
    return l;
}

double KernelGrid::mass(int m) const {
    double sum = 0.0;
    const std::size_t n = lattice.cells();
    for (std::size_t i = 0; i < n; ++i) sum += weights[member_offset(m) + i];
    return totals[m] > 0 ? sum / totals[m] : 0.0;
}

double KernelGrid::max_value(int m) const {
    const auto b = weights.begin() + member_offset(m);
    const float mx = *std::max_element(b, b + lattice.cells());
    return totals[m] > 0 ? mx / totals[m] : 0.0;
}

int KernelGrid::member_for(double v) const {
    int best = 0;
    for (int m = 1; m < n_members(); ++m)
        if (std::abs(member_v[m] - v) < std::abs(member_v[best] - v)) best = m;
    return best;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

namespace {

// Unwrapped path state; theta is not reduced so that increments stay exact.
struct State {
    double q1, q2, s, theta, v;
};

struct Stepper {
    const SdeSpec& spec;
    double sq_dt, sk, sa;
    std::normal_distribution<double> normal{0.0, 1.0};

    explicit Stepper(const SdeSpec& sp)
        : spec(sp),
          sq_dt(std::sqrt(sp.dt)),
          sk(std::sqrt(2.0) * sp.kappa),
          sa(std::sqrt(2.0) * sp.alpha) {}

    void step(State& x, std::mt19937_64& rng) {
        const double c = std::cos(x.theta), s = std::sin(x.theta);
        const double h = spec.scale * spec.dt;
        if (spec.mode == SdeMode::Contour) {
            x.q1 += -s * h;
            x.q2 += c * h;
        } else {
            x.q1 += x.v * c * h;
            x.q2 += x.v * s * h;
            x.s += h;
        }
        const double w1 = normal(rng), w2 = normal(rng);
        x.theta += sk * sq_dt * w1;
        x.v += sa * sq_dt * w2;
    }
};

// Nearest lattice cell of a relative state, or -1 when off the lattice.
std::ptrdiff_t lattice_cell(const KernelLattice& lat, const State& x) {
    const int R = lat.half_width;
    const long i1 = std::lround(x.q1), i2 = std::lround(x.q2);
    if (i1 < -R || i1 > R || i2 < -R || i2 > R) return -1;
    int is = 0;
    if (lat.mode == SdeMode::Trajectory) {
        const long n = std::lround(x.s);
        if (n < 1 || n >= lat.n_s) return -1;
        is = static_cast<int>(n);
    }
    const long iv = std::lround((x.v - lat.v_min) / lat.v_step);
    if (iv < 0 || iv >= lat.n_v) return -1;
    long ith = std::lround(x.theta / (kTwoPi / lat.n_theta)) % lat.n_theta;
    if (ith < 0) ith += lat.n_theta;
    return static_cast<std::ptrdiff_t>(lat.index(static_cast<int>(i1 + R), static_cast<int>(i2 + R), is,
                                                 static_cast<int>(ith), static_cast<int>(iv)));
}

void deposit_path(const SdeSpec& spec, const KernelLattice& lat, double v0, std::uint64_t stream,
                  std::vector<std::uint32_t>& hist) {
    auto rng = path_rng(spec.seed, stream);
    Stepper st(spec);
    State x{0.0, 0.0, 0.0, 0.0, v0};
    const int n = spec.n_steps();
    for (int k = 0; k < n; ++k) {
        st.step(x, rng);
        const auto c = lattice_cell(lat, x);
        if (c >= 0) ++hist[c];
    }
}

std::uint64_t stream_id(int member, std::int64_t path) {
    return (static_cast<std::uint64_t>(member) << 40) ^ static_cast<std::uint64_t>(path);
}

void store_member(KernelGrid& K, int m, const std::vector<std::uint64_t>& counts) {
    const std::size_t off = K.member_offset(m);
    double total = 0.0;
    std::uint64_t mx = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        total += static_cast<double>(counts[i]);
        mx = std::max(mx, counts[i]);
    }
    K.totals[m] = total;
    if (mx > (1ULL << 24)) {
        // float cannot hold the counts exactly: keep normalized values instead
        K.exact_counts = false;
        double stored = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            K.weights[off + i] = static_cast<float>(counts[i] / total);
            stored += K.weights[off + i];
        }
        // normalize by what float kept so the mass stays 1 to double precision
        K.totals[m] = stored;
        return;
    }
    for (std::size_t i = 0; i < counts.size(); ++i) K.weights[off + i] = static_cast<float>(counts[i]);
}

KernelGrid empty_kernel(const SdeSpec& spec, const KernelLattice& lat) {
    spec.validate();
    lat.validate();
    if (spec.mode != lat.mode) throw std::invalid_argument("kernel: sde mode and lattice mode differ");
    if (lat.cells() == 0) throw std::invalid_argument("kernel: empty lattice");
    KernelGrid K;
    K.spec = spec;
    K.lattice = lat;
    if (spec.mode == SdeMode::Contour) K.member_v = {0.0};
    else
        for (int j = 0; j < lat.n_v; ++j) K.member_v.push_back(lat.v(j));
    K.weights.assign(lat.cells() * K.member_v.size(), 0.0f);
    K.totals.assign(K.member_v.size(), 0.0);
    return K;
}

KernelGrid estimate(const SdeSpec& spec, const KernelLattice& lat, bool parallel) {
    KernelGrid K = empty_kernel(spec, lat);
    const std::size_t cells = lat.cells();
    for (int m = 0; m < K.n_members(); ++m) {
        std::vector<std::uint64_t> counts(cells, 0);
        const double v0 = K.member_v[m];
        if (parallel) {
#pragma omp parallel
            {
                std::vector<std::uint32_t> local(cells, 0);
#pragma omp for schedule(static)
                for (std::int64_t p = 0; p < spec.n_paths; ++p) deposit_path(spec, lat, v0, stream_id(m, p), local);
                // integer sums: the merge order does not affect the result
#pragma omp critical
                for (std::size_t i = 0; i < cells; ++i) counts[i] += local[i];
            }
        } else {
            std::vector<std::uint32_t> local(cells, 0);
            for (std::int64_t p = 0; p < spec.n_paths; ++p) deposit_path(spec, lat, v0, stream_id(m, p), local);
            for (std::size_t i = 0; i < cells; ++i) counts[i] = local[i];
        }
        store_member(K, m, counts);
    }
    return K;
}

}  // namespace

std::vector<ManifoldPoint> simulate_path(const SdeSpec& spec, const ManifoldPoint& start, std::mt19937_64& rng) {
    spec.validate();
    Stepper st(spec);
    State x{start.q1, start.q2, start.s, start.theta, start.v};
    std::vector<ManifoldPoint> out;
    const int n = spec.n_steps();
    out.reserve(n + 1);
    out.push_back(make_point(x.q1, x.q2, x.s, x.theta, x.v));
    for (int k = 0; k < n; ++k) {
        st.step(x, rng);
        out.push_back(make_point(x.q1, x.q2, x.s, x.theta, x.v));
    }
    return out;
}

KernelGrid estimate_gamma0(const SdeSpec& spec, const KernelLattice& lat) {
    if (spec.mode != SdeMode::Contour) throw std::invalid_argument("estimate_gamma0: contour mode required");
    return estimate(spec, lat, true);
}

KernelGrid estimate_gamma(const SdeSpec& spec, const KernelLattice& lat) {
    if (spec.mode != SdeMode::Trajectory) throw std::invalid_argument("estimate_gamma: trajectory mode required");
    return estimate(spec, lat, true);
}

KernelGrid estimate_gamma0_reference(const SdeSpec& spec, const KernelLattice& lat) {
    if (spec.mode != SdeMode::Contour) throw std::invalid_argument("estimate_gamma0: contour mode required");
    return estimate(spec, lat, false);
}

KernelGrid estimate_gamma_reference(const SdeSpec& spec, const KernelLattice& lat) {
    if (spec.mode != SdeMode::Trajectory) throw std::invalid_argument("estimate_gamma: trajectory mode required");
    return estimate(spec, lat, false);
}

std::vector<std::vector<double>> parameter_slices(const SdeSpec& spec, const KernelLattice& lat, double v0,
                                                  const std::vector<int>& steps) {
    spec.validate();
    lat.validate();
    const int n = spec.n_steps();
    for (int k : steps)
        if (k < 0 || k > n) throw std::invalid_argument("parameter_slices: step out of range");
    // slices ignore s: project onto a one-node s axis
    KernelLattice flat = lat;
    flat.mode = SdeMode::Contour;
    flat.n_s = 1;
    const std::size_t cells = flat.cells();
    std::vector<std::vector<std::uint64_t>> counts(steps.size(), std::vector<std::uint64_t>(cells, 0));
#pragma omp parallel
    {
        std::vector<std::vector<std::uint64_t>> local(steps.size(), std::vector<std::uint64_t>(cells, 0));
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < spec.n_paths; ++p) {
            auto rng = path_rng(spec.seed, stream_id(0, p));
            Stepper st(spec);
            State x{0.0, 0.0, 0.0, 0.0, v0};
            for (int k = 0; k <= n; ++k) {
                if (k > 0) st.step(x, rng);
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    if (steps[i] != k) continue;
                    const auto c = lattice_cell(flat, x);
                    if (c >= 0) ++local[i][c];
                }
            }
        }
#pragma omp critical
        for (std::size_t i = 0; i < steps.size(); ++i)
            for (std::size_t c = 0; c < cells; ++c) counts[i][c] += local[i][c];
    }
    std::vector<std::vector<double>> out(steps.size(), std::vector<double>(cells));
    for (std::size_t i = 0; i < steps.size(); ++i)
        for (std::size_t c = 0; c < cells; ++c) out[i][c] = static_cast<double>(counts[i][c]) / spec.n_paths;
    return out;
}

namespace {

// Flux-limited upwind transport along the middle axis of an [outer][line][inner] array; the
// velocity (in cells per step) depends on the inner index only through inner % n_vel.
void transport_axis(std::vector<double>& rho, int n_outer, int n_line, int n_inner, const std::vector<double>& courant) {
    const int n_vel = static_cast<int>(courant.size());
    auto limiter = [](double r) { return std::max(0.0, std::min({2.0 * r, 0.5 * (1.0 + r), 2.0})); };
#pragma omp parallel
    {
        std::vector<double> flux(static_cast<std::size_t>(n_line + 1) * n_inner, 0.0);
#pragma omp for schedule(static)
        for (int o = 0; o < n_outer; ++o) {
            double* base = rho.data() + static_cast<std::size_t>(o) * n_line * n_inner;
            auto at = [&](int i, int k) { return base[static_cast<std::size_t>(i) * n_inner + k]; };
            // flux[f] is the flux through the face between cells f-1 and f; the end faces stay 0
            for (int f = 1; f < n_line; ++f) {
                double* fl = flux.data() + static_cast<std::size_t>(f) * n_inner;
                for (int k = 0; k < n_inner; ++k) {
                    const double c = courant[k % n_vel];
                    const double left = at(f - 1, k), right = at(f, k);
                    const double jump = right - left;
                    double value;
                    if (c >= 0.0) {
                        const double up = f >= 2 ? left - at(f - 2, k) : 0.0;
                        const double phi = jump != 0.0 ? limiter(up / jump) : 0.0;
                        value = c * left + 0.5 * c * (1.0 - c) * phi * jump;
                    } else {
                        const double up = f + 1 < n_line ? at(f + 1, k) - right : 0.0;
                        const double phi = jump != 0.0 ? limiter(up / jump) : 0.0;
                        value = c * right - 0.5 * c * (1.0 + c) * phi * jump;
                    }
                    fl[k] = value;
                }
            }
            for (int i = 0; i < n_line; ++i) {
                const double* in = flux.data() + static_cast<std::size_t>(i) * n_inner;
                const double* out = flux.data() + static_cast<std::size_t>(i + 1) * n_inner;
                double* r = base + static_cast<std::size_t>(i) * n_inner;
                for (int k = 0; k < n_inner; ++k) r[k] += in[k] - out[k];
            }
        }
    }
}

}  // namespace

std::vector<std::vector<double>> fp_reference(const SdeSpec& spec, const KernelLattice& lat, double v0,
                                              const std::vector<double>& times, const FpOptions& opt) {
    lat.validate();
    if (spec.kappa < 0 || spec.alpha < 0 || !(spec.scale > 0)) throw std::invalid_argument("fp_reference: invalid sde");
    for (int r : {opt.refine_q, opt.refine_theta, opt.refine_v})
        if (r < 1 || r % 2 == 0) throw std::invalid_argument("fp_reference: refinement factors must be odd");
    if (opt.pad_q < 0 || opt.pad_v < 0) throw std::invalid_argument("fp_reference: padding must be >= 0");
    if (times.empty()) return {};
    double t_end = 0.0;
    for (double t : times) {
        if (!(t >= 0.0)) throw std::invalid_argument("fp_reference: negative time");
        t_end = std::max(t_end, t);
    }

    const int R = lat.half_width + opt.pad_q;
    const int rq = opt.refine_q, rt = opt.refine_theta, rv = opt.refine_v;
    const int nq = (2 * R + 1) * rq;
    const int nth = lat.n_theta * rt;
    const int nv_coarse = lat.n_v + 2 * opt.pad_v;
    const int nv = nv_coarse * rv;
    const double dx = 1.0 / rq;
    const double dth = kTwoPi / nth;
    const double dv = lat.v_step / rv;
    const double v_lo = lat.v_min - opt.pad_v * lat.v_step;
    auto fine_theta = [&](int j) { return (j - (rt - 1) / 2) * dth; };
    auto fine_v = [&](int j) { return v_lo + (j / rv) * lat.v_step + (j % rv - (rv - 1) / 2) * dv; };

    // velocities in fine cells per unit parameter, per (theta, v)
    std::vector<double> u1(static_cast<std::size_t>(nth) * nv), u2(u1.size());
    double umax = 0.0;
    for (int a = 0; a < nth; ++a)
        for (int b = 0; b < nv; ++b) {
            const double th = fine_theta(a), v = fine_v(b);
            double x, y;
            if (spec.mode == SdeMode::Contour) {
                x = -std::sin(th);
                y = std::cos(th);
            } else {
                x = v * std::cos(th);
                y = v * std::sin(th);
            }
            u1[a * nv + b] = spec.scale * x / dx;
            u2[a * nv + b] = spec.scale * y / dx;
            umax = std::max({umax, std::abs(u1[a * nv + b]), std::abs(u2[a * nv + b])});
        }
    const double dk = spec.kappa * spec.kappa / (dth * dth);
    const double da = spec.alpha * spec.alpha / (dv * dv);
    double limit = std::numeric_limits<double>::infinity();
    if (umax > 0) limit = std::min(limit, 1.0 / umax);
    if (dk > 0) limit = std::min(limit, 0.5 / dk);
    if (da > 0) limit = std::min(limit, 0.5 / da);

    double dt = opt.dt;
    int n_steps;
    if (dt > 0.0) {
        if (dt > limit) throw CflError("fp_reference: time step violates the stability limit");
        n_steps = static_cast<int>(std::ceil(t_end / dt - 1e-9));
    } else {
        n_steps = std::max(1, static_cast<int>(std::ceil(t_end / (opt.safety * limit))));
        if (!std::isfinite(limit)) n_steps = 1;
        // a multiple of the number of requested times keeps evenly spaced times on steps
        const int k = static_cast<int>(times.size());
        n_steps = (n_steps + k - 1) / k * k;
        dt = t_end > 0 ? t_end / n_steps : 0.0;
    }

    const std::size_t plane = static_cast<std::size_t>(nth) * nv;
    std::vector<double> rho(static_cast<std::size_t>(nq) * nq * plane, 0.0);
    {
        const int c = R * rq + (rq - 1) / 2;
        const int jt = (rt - 1) / 2;
        const long iv = std::lround((v0 - v_lo) / lat.v_step);
        if (iv < 0 || iv >= nv_coarse) throw std::invalid_argument("fp_reference: v0 outside the lattice");
        const int jv = static_cast<int>(iv) * rv + (rv - 1) / 2;
        rho[(static_cast<std::size_t>(c) * nq + c) * plane + jt * nv + jv] = 1.0;
    }

    std::vector<double> c1(u1.size()), c2(u2.size());
    for (std::size_t i = 0; i < u1.size(); ++i) {
        c1[i] = u1[i] * dt;
        c2[i] = u2[i] * dt;
    }
    std::vector<double> tmp(plane);

    auto aggregate = [&]() {
        const KernelLattice& L = lat;
        const int n_q = L.n_q();
        std::vector<double> out(static_cast<std::size_t>(n_q) * n_q * L.n_theta * L.n_v, 0.0);
        for (int i1 = 0; i1 < nq; ++i1) {
            const int a1 = i1 / rq - opt.pad_q;
            if (a1 < 0 || a1 >= n_q) continue;
            for (int i2 = 0; i2 < nq; ++i2) {
                const int a2 = i2 / rq - opt.pad_q;
                if (a2 < 0 || a2 >= n_q) continue;
                const double* r = rho.data() + (static_cast<std::size_t>(i1) * nq + i2) * plane;
                for (int a = 0; a < nth; ++a) {
                    const int bt = a / rt;
                    for (int b = 0; b < nv; ++b) {
                        const int bv = b / rv - opt.pad_v;
                        if (bv < 0 || bv >= L.n_v) continue;
                        out[((static_cast<std::size_t>(a1) * n_q + a2) * L.n_theta + bt) * L.n_v + bv] += r[a * nv + b];
                    }
                }
            }
        }
        return out;
    };

    std::vector<int> want(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        want[i] = dt > 0 ? static_cast<int>(std::lround(times[i] / dt)) : 0;
    std::vector<std::vector<double>> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        if (want[i] == 0) out[i] = aggregate();

    for (int step = 1; step <= n_steps; ++step) {
        transport_axis(rho, 1, nq, nq * static_cast<int>(plane), c1);
        transport_axis(rho, nq, nq, static_cast<int>(plane), c2);
        const double lk = dk * dt, la = da * dt;
#pragma omp parallel for schedule(static) firstprivate(tmp)
        for (int cell = 0; cell < nq * nq; ++cell) {
            double* r = rho.data() + static_cast<std::size_t>(cell) * plane;
            if (lk > 0) {
                for (int a = 0; a < nth; ++a) {
                    const double* prev = r + ((a + nth - 1) % nth) * nv;
                    const double* cur = r + a * nv;
                    const double* next = r + ((a + 1) % nth) * nv;
                    for (int b = 0; b < nv; ++b) tmp[a * nv + b] = cur[b] + lk * (prev[b] - 2.0 * cur[b] + next[b]);
                }
                std::copy(tmp.begin(), tmp.end(), r);
            }
            if (la > 0) {
                for (int a = 0; a < nth; ++a) {
                    const double* cur = r + a * nv;
                    double* t = tmp.data() + a * nv;
                    for (int b = 0; b < nv; ++b) {
                        double d = 0.0;
                        if (b > 0) d += cur[b - 1] - cur[b];
                        if (b + 1 < nv) d += cur[b + 1] - cur[b];
                        t[b] = cur[b] + la * d;
                    }
                }
                std::copy(tmp.begin(), tmp.end(), r);
            }
        }
        for (std::size_t i = 0; i < times.size(); ++i)
            if (want[i] == step) out[i] = aggregate();
    }
    return out;
}

namespace {

// Linear weights along one axis: nodes i0, i0+1 with weight 1-f, f. Returns false when outside.
bool axis_weights(double x, int n, bool periodic, int& i0, double& f) {
    // Coordinates within rounding of a node land exactly on it, so edge nodes stay inside.
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9) x = r;
    if (periodic) {
        double u = x - std::floor(x / n) * n;
        i0 = static_cast<int>(std::floor(u));
        f = u - i0;
        if (i0 >= n) {
            i0 = 0;
            f = 0.0;
        }
        return true;
    }
    if (x < 0.0 || x > n - 1) return false;
    i0 = static_cast<int>(std::floor(x));
    f = x - i0;
    if (i0 == n - 1) f = 0.0;
    return true;
}

}  // namespace

double kernel_lookup(const KernelGrid& K, const ContourPoint& rel) {
    const auto& L = K.lattice;
    if (L.mode != SdeMode::Contour) throw std::invalid_argument("kernel_lookup: contour kernel required");
    int i1, i2, it, iv;
    double f1, f2, ft, fv;
    const int nq = L.n_q();
    if (!axis_weights(rel.q1 + L.half_width, nq, false, i1, f1)) return 0.0;
    if (!axis_weights(rel.q2 + L.half_width, nq, false, i2, f2)) return 0.0;
    if (!axis_weights((rel.v - L.v_min) / L.v_step, L.n_v, false, iv, fv)) return 0.0;
    axis_weights(rel.theta / (kTwoPi / L.n_theta), L.n_theta, true, it, ft);
    double sum = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double wa = a ? f1 : 1.0 - f1;
        if (wa == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            const double wb = wa * (b ? f2 : 1.0 - f2);
            if (wb == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                const double wc = wb * (c ? ft : 1.0 - ft);
                if (wc == 0.0) continue;
                const int th = (it + c) % L.n_theta;
                for (int d = 0; d < 2; ++d) {
                    const double wd = wc * (d ? fv : 1.0 - fv);
                    if (wd == 0.0) continue;
                    sum += wd * K.value(0, L.index(i1 + a, i2 + b, 0, th, iv + d));
                }
            }
        }
    }
    return sum;
}

double kernel_lookup(const KernelGrid& K, int member, const ManifoldPoint& rel) {
    const auto& L = K.lattice;
    if (L.mode != SdeMode::Trajectory) throw std::invalid_argument("kernel_lookup: trajectory kernel required");
    if (member < 0 || member >= K.n_members()) throw std::out_of_range("kernel_lookup: member out of range");
    int i1, i2, is, it, iv;
    double f1, f2, fs, ft, fv;
    const int nq = L.n_q();
    if (!axis_weights(rel.q1 + L.half_width, nq, false, i1, f1)) return 0.0;
    if (!axis_weights(rel.q2 + L.half_width, nq, false, i2, f2)) return 0.0;
    if (!axis_weights(rel.s, L.n_s, false, is, fs)) return 0.0;
    if (!axis_weights((rel.v - L.v_min) / L.v_step, L.n_v, false, iv, fv)) return 0.0;
    axis_weights(rel.theta / (kTwoPi / L.n_theta), L.n_theta, true, it, ft);
    double sum = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double wa = a ? f1 : 1.0 - f1;
        if (wa == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            const double wb = wa * (b ? f2 : 1.0 - f2);
            if (wb == 0.0) continue;
            for (int e = 0; e < 2; ++e) {
                const double we = wb * (e ? fs : 1.0 - fs);
                if (we == 0.0) continue;
                for (int c = 0; c < 2; ++c) {
                    const double wc = we * (c ? ft : 1.0 - ft);
                    if (wc == 0.0) continue;
                    const int th = (it + c) % L.n_theta;
                    for (int d = 0; d < 2; ++d) {
                        const double wd = wc * (d ? fv : 1.0 - fv);
                        if (wd == 0.0) continue;
                        sum += wd * K.value(member, L.index(i1 + a, i2 + b, is + e, th, iv + d));
                    }
                }
            }
        }
    }
    return sum;
}

void truncate_kernel(KernelGrid& K, double rel) {
    const std::size_t n = K.lattice.cells();
    for (int m = 0; m < K.n_members(); ++m) {
        const auto b = K.weights.begin() + K.member_offset(m);
        const float cut = static_cast<float>(rel * *std::max_element(b, b + n));
        for (std::size_t i = 0; i < n; ++i)
            if (b[i] < cut) b[i] = 0.0f;
    }
}

LiftedActivity estimate_on_grid(const SdeSpec& spec, const ManifoldGrid& grid, const ManifoldPoint& start) {
    spec.validate();
    grid.validate();
    if (spec.mode == SdeMode::Contour && grid.nt != 1)
        throw std::invalid_argument("estimate_on_grid: contour mode needs a one-frame grid");
    const std::size_t n = grid.size();
    std::vector<std::uint64_t> counts(n, 0);
    const double v_step = grid.n_v > 1 ? 2.0 * grid.v_max / (grid.n_v - 1) : 1.0;
    const double v_lo = grid.n_v > 1 ? -grid.v_max : 0.0;
    const long start_frame = std::lround((start.s - grid.t0) / grid.time_spacing);
    auto index = [&](std::size_t ix, std::size_t iy, std::size_t it, std::size_t ith, std::size_t iv) {
        return (((ix * grid.ny + iy) * grid.nt + it) * grid.n_theta + ith) * grid.n_v + iv;
    };
    auto cell = [&](const State& x) -> std::ptrdiff_t {
        const long ix = std::lround(x.q1 / grid.spacing), iy = std::lround(x.q2 / grid.spacing);
        if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) return -1;
        long it = 0;
        if (spec.mode == SdeMode::Trajectory) {
            it = std::lround((x.s - grid.t0) / grid.time_spacing);
            if (it == start_frame || it < 0 || it >= grid.nt) return -1;
        }
        const long iv = std::lround((x.v - v_lo) / v_step);
        if (iv < 0 || iv >= grid.n_v) return -1;
        long ith = std::lround(x.theta / (kTwoPi / grid.n_theta)) % grid.n_theta;
        if (ith < 0) ith += grid.n_theta;
        return static_cast<std::ptrdiff_t>(index(ix, iy, it, ith, iv));
    };
#pragma omp parallel
    {
        std::vector<std::uint32_t> local(n, 0);
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < spec.n_paths; ++p) {
            auto rng = path_rng(spec.seed, stream_id(0, p));
            Stepper st(spec);
            State x{start.q1, start.q2, start.s, start.theta, start.v};
            for (int k = 0; k < spec.n_steps(); ++k) {
                st.step(x, rng);
                const auto c = cell(x);
                if (c >= 0) ++local[c];
            }
        }
#pragma omp critical
        for (std::size_t i = 0; i < n; ++i) counts[i] += local[i];
    }
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    LiftedActivity out(grid, ActivityKind::Facilitation);
    if (total > 0)
        for (std::size_t i = 0; i < n; ++i) out.values[i] = counts[i] / total;
    return out;
}

std::vector<char> fan_neighborhood(const SdeSpec& spec, const KernelLattice& lat, int dilation) {
    if (spec.mode != SdeMode::Contour || lat.mode != SdeMode::Contour)
        throw std::invalid_argument("fan_neighborhood: contour kernels only");
    if (dilation < 0) throw std::invalid_argument("fan_neighborhood: negative dilation");
    const int R = lat.half_width, nq = lat.n_q();
    // bounds on the total turning and velocity change over the horizon, as rates
    const double k_max = 2.0 * spec.kappa * std::sqrt(spec.T) / spec.T;
    const double c_max = 2.0 * spec.alpha * std::sqrt(spec.T) / spec.T;
    // sampling steps keep consecutive samples well below one cell apart
    const int nk = 81, nc = 41, nt = 401;
    std::vector<char> seed(lat.cells(), 0);
    for (int a = 0; a < nk; ++a) {
        const double k = k_max * (2.0 * a / (nk - 1) - 1.0);
        for (int b = 0; b < nc; ++b) {
            const double c = c_max * (2.0 * b / (nc - 1) - 1.0);
            for (int i = 0; i < nt; ++i) {
                const double t = spec.T * i / (nt - 1);
                const ContourPoint p = contour_curve(ContourPoint{}, k, c, t);
                const long i1 = std::lround(spec.scale * p.q1), i2 = std::lround(spec.scale * p.q2);
                const long iv = std::lround((p.v - lat.v_min) / lat.v_step);
                if (i1 < -R || i1 > R || i2 < -R || i2 > R || iv < 0 || iv >= lat.n_v) continue;
                long ith = std::lround(wrap_angle(p.theta) / (kTwoPi / lat.n_theta)) % lat.n_theta;
                seed[lat.index(static_cast<int>(i1 + R), static_cast<int>(i2 + R), 0, static_cast<int>(ith),
                               static_cast<int>(iv))] = 1;
            }
        }
    }
    // box dilation, one axis at a time
    std::vector<char> cur = seed, next(lat.cells(), 0);
    const int dims[4] = {nq, nq, lat.n_theta, lat.n_v};
    for (int axis = 0; axis < 4; ++axis) {
        std::fill(next.begin(), next.end(), 0);
        for (int i1 = 0; i1 < nq; ++i1)
            for (int i2 = 0; i2 < nq; ++i2)
                for (int th = 0; th < lat.n_theta; ++th)
                    for (int v = 0; v < lat.n_v; ++v) {
                        if (!cur[lat.index(i1, i2, 0, th, v)]) continue;
                        int idx[4] = {i1, i2, th, v};
                        for (int d = -dilation; d <= dilation; ++d) {
                            int j[4] = {idx[0], idx[1], idx[2], idx[3]};
                            j[axis] += d;
                            if (axis == 2) {
                                j[2] = ((j[2] % dims[2]) + dims[2]) % dims[2];
                            } else if (j[axis] < 0 || j[axis] >= dims[axis]) {
                                continue;
                            }
                            next[lat.index(j[0], j[1], 0, j[2], j[3])] = 1;
                        }
                    }
        std::swap(cur, next);
    }
    return cur;
}

double fan_concentration(const KernelGrid& K, int dilation) {
    const auto mask = fan_neighborhood(K.spec, K.lattice, dilation);
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double v = K.value(0, i);
        total += v;
        if (mask[i]) inside += v;
    }
    return total > 0 ? inside / total : 0.0;
}

}  // namespace mg
