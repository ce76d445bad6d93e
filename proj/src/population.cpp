#include "mg/population.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mg/gabor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mg {

void FacilitationConfig::validate() const {
    if (!(c_f >= 0.0)) throw std::invalid_argument("facilitation: c_f must be >= 0 (no inhibition)");
    if (!(truncation >= 0.0 && truncation < 1.0)) throw std::invalid_argument("facilitation: truncation must lie in [0, 1)");
    if (!(source_floor >= 0.0)) throw std::invalid_argument("facilitation: source floor must be >= 0");
}

namespace {

double grid_v_step(const ManifoldGrid& g) { return g.n_v > 1 ? 2.0 * g.v_max / (g.n_v - 1) : 1.0; }

void check_compatible(const KernelGrid& K, const ManifoldGrid& g) {
    g.validate();
    const auto& L = K.lattice;
    if (L.n_theta != g.n_theta) throw std::invalid_argument("facilitate: kernel and grid theta bins differ");
    if (std::abs(L.v_step - grid_v_step(g)) > 1e-12) throw std::invalid_argument("facilitate: kernel and grid v steps differ");
    if (L.mode == SdeMode::Trajectory) {
        if (K.n_members() != g.n_v) throw std::invalid_argument("facilitate: one kernel member per grid velocity required");
        for (int j = 0; j < g.n_v; ++j)
            if (std::abs(K.member_v[j] - g.v(j)) > 1e-12)
                throw std::invalid_argument("facilitate: kernel member velocities differ from the grid");
    }
}

// Node offset reach of the kernel support: |R d| <= R sqrt(2) + 1 in pixels.
int spatial_reach(const KernelGrid& K, const ManifoldGrid& g) {
    return static_cast<int>(std::ceil((K.lattice.half_width * std::sqrt(2.0) + 1.0) / g.spacing));
}

// Largest frame offset whose delta s lies on the kernel support.
int frame_reach(const KernelGrid& K, const ManifoldGrid& g) {
    if (K.lattice.mode == SdeMode::Contour) return 0;
    return static_cast<int>(std::floor((K.lattice.n_s - 1) / g.time_spacing + 1e-9));
}

// Relative element of output fiber (c, d) at node offset (dx, dy, dt) seen from source fiber (a, b).
ContourPoint contour_rel(const ManifoldGrid& g, int a, int b, int c, int d, int dx, int dy) {
    const double th = g.theta(a), cs = std::cos(th), sn = std::sin(th);
    const double x = dx * g.spacing, y = dy * g.spacing;
    ContourPoint r;
    r.q1 = cs * x + sn * y;
    r.q2 = -sn * x + cs * y;
    r.theta = kTwoPi * (((c - a) % g.n_theta + g.n_theta) % g.n_theta) / g.n_theta;
    r.v = g.v(d) - g.v(b);
    return r;
}

ManifoldPoint trajectory_rel(const ManifoldGrid& g, int a, int c, int d, int dx, int dy, int dt) {
    const double th = g.theta(a), cs = std::cos(th), sn = std::sin(th);
    const double x = dx * g.spacing, y = dy * g.spacing;
    ManifoldPoint r;
    r.q1 = cs * x + sn * y;
    r.q2 = -sn * x + cs * y;
    r.s = dt * g.time_spacing;
    r.theta = kTwoPi * (((c - a) % g.n_theta + g.n_theta) % g.n_theta) / g.n_theta;
    r.v = g.v(d);
    return r;
}

}  // namespace

struct Facilitator::Stencil {
    // Entries grouped by node offset; groups sorted by (dx, dy, dt).
    std::vector<int> dx, dy, dt;
    std::vector<std::uint32_t> start{0};
    std::vector<std::uint16_t> fiber;
    std::vector<double> weight;
    int dx_min = 0;
    std::vector<std::uint32_t> dx_start;  // first group with dx >= dx_min + i

    std::size_t groups() const { return dx.size(); }
};

Facilitator::Facilitator(const KernelGrid& K, const ManifoldGrid& grid, double truncation)
    : kernel_(K), grid_(grid) {
    check_compatible(K, grid);
    if (truncation > 0) truncate_kernel(kernel_, truncation);
}

Facilitator::~Facilitator() = default;

std::size_t Facilitator::stencil_entries() const {
    std::size_t n = 0;
    for (const auto& [k, s] : stencils_) n += s->weight.size();
    return n;
}

const Facilitator::Stencil& Facilitator::stencil(int a, int b) {
    const int key = a * grid_.n_v + b;
    auto it = stencils_.find(key);
    if (it != stencils_.end()) return *it->second;
    auto st = std::make_unique<Stencil>();
    const int rs = spatial_reach(kernel_, grid_);
    const int rt = frame_reach(kernel_, grid_);
    const bool contour = kernel_.lattice.mode == SdeMode::Contour;
    const int t_lo = contour ? 0 : 1;
    const int nf = grid_.n_fibers();
    st->dx_min = -rs;
    for (int dx = -rs; dx <= rs; ++dx) {
        st->dx_start.push_back(static_cast<std::uint32_t>(st->groups()));
        for (int dy = -rs; dy <= rs; ++dy)
            for (int dt = t_lo; dt <= rt; ++dt) {
                const std::size_t before = st->weight.size();
                for (int f = 0; f < nf; ++f) {
                    const int c = f / grid_.n_v, d = f % grid_.n_v;
                    const double w = contour ? kernel_lookup(kernel_, contour_rel(grid_, a, b, c, d, dx, dy))
                                             : kernel_lookup(kernel_, b, trajectory_rel(grid_, a, c, d, dx, dy, dt));
                    if (w > 0.0) {
                        st->fiber.push_back(static_cast<std::uint16_t>(f));
                        st->weight.push_back(w);
                    }
                }
                if (st->weight.size() > before) {
                    st->dx.push_back(dx);
                    st->dy.push_back(dy);
                    st->dt.push_back(dt);
                    st->start.push_back(static_cast<std::uint32_t>(st->weight.size()));
                }
            }
    }
    st->dx_start.push_back(static_cast<std::uint32_t>(st->groups()));
    auto& ref = *st;
    stencils_.emplace(key, std::move(st));
    return ref;
}

const std::vector<double>& Facilitator::background_mass() {
    if (!background_.empty()) return background_;
    const auto& g = grid_;
    const int rs = spatial_reach(kernel_, g);
    const int rt = frame_reach(kernel_, g);
    const bool contour = kernel_.lattice.mode == SdeMode::Contour;
    const int t_lo = contour ? 0 : 1;
    const int nf = g.n_fibers();
    const int w = 2 * rs + 1, nd = rt - t_lo + 1;
    // A[f](dx, dy, dt): total weight reaching output fiber f from a source at offset -d, over all
    // source fibers; stored as inclusive prefix sums for box queries.
    std::vector<double> A(static_cast<std::size_t>(nf) * w * w * nd, 0.0);
    auto aidx = [&](int f, int i, int j, int k) { return ((static_cast<std::size_t>(f) * w + i) * w + j) * nd + k; };
    for (int a = 0; a < g.n_theta; ++a)
        for (int b = 0; b < g.n_v; ++b) {
            const Stencil& st = stencil(a, b);
            for (std::size_t k = 0; k < st.groups(); ++k)
                for (std::uint32_t e = st.start[k]; e < st.start[k + 1]; ++e)
                    A[aidx(st.fiber[e], st.dx[k] + rs, st.dy[k] + rs, st.dt[k] - t_lo)] += st.weight[e];
        }
#pragma omp parallel for schedule(static)
    for (int f = 0; f < nf; ++f) {
        // inclusive prefix sums along each axis
        for (int i = 0; i < w; ++i)
            for (int j = 0; j < w; ++j)
                for (int k = 1; k < nd; ++k) A[aidx(f, i, j, k)] += A[aidx(f, i, j, k - 1)];
        for (int i = 0; i < w; ++i)
            for (int j = 1; j < w; ++j)
                for (int k = 0; k < nd; ++k) A[aidx(f, i, j, k)] += A[aidx(f, i, j - 1, k)];
        for (int i = 1; i < w; ++i)
            for (int j = 0; j < w; ++j)
                for (int k = 0; k < nd; ++k) A[aidx(f, i, j, k)] += A[aidx(f, i - 1, j, k)];
    }
    auto box = [&](int f, int i0, int i1, int j0, int j1, int k0, int k1) {
        // sum over [i0, i1] x [j0, j1] x [k0, k1], empty ranges give 0
        if (i0 > i1 || j0 > j1 || k0 > k1) return 0.0;
        auto P = [&](int i, int j, int k) { return (i < 0 || j < 0 || k < 0) ? 0.0 : A[aidx(f, i, j, k)]; };
        return P(i1, j1, k1) - P(i0 - 1, j1, k1) - P(i1, j0 - 1, k1) - P(i1, j1, k0 - 1) + P(i0 - 1, j0 - 1, k1) +
               P(i0 - 1, j1, k0 - 1) + P(i1, j0 - 1, k0 - 1) - P(i0 - 1, j0 - 1, k0 - 1);
    };
    background_.assign(g.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t) {
                // offsets d with source = node - d inside the grid
                const int i0 = std::max(-rs, x - (g.nx - 1)) + rs, i1 = std::min(rs, x) + rs;
                const int j0 = std::max(-rs, y - (g.ny - 1)) + rs, j1 = std::min(rs, y) + rs;
                int k0 = 0, k1 = 0;
                if (!contour) {
                    k0 = std::max(t_lo, t - (g.nt - 1)) - t_lo;
                    k1 = std::min(rt, t) - t_lo;
                }
                const std::size_t base = ((static_cast<std::size_t>(x) * g.ny + y) * g.nt + t) * nf;
                for (int f = 0; f < nf; ++f) background_[base + f] = box(f, i0, i1, j0, j1, k0, k1);
            }
    return background_;
}

LiftedActivity Facilitator::apply(const LiftedActivity& F_T, double source_floor) {
    if (!F_T.grid.same_shape(grid_)) throw std::invalid_argument("facilitate: activity grid differs from the facilitator grid");
    LiftedActivity P(grid_, ActivityKind::Facilitation);
    if (F_T.values.empty()) return P;
    const double b = *std::min_element(F_T.values.begin(), F_T.values.end());
    if (b != 0.0) {
        const auto& M = background_mass();
        for (std::size_t i = 0; i < M.size(); ++i) P.values[i] = b * M[i];
    }
    scatter(F_T, b, source_floor, P);
    return P;
}

void Facilitator::scatter(const LiftedActivity& field, double offset, double source_floor, LiftedActivity& P) {
    if (!field.grid.same_shape(grid_) || !P.grid.same_shape(grid_))
        throw std::invalid_argument("facilitate: activity grid differs from the facilitator grid");
    const auto& g = grid_;
    const int nf = g.n_fibers();
    struct Source {
        int x, y, t, fiber;
        double value;
    };
    std::vector<Source> sources;
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t)
                for (int f = 0; f < nf; ++f) {
                    const double val = field.values[field.index(x, y, t, f / g.n_v, f % g.n_v)] - offset;
                    if (std::abs(val) > source_floor) sources.push_back({x, y, t, f, val});
                }
    std::vector<char> used(nf, 0);
    for (const auto& s : sources) used[s.fiber] = 1;
    std::vector<const Stencil*> table(nf, nullptr);
    for (int f = 0; f < nf; ++f)
        if (used[f]) table[f] = &stencil(f / g.n_v, f % g.n_v);

    // Each thread owns a band of output rows and scans every source in the same order, so the
    // accumulation order at every node does not depend on the thread count.
#pragma omp parallel
    {
        int n_threads = 1, id = 0;
#ifdef _OPENMP
        n_threads = omp_get_num_threads();
        id = omp_get_thread_num();
#endif
        const int x_lo = static_cast<int>(static_cast<long>(g.nx) * id / n_threads);
        const int x_hi = static_cast<int>(static_cast<long>(g.nx) * (id + 1) / n_threads);
        for (const auto& s : sources) {
            const Stencil& st = *table[s.fiber];
            const int first_dx = std::max(x_lo - s.x, st.dx_min);
            const int last_dx = std::min(x_hi - 1 - s.x, st.dx_min + static_cast<int>(st.dx_start.size()) - 2);
            if (first_dx > last_dx) continue;
            const std::uint32_t g0 = st.dx_start[first_dx - st.dx_min];
            const std::uint32_t g1 = st.dx_start[last_dx - st.dx_min + 1];
            for (std::uint32_t k = g0; k < g1; ++k) {
                const int x = s.x + st.dx[k], y = s.y + st.dy[k], t = s.t + st.dt[k];
                if (y < 0 || y >= g.ny || t >= g.nt) continue;
                double* out = P.values.data() + P.base_index(x, y, t) * nf;
                for (std::uint32_t e = st.start[k]; e < st.start[k + 1]; ++e) out[st.fiber[e]] += s.value * st.weight[e];
            }
        }
    }
}

LiftedActivity facilitate(const LiftedActivity& F_T, const KernelGrid& K, const FacilitationConfig& cfg) {
    cfg.validate();
    Facilitator fac(K, F_T.grid, cfg.truncation);
    return fac.apply(F_T, cfg.source_floor);
}

LiftedActivity facilitate_reference(const LiftedActivity& F_T, const KernelGrid& K, double truncation) {
    const auto& g = F_T.grid;
    check_compatible(K, g);
    KernelGrid T = K;
    if (truncation > 0) truncate_kernel(T, truncation);
    const bool contour = T.lattice.mode == SdeMode::Contour;
    LiftedActivity P(g, ActivityKind::Facilitation);
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t)
                for (int c = 0; c < g.n_theta; ++c)
                    for (int d = 0; d < g.n_v; ++d) {
                        const ManifoldPoint eta = make_point(g.x(x), g.y(y), g.t(t), g.theta(c), g.v(d));
                        double sum = 0.0;
                        for (int sx = 0; sx < g.nx; ++sx)
                            for (int sy = 0; sy < g.ny; ++sy)
                                for (int st = 0; st < g.nt; ++st) {
                                    if (contour && st != t) continue;
                                    for (int a = 0; a < g.n_theta; ++a)
                                        for (int b = 0; b < g.n_v; ++b) {
                                            const double f = F_T.at(sx, sy, st, a, b);
                                            if (f == 0.0) continue;
                                            double w;
                                            if (contour) {
                                                const ContourPoint z =
                                                    make_contour_point(g.x(sx), g.y(sy), g.theta(a), g.v(b));
                                                const ContourPoint e = make_contour_point(eta.q1, eta.q2, eta.theta, eta.v);
                                                w = kernel_lookup(T, compose_contour(inverse_contour(z), e));
                                            } else {
                                                // source with its velocity removed; the member carries it
                                                const ManifoldPoint z = make_point(g.x(sx), g.y(sy), g.t(st), g.theta(a), 0.0);
                                                w = kernel_lookup(T, b, compose(left_inverse(z), eta));
                                            }
                                            sum += w * f;
                                        }
                                }
                        P.at(x, y, t, c, d) = sum;
                    }
    return P;
}

LiftedActivity activity_steady(const LiftedActivity& F, const LiftedActivity& P, const FacilitationConfig& cfg) {
    cfg.validate();
    if (!F.grid.same_shape(P.grid)) throw std::invalid_argument("activity_steady: grids differ");
    LiftedActivity out(F.grid, ActivityKind::Total);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < F.values.size(); ++i)
        out.values[i] = sigmoid(F.values[i] + cfg.c_f * P.values[i], cfg.mu, cfg.beta);
    return out;
}

LiftedActivity evolve_activity(const LiftedActivity& F, Facilitator& fac, const FacilitationConfig& cfg, double dt_a,
                               int n_steps, std::vector<double>* residuals) {
    cfg.validate();
    if (!(dt_a > 0.0 && dt_a <= 1.0)) throw std::invalid_argument("evolve_activity: dt_a must lie in (0, 1]");
    if (n_steps < 0) throw std::invalid_argument("evolve_activity: negative step count");
    LiftedActivity a = threshold_activity(F, cfg.mu, cfg.beta);
    a.kind = ActivityKind::Total;
    for (int k = 0; k < n_steps; ++k) {
        const LiftedActivity P = fac.apply(a, cfg.source_floor);
        double res = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const double target = sigmoid(cfg.c_f * P.values[i] + F.values[i], cfg.mu, cfg.beta);
            res = std::max(res, std::abs(target - a.values[i]));
            a.values[i] += dt_a * (target - a.values[i]);
            if (!(std::abs(a.values[i]) <= 10.0)) throw std::domain_error("evolve_activity: activity diverged");
        }
        if (residuals) residuals->push_back(res);
    }
    return a;
}

LiftedActivity facilitation_difference(const LiftedActivity& full, const LiftedActivity& first,
                                       const LiftedActivity& second) {
    if (!full.grid.same_shape(first.grid) || !full.grid.same_shape(second.grid))
        throw std::invalid_argument("facilitation_difference: grids differ");
    LiftedActivity out(full.grid, ActivityKind::Difference);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = full.values[i] - first.values[i] - second.values[i];
    return out;
}

}  // namespace mg
