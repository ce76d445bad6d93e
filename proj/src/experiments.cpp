#include "mg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mg/geometry.hpp"

namespace mg {

ManifoldGrid experiment_grid(const ExperimentConfig& cfg) {
    ManifoldGrid g;
    if (cfg.experiment == 1) {
        g.nx = cfg.circle.nx;
        g.ny = cfg.circle.ny;
        g.nt = cfg.circle.n_frames;
    } else {
        g.nx = cfg.trajectory.nx;
        g.ny = cfg.trajectory.ny;
        g.nt = cfg.trajectory.n_frames;
    }
    g.n_theta = cfg.n_theta;
    g.n_v = cfg.n_v;
    g.v_max = cfg.v_max;
    g.validate();
    return g;
}

FilterOptions experiment_filter(const ExperimentConfig& cfg) {
    FilterOptions o;
    o.p_modulus = cfg.p_modulus;
    o.truncation = cfg.filter_truncation;
    return o;
}

FacilitationConfig experiment_facilitation(const ExperimentConfig& cfg) {
    FacilitationConfig f;
    f.c_f = cfg.c_f;
    f.mu = cfg.mu;
    f.beta = cfg.beta;
    f.truncation = cfg.kernel_truncation;
    f.source_floor = cfg.source_floor;
    f.validate();
    return f;
}

SdeSpec experiment_sde(const ExperimentConfig& cfg) {
    if (!cfg.seed_set) throw ConfigError("kernel estimation requires a seed");
    const bool contour = cfg.experiment == 1;
    const double reach = contour ? cfg.half_width : cfg.s_max;
    SdeSpec s = make_sde(contour ? SdeMode::Contour : SdeMode::Trajectory, cfg.kappa, cfg.alpha, reach,
                         cfg.n_paths, cfg.seed);
    if (cfg.horizon > 0) {
        s.T = cfg.horizon;
        s.dt = s.T / 200.0;
        s.scale = reach / s.T;
    }
    if (cfg.dt > 0) s.dt = cfg.dt;
    s.validate();
    return s;
}

KernelLattice experiment_lattice(const ExperimentConfig& cfg) {
    const ManifoldGrid g = experiment_grid(cfg);
    return cfg.experiment == 1 ? contour_lattice(g, cfg.half_width) : trajectory_lattice(g, cfg.half_width, cfg.s_max + 1);
}

KernelGrid estimate_experiment_kernel(const ExperimentConfig& cfg) {
    const SdeSpec s = experiment_sde(cfg);
    const KernelLattice lat = experiment_lattice(cfg);
    return s.mode == SdeMode::Contour ? estimate_gamma0(s, lat) : estimate_gamma(s, lat);
}

std::string kernel_key(const SdeSpec& spec, const KernelLattice& lat) {
    nlohmann::json j = sde_to_json(spec);
    j["lattice"] = {{"mode", mode_name(lat.mode)}, {"half_width", lat.half_width}, {"n_s", lat.n_s},
                    {"n_theta", lat.n_theta},       {"n_v", lat.n_v},              {"v_min", lat.v_min},
                    {"v_step", lat.v_step}};
    return fnv1a_hex(j.dump());
}

int filter_time_reach(const ManifoldGrid& grid, const FilterOptions& opt) {
    int rt = 0;
    for (int i = 0; i < grid.n_theta; ++i)
        for (int j = 0; j < grid.n_v; ++j)
            rt = std::max(rt, fiber_taps(opt.p_modulus, grid.theta(i), grid.v(j), grid.v_max, opt).rt);
    return rt;
}

namespace {

int filter_space_reach(const ManifoldGrid& grid, const FilterOptions& opt) {
    int rx = 0;
    for (int i = 0; i < grid.n_theta; ++i)
        for (int j = 0; j < grid.n_v; ++j)
            rx = std::max(rx, fiber_taps(opt.p_modulus, grid.theta(i), grid.v(j), grid.v_max, opt).rx);
    return rx;
}

// Bilinear interpolation in (x, y) at a fixed frame and fiber; zero outside the grid.
double sample_xy(const LiftedActivity& a, double x, double y, int th, int v) {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const int xi = x0 + i, yj = y0 + j;
            if (xi < 0 || yj < 0 || xi >= a.grid.nx || yj >= a.grid.ny) continue;
            acc += (i ? fx : 1 - fx) * (j ? fy : 1 - fy) * a.at(xi, yj, 0, th, v);
        }
    return acc;
}

}  // namespace

LiftedActivity filter_frame(const StimulusVolume& f, const ManifoldGrid& grid, const FilterOptions& opt, int frame) {
    if (frame < 0 || frame >= f.nt) throw std::out_of_range("filter_frame: frame outside the movie");
    const int rt = filter_time_reach(grid, opt);
    const int lo = std::max(0, frame - rt), hi = std::min(f.nt - 1, frame + rt);
    StimulusVolume crop(f.nx, f.ny, hi - lo + 1);
    for (int x = 0; x < f.nx; ++x)
        for (int y = 0; y < f.ny; ++y)
            for (int t = lo; t <= hi; ++t) crop.at(x, y, t - lo) = f.at(x, y, t);
    ManifoldGrid g = grid;
    g.nt = crop.nt;
    g.t0 = 0.0;
    g.time_spacing = 1.0;
    LiftedActivity out = slice_frame(energy_filter(crop, g, opt), frame - lo);
    out.grid.t0 = frame;
    return out;
}

Experiment1Result run_experiment1(const ExperimentConfig& cfg, const KernelGrid& K) {
    cfg.validate();
    if (cfg.experiment != 1) throw ConfigError("run_experiment1 needs an experiment 1 config");
    Experiment1Result r;
    r.stimulus = dashed_circle(cfg.circle);
    r.frame = cfg.frame < 0 ? cfg.circle.n_frames / 2 - 1 : cfg.frame;
    if (r.frame < 0) r.frame = 0;
    const ManifoldGrid grid = experiment_grid(cfg);
    const auto fcfg = experiment_facilitation(cfg);
    r.F = filter_frame(r.stimulus.volume, grid, experiment_filter(cfg), r.frame);
    r.F_T = threshold_activity(r.F, cfg.mu, cfg.beta);
    Facilitator fac(K, r.F_T.grid, fcfg.truncation);
    r.P = fac.apply(r.F_T, fcfg.source_floor);
    r.F0 = activity_steady(r.F, r.P, fcfg);
    return r;
}

GapContrast gap_contrast(const Experiment1Result& r, const ExperimentConfig& cfg, std::uint64_t seed,
                         int background_per_gap_sample) {
    const auto& st = r.stimulus;
    const auto& g = r.F0.grid;
    const int reach = filter_space_reach(g, experiment_filter(cfg));
    const auto c = st.center(r.frame);
    const double radius = st.spec.radius;
    const double gap_len = radius * kTwoPi * st.spec.gap_fraction / st.spec.n_segments;
    const double half = std::max(0.0, 0.5 * gap_len - reach);

    struct Sample {
        double x, y;
        int th, v;
    };
    std::vector<Sample> gaps;
    for (double phi_c : st.gap_centers()) {
        for (double u = -std::floor(half); u <= half + 1e-12; u += 1.0) {
            const double phi = phi_c + u / radius;
            gaps.push_back({c[0] + radius * std::cos(phi), c[1] + radius * std::sin(phi),
                            g.nearest_theta(phi), g.nearest_v(st.normal_velocity(phi))});
        }
    }

    // background: anywhere in the frame at least the filter reach from the border, and away from the
    // circle by more than the filter reach plus the stroke
    const double keep_out = reach + st.spec.width + 1.0;
    const double lo = reach, hi_x = g.nx - 1 - reach, hi_y = g.ny - 1 - reach;
    if (!(hi_x > lo && hi_y > lo)) throw std::domain_error("gap_contrast: frame too small for a background sample");
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> ux(lo, hi_x), uy(lo, hi_y);

    GapContrast out;
    for (const auto& s : gaps) {
        out.f0_gap += sample_xy(r.F0, s.x, s.y, s.th, s.v);
        out.ft_gap += sample_xy(r.F_T, s.x, s.y, s.th, s.v);
        for (int k = 0; k < background_per_gap_sample; ++k) {
            double x, y;
            int tries = 0;
            do {
                x = ux(rng);
                y = uy(rng);
                if (++tries > 100000) throw std::domain_error("gap_contrast: no background positions");
            } while (std::abs(std::hypot(x - c[0], y - c[1]) - radius) < keep_out);
            out.f0_background += sample_xy(r.F0, x, y, s.th, s.v);
            out.ft_background += sample_xy(r.F_T, x, y, s.th, s.v);
            ++out.n_background;
        }
        ++out.n_gap;
    }
    out.f0_gap /= out.n_gap;
    out.ft_gap /= out.n_gap;
    out.f0_background /= out.n_background;
    out.ft_background /= out.n_background;
    return out;
}

Experiment2Runner::Experiment2Runner(const ExperimentConfig& cfg, const KernelGrid& K) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.experiment != 2) throw ConfigError("Experiment2Runner needs an experiment 2 config");
    grid_ = experiment_grid(cfg_);
    fac_cfg_ = experiment_facilitation(cfg_);
    fac_ = std::make_unique<Facilitator>(K, grid_, fac_cfg_.truncation);
    blank_ = steady(StimulusVolume(grid_.nx, grid_.ny, grid_.nt));
}

Experiment2Runner::~Experiment2Runner() = default;

LiftedActivity Experiment2Runner::steady(const StimulusVolume& s) {
    const LiftedActivity F = energy_filter(s, grid_, experiment_filter(cfg_));
    const LiftedActivity P = fac_->apply(threshold_activity(F, fac_cfg_.mu, fac_cfg_.beta), fac_cfg_.source_floor);
    return activity_steady(F, P, fac_cfg_);
}

namespace {

Field max_over_fibers(const LiftedActivity& a) { return fiber_projection(a, false, Reduction::Max); }

// Sum over (q1, q2) of a - offset: axes (s, theta, v).
Field xy_sum(const LiftedActivity& a, const LiftedActivity* offset) {
    const auto& g = a.grid;
    Field f;
    f.axes = {"s", "theta", "v"};
    f.dims = {g.nt, g.n_theta, g.n_v};
    f.origin = {g.t0, 0.0, g.v(0)};
    f.spacing = {g.time_spacing, kTwoPi / g.n_theta, g.n_v > 1 ? g.v(1) - g.v(0) : 1.0};
    f.periodic = {false, true, false};
    const std::size_t per_frame = static_cast<std::size_t>(g.n_fibers());
    f.values.assign(static_cast<std::size_t>(g.nt) * per_frame, 0.0);
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t) {
                const std::size_t base = a.base_index(x, y, t) * per_frame;
                for (std::size_t k = 0; k < per_frame; ++k)
                    f.values[t * per_frame + k] += a.values[base + k] - (offset ? offset->values[base + k] : 0.0);
            }
    return f;
}

}  // namespace

Experiment2Instance Experiment2Runner::run(int delta_t, double delta_theta, bool keep_volume) {
    TrajectorySpec spec = cfg_.trajectory;
    spec.delta_t = delta_t;
    spec.delta_theta = delta_theta;
    Experiment2Instance r;
    r.delta_t = delta_t;
    r.delta_theta = delta_theta;
    r.stimulus = occluded_trajectory(spec);
    r.t1 = r.stimulus.t1;
    r.t2 = r.stimulus.t2;
    r.window_begin = r.t1;
    r.window_end = std::min(grid_.nt, r.t2 + cfg_.window_after);

    // P is linear in F_T: P(S3) = P(S1) + P(S2) - b M + P(D) with D = F_T(S3) - F_T(S1) - F_T(S2) + b,
    // which vanishes outside the frames around the occlusion, so S3 costs only a small scatter.
    const auto fopt = experiment_filter(cfg_);
    double b = 0.0;  // b(S1) + b(S2) - b(S3) with b the field minimum removed by apply
    LiftedActivity acc(grid_, ActivityKind::Difference);
    LiftedActivity ft12, p12;
    for (const StimulusVolume* s : {&r.stimulus.s1, &r.stimulus.s2}) {
        const LiftedActivity F = energy_filter(*s, grid_, fopt);
        LiftedActivity ft = threshold_activity(F, fac_cfg_.mu, fac_cfg_.beta);
        LiftedActivity p = fac_->apply(ft, fac_cfg_.source_floor);
        b += *std::min_element(ft.values.begin(), ft.values.end());
        const LiftedActivity f0 = activity_steady(F, p, fac_cfg_);
        for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] -= f0.values[i];
        if (ft12.values.empty()) {
            ft12 = std::move(ft);
            p12 = std::move(p);
        } else {
            for (std::size_t i = 0; i < ft12.values.size(); ++i) ft12.values[i] += ft.values[i];
            for (std::size_t i = 0; i < p12.values.size(); ++i) p12.values[i] += p.values[i];
        }
    }
    {
        const LiftedActivity F = energy_filter(r.stimulus.s3, grid_, fopt);
        LiftedActivity d = threshold_activity(F, fac_cfg_.mu, fac_cfg_.beta);
        b -= *std::min_element(d.values.begin(), d.values.end());
        r.ft_max = max_over_fibers(d);
        for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= ft12.values[i];
        ft12 = LiftedActivity();
        const auto& M = fac_->background_mass();
        for (std::size_t i = 0; i < p12.values.size(); ++i) p12.values[i] -= b * M[i];
        fac_->scatter(d, -b, fac_cfg_.source_floor, p12);
        d = LiftedActivity();
        const LiftedActivity f0 = activity_steady(F, p12, fac_cfg_);
        p12 = LiftedActivity();
        r.f0_max = max_over_fibers(f0);
        r.f0_xy = xy_sum(f0, &blank_);
        for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += f0.values[i];
    }
    acc.kind = ActivityKind::Difference;
    // F_fac + F0(blank), the facilitation gained by joining the halves
    LiftedActivity gain = acc;
    for (std::size_t i = 0; i < gain.values.size(); ++i) gain.values[i] += blank_.values[i];
    r.fac_max = max_over_fibers(gain);
    r.fac_xy = xy_sum(gain, nullptr);
    const std::size_t nf = grid_.n_fibers();
    double pos = 0.0, neg = 0.0;
    for (int x = 0; x < grid_.nx; ++x)
        for (int y = 0; y < grid_.ny; ++y)
            for (int t = r.window_begin; t < r.window_end; ++t) {
                const std::size_t base = gain.base_index(x, y, t) * nf;
                for (std::size_t k = 0; k < nf; ++k) {
                    const double v = gain.values[base + k];
                    (v > 0 ? pos : neg) += v;
                }
            }
    r.gap_energy = pos + neg;
    r.gap_energy_positive = pos;
    r.gap_energy_negative = neg;
    if (keep_volume) r.F_fac = std::move(acc);
    return r;
}

}  // namespace mg
