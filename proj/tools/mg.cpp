// Command-line driver: stimuli, lifting, kernels, facilitation, the two experiments and exports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "mg/config.hpp"
#include "mg/experiments.hpp"
#include "mg/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mg;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kMissingKernel = 3, kIo = 4, kNumerical = 5 };

class MissingKernel : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    double scale = 1.0;
    std::string out;
    std::string cache;
    bool estimate = false;
    int threads = 0;
};

void add_common(CLI::App* c, Common& o, bool with_kernel) {
    c->add_option("--config", o.config, "configuration file (key = value lines)");
    c->add_option("--set", o.sets, "override one config key, as key=value")->take_all();
    c->add_option("--scale", o.scale, "shrink image, frames and kernel extents by this factor")->check(CLI::Range(1e-3, 1.0));
    c->add_option("--out", o.out, "output directory");
    c->add_option("--threads", o.threads, "worker threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
    if (with_kernel) {
        c->add_option("--seed", o.seed, "kernel estimation seed");
        c->add_option("--cache", o.cache, "kernel cache directory (default <out>/kernels)");
        c->add_flag("--estimate", o.estimate, "estimate the kernel when it is not cached");
    }
}

// Loads the config (or the defaults of `experiment`), then applies overrides and flags.
ExperimentConfig resolve(const Common& o, int experiment) {
    ExperimentConfig cfg = o.config.empty() ? default_config(experiment ? experiment : 1) : load_config(o.config);
    if (experiment != 0 && cfg.experiment != experiment)
        throw ConfigError("config describes experiment " + std::to_string(cfg.experiment) + ", command needs " +
                          std::to_string(experiment));
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.seed_set = true;
    }
    cfg.scale *= o.scale;
    if (!o.out.empty()) cfg.out = o.out;
    cfg.validate();
    return cfg;
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// Records every file written below the output root; the manifest lists them with sizes and hashes.
class OutputTree {
   public:
    explicit OutputTree(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }
    fs::path path(const std::string& rel) {
        const fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        files_.push_back(rel);
        return p;
    }
    void text(const std::string& rel, const std::string& content) {
        std::ofstream os(path(rel), std::ios::binary | std::ios::trunc);
        os << content;
        if (!os) throw IoError(IoErrorCode::Write, "cannot write " + (root_ / rel).string());
    }
    template <class F>
    void csv(const std::string& rel, F&& body) {
        std::ostringstream os;
        body(os);
        text(rel, os.str());
    }
    void note(const std::string& rel) { files_.push_back(rel); }
    const fs::path& root() const { return root_; }

    void manifest(json m) {
        std::sort(files_.begin(), files_.end());
        files_.erase(std::unique(files_.begin(), files_.end()), files_.end());
        json list = json::array();
        for (const auto& rel : files_) {
            std::ifstream is(root_ / rel, std::ios::binary);
            const std::string bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
            list.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a", fnv1a_hex(bytes)}});
        }
        m["files"] = list;
        std::ofstream os(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
        os << m.dump(1) << "\n";
    }

   private:
    fs::path root_;
    std::vector<std::string> files_;
};

// Config text without the output directory, so identical runs in different places match byte for byte.
std::string portable_text(const ExperimentConfig& cfg) {
    std::istringstream is(config_text(cfg));
    std::string line, out;
    while (std::getline(is, line))
        if (line.rfind("out =", 0) != 0) out += line + "\n";
    return out;
}

json provenance(const ExperimentConfig& cfg) {
    json p{{"config_hash", config_hash(cfg)}};
    if (cfg.seed_set) p["seed"] = cfg.seed;
    return p;
}

json manifest_base(const std::string& command, const ExperimentConfig& cfg, const ExperimentConfig& eff) {
    return {{"command", command},
            {"format_version", kFormatVersion},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.seed_set ? json(cfg.seed) : json(nullptr)},
            {"config", portable_text(cfg)},
            {"effective_config", portable_text(eff)}};
}

fs::path cache_dir(const Common& o, const ExperimentConfig& cfg) {
    return o.cache.empty() ? fs::path(cfg.out) / "kernels" : fs::path(o.cache);
}

std::string kernel_file_name(const SdeSpec& s, const KernelLattice& lat) {
    return mode_name(s.mode) + "-" + kernel_key(s, lat) + ".mgv";
}

// Loads the cached kernel of the effective config, or estimates and caches it when allowed.
KernelGrid obtain_kernel(const ExperimentConfig& eff, const fs::path& dir, bool estimate, OutputTree* tree,
                         std::string* name_out) {
    const SdeSpec s = experiment_sde(eff);
    const KernelLattice lat = experiment_lattice(eff);
    const std::string name = kernel_file_name(s, lat);
    const fs::path p = dir / name;
    if (name_out) *name_out = name;
    const bool inside = tree && fs::weakly_canonical(dir) == fs::weakly_canonical(tree->root() / "kernels");
    if (fs::exists(p)) {
        if (inside) tree->note("kernels/" + name);
        return read_kernel(p);
    }
    if (!estimate)
        throw MissingKernel("kernel cache " + p.string() + " not found; rerun with --estimate or run the kernel command");
    std::cerr << "estimating " << mode_name(s.mode) << " kernel (" << s.n_paths << " paths)\n";
    KernelGrid K = estimate_experiment_kernel(eff);
    fs::create_directories(dir);
    write_kernel(p, K, {{"seed", s.seed}});
    if (inside) tree->note("kernels/" + name);
    return K;
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string instance_tag(int dt, double dth) { return "dt" + std::to_string(dt) + "_dth" + fixed(dth, 4); }

json circle_truth(const CircleStimulus& c) {
    const auto& s = c.spec;
    return {{"kind", "dashed_circle"},
            {"nx", s.nx},
            {"ny", s.ny},
            {"n_frames", s.n_frames},
            {"radius", s.radius},
            {"n_segments", s.n_segments},
            {"width", s.width},
            {"gap_fraction", s.gap_fraction},
            {"velocity", {s.vx, s.vy}},
            {"center_frame0", {c.cx0, c.cy0}},
            {"gap_centers", c.gap_centers()},
            {"note", "arc point at polar angle phi: normal orientation phi, normal velocity vx cos(phi) + vy sin(phi)"}};
}

json trajectory_truth(const TrajectoryStimulus& t) {
    const auto& s = t.spec;
    json path = json::array();
    for (int k = 0; k < s.n_frames; ++k) {
        const auto p = t.position(k);
        path.push_back({{"frame", k},
                        {"q1", p[0]},
                        {"q2", p[1]},
                        {"direction", t.direction(k)},
                        {"visible", k < t.t1 || k >= t.t2}});
    }
    return {{"kind", "occluded_trajectory"},
            {"nx", s.nx},
            {"ny", s.ny},
            {"n_frames", s.n_frames},
            {"eccentricity", s.eccentricity},
            {"minor_axis", s.minor_axis},
            {"speed", s.speed},
            {"t1", t.t1},
            {"t2", t.t2},
            {"delta_t", s.delta_t},
            {"delta_theta", s.delta_theta},
            {"turn_time", t.turn_time},
            {"turn_point", {t.turn_point[0], t.turn_point[1]}},
            {"path", path}};
}

void iso_csv(OutputTree& tree, const std::string& rel, const Field& f, double iso) {
    tree.csv(rel, [&](std::ostream& os) { export_isosurface_points(os, f, iso); });
}

std::vector<std::pair<int, double>> sweep(const ExperimentConfig& eff) {
    std::vector<std::pair<int, double>> out;
    for (int dt : eff.sweep_delta_t)
        for (double th : eff.sweep_delta_theta) out.emplace_back(dt, th);
    return out;
}

// ---- commands ----

int cmd_make_stimulus(const Common& o, int experiment, const std::vector<int>& dts, const std::vector<std::string>& dths) {
    const ExperimentConfig cfg = resolve(o, experiment);
    const ExperimentConfig eff = effective_config(cfg);
    OutputTree tree(cfg.out);
    if (eff.experiment == 1) {
        const auto c = dashed_circle(eff.circle);
        write_stimulus(tree.path("stimulus/circle.mgv"), c.volume, provenance(cfg));
        tree.text("stimulus/circle.json", circle_truth(c).dump(1) + "\n");
    } else {
        TrajectorySpec spec = eff.trajectory;
        if (!dts.empty()) spec.delta_t = dts.front();
        if (!dths.empty()) spec.delta_theta = parse_angle(dths.front());
        const auto t = occluded_trajectory(spec);
        const std::string tag = instance_tag(spec.delta_t, spec.delta_theta);
        write_stimulus(tree.path("stimulus/" + tag + "/S3.mgv"), t.s3, provenance(cfg));
        write_stimulus(tree.path("stimulus/" + tag + "/S1.mgv"), t.s1, provenance(cfg));
        write_stimulus(tree.path("stimulus/" + tag + "/S2.mgv"), t.s2, provenance(cfg));
        tree.text("stimulus/" + tag + "/trajectory.json", trajectory_truth(t).dump(1) + "\n");
    }
    tree.text("config.cfg", portable_text(cfg));
    tree.manifest(manifest_base("make-stimulus", cfg, eff));
    return kOk;
}

int cmd_filter(const Common& o, const std::string& input, const std::string& output, const std::string& thresholded,
               std::optional<int> frame) {
    const ExperimentConfig cfg = resolve(o, 0);
    const ExperimentConfig eff = effective_config(cfg);
    const StimulusVolume f = read_stimulus(input);
    ManifoldGrid g;
    g.nx = f.nx;
    g.ny = f.ny;
    g.nt = f.nt;
    g.n_theta = eff.n_theta;
    g.n_v = eff.n_v;
    g.v_max = eff.v_max;
    const auto opt = experiment_filter(eff);
    const LiftedActivity F = frame ? filter_frame(f, g, opt, *frame) : energy_filter(f, g, opt);
    write_activity(output, F, provenance(cfg));
    if (!thresholded.empty()) write_activity(thresholded, threshold_activity(F, eff.mu, eff.beta), provenance(cfg));
    return kOk;
}

int cmd_kernel(const Common& o, const std::string& mode, std::optional<std::int64_t> paths, const std::string& output) {
    const int wanted = mode.empty() ? 0 : (mode_from_name(mode) == SdeMode::Contour ? 1 : 2);
    if (!o.seed) throw ConfigError("kernel estimation needs --seed");
    ExperimentConfig cfg;
    if (o.config.empty()) {
        cfg = resolve(o, wanted ? wanted : 1);
    } else {
        cfg = resolve(o, 0);
        if (wanted && cfg.experiment != wanted) throw ConfigError("--mode disagrees with the experiment of the config file");
    }
    if (paths) cfg.n_paths = *paths;
    cfg.validate();
    const ExperimentConfig eff = effective_config(cfg);
    const KernelGrid K = estimate_experiment_kernel(eff);
    fs::path p;
    if (!output.empty()) {
        p = output;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
    } else {
        const fs::path dir = cache_dir(o, cfg);
        fs::create_directories(dir);
        p = dir / kernel_file_name(K.spec, K.lattice);
    }
    write_kernel(p, K, {{"seed", K.spec.seed}});
    std::cout << p.string() << "\n";
    return kOk;
}

int cmd_facilitate(const Common& o, const std::string& input, const std::string& kernel, const std::string& outdir) {
    const ExperimentConfig cfg = resolve(o, 0);
    const ExperimentConfig eff = effective_config(cfg);
    const LiftedActivity F = read_activity(input);
    if (F.kind != ActivityKind::Raw) throw ConfigError("facilitate expects raw filter energy (kind F)");
    const KernelGrid K = read_kernel(kernel);
    const auto fc = experiment_facilitation(eff);
    const LiftedActivity FT = threshold_activity(F, fc.mu, fc.beta);
    Facilitator fac(K, F.grid, fc.truncation);
    const LiftedActivity P = fac.apply(FT, fc.source_floor);
    const LiftedActivity F0 = activity_steady(F, P, fc);
    fs::create_directories(outdir);
    write_activity(fs::path(outdir) / "F_T.mgv", FT, provenance(cfg));
    write_activity(fs::path(outdir) / "P.mgv", P, provenance(cfg));
    write_activity(fs::path(outdir) / "F0.mgv", F0, provenance(cfg));
    return kOk;
}

int cmd_experiment1(const Common& o) {
    const ExperimentConfig cfg = resolve(o, 1);
    const ExperimentConfig eff = effective_config(cfg);
    if (!cfg.seed_set) throw ConfigError("experiment1 needs a kernel seed (--seed or kernel.seed)");
    OutputTree tree(cfg.out);
    const json prov = provenance(cfg);
    std::string kname;
    const KernelGrid K = obtain_kernel(eff, cache_dir(o, cfg), o.estimate, &tree, &kname);
    const Experiment1Result r = run_experiment1(eff, K);

    write_stimulus(tree.path("stimulus/circle.mgv"), r.stimulus.volume, prov);
    tree.text("stimulus/circle.json", circle_truth(r.stimulus).dump(1) + "\n");
    write_activity(tree.path("lifted/F.mgv"), r.F, prov);
    write_activity(tree.path("lifted/F_T.mgv"), r.F_T, prov);
    write_activity(tree.path("activity/P.mgv"), r.P, prov);
    write_activity(tree.path("activity/F0.mgv"), r.F0, prov);

    const Field ft = frame_field(r.F_T, 0), f0 = frame_field(r.F0, 0);
    iso_csv(tree, "exports/F_T_theta_iso.csv", reduce_axes(ft, {"v"}, Reduction::Max), eff.ft_isovalue);
    iso_csv(tree, "exports/F_T_v_iso.csv", reduce_axes(ft, {"theta"}, Reduction::Max), eff.ft_isovalue);
    iso_csv(tree, "exports/F0_theta_iso.csv", reduce_axes(f0, {"v"}, Reduction::Max), eff.f0_isovalue);
    iso_csv(tree, "exports/F0_v_iso.csv", reduce_axes(f0, {"theta"}, Reduction::Max), eff.f0_isovalue);
    const Field kf = kernel_field(K, 0);
    const double kiso = eff.kernel_relative_isovalue * field_max(kf);
    iso_csv(tree, "exports/kernel_iso.csv", kf, kiso);
    iso_csv(tree, "exports/kernel_theta_iso.csv", reduce_axes(kf, {"v"}, Reduction::Max), kiso);
    iso_csv(tree, "exports/kernel_v_iso.csv", reduce_axes(kf, {"theta"}, Reduction::Max), kiso);

    const GapContrast gc = gap_contrast(r, eff);
    const json metrics{{"frame", r.frame},
                       {"gap_samples", gc.n_gap},
                       {"background_samples", gc.n_background},
                       {"f0_gap", gc.f0_gap},
                       {"f0_background", gc.f0_background},
                       {"f0_ratio", gc.f0_ratio()},
                       {"ft_gap", gc.ft_gap},
                       {"ft_background", gc.ft_background},
                       {"ft_ratio", gc.ft_ratio()}};
    tree.text("exports/gap_contrast.json", metrics.dump(1) + "\n");
    tree.text("config.cfg", portable_text(cfg));
    json m = manifest_base("experiment1", cfg, eff);
    m["kernel"] = kname;
    m["metrics"] = metrics;
    tree.manifest(m);
    std::cout << "frame " << r.frame << ": F0 gap/background " << gc.f0_ratio() << ", F_T gap/background "
              << gc.ft_ratio() << "\n";
    return kOk;
}

int cmd_experiment2(const Common& o, const std::vector<int>& dts, const std::vector<std::string>& dths) {
    ExperimentConfig cfg = resolve(o, 2);
    if (!dts.empty()) cfg.sweep_delta_t = dts;
    if (!dths.empty()) {
        cfg.sweep_delta_theta.clear();
        for (const auto& s : dths) cfg.sweep_delta_theta.push_back(parse_angle(s));
    }
    cfg.validate();
    const ExperimentConfig eff = effective_config(cfg);
    if (!cfg.seed_set) throw ConfigError("experiment2 needs a kernel seed (--seed or kernel.seed)");
    if (eff.sweep_delta_t.empty() || eff.sweep_delta_theta.empty()) throw ConfigError("empty experiment 2 sweep");
    OutputTree tree(cfg.out);
    const json prov = provenance(cfg);
    std::string kname;
    const KernelGrid K = obtain_kernel(eff, cache_dir(o, cfg), o.estimate, &tree, &kname);
    Experiment2Runner runner(eff, K);

    struct Kept {
        std::string tag;
        Field f0_xy, fac_xy;
    };
    std::vector<Kept> kept;
    std::ostringstream summary;
    summary << "delta_t,delta_theta,t1,t2,window_begin,window_end,gap_energy,gap_energy_positive,gap_energy_negative\n";
    json rows = json::array();
    for (const auto& [dt, dth] : sweep(eff)) {
        std::cerr << "instance delta_t=" << dt << " delta_theta=" << dth << "\n";
        Experiment2Instance r = runner.run(dt, dth, eff.full_volumes);
        const std::string tag = instance_tag(dt, dth);
        write_stimulus(tree.path("stimulus/" + tag + "/S3.mgv"), r.stimulus.s3, prov);
        tree.text("stimulus/" + tag + "/trajectory.json", trajectory_truth(r.stimulus).dump(1) + "\n");
        write_field(tree.path("lifted/" + tag + "/F_T_max.mgv"), r.ft_max, "F_T_max", prov);
        write_field(tree.path("activity/" + tag + "/F0_max.mgv"), r.f0_max, "F0_max", prov);
        write_field(tree.path("activity/" + tag + "/F0_xy.mgv"), r.f0_xy, "F0_xy", prov);
        write_field(tree.path("activity/" + tag + "/F_fac_max.mgv"), r.fac_max, "F_fac_max", prov);
        write_field(tree.path("activity/" + tag + "/F_fac_xy.mgv"), r.fac_xy, "F_fac_xy", prov);
        if (r.F_fac) write_activity(tree.path("activity/" + tag + "/F_fac.mgv"), *r.F_fac, prov);
        for (double l : eff.iso_levels)
            iso_csv(tree, "exports/" + tag + "/F0_max_iso_" + fixed(l, 2) + ".csv", r.f0_max, l);
        kept.push_back({tag, r.f0_xy, r.fac_xy});
        char line[512];
        std::snprintf(line, sizeof line, "%d,%.9g,%d,%d,%d,%d,%.9g,%.9g,%.9g\n", dt, dth, r.t1, r.t2, r.window_begin,
                      r.window_end, r.gap_energy, r.gap_energy_positive, r.gap_energy_negative);
        summary << line;
        rows.push_back({{"delta_t", dt},
                        {"delta_theta", dth},
                        {"gap_energy", r.gap_energy},
                        {"gap_energy_positive", r.gap_energy_positive},
                        {"gap_energy_negative", r.gap_energy_negative}});
        std::cout << tag << " gap energy " << r.gap_energy << "\n";
    }
    // levels relative to the maximum among all instances
    double f0_top = 0.0, fac_top = 0.0;
    for (const auto& k : kept) {
        f0_top = std::max(f0_top, field_max(k.f0_xy));
        fac_top = std::max(fac_top, field_max(k.fac_xy));
    }
    for (const auto& k : kept)
        for (double l : eff.iso_levels) {
            if (f0_top > 0) iso_csv(tree, "exports/" + k.tag + "/F0_xy_iso_" + fixed(l, 2) + ".csv", k.f0_xy, l * f0_top);
            if (fac_top > 0)
                iso_csv(tree, "exports/" + k.tag + "/F_fac_xy_iso_" + fixed(l, 2) + ".csv", k.fac_xy, l * fac_top);
        }
    tree.text("exports/summary.csv", summary.str());
    tree.text("config.cfg", portable_text(cfg));
    json m = manifest_base("experiment2", cfg, eff);
    m["kernel"] = kname;
    m["instances"] = rows;
    tree.manifest(m);
    return kOk;
}

int cmd_export(const std::string& input, const std::string& output, int member, const std::string& reduce,
               const std::vector<std::string>& over, const std::vector<std::string>& binds, std::optional<double> iso,
               bool relative) {
    Field f = read_field(input, member);
    if (!over.empty()) {
        if (reduce != "max" && reduce != "sum") throw ConfigError("--reduce must be max or sum");
        f = reduce_axes(f, over, reduce == "max" ? Reduction::Max : Reduction::Sum);
    }
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!output.empty() && output != "-") {
        file.open(output, std::ios::binary | std::ios::trunc);
        if (!file) throw IoError(IoErrorCode::Write, "cannot write " + output);
        os = &file;
    }
    if (iso) {
        if (!binds.empty()) throw ConfigError("--bind and --iso cannot be combined");
        export_isosurface_points(*os, f, relative ? *iso * field_max(f) : *iso);
    } else {
        std::map<std::string, int> b;
        for (const auto& kv : binds) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--bind expects axis=index, got '" + kv + "'");
            try {
                b[kv.substr(0, eq)] = std::stoi(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("--bind index is not an integer: '" + kv + "'");
            }
        }
        export_slice_csv(*os, f, b);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatio-temporal contour and trajectory integration on the 5D motion manifold"};
    app.require_subcommand(1);
    Common o;

    auto* stim = app.add_subcommand("make-stimulus", "render the stimulus of an experiment");
    int stim_exp = 1;
    std::vector<int> dts;
    std::vector<std::string> dths;
    add_common(stim, o, false);
    stim->add_option("--experiment", stim_exp, "1: dashed circle, 2: occluded trajectory")->check(CLI::IsMember({1, 2}));
    stim->add_option("--dt", dts, "occlusion length in frames (experiment 2)");
    stim->add_option("--dtheta", dths, "direction change in radians, e.g. 0.5236 or pi/6 (experiment 2)");

    auto* filt = app.add_subcommand("filter", "lift a stimulus volume by energy filtering");
    std::string in, outp, thr;
    std::optional<int> frame;
    add_common(filt, o, false);
    filt->add_option("--input", in, "stimulus volume")->required();
    filt->add_option("--output", outp, "lifted energy F")->required();
    filt->add_option("--threshold", thr, "also write the thresholded activity F_T here");
    filt->add_option("--frame", frame, "lift only this frame");

    auto* kern = app.add_subcommand("kernel", "estimate a connectivity kernel");
    std::string mode;
    std::optional<std::int64_t> paths;
    add_common(kern, o, true);
    kern->add_option("--mode", mode, "contour or trajectory")->check(CLI::IsMember({"contour", "trajectory"}));
    kern->add_option("--paths", paths, "number of sample paths")->check(CLI::PositiveNumber);
    kern->add_option("--output", outp, "kernel file (default: cache directory)");

    auto* fac = app.add_subcommand("facilitate", "threshold, facilitate and compute F0 for a lifted volume");
    std::string kpath;
    add_common(fac, o, false);
    fac->add_option("--input", in, "lifted energy F")->required();
    fac->add_option("--kernel", kpath, "kernel file")->required();
    fac->add_option("--output", outp, "output directory")->required();

    auto* e1 = app.add_subcommand("experiment1", "contours in motion");
    add_common(e1, o, true);

    auto* e2 = app.add_subcommand("experiment2", "occluded trajectories");
    add_common(e2, o, true);
    e2->add_option("--dt", dts, "occlusion lengths (replaces sweep.delta_t)");
    e2->add_option("--dtheta", dths, "direction changes (replaces sweep.delta_theta)");

    auto* exp = app.add_subcommand("export", "write a volume as CSV slices or isosurface points");
    int member = 0;
    std::string reduce = "max";
    std::vector<std::string> over, binds;
    std::optional<double> iso;
    bool relative = false;
    exp->add_option("--input", in, "volume file")->required();
    exp->add_option("--output", outp, "CSV file (default stdout)");
    exp->add_option("--member", member, "kernel member");
    exp->add_option("--reduce", reduce, "max or sum");
    exp->add_option("--over", over, "axes to reduce");
    exp->add_option("--bind", binds, "fix an axis at a node index, as axis=index");
    exp->add_option("--iso", iso, "emit isosurface points at this value");
    exp->add_flag("--relative", relative, "isovalue is relative to the field maximum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        set_threads(o.threads);
        if (*stim) return cmd_make_stimulus(o, stim_exp, dts, dths);
        if (*filt) return cmd_filter(o, in, outp, thr, frame);
        if (*kern) return cmd_kernel(o, mode, paths, outp);
        if (*fac) return cmd_facilitate(o, in, kpath, outp);
        if (*e1) return cmd_experiment1(o);
        if (*e2) return cmd_experiment2(o, dts, dths);
        if (*exp) return cmd_export(in, outp, member, reduce, over, binds, iso, relative);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const MissingKernel& e) {
        std::cerr << "missing kernel: " << e.what() << "\n";
        return kMissingKernel;
    } catch (const IoError& e) {
        std::cerr << "io error (" << io_code_name(e.code()) << "): " << e.what() << "\n";
        return kIo;
    } catch (const CflError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOther;
}
