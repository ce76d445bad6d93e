#include "mg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mg/geometry.hpp"
#include "mg/io.hpp"

namespace mg {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size() && std::isfinite(x)) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    // accept integral values written in floating notation, e.g. 1e6
    const double d = to_double(key, v);
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Key {
    std::string name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
Key int_key(const std::string& name, T ExperimentConfig::*m) {
    return {name, [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
            [m, name](ExperimentConfig& c, const std::string& v) { c.*m = static_cast<T>(to_integer(name, v)); }};
}

Key real_key(const std::string& name, double ExperimentConfig::*m) {
    return {name, [m](const ExperimentConfig& c) { return fmt(c.*m); },
            [m, name](ExperimentConfig& c, const std::string& v) { c.*m = to_double(name, v); }};
}

template <class S, class T>
Key nested_int(const std::string& name, S ExperimentConfig::*s, T S::*m) {
    return {name, [s, m](const ExperimentConfig& c) { return std::to_string(c.*s.*m); },
            [s, m, name](ExperimentConfig& c, const std::string& v) { c.*s.*m = static_cast<T>(to_integer(name, v)); }};
}

template <class S>
Key nested_real(const std::string& name, S ExperimentConfig::*s, double S::*m, bool angle = false) {
    return {name, [s, m](const ExperimentConfig& c) { return fmt(c.*s.*m); },
            [s, m, name, angle](ExperimentConfig& c, const std::string& v) {
                c.*s.*m = angle ? parse_angle(v) : to_double(name, v);
            }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        using C = ExperimentConfig;
        std::vector<Key> k;
        k.push_back(int_key("experiment", &C::experiment));
        k.push_back(nested_int("circle.nx", &C::circle, &CircleSpec::nx));
        k.push_back(nested_int("circle.ny", &C::circle, &CircleSpec::ny));
        k.push_back(nested_int("circle.n_frames", &C::circle, &CircleSpec::n_frames));
        k.push_back(nested_real("circle.radius", &C::circle, &CircleSpec::radius));
        k.push_back(nested_int("circle.n_segments", &C::circle, &CircleSpec::n_segments));
        k.push_back(nested_real("circle.width", &C::circle, &CircleSpec::width));
        k.push_back(nested_real("circle.gap_fraction", &C::circle, &CircleSpec::gap_fraction));
        k.push_back(nested_real("circle.vx", &C::circle, &CircleSpec::vx));
        k.push_back(nested_real("circle.vy", &C::circle, &CircleSpec::vy));
        k.push_back(nested_int("circle.supersample", &C::circle, &CircleSpec::supersample));
        k.push_back(int_key("frame", &C::frame));
        k.push_back(nested_int("trajectory.nx", &C::trajectory, &TrajectorySpec::nx));
        k.push_back(nested_int("trajectory.ny", &C::trajectory, &TrajectorySpec::ny));
        k.push_back(nested_int("trajectory.n_frames", &C::trajectory, &TrajectorySpec::n_frames));
        k.push_back(nested_real("trajectory.eccentricity", &C::trajectory, &TrajectorySpec::eccentricity));
        k.push_back(nested_real("trajectory.minor_axis", &C::trajectory, &TrajectorySpec::minor_axis));
        k.push_back(nested_real("trajectory.speed", &C::trajectory, &TrajectorySpec::speed));
        k.push_back(nested_real("trajectory.theta_init", &C::trajectory, &TrajectorySpec::theta_init, true));
        k.push_back(nested_int("trajectory.t1", &C::trajectory, &TrajectorySpec::t1));
        k.push_back(nested_int("trajectory.delta_t", &C::trajectory, &TrajectorySpec::delta_t));
        k.push_back(nested_real("trajectory.delta_theta", &C::trajectory, &TrajectorySpec::delta_theta, true));
        k.push_back(nested_int("trajectory.supersample", &C::trajectory, &TrajectorySpec::supersample));
        k.push_back(int_key("grid.n_theta", &C::n_theta));
        k.push_back(int_key("grid.n_v", &C::n_v));
        k.push_back(real_key("filter.v_max", &C::v_max));
        k.push_back({"filter.p", [](const C& c) { return fmt(c.p_modulus); },
                     [](C& c, const std::string& v) { c.p_modulus = parse_angle(v); }});
        k.push_back(real_key("filter.truncation", &C::filter_truncation));
        k.push_back(real_key("threshold.mu", &C::mu));
        k.push_back(real_key("threshold.beta", &C::beta));
        k.push_back(real_key("kernel.kappa", &C::kappa));
        k.push_back(real_key("kernel.alpha", &C::alpha));
        k.push_back(real_key("kernel.T", &C::horizon));
        k.push_back(real_key("kernel.dt", &C::dt));
        k.push_back(int_key("kernel.paths", &C::n_paths));
        k.push_back({"kernel.seed",
                     [](const C& c) { return c.seed_set ? std::to_string(c.seed) : std::string("none"); },
                     [](C& c, const std::string& v) {
                         if (v == "none") {
                             c.seed_set = false;
                             c.seed = 0;
                             return;
                         }
                         const long long s = to_integer("kernel.seed", v);
                         if (s < 0) throw ConfigError("config key 'kernel.seed': must be nonnegative");
                         c.seed = static_cast<std::uint64_t>(s);
                         c.seed_set = true;
                     }});
        k.push_back(int_key("kernel.half_width", &C::half_width));
        k.push_back(int_key("kernel.s_max", &C::s_max));
        k.push_back(real_key("kernel.truncation", &C::kernel_truncation));
        k.push_back(real_key("facilitation.c_f", &C::c_f));
        k.push_back(real_key("facilitation.source_floor", &C::source_floor));
        k.push_back({"sweep.delta_t",
                     [](const C& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.sweep_delta_t.size(); ++i)
                             s += (i ? "," : "") + std::to_string(c.sweep_delta_t[i]);
                         return s;
                     },
                     [](C& c, const std::string& v) {
                         c.sweep_delta_t.clear();
                         for (const auto& x : split_list(v))
                             c.sweep_delta_t.push_back(static_cast<int>(to_integer("sweep.delta_t", x)));
                     }});
        k.push_back({"sweep.delta_theta",
                     [](const C& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.sweep_delta_theta.size(); ++i)
                             s += (i ? "," : "") + fmt(c.sweep_delta_theta[i]);
                         return s;
                     },
                     [](C& c, const std::string& v) {
                         c.sweep_delta_theta.clear();
                         for (const auto& x : split_list(v)) c.sweep_delta_theta.push_back(parse_angle(x));
                     }});
        k.push_back(int_key("window_after", &C::window_after));
        k.push_back({"full_volumes", [](const C& c) { return std::string(c.full_volumes ? "true" : "false"); },
                     [](C& c, const std::string& v) { c.full_volumes = to_bool("full_volumes", v); }});
        k.push_back(real_key("export.ft_isovalue", &C::ft_isovalue));
        k.push_back(real_key("export.f0_isovalue", &C::f0_isovalue));
        k.push_back(real_key("export.kernel_relative_isovalue", &C::kernel_relative_isovalue));
        k.push_back({"export.levels",
                     [](const C& c) {
                         std::string s;
                         for (std::size_t i = 0; i < c.iso_levels.size(); ++i) s += (i ? "," : "") + fmt(c.iso_levels[i]);
                         return s;
                     },
                     [](C& c, const std::string& v) {
                         c.iso_levels.clear();
                         for (const auto& x : split_list(v)) c.iso_levels.push_back(to_double("export.levels", x));
                     }});
        k.push_back(real_key("scale", &C::scale));
        k.push_back({"out", [](const C& c) { return c.out; }, [](C& c, const std::string& v) { c.out = v; }});
        return k;
    }();
    return table;
}

std::string render(const ExperimentConfig& cfg, bool with_out) {
    std::string s;
    for (const auto& k : keys()) {
        if (!with_out && k.name == "out") continue;
        s += k.name + " = " + k.get(cfg) + "\n";
    }
    return s;
}

}  // namespace

double parse_angle(const std::string& raw) {
    const std::string s = trim(raw);
    const auto at = s.find("pi");
    if (at == std::string::npos) return to_double("angle", s);
    std::string pre = trim(s.substr(0, at));
    if (!pre.empty() && pre.back() == '*') pre = trim(pre.substr(0, pre.size() - 1));
    double factor = 1.0;
    if (pre == "-")
        factor = -1.0;
    else if (!pre.empty() && pre != "+")
        factor = to_double("angle", pre);
    const std::string post = trim(s.substr(at + 2));
    double divisor = 1.0;
    if (!post.empty()) {
        if (post[0] != '/') throw ConfigError("bad angle expression: '" + s + "'");
        divisor = to_double("angle", trim(post.substr(1)));
        if (divisor == 0.0) throw ConfigError("bad angle expression: '" + s + "'");
    }
    return factor * kPi / divisor;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("invalid config: " + what);
    };
    need(experiment == 1 || experiment == 2, "experiment must be 1 or 2");
    try {
        if (experiment == 1)
            circle.validate();
        else
            trajectory.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    if (experiment == 1) need(frame >= -1 && frame < circle.n_frames, "frame out of range");
    need(n_theta >= 2, "grid.n_theta >= 2");
    need(n_v >= 1 && n_v % 2 == 1, "grid.n_v must be odd and positive");
    need(v_max > 0, "filter.v_max > 0");
    need(p_modulus > 0 && p_modulus <= kPi, "filter.p in (0, pi]");
    need(filter_truncation > 0, "filter.truncation > 0");
    need(mu > 0, "threshold.mu > 0");
    need(kappa > 0 && alpha >= 0, "kernel.kappa > 0 and kernel.alpha >= 0");
    need(horizon >= 0 && dt >= 0, "kernel.T and kernel.dt nonnegative");
    need(n_paths > 0, "kernel.paths > 0");
    need(half_width >= 1, "kernel.half_width >= 1");
    need(s_max >= 1, "kernel.s_max >= 1");
    need(kernel_truncation >= 0 && kernel_truncation < 1, "kernel.truncation in [0, 1)");
    need(c_f >= 0, "facilitation.c_f >= 0");
    need(source_floor >= 0, "facilitation.source_floor >= 0");
    for (int d : sweep_delta_t) need(d >= 0, "sweep.delta_t entries nonnegative");
    need(window_after >= 0, "window_after >= 0");
    need(scale > 0 && scale <= 1, "scale in (0, 1]");
    need(kernel_relative_isovalue > 0 && kernel_relative_isovalue < 1, "export.kernel_relative_isovalue in (0, 1)");
    for (double l : iso_levels) need(l > 0 && l <= 1, "export.levels entries in (0, 1]");
    need(!out.empty(), "out must be set");
}

ExperimentConfig default_config(int experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment == 1) {
        c.mu = 10.0;
        c.beta = 0.5;
        c.c_f = 40.0;
        c.half_width = 15;
    } else if (experiment == 2) {
        c.mu = 20.0;
        c.beta = 0.7;
        c.c_f = 20.0;
        c.half_width = 12;
        c.s_max = 24;
        c.source_floor = 1e-3;
        c.sweep_delta_t = {0, 6, 12, 24};
        c.sweep_delta_theta = {0.0, kPi / 6, kPi / 4, 5 * kPi / 12, kPi / 2};
    } else {
        throw ConfigError("experiment must be 1 or 2");
    }
    return c;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : keys()) {
        if (k.name == key) {
            k.set(cfg, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    bool any = false;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "experiment") {
            if (any) throw ConfigError("config line " + std::to_string(lineno) + ": 'experiment' must come first");
            const std::string out = cfg.out;
            cfg = default_config(static_cast<int>(to_integer(key, value)));
            cfg.out = out;
        } else {
            apply_setting(cfg, key, value);
        }
        any = true;
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(IoErrorCode::Open, "cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string config_text(const ExperimentConfig& cfg) { return render(cfg, true); }

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(render(cfg, false)); }

ExperimentConfig effective_config(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    const double s = in.scale;
    if (!(s > 0 && s <= 1)) throw ConfigError("scale must be in (0, 1]");
    if (s == 1.0) return cfg;
    auto sc = [s](int n, int lo) { return std::max(lo, static_cast<int>(std::lround(n * s))); };
    cfg.circle.nx = sc(cfg.circle.nx, 8);
    cfg.circle.ny = sc(cfg.circle.ny, 8);
    cfg.circle.n_frames = sc(cfg.circle.n_frames, 2);
    cfg.circle.radius *= s;
    if (cfg.frame >= cfg.circle.n_frames) cfg.frame = -1;
    cfg.trajectory.nx = sc(cfg.trajectory.nx, 8);
    cfg.trajectory.ny = sc(cfg.trajectory.ny, 8);
    cfg.trajectory.n_frames = sc(cfg.trajectory.n_frames, 4);
    if (cfg.trajectory.t1 >= 0) cfg.trajectory.t1 = static_cast<int>(std::lround(cfg.trajectory.t1 * s));
    cfg.trajectory.delta_t = static_cast<int>(std::lround(cfg.trajectory.delta_t * s));
    for (int& d : cfg.sweep_delta_t) d = static_cast<int>(std::lround(d * s));
    cfg.window_after = static_cast<int>(std::lround(cfg.window_after * s));
    cfg.half_width = sc(cfg.half_width, 2);
    cfg.s_max = sc(cfg.s_max, 2);
    cfg.scale = 1.0;
    return cfg;
}

}  // namespace mg
