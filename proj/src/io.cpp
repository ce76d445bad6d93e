#include "mg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

namespace mg {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'V', 'O', 'L', '\r', '\n', '\x1a'};

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return x;
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::vector<double> to_double(const std::vector<float>& p) { return {p.begin(), p.end()}; }

std::vector<float> to_float(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

template <class T>
T header_get(const nlohmann::json& h, const char* key) {
    if (!h.contains(key)) throw IoError(IoErrorCode::Format, std::string("volume header lacks '") + key + "'");
    try {
        return h.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorCode::Format, std::string("volume header field '") + key + "': " + e.what());
    }
}

void expect_axes(const nlohmann::json& h, const std::vector<std::string>& axes, const std::string& what) {
    if (header_get<std::vector<std::string>>(h, "axes") != axes)
        throw IoError(IoErrorCode::Format, what + ": unexpected axes");
}

void expect_dims(const nlohmann::json& h, const std::vector<std::int64_t>& dims, const std::string& what) {
    if (header_get<std::vector<std::int64_t>>(h, "dims") != dims)
        throw IoError(IoErrorCode::DimensionMismatch, what + ": dims disagree with the grid description");
}

}  // namespace

std::string io_code_name(IoErrorCode c) {
    switch (c) {
        case IoErrorCode::Open: return "open";
        case IoErrorCode::Format: return "format";
        case IoErrorCode::Version: return "version";
        case IoErrorCode::Truncated: return "truncated";
        case IoErrorCode::DimensionMismatch: return "dimension-mismatch";
        case IoErrorCode::Write: return "write";
    }
    return "unknown";
}

std::size_t Field::size() const {
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

void Field::validate() const {
    const std::size_t r = axes.size();
    if (dims.size() != r || origin.size() != r || spacing.size() != r || periodic.size() != r)
        throw std::invalid_argument("field: axis metadata sizes differ");
    for (auto d : dims)
        if (d < 1) throw std::invalid_argument("field: dims must be positive");
    if (values.size() != size()) throw std::invalid_argument("field: value count does not match dims");
}

Field stimulus_field(const StimulusVolume& f) {
    Field out;
    out.axes = {"q1", "q2", "s"};
    out.dims = {f.nx, f.ny, f.nt};
    out.origin = {0.0, 0.0, 0.0};
    out.spacing = {1.0, 1.0, 1.0};
    out.periodic = {false, false, false};
    out.values = f.data;
    return out;
}

Field activity_field(const LiftedActivity& a) {
    const auto& g = a.grid;
    Field out;
    out.axes = {"q1", "q2", "s", "theta", "v"};
    out.dims = {g.nx, g.ny, g.nt, g.n_theta, g.n_v};
    out.origin = {0.0, 0.0, g.t0, 0.0, g.v(0)};
    out.spacing = {g.spacing, g.spacing, g.time_spacing, kTwoPi / g.n_theta, g.n_v > 1 ? g.v(1) - g.v(0) : 1.0};
    out.periodic = {false, false, false, true, false};
    out.values = a.values;
    return out;
}

Field kernel_field(const KernelGrid& K, int member) {
    const auto& L = K.lattice;
    if (member < 0 || member >= K.n_members()) throw std::invalid_argument("kernel_field: no such member");
    Field out;
    const bool traj = L.mode == SdeMode::Trajectory;
    if (traj) {
        out.axes = {"q1", "q2", "s", "theta", "v"};
        out.dims = {L.n_q(), L.n_q(), L.n_s, L.n_theta, L.n_v};
        out.origin = {-1.0 * L.half_width, -1.0 * L.half_width, 0.0, 0.0, L.v_min};
        out.spacing = {1.0, 1.0, 1.0, kTwoPi / L.n_theta, L.v_step};
        out.periodic = {false, false, false, true, false};
    } else {
        out.axes = {"q1", "q2", "theta", "v"};
        out.dims = {L.n_q(), L.n_q(), L.n_theta, L.n_v};
        out.origin = {-1.0 * L.half_width, -1.0 * L.half_width, 0.0, L.v_min};
        out.spacing = {1.0, 1.0, kTwoPi / L.n_theta, L.v_step};
        out.periodic = {false, false, true, false};
    }
    out.values.resize(L.cells());
    for (std::size_t i = 0; i < L.cells(); ++i) out.values[i] = K.value(member, i);
    return out;
}

Field fiber_projection(const LiftedActivity& a, bool keep_theta, Reduction r) {
    const auto& g = a.grid;
    Field full = activity_field(a);
    Field out;
    const int keep = keep_theta ? 4 : 3;
    out.axes.assign(full.axes.begin(), full.axes.begin() + keep);
    out.dims.assign(full.dims.begin(), full.dims.begin() + keep);
    out.origin.assign(full.origin.begin(), full.origin.begin() + keep);
    out.spacing.assign(full.spacing.begin(), full.spacing.begin() + keep);
    out.periodic.assign(full.periodic.begin(), full.periodic.begin() + keep);
    const std::size_t group = keep_theta ? g.n_v : g.n_fibers();
    out.values.resize(a.values.size() / group);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double* p = a.values.data() + i * group;
        out.values[i] = r == Reduction::Max ? *std::max_element(p, p + group) : std::accumulate(p, p + group, 0.0);
    }
    return out;
}

Field frame_field(const LiftedActivity& a, int frame) {
    const LiftedActivity s = slice_frame(a, frame);
    Field f = activity_field(s);
    f.axes.erase(f.axes.begin() + 2);
    f.dims.erase(f.dims.begin() + 2);
    f.origin.erase(f.origin.begin() + 2);
    f.spacing.erase(f.spacing.begin() + 2);
    f.periodic.erase(f.periodic.begin() + 2);
    return f;
}

Field reduce_axes(const Field& f, const std::vector<std::string>& drop, Reduction r) {
    f.validate();
    std::vector<bool> gone(f.rank(), false);
    for (const auto& name : drop) {
        const auto it = std::find(f.axes.begin(), f.axes.end(), name);
        if (it == f.axes.end()) throw std::invalid_argument("reduce_axes: no axis '" + name + "'");
        gone[it - f.axes.begin()] = true;
    }
    Field out;
    for (std::size_t i = 0; i < f.rank(); ++i)
        if (!gone[i]) {
            out.axes.push_back(f.axes[i]);
            out.dims.push_back(f.dims[i]);
            out.origin.push_back(f.origin[i]);
            out.spacing.push_back(f.spacing[i]);
            out.periodic.push_back(f.periodic[i]);
        }
    if (out.axes.empty()) {
        out.axes = {"scalar"};
        out.dims = {1};
        out.origin = {0.0};
        out.spacing = {1.0};
        out.periodic = {false};
    }
    out.values.assign(out.size(), r == Reduction::Max ? -std::numeric_limits<double>::infinity() : 0.0);
    std::vector<std::int64_t> idx(f.rank(), 0);
    for (std::size_t n = 0; n < f.values.size(); ++n) {
        std::size_t o = 0;
        for (std::size_t i = 0; i < f.rank(); ++i)
            if (!gone[i]) o = o * f.dims[i] + idx[i];
        double& dst = out.values[o];
        dst = r == Reduction::Max ? std::max(dst, f.values[n]) : dst + f.values[n];
        for (std::size_t i = f.rank(); i-- > 0;) {
            if (++idx[i] < f.dims[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

double field_max(const Field& f) {
    if (f.values.empty()) throw std::invalid_argument("field_max: empty field");
    return *std::max_element(f.values.begin(), f.values.end());
}

void write_volume(const std::filesystem::path& path, const VolumeFile& file) {
    nlohmann::json h = file.header;
    h["format_version"] = kFormatVersion;
    h["payload"] = {{"dtype", "float32"}, {"endian", "little"}, {"bytes", file.payload.size() * 4}};
    const std::string text = h.dump(1);
    std::string head(kMagic, 8);
    put_u64(head, text.size());
    head += text;
    std::string body(file.payload.size() * 4, '\0');
    for (std::size_t i = 0; i < file.payload.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(file.payload[i]);
        for (int b = 0; b < 4; ++b) body[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(IoErrorCode::Open, "cannot open for writing: " + path.string());
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) throw IoError(IoErrorCode::Write, "write failed: " + path.string());
}

VolumeFile read_volume(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(IoErrorCode::Open, "cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw IoError(IoErrorCode::Format, "not a volume file: " + path.string());
    if (bytes.size() < 16) throw IoError(IoErrorCode::Truncated, "header truncated: " + path.string());
    const std::uint64_t hlen = get_u64(u + 8);
    if (hlen > bytes.size() - 16) throw IoError(IoErrorCode::Truncated, "header truncated: " + path.string());
    VolumeFile out;
    try {
        out.header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(hlen));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorCode::Format, "malformed header in " + path.string() + ": " + e.what());
    }
    const int version = header_get<int>(out.header, "format_version");
    if (version != kFormatVersion)
        throw IoError(IoErrorCode::Version, "unsupported format version " + std::to_string(version) + " in " +
                                                path.string());
    const auto dims = header_get<std::vector<std::int64_t>>(out.header, "dims");
    const auto axes = header_get<std::vector<std::string>>(out.header, "axes");
    if (!out.header.contains("payload") || !out.header["payload"].contains("bytes"))
        throw IoError(IoErrorCode::Format, "header lacks payload size: " + path.string());
    const auto& pl = out.header["payload"];
    if (pl.value("dtype", "") != "float32" || pl.value("endian", "") != "little")
        throw IoError(IoErrorCode::Format, "unsupported payload encoding: " + path.string());
    const std::uint64_t declared = pl["bytes"].get<std::uint64_t>();
    const std::uint64_t available = bytes.size() - 16 - hlen;
    if (available < declared) throw IoError(IoErrorCode::Truncated, "payload truncated: " + path.string());
    if (available > declared) throw IoError(IoErrorCode::Format, "trailing bytes after payload: " + path.string());
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d < 1) throw IoError(IoErrorCode::DimensionMismatch, "non-positive dimension in " + path.string());
        n *= static_cast<std::uint64_t>(d);
    }
    if (dims.size() != axes.size() || n * 4 != declared)
        throw IoError(IoErrorCode::DimensionMismatch, "dims do not match the payload length in " + path.string());
    out.payload.resize(n);
    const unsigned char* p = u + 16 + hlen;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint32_t w = 0;
        for (int b = 0; b < 4; ++b) w |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
        out.payload[i] = std::bit_cast<float>(w);
    }
    return out;
}

nlohmann::json field_header(const Field& f, const std::string& kind, const nlohmann::json& provenance) {
    f.validate();
    nlohmann::json h;
    h["format_version"] = kFormatVersion;
    h["axes"] = f.axes;
    h["dims"] = f.dims;
    h["spacing"] = f.spacing;
    h["origin"] = f.origin;
    std::vector<std::string> per;
    for (std::size_t i = 0; i < f.rank(); ++i)
        if (f.periodic[i]) per.push_back(f.axes[i]);
    h["periodic"] = per;
    h["kind"] = kind;
    h["provenance"] = provenance.is_null() ? nlohmann::json::object() : provenance;
    return h;
}

void write_field(const std::filesystem::path& path, const Field& f, const std::string& kind,
                 const nlohmann::json& provenance) {
    write_volume(path, {field_header(f, kind, provenance), to_float(f.values)});
}

Field read_field(const std::filesystem::path& path, int member) {
    auto file = read_volume(path);
    if (file.header.contains("kind") && file.header["kind"] == "kernel") return kernel_field(read_kernel(path), member);
    Field f;
    f.axes = header_get<std::vector<std::string>>(file.header, "axes");
    f.dims = header_get<std::vector<std::int64_t>>(file.header, "dims");
    f.origin = header_get<std::vector<double>>(file.header, "origin");
    f.spacing = header_get<std::vector<double>>(file.header, "spacing");
    const auto per = header_get<std::vector<std::string>>(file.header, "periodic");
    for (const auto& a : f.axes) f.periodic.push_back(std::find(per.begin(), per.end(), a) != per.end());
    f.values = to_double(file.payload);
    try {
        f.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(IoErrorCode::DimensionMismatch, std::string("volume: ") + e.what());
    }
    return f;
}

void write_stimulus(const std::filesystem::path& path, const StimulusVolume& f, const nlohmann::json& provenance) {
    write_field(path, stimulus_field(f), "stimulus", provenance);
}

StimulusVolume read_stimulus(const std::filesystem::path& path) {
    const auto file = read_volume(path);
    expect_axes(file.header, {"q1", "q2", "s"}, "stimulus");
    const auto dims = header_get<std::vector<std::int64_t>>(file.header, "dims");
    StimulusVolume f(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    f.data = to_double(file.payload);
    return f;
}

nlohmann::json grid_to_json(const ManifoldGrid& g) {
    return {{"nx", g.nx},         {"ny", g.ny},           {"nt", g.nt},           {"spacing", g.spacing},
            {"time_spacing", g.time_spacing}, {"t0", g.t0}, {"n_theta", g.n_theta}, {"n_v", g.n_v},
            {"v_max", g.v_max}};
}

ManifoldGrid grid_from_json(const nlohmann::json& j) {
    ManifoldGrid g;
    try {
        g.nx = j.at("nx").get<int>();
        g.ny = j.at("ny").get<int>();
        g.nt = j.at("nt").get<int>();
        g.spacing = j.at("spacing").get<double>();
        g.time_spacing = j.at("time_spacing").get<double>();
        g.t0 = j.at("t0").get<double>();
        g.n_theta = j.at("n_theta").get<int>();
        g.n_v = j.at("n_v").get<int>();
        g.v_max = j.at("v_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorCode::Format, std::string("grid description: ") + e.what());
    }
    return g;
}

void write_activity(const std::filesystem::path& path, const LiftedActivity& a, const nlohmann::json& provenance) {
    auto h = field_header(activity_field(a), kind_name(a.kind), provenance);
    h["grid"] = grid_to_json(a.grid);
    write_volume(path, {h, to_float(a.values)});
}

LiftedActivity read_activity(const std::filesystem::path& path) {
    const auto file = read_volume(path);
    expect_axes(file.header, {"q1", "q2", "s", "theta", "v"}, "activity");
    if (!file.header.contains("grid")) throw IoError(IoErrorCode::Format, "activity file lacks a grid description");
    const ManifoldGrid g = grid_from_json(file.header["grid"]);
    expect_dims(file.header, {g.nx, g.ny, g.nt, g.n_theta, g.n_v}, "activity");
    ActivityKind kind;
    try {
        kind = kind_from_name(header_get<std::string>(file.header, "kind"));
    } catch (const std::invalid_argument& e) {
        throw IoError(IoErrorCode::Format, e.what());
    }
    LiftedActivity a(g, kind);
    a.values = to_double(file.payload);
    return a;
}

nlohmann::json sde_to_json(const SdeSpec& s) {
    return {{"mode", mode_name(s.mode)}, {"kappa", s.kappa}, {"alpha", s.alpha}, {"dt", s.dt}, {"T", s.T},
            {"n_paths", s.n_paths},      {"seed", s.seed},   {"scale", s.scale}};
}

SdeSpec sde_from_json(const nlohmann::json& j) {
    SdeSpec s;
    try {
        s.mode = mode_from_name(j.at("mode").get<std::string>());
        s.kappa = j.at("kappa").get<double>();
        s.alpha = j.at("alpha").get<double>();
        s.dt = j.at("dt").get<double>();
        s.T = j.at("T").get<double>();
        s.n_paths = j.at("n_paths").get<std::int64_t>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.scale = j.at("scale").get<double>();
    } catch (const std::exception& e) {
        throw IoError(IoErrorCode::Format, std::string("sde description: ") + e.what());
    }
    return s;
}

void write_kernel(const std::filesystem::path& path, const KernelGrid& K, const nlohmann::json& provenance) {
    const auto& L = K.lattice;
    Field f;
    f.axes = {"member", "q1", "q2", "s", "theta", "v"};
    f.dims = {K.n_members(), L.n_q(), L.n_q(), L.n_s, L.n_theta, L.n_v};
    f.origin = {0.0, -1.0 * L.half_width, -1.0 * L.half_width, 0.0, 0.0, L.v_min};
    f.spacing = {1.0, 1.0, 1.0, 1.0, kTwoPi / L.n_theta, L.v_step};
    f.periodic = {false, false, false, false, true, false};
    f.values.assign(f.size(), 0.0);  // payload is written from the float weights directly
    auto h = field_header(f, "kernel", provenance);
    h["sde"] = sde_to_json(K.spec);
    h["lattice"] = {{"mode", mode_name(L.mode)}, {"half_width", L.half_width}, {"n_s", L.n_s},
                    {"n_theta", L.n_theta},      {"n_v", L.n_v},               {"v_min", L.v_min},
                    {"v_step", L.v_step}};
    std::vector<double> masses;
    for (int m = 0; m < K.n_members(); ++m) masses.push_back(K.mass(m));
    h["normalization"] = {{"member_v", K.member_v}, {"totals", K.totals}, {"exact_counts", K.exact_counts},
                          {"mass", masses}};
    write_volume(path, {h, K.weights});
}

KernelGrid read_kernel(const std::filesystem::path& path) {
    auto file = read_volume(path);
    expect_axes(file.header, {"member", "q1", "q2", "s", "theta", "v"}, "kernel");
    KernelGrid K;
    try {
        const auto& l = file.header.at("lattice");
        K.lattice.mode = mode_from_name(l.at("mode").get<std::string>());
        K.lattice.half_width = l.at("half_width").get<int>();
        K.lattice.n_s = l.at("n_s").get<int>();
        K.lattice.n_theta = l.at("n_theta").get<int>();
        K.lattice.n_v = l.at("n_v").get<int>();
        K.lattice.v_min = l.at("v_min").get<double>();
        K.lattice.v_step = l.at("v_step").get<double>();
        const auto& n = file.header.at("normalization");
        K.member_v = n.at("member_v").get<std::vector<double>>();
        K.totals = n.at("totals").get<std::vector<double>>();
        K.exact_counts = n.at("exact_counts").get<bool>();
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(IoErrorCode::Format, std::string("kernel header: ") + e.what());
    }
    if (!file.header.contains("sde")) throw IoError(IoErrorCode::Format, "kernel header lacks the sde spec");
    K.spec = sde_from_json(file.header["sde"]);
    const auto& L = K.lattice;
    expect_dims(file.header,
                {static_cast<std::int64_t>(K.member_v.size()), L.n_q(), L.n_q(), L.n_s, L.n_theta, L.n_v}, "kernel");
    if (K.totals.size() != K.member_v.size()) throw IoError(IoErrorCode::Format, "kernel totals do not match members");
    K.weights = std::move(file.payload);
    for (int m = 0; m < K.n_members(); ++m)
        if (std::abs(K.mass(m) - 1.0) > 1e-9)
            throw IoError(IoErrorCode::Format, "kernel member " + std::to_string(m) + " does not have unit mass");
    return K;
}

void export_slice_csv(std::ostream& os, const Field& f, const std::map<std::string, int>& bindings) {
    f.validate();
    const std::size_t r = f.rank();
    std::vector<int> fixed(r, -1);
    for (const auto& [name, idx] : bindings) {
        const auto it = std::find(f.axes.begin(), f.axes.end(), name);
        if (it == f.axes.end()) throw std::invalid_argument("export_slice_csv: no axis named " + name);
        const std::size_t a = static_cast<std::size_t>(it - f.axes.begin());
        if (idx < 0 || idx >= f.dims[a]) throw std::invalid_argument("export_slice_csv: index out of range for " + name);
        fixed[a] = idx;
    }
    std::vector<std::size_t> free;
    for (std::size_t a = 0; a < r; ++a)
        if (fixed[a] < 0) free.push_back(a);
    for (std::size_t k = 0; k < free.size(); ++k) os << f.axes[free[k]] << ',';
    os << "value\n";
    std::vector<std::int64_t> idx(r, 0);
    for (std::size_t a = 0; a < r; ++a)
        if (fixed[a] >= 0) idx[a] = fixed[a];
    while (true) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < r; ++a) flat = flat * static_cast<std::size_t>(f.dims[a]) + idx[a];
        for (std::size_t a : free) os << format_number(f.coord(a, static_cast<double>(idx[a]))) << ',';
        os << format_number(f.values[flat]) << '\n';
        // odometer over the free axes, last fastest
        int k = static_cast<int>(free.size()) - 1;
        for (; k >= 0; --k) {
            const std::size_t a = free[k];
            if (++idx[a] < f.dims[a]) break;
            idx[a] = 0;
        }
        if (k < 0) break;
    }
}

void export_isosurface_points(std::ostream& os, const Field& f, double isovalue) {
    f.validate();
    const std::size_t r = f.rank();
    for (std::size_t a = 0; a < r; ++a) os << f.axes[a] << (a + 1 < r ? ',' : '\n');
    std::vector<std::size_t> stride(r, 1);
    for (int a = static_cast<int>(r) - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<std::size_t>(f.dims[a + 1]);
    std::vector<std::int64_t> idx(r, 0);
    for (std::size_t flat = 0; flat < f.values.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t a = 0; a < r; ++a) {
            idx[a] = static_cast<std::int64_t>(rem / stride[a]);
            rem %= stride[a];
        }
        const double v0 = f.values[flat];
        for (std::size_t a = 0; a < r; ++a) {
            std::int64_t j = idx[a] + 1;
            if (j >= f.dims[a]) {
                if (!f.periodic[a] || f.dims[a] < 2) continue;
                j = 0;
            }
            const double v1 = f.values[flat + (j - idx[a]) * static_cast<std::int64_t>(stride[a])];
            // half-open test so a node exactly at the isovalue is reported once
            if ((v0 < isovalue) == (v1 < isovalue)) continue;
            const double t = (isovalue - v0) / (v1 - v0);
            for (std::size_t b = 0; b < r; ++b) {
                double c = f.coord(b, static_cast<double>(idx[b]) + (b == a ? t : 0.0));
                if (b == a && f.periodic[a]) c = std::fmod(c - f.origin[a], f.dims[a] * f.spacing[a]) + f.origin[a];
                os << format_number(c) << (b + 1 < r ? ',' : '\n');
            }
        }
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mg
