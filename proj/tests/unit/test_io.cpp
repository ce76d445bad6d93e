#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mg/io.hpp"
#include "support.hpp"

using namespace mg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mg_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& p, const std::string& bytes) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

IoErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const IoError& e) {
        return e.code();
    }
    FAIL("no IoError thrown");
    return IoErrorCode::Format;
}

LiftedActivity random_activity(std::uint64_t seed) {
    ManifoldGrid g;
    g.nx = 6;
    g.ny = 5;
    g.nt = 4;
    g.n_theta = 8;
    g.n_v = 3;
    g.t0 = 2.0;
    testing::Gen gen(seed);
    LiftedActivity a(g, ActivityKind::Total);
    for (auto& v : a.values) v = gen.uniform(-3.0, 3.0);
    return a;
}

}  // namespace

TEST_CASE("activity round trip is bit exact") {
    const auto a = random_activity(1);
    const auto p = scratch("a.mgv");
    write_activity(p, a, {{"seed", 5}});
    const auto b = read_activity(p);
    CHECK(b.grid.same_shape(a.grid));
    CHECK(b.grid.t0 == a.grid.t0);
    CHECK(b.kind == ActivityKind::Total);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == static_cast<double>(static_cast<float>(a.values[i])));
    const auto q = scratch("b.mgv");
    write_activity(q, b, {{"seed", 5}});
    CHECK(slurp(p) == slurp(q));
    CHECK(read_volume(p).header["provenance"]["seed"] == 5);
}

TEST_CASE("payload is little endian float32") {
    StimulusVolume f(1, 1, 2);
    f.data = {1.0, -2.0};
    const auto p = scratch("s.mgv");
    write_stimulus(p, f);
    const auto bytes = slurp(p);
    const std::string tail = bytes.substr(bytes.size() - 8);
    CHECK(tail == std::string("\x00\x00\x80\x3f\x00\x00\x00\xc0", 8));
    const auto g = read_stimulus(p);
    CHECK(g.nt == 2);
    CHECK(g.data == f.data);
}

TEST_CASE("kernel round trip keeps counts, spec and unit mass") {
    ManifoldGrid g;
    g.nx = g.ny = g.nt = 1;
    g.n_theta = 8;
    g.n_v = 3;
    const auto K = estimate_gamma(make_sde(SdeMode::Trajectory, 2.0, 1.0, 3.0, 500, 77), trajectory_lattice(g, 3, 4));
    const auto p = scratch("k.mgv");
    write_kernel(p, K);
    const auto R = read_kernel(p);
    CHECK(R.weights == K.weights);
    CHECK(R.totals == K.totals);
    CHECK(R.member_v == K.member_v);
    CHECK(R.lattice.same_shape(K.lattice));
    CHECK(R.spec.seed == 77);
    CHECK(R.spec.n_paths == 500);
    CHECK(R.spec.dt == K.spec.dt);
    CHECK(R.spec.mode == SdeMode::Trajectory);
    for (int m = 0; m < R.n_members(); ++m) CHECK(std::abs(R.mass(m) - 1.0) < 1e-9);
    CHECK(code_of([&] { read_activity(p); }) == IoErrorCode::Format);
}

TEST_CASE("distinct error codes") {
    const auto a = random_activity(2);
    const auto p = scratch("e.mgv");
    write_activity(p, a);
    const std::string good = slurp(p);

    CHECK(code_of([&] { read_volume(scratch("missing.mgv")); }) == IoErrorCode::Open);

    std::string v2 = good;
    const auto at = v2.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    v2[at + 18] = '2';
    dump(scratch("v2.mgv"), v2);
    CHECK(code_of([&] { read_volume(scratch("v2.mgv")); }) == IoErrorCode::Version);

    dump(scratch("cut.mgv"), good.substr(0, good.size() - 10));
    CHECK(code_of([&] { read_volume(scratch("cut.mgv")); }) == IoErrorCode::Truncated);
    dump(scratch("cut2.mgv"), good.substr(0, 12));
    CHECK(code_of([&] { read_volume(scratch("cut2.mgv")); }) == IoErrorCode::Truncated);

    auto file = read_volume(p);
    file.header["dims"][0] = 7;
    write_volume(scratch("dims.mgv"), file);
    CHECK(code_of([&] { read_volume(scratch("dims.mgv")); }) == IoErrorCode::DimensionMismatch);

    // dims consistent with the payload but not with the grid description
    auto file2 = read_volume(p);
    file2.header["dims"] = {5, 6, 4, 8, 3};
    write_volume(scratch("dims2.mgv"), file2);
    CHECK(code_of([&] { read_activity(scratch("dims2.mgv")); }) == IoErrorCode::DimensionMismatch);

    dump(scratch("junk.mgv"), "hello world, not a volume");
    CHECK(code_of([&] { read_volume(scratch("junk.mgv")); }) == IoErrorCode::Format);
    dump(scratch("trail.mgv"), good + "xx");
    CHECK(code_of([&] { read_volume(scratch("trail.mgv")); }) == IoErrorCode::Format);
}

TEST_CASE("slice csv") {
    Field f;
    f.axes = {"a", "b", "c"};
    f.dims = {2, 3, 2};
    f.origin = {0, 10, 0};
    f.spacing = {1, 0.5, 1};
    f.periodic = {false, false, false};
    for (int i = 0; i < 12; ++i) f.values.push_back(i);
    std::ostringstream os;
    export_slice_csv(os, f, {{"c", 1}});
    CHECK(os.str() == "a,b,value\n0,10,1\n0,10.5,3\n0,11,5\n1,10,7\n1,10.5,9\n1,11,11\n");
    std::ostringstream all;
    export_slice_csv(all, f, {{"a", 1}, {"b", 2}, {"c", 0}});
    CHECK(all.str() == "value\n10\n");
    CHECK_THROWS_AS(export_slice_csv(os, f, {{"d", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(export_slice_csv(os, f, {{"a", 2}}), std::invalid_argument);
}

TEST_CASE("isosurface points interpolate edge crossings") {
    Field f;
    f.axes = {"x", "y"};
    f.dims = {3, 2};
    f.origin = {0, 0};
    f.spacing = {1, 2};
    f.periodic = {false, false};
    // x-major: (x, y) -> value
    f.values = {0, 0, 1, 0, 2, 2};
    std::ostringstream os;
    export_isosurface_points(os, f, 0.5);
    CHECK(os.str() == "x,y\n0.5,0\n1,1\n1.25,2\n");
    // periodic axis wraps between the last and first node
    Field p;
    p.axes = {"theta"};
    p.dims = {4};
    p.origin = {0};
    p.spacing = {1};
    p.periodic = {true};
    p.values = {1, 0, 0, 0};
    std::ostringstream ps;
    export_isosurface_points(ps, p, 0.5);
    CHECK(ps.str() == "theta\n0.5\n3.5\n");
}

TEST_CASE("fiber projections and frames") {
    const auto a = random_activity(3);
    const auto mx = fiber_projection(a, false, Reduction::Max);
    const auto sm = fiber_projection(a, true, Reduction::Sum);
    CHECK(mx.axes == std::vector<std::string>{"q1", "q2", "s"});
    CHECK(sm.axes == std::vector<std::string>{"q1", "q2", "s", "theta"});
    double m = -1e9, s = 0;
    for (int d = 0; d < 3; ++d) s += a.at(2, 3, 1, 5, d);
    for (int c = 0; c < 8; ++c)
        for (int d = 0; d < 3; ++d) m = std::max(m, a.at(2, 3, 1, c, d));
    CHECK(mx.values[(2 * 5 + 3) * 4 + 1] == m);
    CHECK(sm.values[((2 * 5 + 3) * 4 + 1) * 8 + 5] == doctest::Approx(s));
    const auto fr = frame_field(a, 2);
    CHECK(fr.axes == std::vector<std::string>{"q1", "q2", "theta", "v"});
    CHECK(fr.values[((1 * 5 + 4) * 8 + 6) * 3 + 2] == a.at(1, 4, 2, 6, 2));
}

TEST_CASE("fnv1a reference vectors") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("reduce_axes against explicit loops") {
    const auto a = random_activity(9);
    const Field f = activity_field(a);
    const auto& g = a.grid;
    const Field m = reduce_axes(f, {"theta", "v"}, Reduction::Max);
    CHECK(m.axes == std::vector<std::string>{"q1", "q2", "s"});
    const Field s = reduce_axes(f, {"q1", "q2"}, Reduction::Sum);
    CHECK(s.axes == std::vector<std::string>{"s", "theta", "v"});
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y)
            for (int t = 0; t < g.nt; ++t) {
                double best = -1e300;
                for (int th = 0; th < g.n_theta; ++th)
                    for (int v = 0; v < g.n_v; ++v) best = std::max(best, a.at(x, y, t, th, v));
                CHECK(m.values[(static_cast<std::size_t>(x) * g.ny + y) * g.nt + t] == best);
            }
    for (int t = 0; t < g.nt; ++t)
        for (int th = 0; th < g.n_theta; ++th)
            for (int v = 0; v < g.n_v; ++v) {
                double sum = 0;
                for (int x = 0; x < g.nx; ++x)
                    for (int y = 0; y < g.ny; ++y) sum += a.at(x, y, t, th, v);
                CHECK(s.values[(static_cast<std::size_t>(t) * g.n_theta + th) * g.n_v + v] == doctest::Approx(sum).epsilon(1e-12));
            }
    const Field all = reduce_axes(f, f.axes, Reduction::Max);
    CHECK(all.values.size() == 1);
    CHECK(all.values[0] == field_max(f));
    CHECK(field_max(f) == *std::max_element(a.values.begin(), a.values.end()));
    CHECK_THROWS(reduce_axes(f, {"nope"}, Reduction::Max));
}

TEST_CASE("read_field returns the stored field of any file") {
    const auto a = random_activity(10);
    const auto p = scratch("rf.mgv");
    write_activity(p, a);
    const Field f = read_field(p);
    const Field ref = activity_field(a);
    CHECK(f.axes == ref.axes);
    CHECK(f.dims == ref.dims);
    CHECK(f.origin == ref.origin);
    CHECK(f.periodic == ref.periodic);
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(f.values[i] == static_cast<double>(static_cast<float>(ref.values[i])));

    const Field proj = reduce_axes(ref, {"v"}, Reduction::Max);
    const auto q = scratch("rf_proj.mgv");
    write_field(q, proj, "F_T_max");
    const Field back = read_field(q);
    CHECK(back.axes == proj.axes);
    CHECK(back.dims == proj.dims);
    CHECK(code_of([&] { read_field(scratch("missing.mgv")); }) == IoErrorCode::Open);
}
