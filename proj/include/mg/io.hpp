#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mg/kernels.hpp"
#include "mg/volume.hpp"

namespace mg {

inline constexpr int kFormatVersion = 1;

enum class IoErrorCode { Open, Format, Version, Truncated, DimensionMismatch, Write };

class IoError : public std::runtime_error {
   public:
    IoError(IoErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    IoErrorCode code() const { return code_; }

   private:
    IoErrorCode code_;
};

std::string io_code_name(IoErrorCode c);

// Regular grid with named axes; the last axis varies fastest.
struct Field {
    std::vector<std::string> axes;
    std::vector<std::int64_t> dims;
    std::vector<double> origin;
    std::vector<double> spacing;
    std::vector<bool> periodic;
    std::vector<double> values;

    std::size_t rank() const { return axes.size(); }
    std::size_t size() const;
    double coord(std::size_t axis, double index) const { return origin[axis] + index * spacing[axis]; }
    void validate() const;
};

Field stimulus_field(const StimulusVolume& f);
// Axes (q1, q2, s, theta, v).
Field activity_field(const LiftedActivity& a);
// Axes (q1, q2, s, theta, v) for trajectory members, (q1, q2, theta, v) for the contour kernel.
Field kernel_field(const KernelGrid& K, int member);

enum class Reduction { Max, Sum };
// Reduces the fiber: axes (q1, q2, s, theta) when keep_theta, otherwise (q1, q2, s).
Field fiber_projection(const LiftedActivity& a, bool keep_theta, Reduction r);
// Fixes the s axis at a frame: axes (q1, q2, theta, v).
Field frame_field(const LiftedActivity& a, int frame);
// Reduces the named axes; the remaining axes keep their order.
Field reduce_axes(const Field& f, const std::vector<std::string>& drop, Reduction r);
double field_max(const Field& f);

// Container: 8-byte magic, u64 LE header length, UTF-8 JSON header, float32 LE payload.
struct VolumeFile {
    nlohmann::json header;  // format_version, axes, dims, spacing, origin, kind, provenance, payload, ...
    std::vector<float> payload;
};

void write_volume(const std::filesystem::path& path, const VolumeFile& file);
VolumeFile read_volume(const std::filesystem::path& path);

// Header for a field; extra keys (grid, sde, normalization) are added by the typed writers.
nlohmann::json field_header(const Field& f, const std::string& kind, const nlohmann::json& provenance);

void write_field(const std::filesystem::path& path, const Field& f, const std::string& kind,
                 const nlohmann::json& provenance = nlohmann::json::object());
// Any volume file as a field; a kernel file yields the given member with its density values.
Field read_field(const std::filesystem::path& path, int member = 0);
void write_stimulus(const std::filesystem::path& path, const StimulusVolume& f,
                    const nlohmann::json& provenance = nlohmann::json::object());
StimulusVolume read_stimulus(const std::filesystem::path& path);
void write_activity(const std::filesystem::path& path, const LiftedActivity& a,
                    const nlohmann::json& provenance = nlohmann::json::object());
LiftedActivity read_activity(const std::filesystem::path& path);
// Payload holds every member (axis "member" first); the sde spec and per-member totals are in
// the header, so the stored mass of each member is exactly 1 up to double rounding.
void write_kernel(const std::filesystem::path& path, const KernelGrid& K,
                  const nlohmann::json& provenance = nlohmann::json::object());
KernelGrid read_kernel(const std::filesystem::path& path);

nlohmann::json sde_to_json(const SdeSpec& s);
SdeSpec sde_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const ManifoldGrid& g);
ManifoldGrid grid_from_json(const nlohmann::json& j);

// CSV with one row per node of the free axes: free axis coordinates in canonical order, then value.
// bindings fixes axes (by name) at node indices.
void export_slice_csv(std::ostream& os, const Field& f, const std::map<std::string, int>& bindings);
// Points where the piecewise-linear field crosses the isovalue along grid edges (periodic axes
// wrap). Columns: axis coordinates in order. Rows are in node order, then axis order.
void export_isosurface_points(std::ostream& os, const Field& f, double isovalue);

// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mg
