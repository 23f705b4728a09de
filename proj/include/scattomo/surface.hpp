#pragma once

#include <array>
#include <string>
#include <vector>

#include "scattomo/common.hpp"

namespace scattomo {

/// Uniform grid along one axis.
struct GridAxis {
    double origin = 0.0;
    double step = 1.0;
    int count = 1;

    double point(int i) const { return origin + step * i; }
    double last() const { return point(count - 1); }
};

/// Centered axis helper: [center - halfwidth, center + halfwidth] at `step`.
GridAxis centered_axis(double center, double halfwidth, double step);

/// Gridded complex samples of a measured (or recovered) scattering surface
/// over (khat, delta_p, delta_k). 2D figures use a khat axis of count 1.
struct SampledSurface {
    GridAxis khat;
    GridAxis delta_p;
    GridAxis delta_k;
    std::vector<cplx> values;  // index (ik * delta_p.count + ip) * delta_k.count + idk
    double sigma = 0.0;
    double gamma = 1.0;

    std::size_t index(int ik, int ip, int idk) const {
        return (static_cast<std::size_t>(ik) * static_cast<std::size_t>(delta_p.count) +
                static_cast<std::size_t>(ip)) *
                   static_cast<std::size_t>(delta_k.count) +
               static_cast<std::size_t>(idk);
    }
    cplx& at(int ik, int ip, int idk) { return values[index(ik, ip, idk)]; }
    const cplx& at(int ik, int ip, int idk) const { return values[index(ik, ip, idk)]; }
    std::size_t size() const {
        return static_cast<std::size_t>(khat.count) * static_cast<std::size_t>(delta_p.count) *
               static_cast<std::size_t>(delta_k.count);
    }
    void allocate() { values.assign(size(), cplx(0.0, 0.0)); }

    double max_abs() const;
};

/// CSV rows "khat,delta_k,delta_p,re,im,abs2" in index order; numbers are
/// shortest round-trip so re-runs are byte identical.
std::string surface_to_csv(const SampledSurface& surface);

/// JSON header describing axes and meta for the CSV payload.
std::string surface_meta_to_json(const SampledSurface& surface);

SampledSurface surface_from_csv(const std::string& meta_json, const std::string& csv);

void save_surface(const SampledSurface& surface, const std::string& csv_path,
                  const std::string& json_path);
SampledSurface load_surface(const std::string& csv_path, const std::string& json_path);

/// Shortest round-trip decimal form of a double (deterministic output).
std::string format_double(double value);

}  // namespace scattomo
