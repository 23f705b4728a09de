#include "scattomo/surface.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scattomo {

GridAxis centered_axis(double center, double halfwidth, double step) {
    if (!(step > 0.0) || halfwidth < 0.0)
        throw std::invalid_argument("surface: axis needs step > 0 and halfwidth >= 0");
    const int half = static_cast<int>(std::ceil(halfwidth / step - 1e-12));
    return {center - half * step, step, 2 * half + 1};
}

double SampledSurface::max_abs() const {
    double peak = 0.0;
    for (const cplx& v : values) peak = std::max(peak, std::abs(v));
    return peak;
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw std::runtime_error("surface: number formatting failed");
    return std::string(buf, ptr);
}

std::string surface_to_csv(const SampledSurface& surface) {
    std::string out = "khat,delta_k,delta_p,re,im,abs2\n";
    for (int ik = 0; ik < surface.khat.count; ++ik)
        for (int ip = 0; ip < surface.delta_p.count; ++ip)
            for (int idk = 0; idk < surface.delta_k.count; ++idk) {
                const cplx v = surface.at(ik, ip, idk);
                out += format_double(surface.khat.point(ik));
                out += ',';
                out += format_double(surface.delta_k.point(idk));
                out += ',';
                out += format_double(surface.delta_p.point(ip));
                out += ',';
                out += format_double(v.real());
                out += ',';
                out += format_double(v.imag());
                out += ',';
                out += format_double(std::norm(v));
                out += '\n';
            }
    return out;
}

namespace {

nlohmann::json axis_to_json(const GridAxis& axis) {
    return {{"origin", axis.origin}, {"step", axis.step}, {"count", axis.count}};
}

GridAxis axis_from_json(const nlohmann::json& j) {
    GridAxis axis{j.at("origin").get<double>(), j.at("step").get<double>(),
                  j.at("count").get<int>()};
    if (!(axis.step > 0.0) || axis.count < 1)
        throw std::invalid_argument("surface: malformed axis in header");
    return axis;
}

}  // namespace

std::string surface_meta_to_json(const SampledSurface& surface) {
    nlohmann::json doc;
    doc["axes"] = {{"khat", axis_to_json(surface.khat)},
                   {"delta_p", axis_to_json(surface.delta_p)},
                   {"delta_k", axis_to_json(surface.delta_k)}};
    doc["sigma"] = surface.sigma;
    doc["gamma"] = surface.gamma;
    return doc.dump(2);
}

SampledSurface surface_from_csv(const std::string& meta_json, const std::string& csv) {
    const nlohmann::json doc = nlohmann::json::parse(meta_json);
    SampledSurface surface;
    surface.khat = axis_from_json(doc.at("axes").at("khat"));
    surface.delta_p = axis_from_json(doc.at("axes").at("delta_p"));
    surface.delta_k = axis_from_json(doc.at("axes").at("delta_k"));
    surface.sigma = doc.at("sigma").get<double>();
    surface.gamma = doc.at("gamma").get<double>();
    surface.allocate();

    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("khat,", 0) != 0)
        throw std::invalid_argument("surface: CSV header missing");
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= surface.size())
            throw std::invalid_argument("surface: CSV has more rows than the axes describe");
        double col[6];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int c = 0; c < 6; ++c) {
            auto [next, ec] = std::from_chars(p, end, col[c]);
            if (ec != std::errc())
                throw std::invalid_argument("surface: malformed CSV row '" + line + "'");
            p = next;
            if (c < 5) {
                if (p == end || *p != ',')
                    throw std::invalid_argument("surface: malformed CSV row '" + line + "'");
                ++p;
            }
        }
        surface.values[row] = cplx(col[3], col[4]);
        ++row;
    }
    if (row != surface.size())
        throw std::invalid_argument("surface: CSV row count does not match the axes");
    return surface;
}

void save_surface(const SampledSurface& surface, const std::string& csv_path,
                  const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("surface: cannot write " + csv_path);
    csv << surface_to_csv(surface);
    std::ofstream json(json_path);
    if (!json) throw std::runtime_error("surface: cannot write " + json_path);
    json << surface_meta_to_json(surface) << '\n';
}

SampledSurface load_surface(const std::string& csv_path, const std::string& json_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("surface: cannot read " + csv_path);
    std::stringstream csv_text;
    csv_text << csv.rdbuf();
    std::ifstream json(json_path);
    if (!json) throw std::runtime_error("surface: cannot read " + json_path);
    std::stringstream json_text;
    json_text << json.rdbuf();
    return surface_from_csv(json_text.str(), csv_text.str());
}

}  // namespace scattomo
