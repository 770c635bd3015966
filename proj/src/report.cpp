#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "trapwave/experiments.hpp"

namespace trapwave {
namespace {

using json = nlohmann::json;

std::string scalar(const json& v)
{
    if (v.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
        return buf;
    }
    return v.dump();
}

}  // namespace

bool report(const std::string& dir, std::ostream& os)
{
    const std::filesystem::path path = std::filesystem::path(dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw MissingManifest("no manifest.json in " + dir);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw MissingManifest(path.string() + " is not valid JSON: " + e.what());
    }
    const std::string name = m.value("experiment", "?");
    const bool pass = m.value("status", "fail") == "pass";
    const json& summary = m.contains("summary") ? m["summary"] : json::object();
    const json& checks = m.contains("checks") ? m["checks"] : json::array();

    if (name == "certify-weight") {
        os << name << ": " << (pass ? "PASS" : "FAIL") << " c1=" << scalar(summary.value("c1", json()))
           << " min_flux=" << scalar(summary.value("min_flux", json())) << "\n";
        return pass;
    }

    os << name << ": " << (pass ? "PASS" : "FAIL") << " (seed " << m.value("seed", 0) << ")\n";
    if (name == "solve") {
        os << "  quantity              value\n";
        for (const char* key : {"energy_initial", "energy_final", "energy_drift", "max_flux", "flux_avg_final", "max_l6",
                                "max_local_energy", "strichartz_acc", "morawetz_mismatch"}) {
            if (!summary.contains(key)) continue;
            char buf[128];
            std::snprintf(buf, sizeof buf, "  %-20s  %.6g\n", key, summary[key].get<double>());
            os << buf;
        }
    } else {
        for (const auto& [key, value] : summary.items()) {
            os << "  " << key << " = ";
            if (value.is_array()) {
                for (std::size_t i = 0; i < value.size(); ++i) os << (i ? ", " : "") << scalar(value[i]);
            } else {
                os << scalar(value);
            }
            os << "\n";
        }
    }
    for (const auto& c : checks) {
        os << "  [" << (c.value("pass", false) ? "PASS" : "FAIL") << "] " << c.value("name", "");
        const std::string detail = c.value("detail", "");
        if (!detail.empty()) os << ": " << detail;
        os << "\n";
    }
    return pass;
}

}  // namespace trapwave
