#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pnpir/degrade.hpp"
#include "pnpir/schedule.hpp"
#include "pnpir/solver.hpp"

namespace pnpir {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Everything needed to describe, and rerun, one restoration.
struct RunReport {
    std::string task;
    std::string input;
    std::string output;
    std::optional<std::string> ground_truth;
    std::optional<std::string> kernel_file;
    std::optional<std::string> kernel_hash;
    int scale = 1;
    std::optional<std::string> cfa;
    std::string solver = "closed";
    bool ensemble = true;
    std::string denoiser;
    HqsSchedule schedule;
    IbpOptions ibp{};
    double stop_tolerance = 0.0;
    std::optional<std::pair<int, int>> crop_to;
    int psnr_border = 0;
    std::optional<double> final_psnr;
    std::vector<IterationTrace> trace;
    double total_wall_time = 0.0;
    std::uint64_t seed = 0;
    std::optional<std::string> error;
};

namespace detail {

// JSON has no infinity; identical images report psnr as the string "inf".
inline nlohmann::json psnr_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    if (std::isinf(*v)) return "inf";
    return *v;
}

} // namespace detail

inline nlohmann::json trace_to_json(const std::vector<IterationTrace>& trace) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : trace)
        arr.push_back({{"iter", r.k},
                       {"sigma_k", r.sigma_k},
                       {"alpha_k", r.alpha_k},
                       {"psnr_x", detail::psnr_json(r.psnr_x)},
                       {"psnr_z", detail::psnr_json(r.psnr_z)},
                       {"data_fidelity", r.data_fidelity},
                       {"wall_time", r.wall_time}});
    return arr;
}

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j;
    j["engine_version"] = kEngineVersion;
    j["task"] = r.task;
    j["input"] = r.input;
    j["output"] = r.output;
    j["ground_truth"] = r.ground_truth ? nlohmann::json(*r.ground_truth) : nlohmann::json(nullptr);
    j["kernel_file"] = r.kernel_file ? nlohmann::json(*r.kernel_file) : nlohmann::json(nullptr);
    j["kernel_hash"] = r.kernel_hash ? nlohmann::json(*r.kernel_hash) : nlohmann::json(nullptr);
    j["scale"] = r.scale;
    j["cfa"] = r.cfa ? nlohmann::json(*r.cfa) : nlohmann::json(nullptr);
    j["solver"] = r.solver;
    j["ensemble"] = r.ensemble;
    j["denoiser"] = r.denoiser;
    j["schedule"] = {{"iterations", r.schedule.iterations},
                     {"sigma1", r.schedule.sigma1},
                     {"sigmaK", r.schedule.sigmaK},
                     {"lambda", r.schedule.lambda},
                     {"sigma_data", r.schedule.sigma_data},
                     {"sigmas", r.schedule.sigmas},
                     {"alphas", r.schedule.alphas}};
    j["ibp"] = {{"gamma", r.ibp.step}, {"inner_iterations", r.ibp.inner_iterations}};
    j["stop_tolerance"] = r.stop_tolerance;
    j["crop_to"] = r.crop_to ? nlohmann::json({r.crop_to->first, r.crop_to->second}) : nlohmann::json(nullptr);
    j["psnr_border"] = r.psnr_border;
    j["final_psnr"] = detail::psnr_json(r.final_psnr);
    j["trace"] = trace_to_json(r.trace);
    j["total_wall_time"] = r.total_wall_time;
    j["seed"] = r.seed;
    j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
    return j;
}

} // namespace pnpir
