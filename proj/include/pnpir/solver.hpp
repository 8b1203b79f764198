#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pnpir/data_prox.hpp"
#include "pnpir/degrade.hpp"
#include "pnpir/demosaic_init.hpp"
#include "pnpir/denoise.hpp"
#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"
#include "pnpir/schedule.hpp"

namespace pnpir {

enum class SolverChoice { closed, ibp };

inline const char* solver_name(SolverChoice s) noexcept { return s == SolverChoice::closed ? "closed" : "ibp"; }

struct IterationTrace {
    int k = 0; // 1-based
    double sigma_k = 0.0;
    double alpha_k = 0.0;
    std::optional<double> psnr_x;
    std::optional<double> psnr_z;
    double data_fidelity = 0.0; // |y - T(x_k)|^2
    double wall_time = 0.0;     // seconds spent in this iteration
};

/// Called once per iteration with the trace record, x_k and z_k.
using TraceSink = std::function<void(const IterationTrace&, const Image& x, const Image& z)>;

struct RestorationJob {
    DegradationSpec spec;
    Image y{1, 1, 1};
    HqsSchedule schedule;
    DenoiserHandle denoiser = DenoiserHandle::identity();
    SolverChoice solver = SolverChoice::closed;
    bool ensemble = true;
    std::optional<Image> ground_truth;
    TraceSink trace_sink;
    IbpOptions ibp{};
    /// Stop once |z_k - z_{k-1}| / |z_k| drops below this; 0 disables.
    double stop_tolerance = 0.0;
    /// Final crop (height, width) for super-resolution frames that were
    /// circularly padded to a multiple of the scale.
    std::optional<std::pair<int, int>> crop_to;
};

struct RestorationResult {
    Image image;
    std::vector<IterationTrace> trace;
};

/// Thrown when a run cannot finish; carries the iterations completed so far.
class RestorationAborted : public std::runtime_error {
public:
    enum class Cause { denoiser, numerical };

    RestorationAborted(Cause cause, const std::string& what, std::vector<IterationTrace> partial)
        : std::runtime_error(what), cause_(cause), partial_(std::move(partial)) {}

    Cause cause() const noexcept { return cause_; }
    const std::vector<IterationTrace>& partial_trace() const noexcept { return partial_; }

private:
    Cause cause_;
    std::vector<IterationTrace> partial_;
};

struct TaskDefaults {
    int iterations;
    double sigmaK;
};

/// Iteration count and final denoiser level per task: deblur (8, sigma),
/// super-resolution (24, max(sigma, s)), demosaicing (40, 0.6).
inline TaskDefaults task_defaults(const DegradationSpec& spec) {
    switch (spec.task) {
    case Task::deblur: return {8, std::max(spec.sigma255, kSigmaDataFloor)};
    case Task::sisr_classical:
    case Task::sisr_bicubic: return {24, std::max(spec.sigma255, static_cast<double>(spec.scale))};
    case Task::demosaic: return {40, 0.6};
    }
    return {8, 1.0};
}

inline HqsSchedule default_schedule(const DegradationSpec& spec, double lambda = kDefaultLambda) {
    const auto d = task_defaults(spec);
    return build_schedule(d.iterations, kDefaultSigma1, d.sigmaK, lambda, spec.sigma255);
}

/// Periodic self-ensemble: iteration k uses element (k-1) mod 8 of the fixed
/// D4 ordering, so every 8 consecutive iterations visit each transform once.
inline Dihedral8 ensemble_transform_for(int k) {
    if (k < 1) throw InvalidArgument("ensemble_transform_for: k must be >= 1");
    return Dihedral8((k - 1) % 8);
}

/// Bilinear sample with clamped coordinates.
inline double bilinear_at(const Image& img, int c, double u, double v) {
    u = std::clamp(u, 0.0, static_cast<double>(img.height() - 1));
    v = std::clamp(v, 0.0, static_cast<double>(img.width() - 1));
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const int i1 = std::min(i0 + 1, img.height() - 1);
    const int j1 = std::min(j0 + 1, img.width() - 1);
    const double a = u - i0, b = v - j0;
    return (1 - a) * ((1 - b) * img(c, i0, j0) + b * img(c, i0, j1)) +
           a * ((1 - b) * img(c, i1, j0) + b * img(c, i1, j1));
}

/// Starting point z_0 for each task.
///
/// Classical super-resolution observes HR site (s*i, s*j), while bicubic
/// upscaling places LR sample i at HR coordinate s*i + (s-1)/2; the bicubic
/// estimate is therefore resampled bilinearly at a +(s-1)/2 offset.
inline Image initialize(const DegradationSpec& spec, const Image& y) {
    switch (spec.task) {
    case Task::deblur: return y;
    case Task::sisr_bicubic: return bicubic_resize(y, static_cast<double>(spec.scale));
    case Task::sisr_classical: {
        const int s = spec.scale;
        const Image up = bicubic_resize(y, static_cast<double>(s));
        if (s == 1) return up;
        const double shift = (s - 1) / 2.0;
        Image out(up.channels(), up.height(), up.width());
        for (int c = 0; c < up.channels(); ++c)
            for (int i = 0; i < up.height(); ++i)
                for (int j = 0; j < up.width(); ++j) out(c, i, j) = bilinear_at(up, c, i + shift, j + shift);
        return out;
    }
    case Task::demosaic: return malvar_demosaic(y, spec.cfa);
    }
    throw InvalidArgument("unknown task");
}

inline Image crop(const Image& img, int height, int width) {
    if (height > img.height() || width > img.width()) throw InvalidArgument("crop: larger than image");
    Image out(img.channels(), height, width);
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) out(c, i, j) = img(c, i, j);
    return out;
}

/// Circular extension to height x width (each at least the input size).
inline Image pad_circular(const Image& img, int height, int width) {
    if (height < img.height() || width < img.width()) throw InvalidArgument("pad_circular: smaller than image");
    Image out(img.channels(), height, width);
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) out(c, i, j) = img(c, i % img.height(), j % img.width());
    return out;
}

/// One x-update for the job's task and solver.
inline Image data_step(const DataProxContext& ctx, const Image& z, double alpha, SolverChoice solver,
                       const IbpOptions& ibp) {
    const auto& spec = ctx.spec();
    switch (spec.task) {
    case Task::deblur:
        return solver == SolverChoice::closed ? deblur_prox(ctx, z, alpha)
                                              : sisr_prox_ibp(spec, ctx.observation(), z, ibp);
    case Task::sisr_classical:
    case Task::sisr_bicubic:
        return solver == SolverChoice::closed ? sisr_prox_closed(ctx, z, alpha)
                                              : sisr_prox_ibp(spec, ctx.observation(), z, ibp);
    case Task::demosaic: return demosaic_prox(ctx, z, alpha);
    }
    throw InvalidArgument("unknown task");
}

/// Half-quadratic-splitting plug-and-play loop.
///
/// z_0 = initialize(y); for k = 1..K: x_k = data_step(z_{k-1}, alpha_k) and
/// z_k = t^-1(denoise(t(x_k), sigma_k)) with t the k-th ensemble transform
/// (identity when the ensemble is off). Returns z_K.
inline RestorationResult run(const RestorationJob& job) {
    using clock = std::chrono::steady_clock;
    const auto& sched = job.schedule;
    if (sched.iterations < 1 || static_cast<int>(sched.sigmas.size()) != sched.iterations ||
        sched.alphas.size() != sched.sigmas.size())
        throw InvalidArgument("run: malformed schedule");

    const DataProxContext ctx(job.spec, job.y);
    Image z = initialize(job.spec, job.y);
    RestorationResult result{z, {}};
    result.trace.reserve(sched.iterations);

    auto finalize = [&job](const Image& img) {
        return job.crop_to ? crop(img, job.crop_to->first, job.crop_to->second) : img;
    };

    for (int k = 1; k <= sched.iterations; ++k) {
        const auto t0 = clock::now();
        IterationTrace rec;
        rec.k = k;
        rec.sigma_k = sched.sigmas[k - 1];
        rec.alpha_k = sched.alphas[k - 1];

        const Image x = data_step(ctx, z, rec.alpha_k, job.solver, job.ibp);
        if (!x.all_finite())
            throw RestorationAborted(RestorationAborted::Cause::numerical,
                                     "non-finite values after data step " + std::to_string(k), result.trace);

        Image z_next = x;
        try {
            if (job.ensemble) {
                const Dihedral8 t = ensemble_transform_for(k);
                z_next = apply_dihedral(job.denoiser.denoise(apply_dihedral(x, t), rec.sigma_k), t.inverse());
            } else {
                z_next = job.denoiser.denoise(x, rec.sigma_k);
            }
        } catch (const DenoiserError& e) {
            throw RestorationAborted(RestorationAborted::Cause::denoiser, e.what(), result.trace);
        }
        if (!z_next.all_finite())
            throw RestorationAborted(RestorationAborted::Cause::numerical,
                                     "non-finite values after denoising step " + std::to_string(k), result.trace);

        rec.data_fidelity = squared_norm(job.y - forward_operator(x, job.spec));
        if (job.ground_truth) {
            rec.psnr_x = psnr(finalize(x), *job.ground_truth);
            rec.psnr_z = psnr(finalize(z_next), *job.ground_truth);
        }
        double rel_change = 0.0;
        if (job.stop_tolerance > 0.0) {
            const double denom = std::sqrt(squared_norm(z_next));
            rel_change = denom > 0.0 ? std::sqrt(squared_norm(z_next - z)) / denom : 0.0;
        }
        z = std::move(z_next);
        rec.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
        result.trace.push_back(rec);
        if (job.trace_sink) job.trace_sink(rec, x, z);
        if (job.stop_tolerance > 0.0 && rel_change < job.stop_tolerance) break;
    }
    result.image = finalize(z);
    return result;
}

inline std::string trace_csv_header() { return "iter,sigma_k,alpha_k,psnr_x,psnr_z,data_fidelity,wall_time"; }

inline std::string trace_to_csv(const std::vector<IterationTrace>& trace) {
    std::ostringstream out;
    out.precision(17);
    out << trace_csv_header() << '\n';
    auto opt = [&out](const std::optional<double>& v) {
        if (v) out << *v;
    };
    for (const auto& r : trace) {
        out << r.k << ',' << r.sigma_k << ',' << r.alpha_k << ',';
        opt(r.psnr_x);
        out << ',';
        opt(r.psnr_z);
        out << ',' << r.data_fidelity << ',' << r.wall_time << '\n';
    }
    return out.str();
}

} // namespace pnpir
