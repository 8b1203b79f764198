#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"
#include "pnpir/png_io.hpp"
#include "pnpir/schedule.hpp"
#include "pnpir/solver.hpp"

namespace pnpir {

struct Histogram {
    std::vector<double> bin_edges; // bins + 1, strictly increasing
    std::vector<std::size_t> counts;
    std::size_t total = 0;
};

/// Histogram of (x - gt) over the symmetric range [-m, m], m = max |x - gt|.
/// A sample on an interior edge falls in the bin to its right; +m falls in
/// the last bin. When x == gt the range defaults to [-1, 1].
inline Histogram residual_histogram(const Image& x, const Image& gt, int bins) {
    x.require_same_shape(gt, "residual_histogram");
    if (bins < 2) throw InvalidArgument("residual_histogram: need at least 2 bins");
    const double m0 = max_abs_diff(x, gt);
    const double m = m0 > 0.0 ? m0 : 1.0;

    Histogram h;
    h.bin_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) h.bin_edges[b] = -m + 2.0 * m * b / bins;
    h.counts.assign(bins, 0);
    auto xs = x.data();
    auto gs = gt.data();
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const double d = xs[n] - gs[n];
        int b = static_cast<int>(std::floor((d + m) / (2.0 * m) * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[b];
    }
    h.total = xs.size();
    return h;
}

struct SampleMoments {
    double mean = 0.0;
    double stddev = 0.0;
    double skewness = 0.0;
};

inline SampleMoments moments(std::span<const double> v) {
    SampleMoments m;
    if (v.empty()) return m;
    for (double a : v) m.mean += a;
    m.mean /= static_cast<double>(v.size());
    double m2 = 0.0, m3 = 0.0;
    for (double a : v) {
        const double d = a - m.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(v.size());
    m3 /= static_cast<double>(v.size());
    m.stddev = std::sqrt(m2);
    m.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return m;
}

inline std::string histogram_to_csv(const Histogram& h) {
    std::ostringstream out;
    out.precision(17);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        out << h.bin_edges[b] << ',' << h.bin_edges[b + 1] << ',' << h.counts[b] << '\n';
    return out.str();
}

struct SweepCell {
    int iterations = 0;
    double sigma1 = 0.0;
    double psnr = 0.0;
};

/// Final PSNR for every (K, sigma1) pair. Other schedule parameters come
/// from the template job. `workers` > 1 runs cells on separate threads and
/// is only accepted for deterministic (built-in) denoisers.
inline std::vector<SweepCell> sweep(const RestorationJob& tmpl, const std::vector<int>& iteration_values,
                                    const std::vector<double>& sigma1_values, int workers = 1) {
    if (!tmpl.ground_truth) throw InvalidArgument("sweep: ground truth required");
    if (workers > 1 && !tmpl.denoiser.deterministic())
        throw InvalidArgument("sweep: parallel mode needs a built-in denoiser");

    std::vector<SweepCell> cells;
    for (int k : iteration_values)
        for (double s1 : sigma1_values) cells.push_back({k, s1, 0.0});

    auto run_cell = [&tmpl](SweepCell& cell) {
        RestorationJob job = tmpl;
        job.trace_sink = nullptr;
        job.schedule = build_schedule(cell.iterations, cell.sigma1, tmpl.schedule.sigmaK, tmpl.schedule.lambda,
                                      tmpl.schedule.sigma_data);
        cell.psnr = psnr(run(job).image, *tmpl.ground_truth);
    };

    if (workers <= 1) {
        for (auto& c : cells) run_cell(c);
        return cells;
    }
    std::size_t next = 0;
    std::mutex m;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t idx;
                {
                    std::lock_guard lock(m);
                    if (next >= cells.size() || failure) return;
                    idx = next++;
                }
                try {
                    run_cell(cells[idx]);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return cells;
}

/// Grid CSV: one row per K, one column per sigma1.
inline std::string sweep_to_csv(const std::vector<SweepCell>& cells) {
    std::vector<int> ks;
    std::vector<double> s1s;
    for (const auto& c : cells) {
        if (std::find(ks.begin(), ks.end(), c.iterations) == ks.end()) ks.push_back(c.iterations);
        if (std::find(s1s.begin(), s1s.end(), c.sigma1) == s1s.end()) s1s.push_back(c.sigma1);
    }
    std::ostringstream out;
    out << "K";
    for (double s : s1s) out << ",sigma1=" << s;
    out << '\n';
    char buf[32];
    for (int k : ks) {
        out << k;
        for (double s : s1s) {
            out << ',';
            for (const auto& c : cells)
                if (c.iterations == k && c.sigma1 == s) {
                    std::snprintf(buf, sizeof(buf), "%.2f", c.psnr);
                    out << buf;
                }
        }
        out << '\n';
    }
    return out.str();
}

inline std::string intermediate_filename(const char* role, int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_k%03d.png", role, k);
    return buf;
}

struct DumpResult {
    RestorationResult result;
    std::vector<std::filesystem::path> files;
};

/// Runs the job and writes x_kNNN.png / z_kNNN.png for each requested k.
/// Dumped z images are cropped like the final result.
inline DumpResult dump_intermediates(const RestorationJob& job, const std::set<int>& k_set,
                                     const std::filesystem::path& dir) {
    if (!k_set.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    std::vector<std::filesystem::path> files;
    RestorationJob j = job;
    const TraceSink inner = job.trace_sink;
    j.trace_sink = [&](const IterationTrace& rec, const Image& x, const Image& z) {
        if (inner) inner(rec, x, z);
        if (!k_set.count(rec.k)) return;
        auto fit = [&job](const Image& img) {
            return job.crop_to ? crop(img, job.crop_to->first, job.crop_to->second) : img;
        };
        for (auto [role, img] : {std::pair{"x", &x}, std::pair{"z", &z}}) {
            const auto path = dir / intermediate_filename(role, rec.k);
            write_png(path, fit(*img));
            files.push_back(path);
        }
    };
    DumpResult out{run(j), {}};
    out.files = std::move(files);
    return out;
}

} // namespace pnpir
