// pnpir command-line tool: degrade, restore (deblur / sr / demosaic), psnr, sweep.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pnpir/pnpir.hpp"

namespace fs = std::filesystem;
using namespace pnpir;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kDenoiser = 4, kNumerical = 5 };

// Per-task denoiser used when --denoiser is not given.
const char* default_denoiser(Task t) { return t == Task::demosaic ? "tv-opponent" : "tv:10"; }

struct RestoreFlags {
    std::vector<std::string> inputs;
    std::string output;
    std::optional<std::string> report;
    std::optional<std::string> trace;
    std::optional<std::string> gt;
    std::optional<std::string> kernel;
    double sigma = 0.0;
    int scale = 2;
    std::string cfa = "RGGB";
    std::string solver = "closed";
    std::optional<int> iters;
    std::optional<double> sigma1;
    std::optional<double> sigmaK;
    double lambda = kDefaultLambda;
    std::optional<std::string> denoiser;
    bool no_ensemble = false;
    std::optional<std::string> dump_dir;
    std::vector<int> dump_k;
    int hist_bins = 64;
    std::uint64_t seed = 0;
    int jobs = 1;
    int timeout_ms = 60000;
    int border = 0;
    double gamma = IbpOptions{}.step;
    int inner = IbpOptions{}.inner_iterations;
    double stop_tol = 0.0;
    std::optional<std::string> crop;
};

std::pair<int, int> parse_size(const std::string& s) {
    int h = 0, w = 0;
    char x = 0;
    std::istringstream in(s);
    if (!(in >> h >> x >> w) || (x != 'x' && x != 'X') || h < 1 || w < 1)
        throw InvalidArgument("expected HxW, got '" + s + "'");
    return {h, w};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

DegradationSpec build_spec(Task task, const RestoreFlags& f, std::optional<BlurKernel>& kernel) {
    if (f.sigma < 0.0) throw InvalidArgument("--sigma must be >= 0");
    if (f.kernel) kernel = load_kernel(*f.kernel);
    switch (task) {
    case Task::deblur:
        if (!kernel) throw InvalidArgument("deblur needs --kernel");
        return DegradationSpec::deblur(*kernel, f.sigma);
    case Task::sisr_classical:
    case Task::sisr_bicubic:
        if (f.scale < 1) throw InvalidArgument("--scale must be >= 1");
        return kernel ? DegradationSpec::classical_sr(f.scale, *kernel, f.sigma)
                      : DegradationSpec::bicubic_sr(f.scale, f.sigma);
    case Task::demosaic: return DegradationSpec::demosaic(CfaPattern(f.cfa), f.sigma);
    }
    throw InvalidArgument("unknown task");
}

HqsSchedule build_job_schedule(const DegradationSpec& spec, const RestoreFlags& f) {
    const auto d = task_defaults(spec);
    return build_schedule(f.iters.value_or(d.iterations), f.sigma1.value_or(kDefaultSigma1),
                          f.sigmaK.value_or(d.sigmaK), f.lambda, spec.sigma255);
}

SolverChoice parse_solver(const std::string& s) {
    if (s == "closed") return SolverChoice::closed;
    if (s == "ibp") return SolverChoice::ibp;
    throw InvalidArgument("--solver must be closed or ibp");
}

struct PreparedJob {
    RestorationJob job;
    RunReport report;
};

PreparedJob prepare(Task task, const RestoreFlags& f, const std::string& input, const std::string& output) {
    std::optional<BlurKernel> kernel;
    DegradationSpec spec = build_spec(task, f, kernel);
    Image y = read_png(input);
    if (task == Task::demosaic && y.channels() != 3) throw InvalidArgument("demosaic needs an RGB mosaic");

    PreparedJob p{};
    auto& job = p.job;
    job.spec = spec;
    job.y = y;
    job.schedule = build_job_schedule(spec, f);
    job.denoiser = DenoiserHandle::from_name(f.denoiser.value_or(default_denoiser(task)),
                                             std::chrono::milliseconds(f.timeout_ms));
    job.solver = parse_solver(f.solver);
    job.ensemble = !f.no_ensemble;
    job.ibp = IbpOptions{f.gamma, f.inner};
    job.stop_tolerance = f.stop_tol;
    if (f.crop) job.crop_to = parse_size(*f.crop);
    if (f.gt) {
        job.ground_truth = read_png(*f.gt);
        const auto& g = *job.ground_truth;
        const int hr_h = y.height() * spec.scale, hr_w = y.width() * spec.scale;
        if (!job.crop_to && (g.height() != hr_h || g.width() != hr_w)) job.crop_to = {g.height(), g.width()};
    }

    auto& r = p.report;
    r.task = task_name(spec.task);
    r.input = input;
    r.output = output;
    r.ground_truth = f.gt;
    if (kernel) {
        r.kernel_file = f.kernel;
        r.kernel_hash = kernel_hash(*kernel);
    }
    r.scale = spec.scale;
    if (task == Task::demosaic) r.cfa = spec.cfa.name();
    r.solver = solver_name(job.solver);
    r.ensemble = job.ensemble;
    r.denoiser = job.denoiser.name();
    r.schedule = job.schedule;
    r.ibp = job.ibp;
    r.stop_tolerance = job.stop_tolerance;
    r.crop_to = job.crop_to;
    r.psnr_border = f.border;
    r.seed = f.seed;
    return p;
}

int restore_one(Task task, const RestoreFlags& f, const std::string& input, const std::string& output,
                std::mutex& log) {
    PreparedJob p = prepare(task, f, input, output);
    auto& job = p.job;
    auto& report = p.report;
    const fs::path report_path = f.report && f.inputs.size() == 1 ? fs::path(*f.report) : fs::path(output + ".json");

    std::set<int> dump_k(f.dump_k.begin(), f.dump_k.end());
    if (f.dump_dir && dump_k.empty()) dump_k = {1, job.schedule.iterations};
    if (f.dump_dir && job.ground_truth) {
        const fs::path dir = *f.dump_dir;
        const Image gt = *job.ground_truth;
        const int bins = f.hist_bins;
        job.trace_sink = [dir, gt, bins, dump_k, &job](const IterationTrace& rec, const Image& x, const Image&) {
            if (!dump_k.count(rec.k)) return;
            const Image xc = job.crop_to ? crop(x, job.crop_to->first, job.crop_to->second) : x;
            char name[40];
            std::snprintf(name, sizeof(name), "hist_x_k%03d.csv", rec.k);
            write_text(dir / name, histogram_to_csv(residual_histogram(xc, gt, bins)));
        };
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = kOk;
    try {
        RestorationResult res = f.dump_dir ? dump_intermediates(job, dump_k, *f.dump_dir).result : run(job);
        report.total_wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.trace = res.trace;
        if (job.ground_truth) report.final_psnr = psnr(res.image, *job.ground_truth, f.border);
        write_png(output, res.image);
        std::lock_guard lock(log);
        std::cout << input << " -> " << output;
        if (report.final_psnr) std::printf(" psnr %.2f dB", *report.final_psnr);
        std::cout << std::endl;
    } catch (const RestorationAborted& e) {
        report.total_wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.trace = e.partial_trace();
        report.error = e.what();
        code = e.cause() == RestorationAborted::Cause::denoiser ? kDenoiser : kNumerical;
        std::lock_guard lock(log);
        std::cerr << input << ": " << e.what() << '\n';
    }
    write_text(report_path, report_to_json(report).dump(2) + "\n");
    if (f.trace) {
        const fs::path tp = f.inputs.size() == 1 ? fs::path(*f.trace) : fs::path(output + ".trace.csv");
        write_text(tp, trace_to_csv(report.trace));
    }
    return code;
}

int exit_code_for(std::exception_ptr e) {
    try {
        std::rethrow_exception(e);
    } catch (const InvalidArgument& x) {
        std::cerr << "error: " << x.what() << '\n';
        return kUsage;
    } catch (const IoError& x) {
        std::cerr << "I/O error: " << x.what() << '\n';
        return kIo;
    } catch (const DenoiserError& x) {
        std::cerr << "denoiser error (" << x.phase() << "): " << x.what() << '\n';
        return kDenoiser;
    } catch (const RestorationAborted& x) {
        std::cerr << "aborted: " << x.what() << '\n';
        return x.cause() == RestorationAborted::Cause::denoiser ? kDenoiser : kNumerical;
    } catch (const NumericalError& x) {
        std::cerr << "numerical error: " << x.what() << '\n';
        return kNumerical;
    } catch (const std::exception& x) {
        std::cerr << "error: " << x.what() << '\n';
        return 1;
    }
}

int cmd_restore(Task task, const RestoreFlags& f) {
    if (f.inputs.empty()) throw InvalidArgument("--input is required");
    if (f.output.empty()) throw InvalidArgument("--output is required");
    if (f.jobs < 1) throw InvalidArgument("--jobs must be >= 1");
    if (f.inputs.size() == 1) {
        std::mutex log;
        return restore_one(task, f, f.inputs[0], f.output, log);
    }
    // Batch: --output names a directory receiving <stem>.png per input.
    std::error_code ec;
    fs::create_directories(f.output, ec);
    if (ec) throw IoError("cannot create " + f.output + ": " + ec.message());
    std::vector<int> codes(f.inputs.size(), kOk);
    std::atomic<std::size_t> next{0};
    std::mutex log;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < f.inputs.size();) {
            const std::string out = (fs::path(f.output) / fs::path(f.inputs[i]).stem()).string() + ".png";
            try {
                codes[i] = restore_one(task, f, f.inputs[i], out, log);
            } catch (...) {
                std::lock_guard lock(log);
                std::cerr << f.inputs[i] << ": ";
                codes[i] = exit_code_for(std::current_exception());
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(f.jobs, static_cast<int>(f.inputs.size()));
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (int c : codes)
        if (c != kOk) return c;
    return kOk;
}

struct DegradeFlags {
    std::string input, output;
    std::optional<std::string> sidecar;
    std::string task = "deblur";
    std::optional<std::string> kernel;
    int scale = 2;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string cfa = "RGGB";
};

int cmd_degrade(const DegradeFlags& f) {
    if (f.sigma < 0.0) throw InvalidArgument("--sigma must be >= 0");
    Image gt = read_png(f.input);
    std::optional<BlurKernel> kernel;
    if (f.kernel) kernel = load_kernel(*f.kernel);
    DegradationSpec spec;
    if (f.task == "deblur") {
        if (!kernel) throw InvalidArgument("deblur needs --kernel");
        spec = DegradationSpec::deblur(*kernel, f.sigma);
    } else if (f.task == "sr") {
        spec = kernel ? DegradationSpec::classical_sr(f.scale, *kernel, f.sigma) : DegradationSpec::bicubic_sr(f.scale, f.sigma);
    } else if (f.task == "demosaic") {
        if (gt.channels() != 3) throw InvalidArgument("demosaic needs an RGB image");
        spec = DegradationSpec::demosaic(CfaPattern(f.cfa), f.sigma);
    } else {
        throw InvalidArgument("--task must be deblur, sr or demosaic");
    }

    const int h = gt.height(), w = gt.width();
    const int s = spec.scale;
    const int ph = (h + s - 1) / s * s, pw = (w + s - 1) / s * s;
    if (ph != h || pw != w) gt = pad_circular(gt, ph, pw);

    const Image y = apply_degradation(gt, spec, f.seed);
    write_png(f.output, y);

    nlohmann::json j;
    j["engine_version"] = kEngineVersion;
    j["task"] = task_name(spec.task);
    j["input"] = f.input;
    j["output"] = f.output;
    j["kernel_file"] = f.kernel ? nlohmann::json(*f.kernel) : nlohmann::json(nullptr);
    j["kernel_hash"] = kernel ? nlohmann::json(kernel_hash(*kernel)) : nlohmann::json(nullptr);
    j["scale"] = s;
    j["cfa"] = spec.task == Task::demosaic ? nlohmann::json(spec.cfa.name()) : nlohmann::json(nullptr);
    j["sigma"] = f.sigma;
    j["seed"] = f.seed;
    j["original_size"] = {h, w};
    j["padded_size"] = {ph, pw};
    write_text(f.sidecar.value_or(f.output + ".json"), j.dump(2) + "\n");
    return kOk;
}

int cmd_psnr(const std::string& a, const std::string& b, int border) {
    const double v = psnr(read_png(a), read_png(b), border);
    if (std::isinf(v))
        std::printf("inf\n");
    else
        std::printf("%.2f\n", v);
    return kOk;
}

int cmd_sweep(Task task, const RestoreFlags& f, const std::vector<int>& ks, const std::vector<double>& s1s,
              int workers) {
    if (f.inputs.size() != 1) throw InvalidArgument("sweep takes exactly one --input");
    if (!f.gt) throw InvalidArgument("sweep needs --gt");
    if (ks.empty() || s1s.empty()) throw InvalidArgument("sweep needs --K and --sigma1 lists");
    PreparedJob p = prepare(task, f, f.inputs[0], f.output);
    const std::string csv = sweep_to_csv(sweep(p.job, ks, s1s, workers));
    if (f.output.empty() || f.output == "-")
        std::cout << csv;
    else
        write_text(f.output, csv);
    return kOk;
}

void add_restore_flags(CLI::App* c, RestoreFlags& f, Task task) {
    c->add_option("-i,--input", f.inputs, "Degraded PNG (repeat for batch mode)")->required();
    c->add_option("-o,--output", f.output, "Restored PNG, or a directory in batch mode")->required();
    c->add_option("--report", f.report, "JSON report path (default <output>.json)");
    c->add_option("--trace", f.trace, "Per-iteration CSV trace");
    c->add_option("--gt", f.gt, "Ground-truth PNG for PSNR tracking");
    c->add_option("--border", f.border, "Border excluded from the final PSNR")->check(CLI::NonNegativeNumber);
    if (task != Task::demosaic)
        c->add_option("-k,--kernel", f.kernel, "Blur kernel text file");
    if (task == Task::sisr_classical) {
        c->add_option("-s,--scale", f.scale, "Scale factor")->check(CLI::PositiveNumber);
        c->add_option("--solver", f.solver, "Data step: closed or ibp");
        c->add_option("--gamma", f.gamma, "Back-projection step");
        c->add_option("--inner-iters", f.inner, "Back-projection iterations per step");
        c->add_option("--crop", f.crop, "Crop the result to HxW");
    }
    if (task == Task::demosaic) c->add_option("--cfa", f.cfa, "CFA tile, e.g. RGGB");
    c->add_option("--sigma", f.sigma, "Noise level of the input (0-255 scale)");
    c->add_option("-K,--iters", f.iters, "Number of iterations");
    c->add_option("--sigma1", f.sigma1, "First denoiser level (0-255)");
    c->add_option("--sigmaK", f.sigmaK, "Last denoiser level (0-255)");
    c->add_option("--lambda", f.lambda, "Trade-off parameter");
    c->add_option("-d,--denoiser", f.denoiser,
                  "identity | tv[:k] | tv-opponent[:k] | dct[:k] | median | extern:<command>");
    c->add_flag("--no-ensemble", f.no_ensemble, "Disable the rotation/flip ensemble");
    c->add_option("--dump-dir", f.dump_dir, "Write x_k/z_k PNGs (and residual histograms with --gt)");
    c->add_option("--dump-k", f.dump_k, "Iterations to dump (default: first and last)")->delimiter(',');
    c->add_option("--hist-bins", f.hist_bins, "Residual histogram bins")->check(CLI::Range(2, 100000));
    c->add_option("--seed", f.seed, "Seed recorded in the report");
    c->add_option("-j,--jobs", f.jobs, "Concurrent jobs in batch mode")->check(CLI::PositiveNumber);
    c->add_option("--timeout", f.timeout_ms, "External denoiser timeout in ms")->check(CLI::PositiveNumber);
    c->add_option("--stop-tol", f.stop_tol, "Stop when the relative change of z drops below this");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plug-and-play image restoration"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kEngineVersion);

    RestoreFlags deblur_f, sr_f, dm_f, sweep_f;
    auto* deblur = app.add_subcommand("deblur", "Non-blind deblurring");
    add_restore_flags(deblur, deblur_f, Task::deblur);
    auto* sr = app.add_subcommand("sr", "Super-resolution (bicubic degradation when no kernel is given)");
    add_restore_flags(sr, sr_f, Task::sisr_classical);
    auto* dm = app.add_subcommand("demosaic", "Demosaicing of a masked RGB mosaic");
    add_restore_flags(dm, dm_f, Task::demosaic);

    DegradeFlags deg_f;
    auto* deg = app.add_subcommand("degrade", "Synthesize a degraded observation");
    deg->add_option("-i,--input", deg_f.input, "Ground-truth PNG")->required();
    deg->add_option("-o,--output", deg_f.output, "Degraded PNG")->required();
    deg->add_option("--sidecar", deg_f.sidecar, "JSON sidecar (default <output>.json)");
    deg->add_option("--task", deg_f.task, "deblur | sr | demosaic");
    deg->add_option("-k,--kernel", deg_f.kernel, "Blur kernel text file");
    deg->add_option("-s,--scale", deg_f.scale, "Scale factor")->check(CLI::PositiveNumber);
    deg->add_option("--sigma", deg_f.sigma, "AWGN level (0-255 scale)");
    deg->add_option("--seed", deg_f.seed, "Noise seed");
    deg->add_option("--cfa", deg_f.cfa, "CFA tile");

    std::string pa, pb;
    int border = 0;
    auto* ps = app.add_subcommand("psnr", "PSNR between two PNGs");
    ps->add_option("a", pa)->required();
    ps->add_option("b", pb)->required();
    ps->add_option("--border", border, "Border pixels to exclude")->check(CLI::NonNegativeNumber);

    std::string sweep_task = "deblur";
    std::vector<int> sweep_k;
    std::vector<double> sweep_s1;
    int sweep_workers = 1;
    auto* sw = app.add_subcommand("sweep", "Final PSNR over a grid of (K, sigma1)");
    add_restore_flags(sw, sweep_f, Task::sisr_classical);
    sw->add_option("--task", sweep_task, "deblur | sr | demosaic");
    sw->add_option("--cfa", sweep_f.cfa, "CFA tile");
    sw->add_option("--K-values", sweep_k, "Comma-separated iteration counts")->delimiter(',')->required();
    sw->add_option("--sigma1-values", sweep_s1, "Comma-separated sigma1 values")->delimiter(',')->required();
    sw->add_option("--workers", sweep_workers, "Parallel cells (built-in denoisers only)")->check(CLI::PositiveNumber);
    sw->get_option("--output")->required(false)->description("CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (deblur->parsed()) return cmd_restore(Task::deblur, deblur_f);
        if (sr->parsed()) return cmd_restore(Task::sisr_classical, sr_f);
        if (dm->parsed()) return cmd_restore(Task::demosaic, dm_f);
        if (deg->parsed()) return cmd_degrade(deg_f);
        if (ps->parsed()) return cmd_psnr(pa, pb, border);
        if (sw->parsed()) {
            Task t;
            if (sweep_task == "deblur") t = Task::deblur;
            else if (sweep_task == "sr") t = Task::sisr_classical;
            else if (sweep_task == "demosaic") t = Task::demosaic;
            else throw InvalidArgument("--task must be deblur, sr or demosaic");
            return cmd_sweep(t, sweep_f, sweep_k, sweep_s1, sweep_workers);
        }
    } catch (...) {
        return exit_code_for(std::current_exception());
    }
    return kUsage;
}
