#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "test_util.hpp"

using namespace pnpir;
using testutil::random_image;

namespace {

RestorationJob small_job(std::uint64_t seed) {
    const Image gt = random_image(1, 16, 16, seed);
    const BlurKernel k = gaussian_kernel(1.0, 1.0, 0, 5);
    RestorationJob job;
    job.spec = DegradationSpec::deblur(k, 2.55);
    job.y = add_awgn(circular_convolve(gt, k), 2.55, seed + 1);
    job.schedule = build_schedule(4, 49.0, 2.55, 0.23, 2.55);
    job.denoiser = DenoiserHandle::tv(10.0);
    job.ground_truth = gt;
    return job;
}

} // namespace

TEST(Histogram, Properties) {
    const Image gt = random_image(1, 20, 20, 1);
    const Image x = add_awgn(gt, 10.0, 2);
    const Histogram h = residual_histogram(x, gt, 16);
    EXPECT_EQ(h.bin_edges.size(), 17u);
    EXPECT_EQ(h.counts.size(), 16u);
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 400u);
    EXPECT_EQ(h.total, 400u);
    for (std::size_t b = 0; b + 1 < h.bin_edges.size(); ++b) EXPECT_LT(h.bin_edges[b], h.bin_edges[b + 1]);
    EXPECT_NEAR(h.bin_edges.front(), -max_abs_diff(x, gt), 1e-15);
    EXPECT_NEAR(h.bin_edges.back(), max_abs_diff(x, gt), 1e-15);
    EXPECT_THROW(residual_histogram(x, gt, 1), InvalidArgument);
}

TEST(Histogram, EdgeAssignment) {
    const Image gt(1, 1, 4, 0.0);
    const Image x(1, 1, 4, std::vector<double>{-1.0, 0.0, 0.5, 1.0});
    const Histogram h = residual_histogram(x, gt, 4);
    // edges -1, -0.5, 0, 0.5, 1
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 0, 1, 2}));
    const Histogram same = residual_histogram(gt, gt, 2);
    EXPECT_EQ(same.bin_edges.front(), -1.0);
    EXPECT_EQ(same.counts, (std::vector<std::size_t>{0, 4}));
}

TEST(Moments, GaussianResidualIsSymmetric) {
    const Image gt(1, 128, 128, 0.5);
    const Image x = add_awgn(gt, 15.0, 3);
    const Image d = x - gt;
    const auto m = moments(d.data());
    EXPECT_LT(std::abs(m.skewness), 0.1);
    EXPECT_NEAR(m.stddev, 15.0 / 255.0, 0.01 * 15.0 / 255.0 * 3);
    const std::vector<double> v{1.0, 2.0, 3.0, 10.0};
    EXPECT_GT(moments(v).skewness, 0.5);
    EXPECT_EQ(moments(std::vector<double>{}).mean, 0.0);
}

TEST(Sweep, SingleCellEqualsRun) {
    const auto job = small_job(10);
    const auto cells = sweep(job, {4}, {49.0});
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].psnr, psnr(run(job).image, *job.ground_truth));
}

TEST(Sweep, OrderIndependentAndParallelDeterministic) {
    const auto job = small_job(11);
    const auto a = sweep(job, {2, 4}, {30.0, 49.0});
    const auto b = sweep(job, {4, 2}, {49.0, 30.0});
    const auto c = sweep(job, {2, 4}, {30.0, 49.0}, 3);
    ASSERT_EQ(a.size(), 4u);
    for (const auto& cell : a) {
        auto find = [&](const std::vector<SweepCell>& v) {
            return std::find_if(v.begin(), v.end(), [&](const SweepCell& o) {
                return o.iterations == cell.iterations && o.sigma1 == cell.sigma1;
            })->psnr;
        };
        EXPECT_EQ(find(b), cell.psnr);
        EXPECT_EQ(find(c), cell.psnr);
    }
    const std::string csv = sweep_to_csv(a);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,sigma1=30,sigma1=49");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Sweep, Requirements) {
    auto job = small_job(12);
    auto no_gt = job;
    no_gt.ground_truth.reset();
    EXPECT_THROW(sweep(no_gt, {2}, {49.0}), InvalidArgument);
    job.denoiser = DenoiserHandle::from_name(std::string("extern:") + PNPIR_MOCK_BIN + " echo");
    EXPECT_THROW(sweep(job, {2}, {49.0}, 2), InvalidArgument);
}

TEST(Dump, FilesMatchRun) {
    const auto job = small_job(13);
    const auto dir = testutil::scratch_dir("dump");
    const auto d = dump_intermediates(job, {1, 4}, dir);
    EXPECT_EQ(d.files.size(), 4u);
    for (const char* name : {"x_k001.png", "z_k001.png", "x_k004.png", "z_k004.png"})
        EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
    EXPECT_EQ(read_png(dir / "z_k004.png"), quantized(d.result.image));
    EXPECT_EQ(d.result.image, run(job).image);

    const auto empty_dir = testutil::scratch_dir("dump_empty");
    const auto e = dump_intermediates(job, {}, empty_dir / "none");
    EXPECT_TRUE(e.files.empty());
    EXPECT_FALSE(std::filesystem::exists(empty_dir / "none"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(empty_dir);
}
