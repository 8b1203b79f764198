#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pnpir/errors.hpp"

namespace pnpir {

/// Per-iteration denoiser noise levels and data-term weights.
///
/// sigmas run geometrically from sigma1 down to sigmaK (0-255 scale, both
/// endpoints included); alphas[k] = lambda * sigma_data^2 / sigmas[k]^2.
struct HqsSchedule {
    int iterations = 0;
    double sigma1 = 0.0;
    double sigmaK = 0.0;
    double lambda = 0.0;
    double sigma_data = 0.0; // as given, before flooring
    std::vector<double> sigmas;
    std::vector<double> alphas;
};

/// Stand-in (0-255 scale) for sigma_data == 0 so noiseless tasks keep alpha > 0.
inline constexpr double kSigmaDataFloor = 0.255;

inline constexpr double kDefaultLambda = 0.23;
inline constexpr double kDefaultSigma1 = 49.0;

inline HqsSchedule build_schedule(int iterations, double sigma1, double sigmaK, double lambda, double sigma_data) {
    if (iterations < 1) throw InvalidArgument("schedule: iteration count must be >= 1");
    if (!(sigmaK > 0.0) || !(sigma1 >= sigmaK)) throw InvalidArgument("schedule: need sigma1 >= sigmaK > 0");
    if (!(lambda > 0.0)) throw InvalidArgument("schedule: lambda must be > 0");
    if (!(sigma_data >= 0.0)) throw InvalidArgument("schedule: data noise level must be >= 0");

    HqsSchedule s;
    s.iterations = iterations;
    s.sigma1 = sigma1;
    s.sigmaK = sigmaK;
    s.lambda = lambda;
    s.sigma_data = sigma_data;
    s.sigmas.resize(iterations);
    s.alphas.resize(iterations);
    if (iterations == 1) {
        s.sigmas[0] = sigmaK;
    } else {
        const double ratio = sigmaK / sigma1;
        for (int k = 0; k < iterations; ++k)
            s.sigmas[k] = sigma1 * std::pow(ratio, static_cast<double>(k) / (iterations - 1));
        s.sigmas.front() = sigma1;
        s.sigmas.back() = sigmaK;
    }
    const double sd = (sigma_data > 0.0 ? sigma_data : kSigmaDataFloor) / 255.0;
    for (int k = 0; k < iterations; ++k) {
        const double sk = s.sigmas[k] / 255.0;
        s.alphas[k] = lambda * sd * sd / (sk * sk);
    }
    return s;
}

} // namespace pnpir
