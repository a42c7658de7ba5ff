#pragma once

// Bootstrap AUC replicate kernels. The OpenMP kernel and the serial reference
// must return bit-identical vectors for the same inputs.

#include <cstdint>
#include <span>
#include <vector>

namespace llmconf::kernels {

// AUC of each resample; NaN where a resample drew a single class.
std::vector<double> bootstrap_auc_serial(std::span<const double> scores,
                                         std::span<const std::uint8_t> positive,
                                         int resamples, std::uint64_t seed);

std::vector<double> bootstrap_auc_parallel(std::span<const double> scores,
                                           std::span<const std::uint8_t> positive,
                                           int resamples, std::uint64_t seed);

// Draws resample `b` into `idx` (size n) and returns its AUC.
double bootstrap_replicate(std::span<const double> scores, std::span<const std::uint8_t> positive,
                           std::uint64_t seed, std::uint64_t b, std::vector<std::size_t>& idx,
                           std::vector<double>& s_buf, std::vector<std::uint8_t>& l_buf);

}  // namespace llmconf::kernels
