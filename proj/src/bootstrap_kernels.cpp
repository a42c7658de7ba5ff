#include <omp.h>

#include <cmath>
#include <limits>

#include "llmconf/analytics.hpp"
#include "llmconf/kernels.hpp"
#include "llmconf/rng.hpp"

namespace llmconf::kernels {

double bootstrap_replicate(std::span<const double> scores, std::span<const std::uint8_t> positive,
                           std::uint64_t seed, std::uint64_t b, std::vector<std::size_t>& idx,
                           std::vector<double>& s_buf, std::vector<std::uint8_t>& l_buf) {
  const std::size_t n = scores.size();
  idx.resize(n);
  s_buf.resize(n);
  l_buf.resize(n);
  Rng rng(substream_seed(seed, b));
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<std::size_t>(rng.below(n));
    s_buf[i] = scores[idx[i]];
    l_buf[i] = positive[idx[i]];
    pos += l_buf[i] ? 1 : 0;
  }
  if (pos == 0 || pos == n) return std::numeric_limits<double>::quiet_NaN();
  return rank_auc(s_buf, l_buf);
}

std::vector<double> bootstrap_auc_serial(std::span<const double> scores,
                                         std::span<const std::uint8_t> positive,
                                         int resamples, std::uint64_t seed) {
  std::vector<double> out(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> idx;
  std::vector<double> s_buf;
  std::vector<std::uint8_t> l_buf;
  for (int b = 0; b < resamples; ++b) {
    out[static_cast<std::size_t>(b)] = bootstrap_replicate(
        scores, positive, seed, static_cast<std::uint64_t>(b), idx, s_buf, l_buf);
  }
  return out;
}

std::vector<double> bootstrap_auc_parallel(std::span<const double> scores,
                                           std::span<const std::uint8_t> positive,
                                           int resamples, std::uint64_t seed) {
  std::vector<double> out(static_cast<std::size_t>(resamples));
#pragma omp parallel
  {
    std::vector<std::size_t> idx;
    std::vector<double> s_buf;
    std::vector<std::uint8_t> l_buf;
#pragma omp for schedule(static)
    for (int b = 0; b < resamples; ++b) {
      out[static_cast<std::size_t>(b)] = bootstrap_replicate(
          scores, positive, seed, static_cast<std::uint64_t>(b), idx, s_buf, l_buf);
    }
  }
  return out;
}

}  // namespace llmconf::kernels
