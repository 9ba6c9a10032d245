#pragma once

#include <cstdint>
#include <optional>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"

namespace vtsnn {

/// Class whose output neuron spiked most in bins [0, upto). Ties go to the
/// lowest class index, so a silent output predicts class 0.
inline std::size_t predict(const SpikeTensor& output,
                           std::optional<std::uint32_t> upto = std::nullopt) {
  const std::uint32_t limit = upto.value_or(output.n_bins());
  require(limit <= output.n_bins(), ErrorKind::invalid_argument,
          "prediction cutoff beyond the output horizon");
  std::size_t best = 0;
  std::size_t best_count = output.count(0, limit);
  for (std::uint32_t n = 1; n < output.channel_count(); ++n) {
    const std::size_t c = output.count(n, limit);
    if (c > best_count) {
      best = n;
      best_count = c;
    }
  }
  return best;
}

}  // namespace vtsnn
