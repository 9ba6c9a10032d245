#pragma once

// Event streams, binary spike tensors and the binning rule between them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vtsnn/error.hpp"

namespace vtsnn {

using Microseconds = std::uint64_t;

enum class Polarity : std::uint8_t { negative = 0, positive = 1 };
enum class Modality : std::uint8_t { tactile = 0, vision = 1 };

inline const char* to_string(Modality m) {
  return m == Modality::tactile ? "tactile" : "vision";
}

struct Event {
  Microseconds timestamp = 0;
  std::uint32_t channel = 0;
  Polarity polarity = Polarity::positive;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Pixel layout of a vision sensor crop. `polarities` is 1 (merged) or 2.
struct VisionGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t polarities = 2;

  std::size_t channel_count() const {
    return std::size_t{width} * height * polarities;
  }
  friend bool operator==(const VisionGeometry&, const VisionGeometry&) = default;
};

inline std::uint32_t polarity_plane(Polarity p) {
  return p == Polarity::positive ? 0u : 1u;
}

/// Polarity-major then row-major flattening:
///   channel = ((plane * height) + y) * width + x
/// with the positive plane first. A merged geometry (polarities == 1) maps
/// both polarities onto plane 0.
inline std::uint32_t vision_channel_index(std::uint32_t x, std::uint32_t y,
                                          Polarity polarity,
                                          const VisionGeometry& geometry) {
  if (x >= geometry.width || y >= geometry.height) {
    fail(ErrorKind::index, "pixel (" + std::to_string(x) + ", " +
                               std::to_string(y) + ") outside " +
                               std::to_string(geometry.width) + "x" +
                               std::to_string(geometry.height) + " geometry");
  }
  const std::uint32_t plane =
      geometry.polarities == 1 ? 0u : polarity_plane(polarity);
  return ((plane * geometry.height) + y) * geometry.width + x;
}

struct PixelAddress {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  Polarity polarity = Polarity::positive;
};

inline PixelAddress vision_pixel(std::uint32_t channel,
                                 const VisionGeometry& geometry) {
  if (channel >= geometry.channel_count()) {
    fail(ErrorKind::index, "vision channel " + std::to_string(channel) +
                               " out of range");
  }
  const std::uint32_t plane_size = geometry.width * geometry.height;
  const std::uint32_t plane = channel / plane_size;
  const std::uint32_t rest = channel % plane_size;
  return {rest % geometry.width, rest / geometry.width,
          plane == 0 ? Polarity::positive : Polarity::negative};
}

/// Converts seconds to whole microseconds, rounding to nearest.
inline std::int64_t to_microseconds(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1e6));
}

/// Immutable, time-ordered list of sensor events.
class EventStream {
 public:
  EventStream() = default;

  EventStream(Modality modality, std::uint32_t channel_count,
              std::vector<Event> events,
              std::optional<VisionGeometry> geometry = std::nullopt)
      : modality_(modality),
        channel_count_(channel_count),
        geometry_(geometry),
        events_(std::move(events)) {
    require(channel_count_ > 0, ErrorKind::validation,
            "event stream needs a positive channel count");
    if (geometry_) {
      require(geometry_->channel_count() == channel_count_,
              ErrorKind::validation,
              "vision geometry does not match the channel count");
    }
    for (std::size_t i = 0; i < events_.size(); ++i) {
      if (events_[i].channel >= channel_count_) {
        fail(ErrorKind::validation,
             "event " + std::to_string(i) + " has channel " +
                 std::to_string(events_[i].channel) + " >= channel count " +
                 std::to_string(channel_count_));
      }
      if (i > 0 && events_[i].timestamp < events_[i - 1].timestamp) {
        fail(ErrorKind::validation,
             "event " + std::to_string(i) + " is out of timestamp order");
      }
    }
  }

  /// Stable-sorts by timestamp before validating.
  static EventStream from_unsorted(
      Modality modality, std::uint32_t channel_count, std::vector<Event> events,
      std::optional<VisionGeometry> geometry = std::nullopt) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
    return EventStream(modality, channel_count, std::move(events), geometry);
  }

  Modality modality() const { return modality_; }
  std::uint32_t channel_count() const { return channel_count_; }
  const std::optional<VisionGeometry>& geometry() const { return geometry_; }
  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  Modality modality_ = Modality::tactile;
  std::uint32_t channel_count_ = 1;
  std::optional<VisionGeometry> geometry_;
  std::vector<Event> events_;
};

/// Binary [channel x bin] array stored sparsely: for every channel the
/// sorted list of bins holding a 1.
class SpikeTensor {
 public:
  SpikeTensor() = default;

  /// All-zero tensor.
  SpikeTensor(std::uint32_t channel_count, std::uint32_t n_bins,
              double bin_width,
              std::optional<VisionGeometry> geometry = std::nullopt)
      : channel_count_(channel_count),
        n_bins_(n_bins),
        bin_width_(bin_width),
        geometry_(geometry),
        offsets_(std::size_t{channel_count} + 1, 0) {
    validate_shape();
  }

  /// `rows[c]` lists the active bins of channel c in increasing order.
  static SpikeTensor from_rows(std::uint32_t n_bins, double bin_width,
                               const std::vector<std::vector<std::uint32_t>>& rows,
                               std::optional<VisionGeometry> geometry = std::nullopt) {
    SpikeTensor t(static_cast<std::uint32_t>(rows.size()), n_bins, bin_width,
                  geometry);
    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    t.bins_.reserve(total);
    for (std::size_t c = 0; c < rows.size(); ++c) {
      for (std::size_t k = 0; k < rows[c].size(); ++k) {
        const std::uint32_t b = rows[c][k];
        require(b < n_bins, ErrorKind::index, "spike bin out of range");
        require(k == 0 || rows[c][k - 1] < b, ErrorKind::validation,
                "spike bins must be strictly increasing per channel");
        t.bins_.push_back(b);
      }
      t.offsets_[c + 1] = t.bins_.size();
    }
    return t;
  }

  /// Row-major dense input; any nonzero byte counts as a spike.
  static SpikeTensor from_dense(std::uint32_t channel_count,
                                std::uint32_t n_bins, double bin_width,
                                std::span<const std::uint8_t> dense,
                                std::optional<VisionGeometry> geometry = std::nullopt) {
    require(dense.size() == std::size_t{channel_count} * n_bins,
            ErrorKind::shape, "dense spike buffer has the wrong size");
    std::vector<std::vector<std::uint32_t>> rows(channel_count);
    for (std::uint32_t c = 0; c < channel_count; ++c) {
      for (std::uint32_t b = 0; b < n_bins; ++b) {
        if (dense[std::size_t{c} * n_bins + b] != 0) rows[c].push_back(b);
      }
    }
    return from_rows(n_bins, bin_width, rows, geometry);
  }

  std::uint32_t channel_count() const { return channel_count_; }
  std::uint32_t n_bins() const { return n_bins_; }
  double bin_width() const { return bin_width_; }
  double duration() const { return n_bins_ * bin_width_; }
  const std::optional<VisionGeometry>& geometry() const { return geometry_; }

  std::span<const std::uint32_t> active_bins(std::uint32_t channel) const {
    return {bins_.data() + offsets_[channel],
            bins_.data() + offsets_[channel + 1]};
  }

  bool at(std::uint32_t channel, std::uint32_t bin) const {
    const auto row = active_bins(channel);
    return std::binary_search(row.begin(), row.end(), bin);
  }

  std::size_t count(std::uint32_t channel) const {
    return offsets_[channel + 1] - offsets_[channel];
  }

  /// Spikes of `channel` in bins [0, upto).
  std::size_t count(std::uint32_t channel, std::uint32_t upto) const {
    const auto row = active_bins(channel);
    return static_cast<std::size_t>(
        std::lower_bound(row.begin(), row.end(), upto) - row.begin());
  }

  std::size_t total_spikes() const { return bins_.size(); }

  std::vector<std::uint8_t> to_dense() const {
    std::vector<std::uint8_t> dense(std::size_t{channel_count_} * n_bins_, 0);
    for (std::uint32_t c = 0; c < channel_count_; ++c) {
      for (auto b : active_bins(c)) dense[std::size_t{c} * n_bins_ + b] = 1;
    }
    return dense;
  }

  /// First `n_bins` bins only.
  SpikeTensor truncated(std::uint32_t n_bins) const {
    require(n_bins > 0 && n_bins <= n_bins_, ErrorKind::shape,
            "truncation length out of range");
    std::vector<std::vector<std::uint32_t>> rows(channel_count_);
    for (std::uint32_t c = 0; c < channel_count_; ++c) {
      for (auto b : active_bins(c)) {
        if (b < n_bins) rows[c].push_back(b);
      }
    }
    return from_rows(n_bins, bin_width_, rows, geometry_);
  }

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  void validate_shape() const {
    require(channel_count_ > 0, ErrorKind::shape,
            "spike tensor needs at least one channel");
    require(n_bins_ > 0, ErrorKind::shape, "spike tensor needs at least one bin");
    require(bin_width_ > 0.0, ErrorKind::shape, "bin width must be positive");
    if (geometry_) {
      require(geometry_->channel_count() == channel_count_, ErrorKind::shape,
              "geometry does not match the channel count");
    }
  }

  std::uint32_t channel_count_ = 0;
  std::uint32_t n_bins_ = 0;
  double bin_width_ = 0.0;
  std::optional<VisionGeometry> geometry_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> bins_;
};

/// Stacks tensors along the channel axis. All inputs need equal n_bins.
inline SpikeTensor concat_channels(std::span<const SpikeTensor* const> parts) {
  require(!parts.empty(), ErrorKind::shape, "nothing to concatenate");
  const std::uint32_t n_bins = parts.front()->n_bins();
  std::vector<std::vector<std::uint32_t>> rows;
  for (const SpikeTensor* p : parts) {
    require(p->n_bins() == n_bins, ErrorKind::shape,
            "concatenated spike tensors differ in length");
    for (std::uint32_t c = 0; c < p->channel_count(); ++c) {
      const auto r = p->active_bins(c);
      rows.emplace_back(r.begin(), r.end());
    }
  }
  return SpikeTensor::from_rows(n_bins, parts.front()->bin_width(), rows);
}

/// Keeps events with t_start <= timestamp < t_end and re-bases them to
/// t_start.
inline EventStream crop_window(const EventStream& stream, double t_start,
                               double t_end) {
  if (!(t_start < t_end)) {
    fail(ErrorKind::invalid_argument,
         "invalid window: t_start must be < t_end");
  }
  const std::int64_t lo = to_microseconds(t_start);
  const std::int64_t hi = to_microseconds(t_end);
  std::vector<Event> kept;
  for (const Event& e : stream.events()) {
    const auto ts = static_cast<std::int64_t>(e.timestamp);
    if (ts < lo) continue;
    if (ts >= hi) break;
    kept.push_back({static_cast<Microseconds>(ts - lo), e.channel, e.polarity});
  }
  return EventStream(stream.modality(), stream.channel_count(), std::move(kept),
                     stream.geometry());
}

/// Folds the negative polarity plane of a vision stream onto the positive
/// one, so that binning sees the union of both planes.
inline EventStream merge_polarity(const EventStream& stream) {
  const auto& g = stream.geometry();
  require(g.has_value(), ErrorKind::config,
          "polarity merge needs a vision geometry");
  if (g->polarities == 1) return stream;
  const VisionGeometry merged{g->width, g->height, 1};
  const std::uint32_t plane = g->width * g->height;
  std::vector<Event> events;
  events.reserve(stream.size());
  for (const Event& e : stream.events()) {
    events.push_back({e.timestamp, e.channel % plane, Polarity::positive});
  }
  return EventStream(stream.modality(), plane, std::move(events), merged);
}

/// Bin w of a channel is 1 iff the channel has at least `s_min` events with
/// timestamps in [w * bin_width, (w + 1) * bin_width). Events at or after
/// n_bins * bin_width are dropped.
///
/// Note: s_min == 0 saturates the output (every bin of every channel is 1),
/// since a count of zero already satisfies the threshold.
inline SpikeTensor bin_events(const EventStream& stream, double bin_width,
                              std::uint32_t n_bins, std::uint32_t s_min) {
  require(bin_width > 0.0, ErrorKind::invalid_argument,
          "bin width must be positive");
  require(n_bins > 0, ErrorKind::invalid_argument, "n_bins must be positive");
  const std::int64_t bin_us = to_microseconds(bin_width);
  require(bin_us > 0, ErrorKind::invalid_argument,
          "bin width is below one microsecond");

  const std::uint32_t channels = stream.channel_count();
  std::vector<std::vector<std::uint32_t>> rows(channels);
  if (s_min == 0) {
    std::vector<std::uint32_t> full(n_bins);
    for (std::uint32_t b = 0; b < n_bins; ++b) full[b] = b;
    std::fill(rows.begin(), rows.end(), full);
    return SpikeTensor::from_rows(n_bins, bin_width, rows, stream.geometry());
  }

  // Per channel: bin currently being counted and its count so far.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> open(
      channels, {n_bins, 0});
  const Microseconds horizon =
      static_cast<Microseconds>(bin_us) * static_cast<Microseconds>(n_bins);
  for (const Event& e : stream.events()) {
    if (e.timestamp >= horizon) break;
    const auto bin = static_cast<std::uint32_t>(e.timestamp /
                                                static_cast<Microseconds>(bin_us));
    auto& [cur, n] = open[e.channel];
    if (cur != bin) {
      cur = bin;
      n = 0;
    }
    if (++n == s_min) rows[e.channel].push_back(bin);
  }
  return SpikeTensor::from_rows(n_bins, bin_width, rows, stream.geometry());
}

}  // namespace vtsnn
