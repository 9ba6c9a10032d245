#pragma once

// Samples, dataset directories, fold planning and synthetic event data.
//
// Dataset directory layout:
//
//   <root>/manifest.csv            id,label,object_id,level,recording_id
//   <root>/<id>/tact.evst
//   <root>/<id>/vis.evst
//   <root>/<id>/label.txt          class index on the first line

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"
#include "vtsnn/event_io.hpp"
#include "vtsnn/network.hpp"

namespace vtsnn {

struct SampleMetadata {
  std::string id;
  std::string object_id;
  std::string level;  // weight level or slip flag
  std::string recording_id;

  friend bool operator==(const SampleMetadata&, const SampleMetadata&) = default;
};

struct Sample {
  EventStream tactile;
  EventStream vision;
  std::size_t label = 0;
  SampleMetadata metadata;

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline constexpr const char* kTactileFile = "tact.evst";
inline constexpr const char* kVisionFile = "vis.evst";
inline constexpr const char* kLabelFile = "label.txt";
inline constexpr const char* kManifestFile = "manifest.csv";

inline void write_sample(const std::filesystem::path& dir, const Sample& s) {
  std::filesystem::create_directories(dir);
  write_events((dir / kTactileFile).string(), s.tactile);
  write_events((dir / kVisionFile).string(), s.vision);
  std::ofstream label(dir / kLabelFile, std::ios::trunc);
  if (!label) fail(ErrorKind::io, "cannot write " + (dir / kLabelFile).string());
  label << s.label << "\n";
}

inline Sample load_sample(const std::filesystem::path& dir) {
  for (const char* f : {kTactileFile, kVisionFile, kLabelFile}) {
    if (!std::filesystem::exists(dir / f))
      fail(ErrorKind::io, "missing " + (dir / f).string());
  }
  Sample s;
  s.tactile = read_events((dir / kTactileFile).string());
  s.vision = read_events((dir / kVisionFile).string());
  require(s.tactile.modality() == Modality::tactile, ErrorKind::validation,
          (dir / kTactileFile).string() + " is not a tactile stream");
  require(s.vision.modality() == Modality::vision, ErrorKind::validation,
          (dir / kVisionFile).string() + " is not a vision stream");
  std::ifstream label(dir / kLabelFile);
  std::string line;
  std::getline(label, line);
  if (!detail::parse_number(detail::trim(line), s.label))
    fail(ErrorKind::parse, (dir / kLabelFile).string() + ": bad label");
  s.metadata.id = dir.filename().string();
  return s;
}

inline void write_dataset(const std::filesystem::path& root,
                          std::span<const Sample> samples) {
  std::filesystem::create_directories(root);
  std::ofstream manifest(root / kManifestFile, std::ios::trunc);
  if (!manifest) fail(ErrorKind::io, "cannot write manifest in " + root.string());
  manifest << "id,label,object_id,level,recording_id\n";
  for (const auto& s : samples) {
    require(!s.metadata.id.empty(), ErrorKind::validation, "sample without id");
    write_sample(root / s.metadata.id, s);
    manifest << s.metadata.id << "," << s.label << "," << s.metadata.object_id
             << "," << s.metadata.level << "," << s.metadata.recording_id << "\n";
  }
}

inline std::vector<Sample> load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / kManifestFile;
  std::ifstream manifest(manifest_path);
  if (!manifest) fail(ErrorKind::io, "cannot open " + manifest_path.string());
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || line_no == 1) continue;
    const auto f = detail::split(view, ',');
    if (f.size() != 5)
      fail(ErrorKind::parse, manifest_path.string() + ":" + std::to_string(line_no) +
                                 ": expected 5 fields");
    Sample s = load_sample(root / std::string(f[0]));
    std::size_t label = 0;
    if (!detail::parse_number(f[1], label) || label != s.label)
      fail(ErrorKind::validation, manifest_path.string() + ":" +
                                      std::to_string(line_no) +
                                      ": label disagrees with label.txt");
    s.metadata = {std::string(f[0]), std::string(f[2]), std::string(f[3]),
                  std::string(f[4])};
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---------------------------------------------------------------------------

struct SplitPlan {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // sample -> fold

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != fold) out.push_back(i);
    return out;
  }
};

/// Shuffles each class with `seed`, then deals its samples round-robin over
/// the folds, starting each class where the previous one stopped so fold
/// sizes stay balanced.
inline SplitPlan stratified_kfold(std::span<const std::size_t> labels,
                                  std::size_t k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::invalid_argument, "need at least two folds");
  std::size_t n_classes = 0;
  for (auto l : labels) n_classes = std::max(n_classes, l + 1);
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      fail(ErrorKind::stratification, "class " + std::to_string(c) + " has " +
                                          std::to_string(by_class[c].size()) +
                                          " samples, fewer than " +
                                          std::to_string(k) + " folds");
    }
  }
  std::mt19937_64 rng(seed);
  SplitPlan plan;
  plan.k = k;
  plan.fold_of.assign(labels.size(), 0);
  std::size_t next = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[static_cast<std::size_t>(rng() % i)]);
    for (auto idx : members) {
      plan.fold_of[idx] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------

/// Homogeneous Poisson firing at `rate_hz` on channels
/// [channel_begin, channel_end) during [t_begin, t_end) seconds.
struct RateBlock {
  std::uint32_t channel_begin = 0;
  std::uint32_t channel_end = 0;
  double rate_hz = 0.0;
  double t_begin = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
};

struct ClassProfile {
  std::vector<RateBlock> tactile;
  std::vector<RateBlock> vision;
  std::string object_id;
  std::string level;
};

struct SyntheticSpec {
  std::uint32_t tactile_channels = 156;
  VisionGeometry vision_geometry{200, 250, 2};
  double duration = 0.15;  // seconds
  std::vector<ClassProfile> classes;
};

/// SplitMix64 finaliser; mixes (seed, index) into independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace detail {

inline void poisson_events(const RateBlock& block, double duration,
                           std::uint32_t channel_count, std::mt19937_64& rng,
                           const std::function<Polarity(std::uint32_t)>& polarity,
                           std::vector<Event>& out) {
  require(block.rate_hz >= 0.0, ErrorKind::invalid_argument, "rates must be >= 0");
  require(block.channel_end <= channel_count, ErrorKind::invalid_argument,
          "rate block exceeds the channel count");
  if (block.rate_hz == 0.0) return;
  const double stop = std::min(block.t_end, duration);
  for (std::uint32_t c = block.channel_begin; c < block.channel_end; ++c) {
    double t = block.t_begin;
    while (true) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      t += -std::log1p(-u) / block.rate_hz;
      if (t >= stop) break;
      out.push_back({static_cast<Microseconds>(t * 1e6), c, polarity(c)});
    }
  }
}

}  // namespace detail

/// Labels are dealt round-robin over the classes; sample i draws from its
/// own stream, mix_seed(seed, i).
inline std::vector<Sample> generate_synthetic(const SyntheticSpec& spec,
                                              std::size_t n_samples,
                                              std::uint64_t seed) {
  require(!spec.classes.empty(), ErrorKind::invalid_argument, "no class profiles");
  require(spec.duration > 0.0, ErrorKind::invalid_argument, "duration must be positive");
  const VisionGeometry g = spec.vision_geometry;
  auto tactile_polarity = [](std::uint32_t c) {
    return c % 2 == 0 ? Polarity::positive : Polarity::negative;
  };
  auto vision_polarity = [&g](std::uint32_t c) { return vision_pixel(c, g).polarity; };
  std::vector<Sample> samples;
  samples.reserve(n_samples);
  const int width = static_cast<int>(std::to_string(n_samples).size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t label = i % spec.classes.size();
    const ClassProfile& profile = spec.classes[label];
    std::mt19937_64 rng(mix_seed(seed, i));
    std::vector<Event> tact, vis;
    for (const auto& b : profile.tactile)
      detail::poisson_events(b, spec.duration, spec.tactile_channels, rng,
                             tactile_polarity, tact);
    for (const auto& b : profile.vision)
      detail::poisson_events(b, spec.duration,
                             static_cast<std::uint32_t>(g.channel_count()), rng,
                             vision_polarity, vis);
    Sample s;
    s.tactile = EventStream::from_unsorted(Modality::tactile, spec.tactile_channels,
                                           std::move(tact));
    s.vision = EventStream::from_unsorted(
        Modality::vision, static_cast<std::uint32_t>(g.channel_count()),
        std::move(vis), g);
    s.label = label;
    std::string id = std::to_string(i);
    id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
    s.metadata = {"s" + id, profile.object_id, profile.level, "synthetic-" + id};
    samples.push_back(std::move(s));
  }
  return samples;
}

/// Rows [row_begin, row_end) of one polarity plane as a channel range.
inline RateBlock vision_rows(const VisionGeometry& g, Polarity p,
                             std::uint32_t row_begin, std::uint32_t row_end,
                             double rate_hz, double t_begin = 0.0,
                             double t_end = std::numeric_limits<double>::infinity()) {
  const std::uint32_t plane = g.polarities == 1 ? 0u : polarity_plane(p);
  const std::uint32_t base = plane * g.height * g.width;
  return {base + row_begin * g.width, base + row_end * g.width, rate_hz, t_begin, t_end};
}

/// Named synthetic datasets:
///   disjoint       2 classes, class 0 fires tactile channels 0-9, class 1
///                  channels 10-19, weak background everywhere; 0.15 s.
///   early          as disjoint, but the class channels fire only in the
///                  first third of the window while shared channels 20-59
///                  fire throughout for both classes.
///   slip-toy       2 classes (stable / slip) with tactile and vision
///                  activity; slip adds a tactile burst and moving-edge
///                  vision rows after 0.01 s; 0.15 s.
///   container-toy  20 classes (4 containers x 5 weight levels) over 10 s
///                  with contact-delayed tactile activity.
inline SyntheticSpec synthetic_preset(const std::string& name) {
  SyntheticSpec s;
  if (name == "disjoint" || name == "early") {
    const bool early = name == "early";
    s.duration = 0.15;
    const double t_end = early ? s.duration / 3.0 : s.duration;
    for (std::uint32_t c = 0; c < 2; ++c) {
      ClassProfile p;
      p.object_id = "class" + std::to_string(c);
      p.level = std::to_string(c);
      p.tactile.push_back({c * 10, c * 10 + 10, early ? 25.0 : 150.0, 0.0, t_end});
      if (early) p.tactile.push_back({20, 60, 120.0, 0.0, s.duration});
      p.tactile.push_back({0, 156, 5.0});
      s.classes.push_back(p);
    }
    return s;
  }
  if (name == "slip-toy") {
    s.duration = 0.15;
    const VisionGeometry& g = s.vision_geometry;
    for (std::uint32_t c = 0; c < 2; ++c) {
      ClassProfile p;
      p.object_id = "duplo";
      p.level = c == 0 ? "stable" : "slip";
      p.tactile.push_back({0, 156, 20.0, 0.005});
      p.tactile.push_back({40, 80, c == 0 ? 60.0 : 250.0, 0.01});
      p.vision.push_back(vision_rows(g, Polarity::positive, 100, 110, 10.0));
      if (c == 1) {
        p.vision.push_back(vision_rows(g, Polarity::positive, 120, 140, 40.0, 0.01));
        p.vision.push_back(vision_rows(g, Polarity::negative, 120, 140, 40.0, 0.02));
      }
      s.classes.push_back(p);
    }
    return s;
  }
  if (name == "container-toy") {
    s.duration = 10.0;
    const VisionGeometry& g = s.vision_geometry;
    const char* containers[] = {"coffee_can", "plastic_soda_can", "soy_milk", "tuna_can"};
    for (std::uint32_t c = 0; c < 20; ++c) {
      const std::uint32_t container = c / 5;
      const std::uint32_t level = c % 5;
      ClassProfile p;
      p.object_id = containers[container];
      p.level = std::to_string(level * 25) + "%";
      // Contact after 2.5 s; container picks the taxel group, weight the rate.
      p.tactile.push_back({0, 156, 2.0, 2.5});
      p.tactile.push_back({container * 39, container * 39 + 39, 6.0 + 4.0 * level, 2.5});
      // Gripper closing is visible from 2.0 s; container picks the rows.
      p.vision.push_back(vision_rows(g, Polarity::positive, 40 + container * 50,
                                     60 + container * 50, 0.2, 2.0));
      p.vision.push_back(vision_rows(g, Polarity::negative, 40 + container * 50,
                                     60 + container * 50, 0.1 + 0.05 * level, 2.0));
      s.classes.push_back(p);
    }
    return s;
  }
  fail(ErrorKind::invalid_argument, "unknown preset '" + name +
                                        "' (disjoint, early, slip-toy, container-toy)");
}

// ---------------------------------------------------------------------------

/// Window selection and binning applied to both modalities.
struct Preprocess {
  double t_start = 0.0;
  double bin_width = 0.001;
  std::uint32_t n_bins = 150;
  std::uint32_t s_min_tactile = 1;
  std::uint32_t s_min_vision = 1;

  double t_end() const { return t_start + bin_width * n_bins; }

  /// 2.0 s to 8.5 s, 0.02 s bins (325), S_min = 1.
  static Preprocess containers() { return {2.0, 0.02, 325, 1, 1}; }
  /// 0.15 s from `t_start`, 0.001 s bins (150), S_min = 1.
  static Preprocess slip(double t_start = 0.0) { return {t_start, 0.001, 150, 1, 1}; }
};

inline SpikeTensor preprocess_stream(const EventStream& stream, const Preprocess& p,
                                     bool merge_vision_polarity) {
  EventStream cropped = crop_window(stream, p.t_start, p.t_end());
  if (merge_vision_polarity) cropped = merge_polarity(cropped);
  const std::uint32_t s_min =
      stream.modality() == Modality::tactile ? p.s_min_tactile : p.s_min_vision;
  return bin_events(cropped, p.bin_width, p.n_bins, s_min);
}

/// Bins the streams each branch of `net` consumes. A vision branch whose
/// pool expects one polarity plane gets the polarity-merged stream.
inline NetworkInput to_network_input(const Sample& s, const Network& net,
                                     const Preprocess& p) {
  NetworkInput in;
  for (const auto& b : net.branches) {
    const EventStream& stream = b.modality == Modality::tactile ? s.tactile : s.vision;
    bool merge = false;
    if (const auto* pool = std::get_if<PoolLayer>(&b.layers.front()))
      merge = pool->input_geometry().polarities == 1 && stream.geometry() &&
              stream.geometry()->polarities == 2;
    in.branches.push_back(preprocess_stream(stream, p, merge));
    require(in.branches.back().channel_count() == b.n_in(), ErrorKind::shape,
            std::string(to_string(b.modality)) + " input has " +
                std::to_string(in.branches.back().channel_count()) +
                " channels, branch expects " + std::to_string(b.n_in()));
  }
  return in;
}

inline std::vector<LabeledInput> prepare(std::span<const Sample> samples,
                                         const Network& net, const Preprocess& p) {
  std::vector<LabeledInput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({to_network_input(s, net, p), s.label});
  return out;
}

template <typename T>
std::vector<T> select(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

}  // namespace vtsnn
