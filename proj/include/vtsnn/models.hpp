#pragma once

// Tactile-only, vision-only and combined visual-tactile network variants.

#include <cstdint>
#include <string>

#include "vtsnn/error.hpp"
#include "vtsnn/network.hpp"

namespace vtsnn {

struct TactileEncoderSpec {
  std::uint32_t in = 156;  // 2 fingers x 39 taxels x 2 polarities
  std::uint32_t hidden = 32;
  std::uint32_t out = 50;
};

struct VisionEncoderSpec {
  VisionGeometry crop{200, 250, 2};  // width x height x polarities
  std::uint32_t pool_kernel = 4;
  std::uint32_t pool_stride = 4;
  std::uint32_t hidden = 32;
  std::uint32_t out = 10;
};

struct ArchitectureSpec {
  TactileEncoderSpec tactile;
  VisionEncoderSpec vision;
  SrmConfig srm = SrmConfig::with_step(0.001);
  double pool_gain = 1.1;
};

enum class ModelKind { tactile, vision, combined };

inline ModelKind parse_model_kind(const std::string& name) {
  if (name == "tact") return ModelKind::tactile;
  if (name == "vis") return ModelKind::vision;
  if (name == "mm") return ModelKind::combined;
  fail(ErrorKind::invalid_argument, "unknown model '" + name + "' (tact, vis, mm)");
}

inline Branch tactile_branch(const ArchitectureSpec& a) {
  Branch b;
  b.modality = Modality::tactile;
  b.layers.emplace_back(SrmLayer(a.tactile.in, a.tactile.hidden, a.srm));
  b.layers.emplace_back(SrmLayer(a.tactile.hidden, a.tactile.out, a.srm));
  return b;
}

inline Branch vision_branch(const ArchitectureSpec& a) {
  Branch b;
  b.modality = Modality::vision;
  PoolLayer pool(a.vision.crop, a.vision.pool_kernel, a.vision.pool_stride, a.srm,
                 a.pool_gain);
  const std::size_t pooled = pool.n_out();
  b.layers.emplace_back(std::move(pool));
  b.layers.emplace_back(SrmLayer(pooled, a.vision.hidden, a.srm));
  b.layers.emplace_back(SrmLayer(a.vision.hidden, a.vision.out, a.srm));
  return b;
}

inline void check_classes(std::size_t n_classes) {
  require(n_classes >= 2, ErrorKind::invalid_argument, "need at least two classes");
}

/// 156 -> 32 -> 50 encoder, then 50 -> n_classes.
inline Network build_tactile_snn(std::size_t n_classes, const ArchitectureSpec& a = {}) {
  check_classes(n_classes);
  Network net;
  net.branches.push_back(tactile_branch(a));
  net.head.emplace_back(a.tactile.out, n_classes, a.srm);
  net.validate();
  return net;
}

/// pool 4/4 per polarity -> 32 -> 10 encoder, then 10 -> n_classes.
inline Network build_vision_snn(std::size_t n_classes, const ArchitectureSpec& a = {}) {
  check_classes(n_classes);
  Network net;
  net.branches.push_back(vision_branch(a));
  net.head.emplace_back(a.vision.out, n_classes, a.srm);
  net.validate();
  return net;
}

/// Both encoders; their outputs (50 + 10) are concatenated into the head.
inline Network build_vtsnn(std::size_t n_classes, const ArchitectureSpec& a = {}) {
  check_classes(n_classes);
  Network net;
  net.branches.push_back(tactile_branch(a));
  net.branches.push_back(vision_branch(a));
  net.head.emplace_back(a.tactile.out + a.vision.out, n_classes, a.srm);
  net.validate();
  return net;
}

inline Network build_model(ModelKind kind, std::size_t n_classes,
                           const ArchitectureSpec& a = {}) {
  switch (kind) {
    case ModelKind::tactile: return build_tactile_snn(n_classes, a);
    case ModelKind::vision: return build_vision_snn(n_classes, a);
    case ModelKind::combined: return build_vtsnn(n_classes, a);
  }
  fail(ErrorKind::invalid_argument, "unknown model kind");
}

}  // namespace vtsnn
