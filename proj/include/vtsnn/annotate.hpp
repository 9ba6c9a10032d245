#pragma once

// Lift and rotational-slip onset detection from motion-capture pose traces.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event_io.hpp"

namespace vtsnn {

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion operator-() const { return {-w, -x, -y, -z}; }
};

inline double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline constexpr double kUnitTolerance = 1e-6;

inline void check_unit(const Quaternion& q) {
  if (std::abs(q.norm() - 1.0) > kUnitTolerance)
    fail(ErrorKind::validation, "quaternion is not unit-norm");
}

/// Rotation angle between two orientations, acos(2 <q0, qt>^2 - 1), in
/// [0, pi]. Invariant under q -> -q. Evaluated as 2 atan2(|v|, |w|) of the
/// relative rotation conj(q0) * qt, which keeps precision near zero.
inline double quaternion_angle(const Quaternion& q0, const Quaternion& qt) {
  check_unit(q0);
  check_unit(qt);
  const double w = dot(q0, qt);
  const double x = q0.w * qt.x - q0.x * qt.w - q0.y * qt.z + q0.z * qt.y;
  const double y = q0.w * qt.y + q0.x * qt.z - q0.y * qt.w - q0.z * qt.x;
  const double z = q0.w * qt.z - q0.x * qt.y + q0.y * qt.x - q0.z * qt.w;
  return 2.0 * std::atan2(std::sqrt(x * x + y * y + z * z), std::abs(w));
}

struct PoseFrame {
  double timestamp = 0.0;  // seconds
  double px = 0.0, py = 0.0, pz = 0.0;
  Quaternion orientation;
};

struct PoseTrace {
  std::vector<PoseFrame> frames;
  double frame_rate = 120.0;

  void validate() const {
    require(frame_rate > 0.0, ErrorKind::validation, "frame rate must be positive");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      check_unit(frames[i].orientation);
      if (i > 0 && !(frames[i].timestamp > frames[i - 1].timestamp))
        fail(ErrorKind::validation, "pose timestamps must be strictly increasing (frame " +
                                        std::to_string(i) + ")");
    }
  }
};

struct OnsetConfig {
  std::size_t baseline_len = 120;
  double quantile = 0.98;
  std::size_t persistence = 12;  // frames after the candidate that must agree
};

/// First frame j >= baseline_len whose value exceeds strictly more than
/// `quantile` of the baseline frames (with 120 frames and 0.98: at least 118
/// exceedances, ties not counted) and keeps doing so for the next
/// `persistence` frames, clipped at the series end.
inline std::optional<std::size_t> detect_onset(std::span<const double> series,
                                               const OnsetConfig& c = {}) {
  require(c.baseline_len > 0 && series.size() > c.baseline_len,
          ErrorKind::invalid_argument, "series must be longer than the baseline");
  require(c.quantile >= 0.0 && c.quantile < 1.0, ErrorKind::invalid_argument,
          "quantile must lie in [0, 1)");
  // Exceedance is monotone in the value, so compare against the sorted
  // baseline instead of rescanning it per frame.
  std::vector<double> base(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(c.baseline_len));
  std::sort(base.begin(), base.end());
  auto exceeds = [&](double v) {
    const auto above = std::lower_bound(base.begin(), base.end(), v) - base.begin();
    return static_cast<double>(above) > c.quantile * static_cast<double>(c.baseline_len);
  };
  std::size_t run = 0;
  for (std::size_t j = c.baseline_len; j < series.size(); ++j) {
    run = exceeds(series[j]) ? run + 1 : 0;
    if (run == 0) continue;
    const std::size_t start = j + 1 - run;
    if (run > c.persistence || j + 1 == series.size()) return start;
  }
  return std::nullopt;
}

inline std::vector<double> lift_series(const PoseTrace& trace) {
  std::vector<double> z;
  z.reserve(trace.frames.size());
  for (const auto& f : trace.frames) z.push_back(f.pz);
  return z;
}

/// Rotation angle of every frame relative to the first (at-rest) frame.
inline std::vector<double> rotation_series(const PoseTrace& trace) {
  std::vector<double> theta;
  theta.reserve(trace.frames.size());
  if (trace.frames.empty()) return theta;
  const Quaternion& q0 = trace.frames.front().orientation;
  for (const auto& f : trace.frames) theta.push_back(quaternion_angle(q0, f.orientation));
  return theta;
}

struct Annotation {
  std::optional<std::size_t> lift_frame;
  std::optional<std::size_t> slip_frame;
  std::optional<double> lag_seconds;
};

inline Annotation annotate(const PoseTrace& trace, const OnsetConfig& c = {}) {
  trace.validate();
  Annotation a;
  a.lift_frame = detect_onset(lift_series(trace), c);
  a.slip_frame = detect_onset(rotation_series(trace), c);
  if (a.lift_frame && a.slip_frame) {
    a.lag_seconds = (static_cast<double>(*a.slip_frame) - static_cast<double>(*a.lift_frame)) /
                    trace.frame_rate;
  }
  return a;
}

/// (f_slip - f_lift) / frame_rate, or nullopt when either onset is missing.
inline std::optional<double> slip_lag(const PoseTrace& trace, const OnsetConfig& c = {}) {
  return annotate(trace, c).lag_seconds;
}

/// CSV rows: timestamp,px,py,pz,qw,qx,qy,qz. A non-numeric first row is a
/// header.
inline PoseTrace read_pose_csv(std::istream& in, double frame_rate = 120.0,
                               const std::string& source = "<pose>") {
  PoseTrace trace;
  trace.frame_rate = frame_rate;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto f = detail::split(view, ',');
    double v[8];
    bool ok = f.size() == 8;
    for (std::size_t i = 0; ok && i < 8; ++i) ok = detail::parse_number(f[i], v[i]);
    if (!ok) {
      if (line_no == 1) continue;
      fail(ErrorKind::parse, source + ":" + std::to_string(line_no) +
                                 ": expected timestamp,px,py,pz,qw,qx,qy,qz");
    }
    trace.frames.push_back({v[0], v[1], v[2], v[3], {v[4], v[5], v[6], v[7]}});
  }
  trace.validate();
  return trace;
}

inline PoseTrace read_pose_csv(const std::string& path, double frame_rate = 120.0) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return read_pose_csv(in, frame_rate, path);
}

inline void write_pose_csv(std::ostream& out, const PoseTrace& trace) {
  out.precision(17);
  out << "timestamp,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& f : trace.frames) {
    out << f.timestamp << "," << f.px << "," << f.py << "," << f.pz << ","
        << f.orientation.w << "," << f.orientation.x << "," << f.orientation.y
        << "," << f.orientation.z << "\n";
  }
}

}  // namespace vtsnn
