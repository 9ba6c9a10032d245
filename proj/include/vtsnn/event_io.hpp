#pragma once

// Canonical event file format ("EVST", little-endian):
//
//   magic        4 bytes  "EVST"
//   version      u16      currently 1
//   modality     u8       0 = tactile, 1 = vision
//   channels     u32
//   geometry     u32 x 3  (width, height, polarities), vision only
//   records      { timestamp_us u64, channel u32, polarity u8 } until EOF
//
// Polarity bytes: 1 = positive, 0 = negative.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"

namespace vtsnn {

inline constexpr std::array<char, 4> kEventMagic{'E', 'V', 'S', 'T'};
inline constexpr std::uint16_t kEventFormatVersion = 1;
inline constexpr std::size_t kEventRecordSize = 8 + 4 + 1;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(
        (static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu));
  }
}

inline void put_f64(std::vector<std::uint8_t>& out, double value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  put_le(out, bits);
}

/// Bounds-checked little-endian reader that reports byte offsets on error.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T get(const char* what) {
    if (remaining() < sizeof(T)) {
      fail(ErrorKind::parse, source_ + ": truncated " + what + " at byte " +
                                 std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_f64(const char* what) {
    const auto bits = get<std::uint64_t>(what);
    double v = 0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t offset() const { return pos_; }
  const std::string& source() const { return source_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_events(const EventStream& stream) {
  std::vector<std::uint8_t> out;
  out.reserve(23 + stream.size() * kEventRecordSize);
  out.insert(out.end(), kEventMagic.begin(), kEventMagic.end());
  detail::put_le(out, kEventFormatVersion);
  detail::put_le(out, static_cast<std::uint8_t>(stream.modality()));
  detail::put_le(out, stream.channel_count());
  if (stream.modality() == Modality::vision) {
    require(stream.geometry().has_value(), ErrorKind::validation,
            "vision streams must carry a geometry");
    detail::put_le(out, stream.geometry()->width);
    detail::put_le(out, stream.geometry()->height);
    detail::put_le(out, stream.geometry()->polarities);
  }
  for (const Event& e : stream.events()) {
    detail::put_le(out, e.timestamp);
    detail::put_le(out, e.channel);
    detail::put_le(out, static_cast<std::uint8_t>(e.polarity));
  }
  return out;
}

inline EventStream decode_events(std::span<const std::uint8_t> bytes,
                                 const std::string& source = "<memory>") {
  detail::ByteReader r(bytes, source);
  for (char c : kEventMagic) {
    if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(c)) {
      fail(ErrorKind::parse, source + ": bad magic at byte 0");
    }
  }
  const auto version = r.get<std::uint16_t>("version");
  if (version != kEventFormatVersion) {
    fail(ErrorKind::parse, source + ": unsupported version " +
                               std::to_string(version) + " at byte 4");
  }
  const auto modality_byte = r.get<std::uint8_t>("modality");
  if (modality_byte > 1) {
    fail(ErrorKind::parse, source + ": bad modality at byte 6");
  }
  const auto modality = static_cast<Modality>(modality_byte);
  const auto channels = r.get<std::uint32_t>("channel count");
  std::optional<VisionGeometry> geometry;
  if (modality == Modality::vision) {
    VisionGeometry g;
    g.width = r.get<std::uint32_t>("geometry");
    g.height = r.get<std::uint32_t>("geometry");
    g.polarities = r.get<std::uint32_t>("geometry");
    geometry = g;
  }
  if (r.remaining() % kEventRecordSize != 0) {
    fail(ErrorKind::parse,
         source + ": truncated record at byte " +
             std::to_string(r.offset() + (r.remaining() / kEventRecordSize) *
                                             kEventRecordSize));
  }
  std::vector<Event> events;
  events.reserve(r.remaining() / kEventRecordSize);
  while (r.remaining() > 0) {
    const std::size_t at = r.offset();
    Event e;
    e.timestamp = r.get<std::uint64_t>("timestamp");
    e.channel = r.get<std::uint32_t>("channel");
    const auto pol = r.get<std::uint8_t>("polarity");
    if (pol > 1) {
      fail(ErrorKind::parse, source + ": bad polarity byte in record at byte " +
                                 std::to_string(at));
    }
    e.polarity = static_cast<Polarity>(pol);
    events.push_back(e);
  }
  return EventStream(modality, channels, std::move(events), geometry);
}

inline void write_events(const std::string& path, const EventStream& stream) {
  detail::write_file(path, encode_events(stream));
}

inline EventStream read_events(const std::string& path) {
  return decode_events(detail::read_file(path), path);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace detail

/// Imports `timestamp_us,channel,polarity` rows. Polarity accepts
/// 1/+1/p/pos/positive and 0/-1/n/neg/negative. A non-numeric first row is
/// treated as a header. Rows are stable-sorted by timestamp.
inline EventStream import_events_csv(std::istream& in, Modality modality,
                                     std::uint32_t channel_count,
                                     std::optional<VisionGeometry> geometry,
                                     const std::string& source = "<csv>") {
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = detail::split(view, ',');
    Event e;
    std::uint64_t ts = 0;
    std::uint32_t ch = 0;
    const bool numeric = fields.size() == 3 &&
                         detail::parse_number(fields[0], ts) &&
                         detail::parse_number(fields[1], ch);
    if (!numeric) {
      if (line_no == 1 && events.empty()) continue;
      fail(ErrorKind::parse, source + ":" + std::to_string(line_no) +
                                 ": expected timestamp_us,channel,polarity");
    }
    const auto p = fields[2];
    if (p == "1" || p == "+1" || p == "p" || p == "pos" || p == "positive") {
      e.polarity = Polarity::positive;
    } else if (p == "0" || p == "-1" || p == "n" || p == "neg" ||
               p == "negative") {
      e.polarity = Polarity::negative;
    } else {
      fail(ErrorKind::parse,
           source + ":" + std::to_string(line_no) + ": bad polarity");
    }
    e.timestamp = ts;
    e.channel = ch;
    events.push_back(e);
  }
  return EventStream::from_unsorted(modality, channel_count, std::move(events),
                                    geometry);
}

inline EventStream import_events_csv(const std::string& path, Modality modality,
                                     std::uint32_t channel_count,
                                     std::optional<VisionGeometry> geometry) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return import_events_csv(in, modality, channel_count, geometry, path);
}

}  // namespace vtsnn
