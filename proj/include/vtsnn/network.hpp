#pragma once

// Multi-branch spiking networks: one encoder branch per input modality, the
// branch outputs concatenated along the channel axis, then a task head.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"
#include "vtsnn/event_io.hpp"
#include "vtsnn/srm.hpp"

namespace vtsnn {

using Layer = std::variant<SrmLayer, PoolLayer>;

inline std::size_t layer_n_in(const Layer& l) {
  return std::visit([](const auto& x) { return x.n_in(); }, l);
}
inline std::size_t layer_n_out(const Layer& l) {
  return std::visit([](const auto& x) { return x.n_out(); }, l);
}

struct Branch {
  Modality modality = Modality::tactile;
  std::vector<Layer> layers;

  std::size_t n_in() const { return layers.empty() ? 0 : layer_n_in(layers.front()); }
  std::size_t n_out() const { return layers.empty() ? 0 : layer_n_out(layers.back()); }
};

struct Network {
  std::vector<Branch> branches;
  std::vector<SrmLayer> head;

  std::size_t n_classes() const { return head.empty() ? 0 : head.back().n_out(); }

  std::size_t combined_width() const {
    std::size_t w = 0;
    for (const auto& b : branches) w += b.n_out();
    return w;
  }

  /// Every layer's fan-in must equal the previous layer's fan-out, and the
  /// head must consume the concatenated branch outputs.
  void validate() const {
    require(!branches.empty(), ErrorKind::shape, "network has no input branch");
    require(!head.empty(), ErrorKind::shape, "network has no task head");
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const auto& layers = branches[b].layers;
      require(!layers.empty(), ErrorKind::shape,
              "branch " + std::to_string(b) + " has no layers");
      for (std::size_t i = 1; i < layers.size(); ++i) {
        require(std::holds_alternative<SrmLayer>(layers[i]), ErrorKind::shape,
                "pooling is only supported as the first layer of a branch");
        if (layer_n_in(layers[i]) != layer_n_out(layers[i - 1])) {
          fail(ErrorKind::shape, "branch " + std::to_string(b) + " layer " +
                                     std::to_string(i) + " fan-in " +
                                     std::to_string(layer_n_in(layers[i])) +
                                     " != previous fan-out " +
                                     std::to_string(layer_n_out(layers[i - 1])));
        }
      }
    }
    if (head.front().n_in() != combined_width()) {
      fail(ErrorKind::shape, "task head fan-in " +
                                 std::to_string(head.front().n_in()) +
                                 " != combined encoder width " +
                                 std::to_string(combined_width()));
    }
    for (std::size_t i = 1; i < head.size(); ++i) {
      require(head[i].n_in() == head[i - 1].n_out(), ErrorKind::shape,
              "task head layer fan-in mismatch");
    }
  }
};

/// Trainable layers in canonical order: branches first (in order), then
/// the head.
inline std::vector<SrmLayer*> dense_layers(Network& net) {
  std::vector<SrmLayer*> out;
  for (auto& b : net.branches)
    for (auto& l : b.layers)
      if (auto* d = std::get_if<SrmLayer>(&l)) out.push_back(d);
  for (auto& l : net.head) out.push_back(&l);
  return out;
}

inline std::vector<const SrmLayer*> dense_layers(const Network& net) {
  std::vector<const SrmLayer*> out;
  for (const auto& b : net.branches)
    for (const auto& l : b.layers)
      if (const auto* d = std::get_if<SrmLayer>(&l)) out.push_back(d);
  for (const auto& l : net.head) out.push_back(&l);
  return out;
}

inline std::size_t parameter_count(const Network& net) {
  std::size_t n = 0;
  for (const auto* l : dense_layers(net)) n += l->weights().size();
  return n;
}

/// One spike tensor per branch, in branch order.
struct NetworkInput {
  std::vector<SpikeTensor> branches;
};

struct LabeledInput {
  NetworkInput input;
  std::size_t label = 0;
};

struct NetworkTraces {
  std::vector<std::vector<LayerTrace>> branches;
  SpikeTensor combined;
  std::vector<LayerTrace> head;

  const SpikeTensor& output() const { return head.back().output_spikes; }
};

inline LayerTrace layer_forward(const Layer& layer, const SpikeTensor& input) {
  return std::visit(
      [&](const auto& l) -> LayerTrace {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, SrmLayer>) {
          return dense_spiking_forward(l, input);
        } else {
          return pool_forward(l, input);
        }
      },
      layer);
}

inline std::vector<LayerTrace> branch_forward(const Branch& branch,
                                              const SpikeTensor& input) {
  std::vector<LayerTrace> traces;
  traces.reserve(branch.layers.size());
  const SpikeTensor* x = &input;
  for (const auto& layer : branch.layers) {
    traces.push_back(layer_forward(layer, *x));
    x = &traces.back().output_spikes;
  }
  return traces;
}

inline std::vector<LayerTrace> head_forward(const std::vector<SrmLayer>& head,
                                            const SpikeTensor& combined) {
  std::vector<LayerTrace> traces;
  traces.reserve(head.size());
  const SpikeTensor* x = &combined;
  for (const auto& layer : head) {
    traces.push_back(dense_spiking_forward(layer, *x));
    x = &traces.back().output_spikes;
  }
  return traces;
}

inline NetworkTraces network_forward(const Network& net, const NetworkInput& input) {
  if (input.branches.size() != net.branches.size()) {
    fail(ErrorKind::shape, "network has " + std::to_string(net.branches.size()) +
                               " input branches, got " +
                               std::to_string(input.branches.size()));
  }
  const std::uint32_t n_bins = input.branches.front().n_bins();
  for (const auto& t : input.branches) {
    require(t.n_bins() == n_bins, ErrorKind::shape,
            "branch inputs differ in length");
  }
  NetworkTraces traces;
  traces.branches.reserve(net.branches.size());
  std::vector<const SpikeTensor*> encoded;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    traces.branches.push_back(branch_forward(net.branches[b], input.branches[b]));
  }
  for (const auto& bt : traces.branches) encoded.push_back(&bt.back().output_spikes);
  traces.combined = concat_channels(encoded);
  traces.head = head_forward(net.head, traces.combined);
  return traces;
}

// ---------------------------------------------------------------------------
// Weights file ("SNNW", little-endian):
//   magic "SNNW", version u16, layer count u32,
//   per dense layer: rows u32, cols u32,
//   then every layer's weights as row-major f64, in canonical layer order.

inline constexpr std::array<char, 4> kWeightsMagic{'S', 'N', 'N', 'W'};
inline constexpr std::uint16_t kWeightsFormatVersion = 1;

inline std::vector<std::uint8_t> encode_weights(const Network& net) {
  const auto layers = dense_layers(net);
  std::vector<std::uint8_t> out(kWeightsMagic.begin(), kWeightsMagic.end());
  detail::put_le(out, kWeightsFormatVersion);
  detail::put_le(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto* l : layers) {
    detail::put_le(out, static_cast<std::uint32_t>(l->n_out()));
    detail::put_le(out, static_cast<std::uint32_t>(l->n_in()));
  }
  for (const auto* l : layers)
    for (double w : l->weights().values()) detail::put_f64(out, w);
  return out;
}

/// Loads weights into an already-built network of matching shape.
inline void decode_weights(Network& net, std::span<const std::uint8_t> bytes,
                           const std::string& source = "<memory>") {
  detail::ByteReader r(bytes, source);
  for (char c : kWeightsMagic) {
    if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(c))
      fail(ErrorKind::parse, source + ": bad magic at byte 0");
  }
  if (r.get<std::uint16_t>("version") != kWeightsFormatVersion)
    fail(ErrorKind::parse, source + ": unsupported version at byte 4");
  auto layers = dense_layers(net);
  const auto count = r.get<std::uint32_t>("layer count");
  if (count != layers.size()) {
    fail(ErrorKind::shape, source + ": file has " + std::to_string(count) +
                               " layers, network has " +
                               std::to_string(layers.size()));
  }
  for (auto* l : layers) {
    const auto rows = r.get<std::uint32_t>("layer dims");
    const auto cols = r.get<std::uint32_t>("layer dims");
    if (rows != l->n_out() || cols != l->n_in()) {
      fail(ErrorKind::shape, source + ": layer dims " + std::to_string(rows) +
                                 "x" + std::to_string(cols) + " do not match " +
                                 std::to_string(l->n_out()) + "x" +
                                 std::to_string(l->n_in()));
    }
  }
  for (auto* l : layers) {
    Matrix w(l->n_out(), l->n_in());
    for (double& v : w.values()) v = r.get_f64("weight");
    *l = SrmLayer(std::move(w), l->config());
  }
  if (r.remaining() != 0)
    fail(ErrorKind::parse, source + ": trailing bytes at " + std::to_string(r.offset()));
}

inline void save_weights(const std::string& path, const Network& net) {
  detail::write_file(path, encode_weights(net));
}

inline void load_weights(const std::string& path, Network& net) {
  decode_weights(net, detail::read_file(path), path);
}

// ---------------------------------------------------------------------------
// Architecture text. Example:
//
//   sim_step = 0.001
//   threshold = 1.25
//   tau_response = 0.005
//   tau_refractory = 0.005
//   pool_gain = 1.1
//   branch tactile
//   dense 156 32
//   dense 32 50
//   branch vision 200 250 2
//   pool 4 4
//   dense 6200 32
//   dense 32 10
//   head
//   dense 60 20
//
// Settings apply to every layer declared after them.

inline std::string architecture_to_text(const Network& net) {
  std::ostringstream out;
  out.precision(17);
  SrmConfig current;
  double gain = 1.1;
  bool first = true;
  auto emit_config = [&](const SrmConfig& c, double g) {
    if (first || !(c == current) || g != gain) {
      out << "sim_step = " << c.sim_step << "\n"
          << "threshold = " << c.threshold << "\n"
          << "tau_response = " << c.tau_response << "\n"
          << "tau_refractory = " << c.tau_refractory << "\n"
          << "pool_gain = " << g << "\n";
      current = c;
      gain = g;
      first = false;
    }
  };
  for (const auto& b : net.branches) {
    bool header_done = false;
    for (const auto& l : b.layers) {
      if (const auto* p = std::get_if<PoolLayer>(&l)) {
        emit_config(p->config(), p->gain());
      } else {
        emit_config(std::get<SrmLayer>(l).config(), gain);
      }
      if (!header_done) {
        out << "branch " << to_string(b.modality);
        if (const auto* p = std::get_if<PoolLayer>(&l)) {
          const auto& g = p->input_geometry();
          out << " " << g.width << " " << g.height << " " << g.polarities;
        }
        out << "\n";
        header_done = true;
      }
      if (const auto* p = std::get_if<PoolLayer>(&l)) {
        out << "pool " << p->kernel() << " " << p->stride() << "\n";
      } else {
        const auto& d = std::get<SrmLayer>(l);
        out << "dense " << d.n_in() << " " << d.n_out() << "\n";
      }
    }
  }
  bool head_done = false;
  for (const auto& l : net.head) {
    emit_config(l.config(), gain);
    if (!head_done) {
      out << "head\n";
      head_done = true;
    }
    out << "dense " << l.n_in() << " " << l.n_out() << "\n";
  }
  return out.str();
}

/// Builds a zero-weight network from architecture text.
inline Network parse_architecture(std::istream& in,
                                  const std::string& source = "<arch>") {
  Network net;
  SrmConfig config;
  double gain = 1.1;
  enum class Section { none, branch, head } section = Section::none;
  std::optional<VisionGeometry> pending_geometry;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
  auto number = [&](std::string_view s) {
    double v = 0;
    if (!detail::parse_number(s, v)) fail(ErrorKind::parse, where() + "bad number '" + std::string(s) + "'");
    return v;
  };
  auto count = [&](std::string_view s) {
    std::uint32_t v = 0;
    if (!detail::parse_number(s, v)) fail(ErrorKind::parse, where() + "bad count '" + std::string(s) + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos)
      view = detail::trim(view.substr(0, hash));
    if (view.empty()) continue;
    if (const auto eq = view.find('='); eq != std::string_view::npos) {
      const auto key = detail::trim(view.substr(0, eq));
      const double v = number(detail::trim(view.substr(eq + 1)));
      if (key == "sim_step") config.sim_step = v;
      else if (key == "threshold") config.threshold = v;
      else if (key == "tau_response") config.tau_response = v;
      else if (key == "tau_refractory") config.tau_refractory = v;
      else if (key == "pool_gain") gain = v;
      else fail(ErrorKind::parse, where() + "unknown setting '" + std::string(key) + "'");
      continue;
    }
    std::vector<std::string_view> tok;
    for (auto t : detail::split(view, ' '))
      if (!t.empty()) tok.push_back(t);
    if (tok[0] == "branch") {
      require(tok.size() == 2 || tok.size() == 5, ErrorKind::parse,
              where() + "expected 'branch <modality> [w h p]'");
      Branch b;
      if (tok[1] == "tactile") b.modality = Modality::tactile;
      else if (tok[1] == "vision") b.modality = Modality::vision;
      else fail(ErrorKind::parse, where() + "unknown modality");
      pending_geometry.reset();
      if (tok.size() == 5)
        pending_geometry = VisionGeometry{count(tok[2]), count(tok[3]), count(tok[4])};
      net.branches.push_back(std::move(b));
      section = Section::branch;
    } else if (tok[0] == "head") {
      section = Section::head;
    } else if (tok[0] == "dense") {
      require(tok.size() == 3, ErrorKind::parse, where() + "expected 'dense <in> <out>'");
      SrmLayer layer(count(tok[1]), count(tok[2]), config);
      if (section == Section::branch) net.branches.back().layers.emplace_back(std::move(layer));
      else if (section == Section::head) net.head.push_back(std::move(layer));
      else fail(ErrorKind::parse, where() + "layer outside a branch or head");
    } else if (tok[0] == "pool") {
      require(tok.size() == 3, ErrorKind::parse, where() + "expected 'pool <kernel> <stride>'");
      require(section == Section::branch && pending_geometry.has_value(),
              ErrorKind::parse, where() + "pool needs a branch with geometry");
      net.branches.back().layers.emplace_back(
          PoolLayer(*pending_geometry, count(tok[1]), count(tok[2]), config, gain));
    } else {
      fail(ErrorKind::parse, where() + "unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  net.validate();
  return net;
}

inline Network parse_architecture(const std::string& text) {
  std::istringstream in(text);
  return parse_architecture(in);
}

inline Network load_architecture(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return parse_architecture(in, path);
}

}  // namespace vtsnn
