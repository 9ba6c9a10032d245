#pragma once

// Plain-text training configuration, one `key = value` per line, `#`
// comments. Recognised keys: epochs, lr, batch, l2, loss (count|weighted),
// beta, gamma, true_count, false_count, seed.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "vtsnn/error.hpp"
#include "vtsnn/event_io.hpp"

namespace vtsnn {

struct TrainSettings {
  std::optional<std::uint32_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<double> l2;
  std::optional<std::string> loss;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<std::uint32_t> true_count;
  std::optional<std::uint32_t> false_count;
  std::optional<std::uint64_t> seed;

  /// Fields set in `over` replace ours.
  void merge(const TrainSettings& over) {
    auto take = [](auto& dst, const auto& src) {
      if (src) dst = src;
    };
    take(epochs, over.epochs);
    take(lr, over.lr);
    take(batch, over.batch);
    take(l2, over.l2);
    take(loss, over.loss);
    take(beta, over.beta);
    take(gamma, over.gamma);
    take(true_count, over.true_count);
    take(false_count, over.false_count);
    take(seed, over.seed);
  }

  std::string to_text() const {
    std::ostringstream out;
    out.precision(17);
    if (epochs) out << "epochs = " << *epochs << "\n";
    if (lr) out << "lr = " << *lr << "\n";
    if (batch) out << "batch = " << *batch << "\n";
    if (l2) out << "l2 = " << *l2 << "\n";
    if (loss) out << "loss = " << *loss << "\n";
    if (beta) out << "beta = " << *beta << "\n";
    if (gamma) out << "gamma = " << *gamma << "\n";
    if (true_count) out << "true_count = " << *true_count << "\n";
    if (false_count) out << "false_count = " << *false_count << "\n";
    if (seed) out << "seed = " << *seed << "\n";
    return out.str();
  }
};

inline TrainSettings parse_train_settings(std::istream& in,
                                          const std::string& source = "<config>") {
  TrainSettings s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos)
      view = detail::trim(view.substr(0, hash));
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) fail(ErrorKind::parse, where + "expected key = value");
    const auto key = detail::trim(view.substr(0, eq));
    const auto value = detail::trim(view.substr(eq + 1));
    auto num = [&](auto& field) {
      std::remove_reference_t<decltype(*field)> v{};
      if (!detail::parse_number(value, v))
        fail(ErrorKind::parse, where + "bad value for '" + std::string(key) + "'");
      field = v;
    };
    if (key == "epochs") num(s.epochs);
    else if (key == "lr") num(s.lr);
    else if (key == "batch") num(s.batch);
    else if (key == "l2") num(s.l2);
    else if (key == "beta") num(s.beta);
    else if (key == "gamma") num(s.gamma);
    else if (key == "true_count") num(s.true_count);
    else if (key == "false_count") num(s.false_count);
    else if (key == "seed") num(s.seed);
    else if (key == "loss") {
      if (value != "count" && value != "weighted")
        fail(ErrorKind::parse, where + "loss must be 'count' or 'weighted'");
      s.loss = std::string(value);
    } else {
      fail(ErrorKind::parse, where + "unknown key '" + std::string(key) + "'");
    }
  }
  return s;
}

inline TrainSettings load_train_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return parse_train_settings(in, path);
}

}  // namespace vtsnn
