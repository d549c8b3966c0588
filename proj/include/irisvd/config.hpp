#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irisvd/ebp.hpp"
#include "irisvd/error.hpp"
#include "irisvd/iris_boundary.hpp"
#include "irisvd/iris_template.hpp"
#include "irisvd/segmentation.hpp"
#include "irisvd/synth.hpp"

namespace irisvd {

struct ExperimentConfig {
  std::vector<std::size_t> class_counts{3, 4, 5, 6, 7, 8, 9, 10, 20, 40, 50};
  std::vector<std::size_t> dims{3, 10, 20, 40};
  std::size_t epoch_cap = 8000;
  std::size_t n_train = 5;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Every tunable in one place, addressable by dotted key.
struct PipelineConfig {
  SegmentationConfig segmentation;
  EdgeConfig iris;
  TemplateConfig templ;
  std::size_t k = 20;
  TrainConfig train;
  ExperimentConfig experiment;
  SynthOptions synth;
  int samples_per_class = 7;
};

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad value '" + std::string(text) + "' for key " + std::string(key));
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("bad boolean '" + std::string(text) + "' for key " + std::string(key));
}

inline std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_number<std::size_t>(key, std::string_view(item).substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("empty list for key " + std::string(key));
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value)>;

template <typename T, typename Field>
Setter number(Field field) {
  return [field](PipelineConfig& c, std::string_view k, std::string_view v) { field(c) = parse_number<T>(k, v); };
}

inline const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"segmentation.threshold", number<int>([](PipelineConfig& c) -> int& { return c.segmentation.threshold; })},
      {"segmentation.min_area",
       number<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.segmentation.min_area; })},
      {"iris.window", number<int>([](PipelineConfig& c) -> int& { return c.iris.window; })},
      {"iris.jump", number<int>([](PipelineConfig& c) -> int& { return c.iris.jump; })},
      {"iris.pupil_margin", number<int>([](PipelineConfig& c) -> int& { return c.iris.pupil_margin; })},
      {"iris.default_annulus_width",
       number<double>([](PipelineConfig& c) -> double& { return c.iris.default_annulus_width; })},
      {"template.rows", number<int>([](PipelineConfig& c) -> int& { return c.templ.rows; })},
      {"template.cols", number<int>([](PipelineConfig& c) -> int& { return c.templ.cols; })},
      {"template.block", number<int>([](PipelineConfig& c) -> int& { return c.templ.block; })},
      {"features.k", number<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.k; })},
      {"train.lr0", number<double>([](PipelineConfig& c) -> double& { return c.train.lr0; })},
      {"train.lr_inc", number<double>([](PipelineConfig& c) -> double& { return c.train.lr_inc; })},
      {"train.lr_dec", number<double>([](PipelineConfig& c) -> double& { return c.train.lr_dec; })},
      {"train.max_perf_inc", number<double>([](PipelineConfig& c) -> double& { return c.train.max_perf_inc; })},
      {"train.max_epochs", number<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.train.max_epochs; })},
      {"train.mse_goal", number<double>([](PipelineConfig& c) -> double& { return c.train.mse_goal; })},
      {"train.min_grad", number<double>([](PipelineConfig& c) -> double& { return c.train.min_grad; })},
      {"train.seed", number<std::uint64_t>([](PipelineConfig& c) -> std::uint64_t& { return c.train.seed; })},
      {"experiment.class_counts",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.experiment.class_counts = parse_list(k, v); }},
      {"experiment.dims",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.experiment.dims = parse_list(k, v); }},
      {"experiment.epoch_cap",
       number<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.experiment.epoch_cap; })},
      {"experiment.n_train",
       number<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.experiment.n_train; })},
      {"experiment.seed", number<std::uint64_t>([](PipelineConfig& c) -> std::uint64_t& { return c.experiment.seed; })},
      {"experiment.threads", number<unsigned>([](PipelineConfig& c) -> unsigned& { return c.experiment.threads; })},
      {"synth.width", number<int>([](PipelineConfig& c) -> int& { return c.synth.width; })},
      {"synth.height", number<int>([](PipelineConfig& c) -> int& { return c.synth.height; })},
      {"synth.noise_amplitude", number<int>([](PipelineConfig& c) -> int& { return c.synth.noise_amplitude; })},
      {"synth.eyelash_count", number<int>([](PipelineConfig& c) -> int& { return c.synth.eyelash_count; })},
      {"synth.bright_spot",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.synth.bright_spot = parse_bool(k, v); }},
      {"synth.jitter",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.synth.jitter = parse_bool(k, v); }},
      {"synth.samples_per_class", number<int>([](PipelineConfig& c) -> int& { return c.samples_per_class; })},
  };
  return table;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

inline void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = detail::setters().find(key);
  if (it == detail::setters().end()) throw ConfigError("unknown config key: " + std::string(key));
  it->second(cfg, key, value);
}

// `key = value` lines; '#' starts a comment.
inline void apply_config_text(PipelineConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

}  // namespace irisvd
