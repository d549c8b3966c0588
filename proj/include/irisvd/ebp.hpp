#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/matrix.hpp"
#include "irisvd/rng.hpp"

namespace irisvd {

struct MlpShape {
  std::size_t n_in = 1;
  std::size_t n_hidden = 2;
  std::size_t n_out = 1;

  // Hidden layer roughly twice the input layer.
  static MlpShape with_default_hidden(std::size_t n_in, std::size_t n_out) { return {n_in, 2 * n_in, n_out}; }
  bool operator==(const MlpShape&) const = default;
};

// Per-dimension min-max scaling onto [0, 1], fitted on training features only.
struct FeatureScaling {
  std::vector<double> lo;
  std::vector<double> hi;

  static FeatureScaling identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

  static FeatureScaling fit(std::span<const std::vector<double>> samples) {
    if (samples.empty()) throw InvalidArgument("FeatureScaling::fit: no samples");
    FeatureScaling s{samples[0], samples[0]};
    for (const auto& x : samples) {
      if (x.size() != s.lo.size()) throw DimensionMismatch("FeatureScaling::fit: ragged samples");
      for (std::size_t i = 0; i < x.size(); ++i) {
        s.lo[i] = std::min(s.lo[i], x[i]);
        s.hi[i] = std::max(s.hi[i], x[i]);
      }
    }
    return s;
  }

  std::size_t size() const noexcept { return lo.size(); }

  // A constant training dimension maps to 0.
  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != lo.size()) throw DimensionMismatch("feature dimension " + std::to_string(x.size()) +
                                                       " does not match scaling dimension " + std::to_string(lo.size()));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double range = hi[i] - lo[i];
      out[i] = range > 0.0 ? (x[i] - lo[i]) / range : 0.0;
    }
    return out;
  }

  bool operator==(const FeatureScaling&) const = default;
};

struct Mlp {
  MlpShape shape;
  Matrix w1;               // n_hidden x n_in
  std::vector<double> b1;  // n_hidden
  Matrix w2;               // n_out x n_hidden
  std::vector<double> b2;  // n_out
  FeatureScaling scaling;
  std::vector<std::string> class_names;  // optional, one per output

  bool operator==(const Mlp&) const = default;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from SplitMix64(seed), biases zero.
inline Mlp init(const MlpShape& shape, std::uint64_t seed) {
  if (shape.n_in < 1 || shape.n_hidden < 1 || shape.n_out < 1) throw InvalidArgument("init: layer sizes must be >= 1");
  SplitMix64 rng(seed);
  Mlp net;
  net.shape = shape;
  net.w1 = Matrix(shape.n_hidden, shape.n_in);
  net.w2 = Matrix(shape.n_out, shape.n_hidden);
  const double l1 = 1.0 / std::sqrt(static_cast<double>(shape.n_in));
  const double l2 = 1.0 / std::sqrt(static_cast<double>(shape.n_hidden));
  for (double& w : net.w1.data()) w = rng.uniform(-l1, l1);
  for (double& w : net.w2.data()) w = rng.uniform(-l2, l2);
  net.b1.assign(shape.n_hidden, 0.0);
  net.b2.assign(shape.n_out, 0.0);
  net.scaling = FeatureScaling::identity(shape.n_in);
  return net;
}

struct Activations {
  std::vector<double> hidden;
  std::vector<double> output;
};

inline Activations forward_full(const Mlp& net, std::span<const double> x) {
  if (x.size() != net.shape.n_in)
    throw DimensionMismatch("forward: input has " + std::to_string(x.size()) + " values, network expects " +
                            std::to_string(net.shape.n_in));
  Activations a;
  a.hidden.resize(net.shape.n_hidden);
  for (std::size_t h = 0; h < net.shape.n_hidden; ++h) {
    double z = net.b1[h];
    const auto row = net.w1.row(h);
    for (std::size_t i = 0; i < x.size(); ++i) z += row[i] * x[i];
    a.hidden[h] = sigmoid(z);
  }
  a.output.resize(net.shape.n_out);
  for (std::size_t o = 0; o < net.shape.n_out; ++o) {
    double z = net.b2[o];
    const auto row = net.w2.row(o);
    for (std::size_t h = 0; h < a.hidden.size(); ++h) z += row[h] * a.hidden[h];
    a.output[o] = sigmoid(z);
  }
  return a;
}

// Input must already be scaled by net.scaling.
inline std::vector<double> forward(const Mlp& net, std::span<const double> x) { return forward_full(net, x).output; }

// Index of the largest output; ties go to the lowest index.
inline std::size_t decode(std::span<const double> y) {
  if (y.empty()) throw InvalidArgument("decode: empty output vector");
  return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

inline std::vector<double> encode_target(std::size_t class_index, std::size_t n_out) {
  if (class_index >= n_out)
    throw InvalidArgument("encode_target: class " + std::to_string(class_index) + " out of range for " +
                          std::to_string(n_out) + " outputs");
  std::vector<double> t(n_out, 0.0);
  t[class_index] = 1.0;
  return t;
}

struct Pattern {
  std::vector<double> x;       // scaled input
  std::vector<double> target;  // one-hot
};

struct Gradient {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  double max_abs() const {
    double m = 0.0;
    for (double g : w1.data()) m = std::max(m, std::abs(g));
    for (double g : b1) m = std::max(m, std::abs(g));
    for (double g : w2.data()) m = std::max(m, std::abs(g));
    for (double g : b2) m = std::max(m, std::abs(g));
    return m;
  }
};

struct GradientResult {
  Gradient grad;
  double mse = 0.0;
};

enum class TargetCheck { one_hot, none };

namespace detail {

inline void check_batch(const Mlp& net, std::span<const Pattern> batch, TargetCheck check) {
  if (batch.empty()) throw InvalidArgument("empty training batch");
  for (const auto& p : batch) {
    if (p.x.size() != net.shape.n_in) throw DimensionMismatch("pattern input dimension does not match network");
    if (p.target.size() != net.shape.n_out) throw DimensionMismatch("pattern target length does not match network");
    if (check == TargetCheck::one_hot) {
      const auto ones = std::count(p.target.begin(), p.target.end(), 1.0);
      const auto zeros = std::count(p.target.begin(), p.target.end(), 0.0);
      if (ones != 1 || ones + zeros != static_cast<long>(p.target.size()))
        throw InvalidArgument("target is not a one-hot vector");
    }
  }
}

}  // namespace detail

// Gradient of the batch MSE (mean over patterns and output neurons of (y - t)^2)
// with respect to every weight and bias.
inline GradientResult backprop_gradient(const Mlp& net, std::span<const Pattern> batch,
                                        TargetCheck check = TargetCheck::one_hot) {
  detail::check_batch(net, batch, check);
  const auto& s = net.shape;
  GradientResult r;
  r.grad.w1 = Matrix(s.n_hidden, s.n_in);
  r.grad.b1.assign(s.n_hidden, 0.0);
  r.grad.w2 = Matrix(s.n_out, s.n_hidden);
  r.grad.b2.assign(s.n_out, 0.0);

  const double scale = 2.0 / (static_cast<double>(batch.size()) * static_cast<double>(s.n_out));
  std::vector<double> delta_out(s.n_out);
  std::vector<double> delta_hidden(s.n_hidden);
  double sse = 0.0;
  for (const auto& p : batch) {
    const Activations a = forward_full(net, p.x);
    for (std::size_t o = 0; o < s.n_out; ++o) {
      const double err = a.output[o] - p.target[o];
      sse += err * err;
      delta_out[o] = scale * err * a.output[o] * (1.0 - a.output[o]);
    }
    std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
    for (std::size_t o = 0; o < s.n_out; ++o) {
      const double d = delta_out[o];
      r.grad.b2[o] += d;
      auto grow = r.grad.w2.row(o);
      const auto wrow = net.w2.row(o);
      for (std::size_t h = 0; h < s.n_hidden; ++h) {
        grow[h] += d * a.hidden[h];
        delta_hidden[h] += d * wrow[h];
      }
    }
    for (std::size_t h = 0; h < s.n_hidden; ++h) {
      const double d = delta_hidden[h] * a.hidden[h] * (1.0 - a.hidden[h]);
      r.grad.b1[h] += d;
      auto grow = r.grad.w1.row(h);
      for (std::size_t i = 0; i < s.n_in; ++i) grow[i] += d * p.x[i];
    }
  }
  r.mse = sse / (static_cast<double>(batch.size()) * static_cast<double>(s.n_out));
  return r;
}

inline double batch_mse(const Mlp& net, std::span<const Pattern> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  double sse = 0.0;
  for (const auto& p : batch) {
    const auto y = forward(net, p.x);
    for (std::size_t o = 0; o < y.size(); ++o) sse += (y[o] - p.target[o]) * (y[o] - p.target[o]);
  }
  return sse / (static_cast<double>(batch.size()) * static_cast<double>(net.shape.n_out));
}

struct TrainConfig {
  double lr0 = 0.2;
  double lr_inc = 1.05;
  double lr_dec = 0.7;
  double max_perf_inc = 1.04;
  std::size_t max_epochs = 50000;
  double mse_goal = 5e-7;
  double min_grad = 1e-9;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lr0 > 0.0)) throw InvalidArgument("lr0 must be positive");
    if (!(lr_inc > 1.0)) throw InvalidArgument("lr_inc must exceed 1");
    if (!(lr_dec > 0.0 && lr_dec < 1.0)) throw InvalidArgument("lr_dec must lie in (0, 1)");
    if (!(max_perf_inc >= 1.0)) throw InvalidArgument("max_perf_inc must be at least 1");
    if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  }
};

enum class StopReason { goal_met, max_epochs, gradient_floor };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::goal_met: return "goal_met";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::gradient_floor: return "gradient_floor";
  }
  return "unknown";
}

struct TrainReport {
  std::size_t epochs_run = 0;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  StopReason stop_reason = StopReason::max_epochs;
  std::vector<double> mse_trace;        // MSE of the kept weights after each epoch
  std::vector<double> lr_trace;         // rate used by each epoch
  std::vector<std::uint8_t> accepted;   // 1 if the epoch's step was kept
};

struct EpochEvent {
  std::size_t epoch = 0;
  double lr = 0.0;
  double previous_mse = 0.0;
  double candidate_mse = 0.0;
  bool accepted = false;
};

// Called after every epoch with the weights kept at the end of that epoch.
using EpochObserver = std::function<void(const EpochEvent&, const Mlp&)>;

struct TrainResult {
  Mlp net;
  TrainReport report;
};

// Full-batch gradient descent with an adaptive rate. A step whose MSE exceeds
// the current MSE by more than max_perf_inc is discarded and the rate shrinks
// by lr_dec; a kept step that lowers the MSE grows the rate by lr_inc.
inline TrainResult train(Mlp net, std::span<const Pattern> train_set, const TrainConfig& cfg,
                         const EpochObserver& observer = {}) {
  cfg.validate();
  detail::check_batch(net, train_set, TargetCheck::one_hot);

  TrainResult out;
  TrainReport& rep = out.report;
  GradientResult current = backprop_gradient(net, train_set, TargetCheck::none);
  rep.initial_mse = current.mse;
  double lr = cfg.lr0;

  auto stop = [&]() -> bool {
    if (current.mse <= cfg.mse_goal) {
      rep.stop_reason = StopReason::goal_met;
      return true;
    }
    if (current.grad.max_abs() < cfg.min_grad) {
      rep.stop_reason = StopReason::gradient_floor;
      return true;
    }
    if (rep.epochs_run >= cfg.max_epochs) {
      rep.stop_reason = StopReason::max_epochs;
      return true;
    }
    return false;
  };

  Mlp candidate = net;
  while (!stop()) {
    auto step = [lr](std::span<double> w, std::span<const double> wbase, std::span<const double> g) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = wbase[i] - lr * g[i];
    };
    step(candidate.w1.data(), net.w1.data(), current.grad.w1.data());
    step(candidate.b1, net.b1, current.grad.b1);
    step(candidate.w2.data(), net.w2.data(), current.grad.w2.data());
    step(candidate.b2, net.b2, current.grad.b2);

    GradientResult next = backprop_gradient(candidate, train_set, TargetCheck::none);
    EpochEvent ev{rep.epochs_run, lr, current.mse, next.mse, false};
    rep.lr_trace.push_back(lr);
    if (next.mse > current.mse * cfg.max_perf_inc) {
      lr *= cfg.lr_dec;
    } else {
      ev.accepted = true;
      if (next.mse < current.mse) lr *= cfg.lr_inc;
      std::swap(net, candidate);
      current = std::move(next);
    }
    rep.accepted.push_back(ev.accepted ? 1 : 0);
    rep.mse_trace.push_back(current.mse);
    ++rep.epochs_run;
    if (observer) observer(ev, net);
  }
  rep.final_mse = current.mse;
  out.net = std::move(net);
  return out;
}

// Class index for an unscaled feature vector.
inline std::size_t classify(const Mlp& net, std::span<const double> raw_features, double* confidence = nullptr) {
  const auto y = forward(net, net.scaling.apply(raw_features));
  const std::size_t c = decode(y);
  if (confidence) *confidence = y[c];
  return c;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_values(std::string& out, std::string_view tag, std::span<const double> vals) {
  out += tag;
  for (double v : vals) {
    out += ' ';
    out += fmt17(v);
  }
  out += '\n';
}

}  // namespace detail

inline constexpr std::string_view kModelHeader = "irisvd-mlp 1";

// Plain-text model: header, shape, optional class names, scaling rows, then
// weight rows, all numbers with 17 significant digits.
inline std::string save_model(const Mlp& net) {
  std::string out(kModelHeader);
  out += '\n';
  out += "shape " + std::to_string(net.shape.n_in) + ' ' + std::to_string(net.shape.n_hidden) + ' ' +
         std::to_string(net.shape.n_out) + '\n';
  if (!net.class_names.empty()) {
    out += "classes";
    for (const auto& c : net.class_names) out += ' ' + c;
    out += '\n';
  }
  for (std::size_t i = 0; i < net.scaling.size(); ++i)
    out += "scale " + detail::fmt17(net.scaling.lo[i]) + ' ' + detail::fmt17(net.scaling.hi[i]) + '\n';
  for (std::size_t h = 0; h < net.shape.n_hidden; ++h) detail::write_values(out, "w1", net.w1.row(h));
  detail::write_values(out, "b1", net.b1);
  for (std::size_t o = 0; o < net.shape.n_out; ++o) detail::write_values(out, "w2", net.w2.row(o));
  detail::write_values(out, "b2", net.b2);
  return out;
}

inline Mlp load_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error("model line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw Error("model: unexpected end of file after line " + std::to_string(line_no));
    ++line_no;
    return std::istringstream(line);
  };
  auto read_row = [&](std::string_view tag, std::span<double> dst) {
    auto ls = next_line();
    std::string t;
    ls >> t;
    if (t != tag) throw fail("expected '" + std::string(tag) + "'");
    for (double& d : dst) {
      std::string tok;
      if (!(ls >> tok)) throw fail("too few values");
      char* end = nullptr;
      d = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(d)) throw fail("bad number '" + tok + "'");
    }
    std::string extra;
    if (ls >> extra) throw fail("too many values");
  };

  if (!std::getline(in, line) || line != kModelHeader) throw Error("model: missing or unsupported header");
  ++line_no;
  MlpShape shape;
  {
    auto ls = next_line();
    std::string t;
    if (!(ls >> t >> shape.n_in >> shape.n_hidden >> shape.n_out) || t != "shape") throw fail("bad shape line");
  }
  Mlp net = init(shape, 0);
  std::streampos mark = in.tellg();
  if (std::getline(in, line) && line.rfind("classes", 0) == 0) {
    ++line_no;
    std::istringstream ls(line);
    std::string t, name;
    ls >> t;
    while (ls >> name) net.class_names.push_back(name);
    if (net.class_names.size() != shape.n_out) throw fail("class name count does not match outputs");
  } else {
    in.clear();
    in.seekg(mark);
  }
  for (std::size_t i = 0; i < shape.n_in; ++i) {
    double pair[2];
    read_row("scale", pair);
    net.scaling.lo[i] = pair[0];
    net.scaling.hi[i] = pair[1];
  }
  for (std::size_t h = 0; h < shape.n_hidden; ++h) read_row("w1", net.w1.row(h));
  read_row("b1", net.b1);
  for (std::size_t o = 0; o < shape.n_out; ++o) read_row("w2", net.w2.row(o));
  read_row("b2", net.b2);
  return net;
}

}  // namespace irisvd
