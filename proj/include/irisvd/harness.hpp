#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "irisvd/config.hpp"
#include "irisvd/ebp.hpp"
#include "irisvd/error.hpp"
#include "irisvd/image.hpp"
#include "irisvd/iris_boundary.hpp"
#include "irisvd/iris_template.hpp"
#include "irisvd/rng.hpp"
#include "irisvd/segmentation.hpp"
#include "irisvd/svd.hpp"

namespace irisvd {

namespace fs = std::filesystem;

struct ClassEntry {
  std::string id;
  std::vector<fs::path> samples;  // lexicographic by filename
};

struct Dataset {
  std::vector<ClassEntry> classes;    // lexicographic by id
  std::vector<std::string> rejected;  // classes dropped for having too few samples
  int width = 0;
  int height = 0;

  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.samples.size();
    return n;
  }
};

// Accepts either flat `<class>_sample<n>.pgm` files or one subdirectory of
// .pgm files per class. Classes with fewer than min_samples images are dropped
// and listed in Dataset::rejected.
inline Dataset load_dataset(const fs::path& dir, std::size_t min_samples = 3) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DatasetError("not a directory: " + dir.string());

  std::map<std::string, std::vector<fs::path>> groups;
  static const std::regex flat(R"(^(.+)_sample(\d+)\.pgm$)");
  std::vector<fs::directory_entry> entries(fs::directory_iterator(dir), fs::directory_iterator{});
  for (const auto& e : entries) {
    const std::string name = e.path().filename().string();
    if (e.is_directory()) {
      for (const auto& f : fs::directory_iterator(e.path()))
        if (f.is_regular_file() && f.path().extension() == ".pgm") groups[name].push_back(f.path());
    } else if (e.is_regular_file() && e.path().extension() == ".pgm") {
      std::smatch m;
      if (!std::regex_match(name, m, flat))
        throw DatasetError(e.path().string() + ": file name does not follow <class>_sample<n>.pgm");
      groups[m[1].str()].push_back(e.path());
    }
  }

  Dataset ds;
  for (auto& [id, files] : groups) {
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.size() < min_samples) {
      ds.rejected.push_back(id);
      continue;
    }
    ds.classes.push_back({id, std::move(files)});
  }
  if (ds.classes.empty()) throw DatasetError("dataset is empty: " + dir.string());

  for (const auto& c : ds.classes) {
    for (const auto& p : c.samples) {
      GrayImage img;
      try {
        img = read_pgm_file(p);
      } catch (const Error& e) {
        throw DatasetError(p.string() + ": " + e.what());
      }
      if (ds.width == 0) {
        ds.width = img.width;
        ds.height = img.height;
      } else if (img.width != ds.width || img.height != ds.height) {
        throw DatasetError(p.string() + ": image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                           ", expected " + std::to_string(ds.width) + "x" + std::to_string(ds.height));
      }
    }
  }
  return ds;
}

struct LabeledSample {
  std::size_t class_index = 0;
  fs::path path;
};

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::vector<std::string> flagged;  // classes left without test samples
};

// Per class: the first n_train samples train, the rest test.
inline DatasetSplit split(const Dataset& ds, std::size_t n_train = 5, std::size_t n_classes = 0) {
  const std::size_t limit = n_classes == 0 ? ds.classes.size() : std::min(n_classes, ds.classes.size());
  DatasetSplit out;
  for (std::size_t c = 0; c < limit; ++c) {
    const auto& samples = ds.classes[c].samples;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (i < n_train ? out.train : out.test).push_back({c, samples[i]});
    if (samples.size() <= n_train) out.flagged.push_back(ds.classes[c].id);
  }
  return out;
}

// Full singular-value spectrum of the iris template of one image. Each stage
// failure is rethrown as StageError naming the stage and the path.
inline std::vector<double> pipeline_spectrum(const fs::path& path, const PipelineConfig& cfg) {
  const std::string p = path.string();
  auto stage = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, p, e.what());
    }
  };
  const GrayImage img = stage("read", [&] { return read_pgm_file(path); });
  const PupilGeometry pupil = stage("segmentation", [&] { return segment_pupil(img, cfg.segmentation).pupil; });
  const IrisBounds bounds = stage("iris_boundary", [&] { return iris_bounds(img, pupil, cfg.iris); });
  const IrisTemplate tpl = stage("template", [&] { return extract_iris_basis(img, pupil, bounds, cfg.templ); });
  return stage("svd", [&] { return svd_factorize(tpl.values).s; });
}

inline FeatureVector pipeline_features(const fs::path& path, const PipelineConfig& cfg, std::size_t k) {
  const auto s = pipeline_spectrum(path, cfg);
  try {
    return feature_vector(s, k);
  } catch (const std::exception& e) {
    throw StageError("features", path.string(), e.what());
  }
}

namespace detail {

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs fn(i) for i in [0, n) across workers; results land by index so order is fixed.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = worker_count(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Spectra for every image of a dataset, computed once and reused for every k.
class FeatureCache {
public:
  struct Entry {
    std::optional<std::vector<double>> spectrum;
    std::string error;
  };

  FeatureCache(const Dataset& ds, const PipelineConfig& cfg, unsigned threads = 0) {
    std::vector<fs::path> paths;
    for (const auto& c : ds.classes)
      for (const auto& p : c.samples) paths.push_back(p);
    std::vector<Entry> entries(paths.size());
    detail::parallel_for(paths.size(), threads, [&](std::size_t i) {
      try {
        entries[i].spectrum = pipeline_spectrum(paths[i], cfg);
      } catch (const std::exception& e) {
        entries[i].error = e.what();
      }
    });
    for (std::size_t i = 0; i < paths.size(); ++i) entries_.emplace(paths[i].string(), std::move(entries[i]));
  }

  const Entry& at(const fs::path& p) const {
    const auto it = entries_.find(p.string());
    if (it == entries_.end()) throw InvalidArgument("feature cache has no entry for " + p.string());
    return it->second;
  }

  // Throws the recorded pipeline error when the image failed.
  FeatureVector features(const fs::path& p, std::size_t k) const {
    const Entry& e = at(p);
    if (!e.spectrum) throw Error(e.error);
    try {
      return feature_vector(*e.spectrum, k);
    } catch (const std::exception& ex) {
      throw StageError("features", p.string(), ex.what());
    }
  }

private:
  std::map<std::string, Entry> entries_;
};

struct TrainedClassifier {
  Mlp net;
  TrainReport report;
  double train_accuracy = 0.0;
};

// Builds scaled one-hot patterns for `samples`, fitting the scaling on them.
inline TrainedClassifier train_classifier(const std::vector<LabeledSample>& samples, std::size_t n_classes,
                                          std::size_t k, const FeatureCache& cache, const TrainConfig& tcfg,
                                          std::uint64_t seed) {
  std::vector<std::vector<double>> raw;
  raw.reserve(samples.size());
  for (const auto& s : samples) raw.push_back(cache.features(s.path, k).values);
  const FeatureScaling scaling = FeatureScaling::fit(raw);

  std::vector<Pattern> patterns;
  for (std::size_t i = 0; i < samples.size(); ++i)
    patterns.push_back({scaling.apply(raw[i]), encode_target(samples[i].class_index, n_classes)});

  Mlp net = init(MlpShape::with_default_hidden(k, n_classes), seed);
  net.scaling = scaling;
  auto result = train(std::move(net), patterns, tcfg);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (classify(result.net, raw[i]) == samples[i].class_index) ++correct;
  return {std::move(result.net), std::move(result.report),
          static_cast<double>(correct) / static_cast<double>(samples.size())};
}

struct GridCell {
  std::size_t classes = 0;
  std::size_t dim = 0;
  double rate = 0.0;
  std::size_t epochs = 0;
  std::string stop_reason;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct ExperimentGrid {
  std::vector<GridCell> cells;  // class count major, dimension minor
};

inline std::uint64_t cell_seed(std::uint64_t base, std::size_t classes, std::size_t dim) {
  return derive_seed(base, {static_cast<std::uint64_t>(classes), static_cast<std::uint64_t>(dim)});
}

// One freshly seeded network per (class count, dimension) cell, trained on the
// first n_train samples of the first `classes` classes and scored on the rest.
// Class counts above the dataset size are skipped. Each cell trains with the
// experiment epoch cap in place of train.max_epochs.
inline ExperimentGrid run_experiment(const Dataset& ds, const PipelineConfig& cfg, const FeatureCache* cache = nullptr) {
  std::optional<FeatureCache> own;
  if (cache == nullptr) cache = &own.emplace(ds, cfg, cfg.experiment.threads);

  ExperimentGrid grid;
  for (std::size_t c : cfg.experiment.class_counts) {
    if (c == 0 || c > ds.classes.size()) continue;
    for (std::size_t k : cfg.experiment.dims) {
      GridCell cell;
      cell.classes = c;
      cell.dim = k;
      grid.cells.push_back(cell);
    }
  }

  TrainConfig tcfg = cfg.train;
  tcfg.max_epochs = cfg.experiment.epoch_cap;
  detail::parallel_for(grid.cells.size(), cfg.experiment.threads, [&](std::size_t i) {
    GridCell& cell = grid.cells[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const DatasetSplit sp = split(ds, cfg.experiment.n_train, cell.classes);
      if (sp.test.empty()) throw DatasetError("no test samples");
      const auto trained =
          train_classifier(sp.train, cell.classes, cell.dim, *cache, tcfg, cell_seed(cfg.experiment.seed, cell.classes, cell.dim));
      std::size_t correct = 0;
      for (const auto& s : sp.test)
        if (classify(trained.net, cache->features(s.path, cell.dim).values) == s.class_index) ++correct;
      cell.rate = static_cast<double>(correct) / static_cast<double>(sp.test.size());
      cell.epochs = trained.report.epochs_run;
      cell.stop_reason = to_string(trained.report.stop_reason);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.stop_reason = "failed";
      cell.error = e.what();
    }
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return grid;
}

// CSV with header classes,dim,rate,epochs,stop_reason; failed cells carry rate NA.
inline std::string emit_report(const ExperimentGrid& grid) {
  std::string out = "classes,dim,rate,epochs,stop_reason\n";
  for (const auto& c : grid.cells) {
    char rate[32];
    if (c.failed) std::snprintf(rate, sizeof rate, "NA");
    else std::snprintf(rate, sizeof rate, "%.4f", c.rate);
    out += std::to_string(c.classes) + ',' + std::to_string(c.dim) + ',' + rate + ',' + std::to_string(c.epochs) +
           ',' + c.stop_reason + '\n';
  }
  return out;
}

// Reference classification rates for the same grid on the CASIA iris database
// (5 training / 2 test images per class), for side-by-side reading of reports.
inline std::optional<double> reference_rate(std::size_t classes, std::size_t dim) {
  static const std::map<std::size_t, std::array<double, 4>> table{
      {3, {0.50, 1.00, 1.00, 1.00}},        {4, {0.50, 0.875, 1.00, 1.00}},
      {5, {0.50, 0.80, 1.00, 1.00}},        {6, {0.4166, 0.5833, 0.9167, 0.9167}},
      {7, {0.5714, 0.6429, 0.9286, 0.7857}}, {8, {0.4375, 0.625, 0.875, 0.6875}},
      {9, {0.6111, 0.5555, 0.9444, 0.8333}}, {10, {0.35, 0.55, 0.70, 0.65}},
      {20, {0.275, 0.50, 0.55, 0.525}},     {40, {0.025, 0.025, 0.025, 0.025}},
      {50, {0.02, 0.02, 0.02, 0.01}},
  };
  static const std::map<std::size_t, std::size_t> column{{3, 0}, {10, 1}, {20, 2}, {40, 3}};
  const auto row = table.find(classes);
  const auto col = column.find(dim);
  if (row == table.end() || col == column.end()) return std::nullopt;
  return row->second[col->second];
}

}  // namespace irisvd
