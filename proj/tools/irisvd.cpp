// irisvd: command-line front end for the iris recognition pipeline.
//
//   irisvd synth       generate a labelled synthetic eye dataset
//   irisvd segment     locate pupil and iris bounds, optionally dump stage images
//   irisvd train       train a classifier on a dataset and write a model file
//   irisvd classify    classify images with a trained model
//   irisvd experiment  run the class-count x dimension grid and write CSV
//
// Exit status: 0 on full success, 1 when some inputs failed, 2 on usage or
// configuration errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irisvd/irisvd.hpp"

namespace fs = std::filesystem;
using namespace irisvd;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Flags shared across subcommands. Flag values override the config file,
// which overrides built-in defaults.
struct CommonFlags {
  std::string config_path;
  std::vector<std::function<void(PipelineConfig&)>> overrides;

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& storage, const std::string& help,
                   std::function<void(PipelineConfig&, const T&)> apply) {
    CLI::Option* opt = app->add_option(name, storage, help);
    overrides.push_back([opt, &storage, apply](PipelineConfig& c) {
      if (opt->count() > 0) apply(c, storage);
    });
    return opt;
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      try {
        apply_config_file(cfg, config_path);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
    for (const auto& o : overrides) o(cfg);
    return cfg;
  }
};

struct SegmentFlags {
  int threshold = 70;
  std::size_t min_area = 2500;
};

void add_segmentation_flags(CLI::App* app, CommonFlags& common, SegmentFlags& f) {
  common.add<int>(app, "--threshold", f.threshold, "Dark-pixel threshold (pixels <= value are pupil candidates)",
                  [](PipelineConfig& c, const int& v) { c.segmentation.threshold = v; })
      ->check(CLI::Range(0, 255));
  common.add<std::size_t>(app, "--min-area", f.min_area, "Smallest region area kept as a pupil candidate",
                          [](PipelineConfig& c, const std::size_t& v) { c.segmentation.min_area = v; });
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------- synth
struct SynthArgs {
  CommonFlags common;
  int classes = 0;
  int samples = 7;
  std::uint64_t seed = 1;
  std::string out;
  bool ascii = false;
  int noise = 6;
  int eyelashes = 12;
  bool bright_spot = false;
};

int run_synth(const SynthArgs& a) {
  PipelineConfig cfg = a.common.resolve();
  const auto rows = generate_dataset(a.classes, cfg.samples_per_class, a.seed, a.out, cfg.synth, a.ascii);
  std::cout << "images," << rows.size() << "\n";
  std::cout << "manifest," << (fs::path(a.out) / kManifestName).string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- segment
struct SegmentArgs {
  CommonFlags common;
  SegmentFlags seg;
  std::vector<std::string> images;
  bool dump = false;
  bool ascii = false;
  std::string out = ".";
};

int run_segment(const SegmentArgs& a) {
  const PipelineConfig cfg = a.common.resolve();
  if (a.dump) fs::create_directories(a.out);
  std::cout << "path,x_cp,y_cp,r_x,r_y,area,left_x,right_x,left_fallback,right_fallback\n";
  int status = kOk;
  for (const auto& path : a.images) {
    try {
      const GrayImage img = read_pgm_file(path);
      const std::string stem = fs::path(path).stem().string();
      BinaryImage thresholded = threshold_dark(img, cfg.segmentation.threshold);
      const auto regions = label_components_8(thresholded);
      const BinaryImage filtered = filter_small_regions(regions, thresholded, cfg.segmentation.min_area);
      if (a.dump) {
        write_pgm_file(fs::path(a.out) / (stem + "_thresholded.pgm"), to_gray(thresholded), a.ascii);
        write_pgm_file(fs::path(a.out) / (stem + "_filtered.pgm"), to_gray(filtered), a.ascii);
      }
      const PupilGeometry pupil = pupil_geometry(filtered, cfg.segmentation.min_area);
      const IrisBounds b = iris_bounds(img, pupil, cfg.iris);
      if (a.dump)
        write_pgm_file(fs::path(a.out) / (stem + "_scanline.pgm"), annotate_scanline(img, pupil, b), a.ascii);
      std::cout << path << ',' << fmt(pupil.x_cp) << ',' << fmt(pupil.y_cp) << ',' << fmt(pupil.r_x) << ','
                << fmt(pupil.r_y) << ',' << pupil.area << ',' << b.left_x << ',' << b.right_x << ','
                << b.left_fallback << ',' << b.right_fallback << '\n';
    } catch (const Error& e) {
      std::cerr << path << ": " << e.what() << '\n';
      status = kPartial;
    }
  }
  return status;
}

// ---------------------------------------------------------------- train
struct TrainArgs {
  CommonFlags common;
  SegmentFlags seg;
  std::string data;
  std::string out;
  std::size_t dims = 20;
  std::size_t classes = 0;
  std::size_t epochs = 50000;
  double lr = 0.2;
  double mse_goal = 5e-7;
  std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a) {
  const PipelineConfig cfg = a.common.resolve();
  if (!fs::is_directory(a.data)) throw UsageError("data directory not found: " + a.data);
  const Dataset ds = load_dataset(a.data);
  const std::size_t n_classes = a.classes == 0 ? ds.classes.size() : a.classes;
  if (n_classes > ds.classes.size())
    throw UsageError("requested " + std::to_string(n_classes) + " classes, dataset has " +
                     std::to_string(ds.classes.size()));
  const DatasetSplit sp = split(ds, cfg.experiment.n_train, n_classes);
  for (const auto& f : sp.flagged) std::cerr << "warning: class " << f << " has no test samples\n";

  const FeatureCache cache(ds, cfg, cfg.experiment.threads);
  for (const auto& s : sp.train)
    if (const auto& e = cache.at(s.path); !e.spectrum) throw Error(e.error);
  auto trained = train_classifier(sp.train, n_classes, cfg.k, cache, cfg.train, cfg.train.seed);
  for (std::size_t c = 0; c < n_classes; ++c) trained.net.class_names.push_back(ds.classes[c].id);
  write_text(a.out, save_model(trained.net));

  std::cout << "epochs,final_mse,stop_reason,train_accuracy\n";
  std::cout << trained.report.epochs_run << ',' << fmt(trained.report.final_mse, "%.6e") << ','
            << to_string(trained.report.stop_reason) << ',' << fmt(trained.train_accuracy) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- classify
struct ClassifyArgs {
  CommonFlags common;
  SegmentFlags seg;
  std::string model;
  std::vector<std::string> images;
  std::size_t dims = 0;
};

int run_classify(const ClassifyArgs& a, const CLI::Option* dims_opt) {
  const PipelineConfig cfg = a.common.resolve();
  std::ifstream in(a.model, std::ios::binary);
  if (!in) throw UsageError("cannot open model " + a.model);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Mlp net;
  try {
    net = load_model(text);
  } catch (const Error& e) {
    throw UsageError(a.model + ": " + e.what());
  }
  const std::size_t k = dims_opt->count() ? a.dims : net.shape.n_in;
  if (k != net.shape.n_in)
    throw UsageError("dimension mismatch: features have " + std::to_string(k) + " dimensions, model expects " +
                     std::to_string(net.shape.n_in));

  std::cout << "path,class,confidence\n";
  int status = kOk;
  for (const auto& path : a.images) {
    try {
      const FeatureVector f = pipeline_features(path, cfg, k);
      double confidence = 0.0;
      const std::size_t c = classify(net, f.values, &confidence);
      const std::string label = net.class_names.empty() ? std::to_string(c) : net.class_names[c];
      std::cout << path << ',' << label << ',' << fmt(confidence, "%.6f") << '\n';
    } catch (const Error& e) {
      std::cerr << e.what() << '\n';
      status = kPartial;
    }
  }
  return status;
}

// ---------------------------------------------------------------- experiment
struct ExperimentArgs {
  CommonFlags common;
  SegmentFlags seg;
  std::string data;
  std::string out;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> classes;
  std::size_t epochs = 8000;
  double lr = 0.2;
  double mse_goal = 5e-7;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  const PipelineConfig cfg = a.common.resolve();
  if (!fs::is_directory(a.data)) throw UsageError("data directory not found: " + a.data);
  const Dataset ds = load_dataset(a.data);
  const ExperimentGrid grid = run_experiment(ds, cfg);
  const std::string csv = emit_report(grid);
  if (a.out.empty()) std::cout << csv;
  else write_text(a.out, csv);

  std::size_t failed = 0;
  for (const auto& c : grid.cells) {
    std::cerr << "cell classes=" << c.classes << " dim=" << c.dim << " " << fmt(c.seconds, "%.2f") << "s";
    if (c.failed) {
      ++failed;
      std::cerr << " failed: " << c.error;
    }
    std::cerr << '\n';
  }
  if (grid.cells.empty()) {
    std::cerr << "no grid cells: every requested class count exceeds the dataset\n";
    return kPartial;
  }
  return failed == grid.cells.size() ? kPartial : kOk;
}

template <typename Args>
void add_train_flags(CLI::App* app, Args& a) {
  a.common.template add<double>(app, "--lr", a.lr, "Initial learning rate",
                                [](PipelineConfig& c, const double& v) { c.train.lr0 = v; })
      ->check(CLI::PositiveNumber);
  a.common.template add<double>(app, "--mse-goal", a.mse_goal, "Training stops once the MSE reaches this value",
                                [](PipelineConfig& c, const double& v) { c.train.mse_goal = v; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iris recognition with SVD features and an error back-propagation classifier"};
  app.require_subcommand(1);
  int status = kOk;

  // synth
  SynthArgs synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Generate a labelled synthetic eye dataset");
  cmd_synth->add_option("--config", synth.common.config_path, "key = value config file");
  cmd_synth->add_option("--classes", synth.classes, "Number of classes")->required()->check(CLI::PositiveNumber);
  synth.common.add<int>(cmd_synth, "--samples", synth.samples, "Samples per class",
                        [](PipelineConfig& c, const int& v) { c.samples_per_class = v; })
      ->check(CLI::PositiveNumber);
  cmd_synth->add_option("--seed", synth.seed, "Base seed");
  cmd_synth->add_option("--out", synth.out, "Output directory")->required();
  cmd_synth->add_flag("--ascii-pgm", synth.ascii, "Write ASCII (P2) instead of binary (P5) PGM");
  synth.common.add<int>(cmd_synth, "--noise", synth.noise, "Additive noise amplitude",
                        [](PipelineConfig& c, const int& v) { c.synth.noise_amplitude = v; })
      ->check(CLI::NonNegativeNumber);
  synth.common.add<int>(cmd_synth, "--eyelashes", synth.eyelashes, "Eyelash strokes per image",
                        [](PipelineConfig& c, const int& v) { c.synth.eyelash_count = v; })
      ->check(CLI::NonNegativeNumber);
  cmd_synth->add_flag("--bright-spot", synth.bright_spot, "Add one specular pixel inside the iris");
  cmd_synth->callback([&] {
    if (synth.bright_spot)
      synth.common.overrides.push_back([](PipelineConfig& c) { c.synth.bright_spot = true; });
    status = run_synth(synth);
  });

  // segment
  SegmentArgs seg;
  CLI::App* cmd_segment = app.add_subcommand("segment", "Locate pupil and iris bounds in eye images");
  cmd_segment->add_option("--config", seg.common.config_path, "key = value config file");
  cmd_segment->add_option("images", seg.images, "PGM images")->required();
  add_segmentation_flags(cmd_segment, seg.common, seg.seg);
  cmd_segment->add_flag("--dump-stages", seg.dump, "Write thresholded, filtered and scanline PGMs per input");
  cmd_segment->add_option("--out", seg.out, "Directory for stage dumps");
  cmd_segment->add_flag("--ascii-pgm", seg.ascii, "Write stage dumps as ASCII PGM");
  cmd_segment->callback([&] { status = run_segment(seg); });

  // train
  TrainArgs tr;
  CLI::App* cmd_train = app.add_subcommand("train", "Train a classifier and write a model file");
  cmd_train->add_option("--config", tr.common.config_path, "key = value config file");
  cmd_train->add_option("--data", tr.data, "Dataset directory")->required();
  cmd_train->add_option("--out", tr.out, "Model file to write")->required();
  tr.common.add<std::size_t>(cmd_train, "--dims", tr.dims, "Feature dimension k",
                             [](PipelineConfig& c, const std::size_t& v) { c.k = v; })
      ->check(CLI::PositiveNumber);
  cmd_train->add_option("--classes", tr.classes, "Use only the first N classes (default: all)");
  tr.common.add<std::size_t>(cmd_train, "--epochs", tr.epochs, "Maximum training epochs",
                             [](PipelineConfig& c, const std::size_t& v) { c.train.max_epochs = v; })
      ->check(CLI::PositiveNumber);
  tr.common.add<std::uint64_t>(cmd_train, "--seed", tr.seed, "Weight initialisation seed",
                               [](PipelineConfig& c, const std::uint64_t& v) { c.train.seed = v; });
  add_train_flags(cmd_train, tr);
  add_segmentation_flags(cmd_train, tr.common, tr.seg);
  cmd_train->callback([&] { status = run_train(tr); });

  // classify
  ClassifyArgs cl;
  CLI::App* cmd_classify = app.add_subcommand("classify", "Classify eye images with a trained model");
  cmd_classify->add_option("--config", cl.common.config_path, "key = value config file");
  cmd_classify->add_option("--model", cl.model, "Model file")->required();
  cmd_classify->add_option("images", cl.images, "PGM images")->required();
  CLI::Option* cl_dims = cmd_classify->add_option("--dims", cl.dims, "Feature dimension (default: the model's)");
  add_segmentation_flags(cmd_classify, cl.common, cl.seg);
  cmd_classify->callback([&] { status = run_classify(cl, cl_dims); });

  // experiment
  ExperimentArgs ex;
  CLI::App* cmd_experiment = app.add_subcommand("experiment", "Run the classes x dimensions grid");
  cmd_experiment->add_option("--config", ex.common.config_path, "key = value config file");
  cmd_experiment->add_option("--data", ex.data, "Dataset directory")->required();
  cmd_experiment->add_option("--out", ex.out, "CSV file to write (default: stdout)");
  ex.common.add<std::vector<std::size_t>>(cmd_experiment, "--dims", ex.dims, "Comma-separated feature dimensions",
                                          [](PipelineConfig& c, const std::vector<std::size_t>& v) {
                                            c.experiment.dims = v;
                                          })
      ->delimiter(',');
  ex.common.add<std::vector<std::size_t>>(cmd_experiment, "--classes", ex.classes, "Comma-separated class counts",
                                          [](PipelineConfig& c, const std::vector<std::size_t>& v) {
                                            c.experiment.class_counts = v;
                                          })
      ->delimiter(',');
  ex.common.add<std::size_t>(cmd_experiment, "--epochs", ex.epochs, "Epoch cap per grid cell",
                             [](PipelineConfig& c, const std::size_t& v) { c.experiment.epoch_cap = v; })
      ->check(CLI::PositiveNumber);
  ex.common.add<std::uint64_t>(cmd_experiment, "--seed", ex.seed, "Base seed for per-cell initialisation",
                               [](PipelineConfig& c, const std::uint64_t& v) { c.experiment.seed = v; });
  ex.common.add<unsigned>(cmd_experiment, "--threads", ex.threads, "Worker threads (0 = all cores)",
                          [](PipelineConfig& c, const unsigned& v) { c.experiment.threads = v; });
  add_train_flags(cmd_experiment, ex);
  add_segmentation_flags(cmd_experiment, ex.common, ex.seg);
  cmd_experiment->callback([&] { status = run_experiment_cmd(ex); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return status;
}
