// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "irisvd/irisvd.hpp"
#include "oracles/finite_diff.hpp"
#include "oracles/jacobi_eigen.hpp"

using namespace irisvd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome within_budget(Outcome o, double secs, double limit) {
  o.detail += ", " + fmt("%.2f", secs) + " s of " + fmt("%.0f", limit) + " s budget";
  if (secs > limit) o.pass = false;
  return o;
}

// 1. SVD singular values vs the Gram-matrix eigensolver, plus factor residuals.
Outcome svd_oracle() {
  SplitMix64 rng(derive_seed(1, {0x737664}));
  double worst_sv = 0.0, worst_rec = 0.0, worst_orth = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(60);
    const std::size_t n = 1 + rng.below(40);
    Matrix a(m, n);
    for (double& x : a.data()) x = rng.uniform(-1.0, 1.0);
    const auto f = svd_factorize(a);
    const auto o = oracle::singular_values_via_gram(std::vector<double>(a.data().begin(), a.data().end()), m, n);
    const double scale = std::max(o[0], 1e-300);
    for (std::size_t i = 0; i < f.s.size(); ++i) worst_sv = std::max(worst_sv, std::abs(f.s[i] - o[i]) / scale);
    worst_rec = std::max(worst_rec, frobenius_distance(reconstruct(f), a) / std::max(1.0, frobenius_norm(a)));
    for (const Matrix* q : {&f.u, &f.v}) {
      const Matrix g = q->transposed() * *q;
      worst_orth = std::max(worst_orth, frobenius_distance(g, Matrix::identity(g.rows())));
    }
  }
  const bool ok = worst_sv <= 1e-8 && worst_rec <= 1e-10 && worst_orth <= 1e-10;
  return {ok, "max sv rel err " + fmt("%.2e", worst_sv) + ", reconstruction " + fmt("%.2e", worst_rec) +
                  ", orthogonality " + fmt("%.2e", worst_orth)};
}

// 2. Backprop vs central differences.
Outcome gradient_check() {
  SplitMix64 rng(derive_seed(2, {0x67726164}));
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const MlpShape s{1 + rng.below(10), 1 + rng.below(20), 1 + rng.below(8)};
    Mlp net = init(s, rng.next());
    for (double& b : net.b1) b = rng.uniform(-0.5, 0.5);
    for (double& b : net.b2) b = rng.uniform(-0.5, 0.5);
    std::vector<Pattern> batch(1 + rng.below(10));
    for (auto& p : batch) {
      for (std::size_t i = 0; i < s.n_in; ++i) p.x.push_back(rng.uniform(0.0, 1.0));
      p.target = encode_target(rng.below(s.n_out), s.n_out);
    }
    const auto analytic = oracle::flatten(backprop_gradient(net, batch).grad);
    worst = std::max(worst, oracle::max_relative_error(analytic, oracle::central_difference(net, batch, 1e-6)));
  }
  return {worst <= 1e-5, "max relative component error " + fmt("%.2e", worst)};
}

std::vector<Pattern> toy_set() {
  const double centres[3][3] = {{0.1, 0.1, 0.9}, {0.9, 0.1, 0.1}, {0.1, 0.9, 0.5}};
  SplitMix64 rng(derive_seed(4, {0x746f79}));
  std::vector<Pattern> set;
  for (std::size_t c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i) {
      Pattern p;
      for (double v : centres[c]) p.x.push_back(v + rng.uniform(-0.05, 0.05));
      p.target = encode_target(c, 3);
      set.push_back(std::move(p));
    }
  return set;
}

struct ToyRun {
  TrainResult result;
  std::vector<EpochEvent> events;
  std::vector<Mlp> kept;
  Mlp initial;
};

ToyRun toy_run(double lr0 = 0.2, std::size_t max_epochs = 5000) {
  ToyRun run;
  TrainConfig cfg;
  cfg.lr0 = lr0;
  cfg.max_epochs = max_epochs;
  run.initial = init(MlpShape{3, 6, 3}, 1);
  const auto set = toy_set();
  run.result = train(run.initial, set, cfg, [&](const EpochEvent& e, const Mlp& net) {
    run.events.push_back(e);
    run.kept.push_back(net);
  });
  return run;
}

// 3. Rate contract audited over a normal and an aggressive toy run.
Outcome rate_contract(const std::vector<const ToyRun*>& runs) {
  std::size_t grown = 0, rejected = 0, violations = 0, epochs = 0;
  for (const ToyRun* r : runs) {
    const ToyRun& run = *r;
    const auto& lr = run.result.report.lr_trace;
    epochs += run.events.size();
    for (std::size_t t = 0; t + 1 < run.events.size(); ++t) {
      const auto& e = run.events[t];
      if (e.accepted && e.candidate_mse < e.previous_mse) {
        ++grown;
        if (lr[t + 1] != lr[t] * 1.05) ++violations;
      }
      if (!e.accepted) {
        ++rejected;
        const Mlp& before = t ? run.kept[t - 1] : run.initial;
        if (!(run.kept[t] == before)) ++violations;
        if (lr[t + 1] != lr[t] * 0.7) ++violations;
      }
    }
  }
  return {violations == 0 && grown > 0 && rejected > 0, std::to_string(epochs) + " epochs audited, " +
                                            std::to_string(grown) + " growth steps, " + std::to_string(rejected) +
                                            " rejections, " + std::to_string(violations) + " violations"};
}

// 4. Toy convergence.
Outcome toy_convergence(const ToyRun& run) {
  const auto set = toy_set();
  std::size_t correct = 0;
  for (const auto& p : set) correct += decode(forward(run.result.net, p.x)) == decode(p.target);
  const auto& rep = run.result.report;
  return {correct == set.size() && rep.epochs_run <= 5000,
          std::to_string(correct) + "/15 correct after " + std::to_string(rep.epochs_run) + " epochs (" +
              to_string(rep.stop_reason) + ", mse " + fmt("%.3e", rep.final_mse) + ")"};
}

// 5. Segmentation against synthetic ground truth.
Outcome segmentation_truth() {
  double worst_c = 0.0, worst_r = 0.0;
  int worst_b = 0;
  int lash_survivors = 0;
  int failures = 0;
  for (int i = 1; i <= 50; ++i) {
    const auto cs = class_seed_for(5005, i);
    const SyntheticEye eye = generate_eye(EyeSpec::sample(cs, sample_seed_for(cs, 1)));
    const auto& t = eye.truth;
    try {
      const SegmentationResult seg = segment_pupil(eye.image);
      const IrisBounds b = iris_bounds(eye.image, seg.pupil);
      worst_c = std::max(worst_c, std::hypot(seg.pupil.x_cp - t.pupil.x_cp, seg.pupil.y_cp - t.pupil.y_cp));
      worst_r = std::max({worst_r, std::abs(seg.pupil.r_x - t.pupil.r_x) / t.pupil.r_x,
                          std::abs(seg.pupil.r_y - t.pupil.r_y) / t.pupil.r_y});
      worst_b = std::max({worst_b, std::abs(b.left_x - t.iris.left_x), std::abs(b.right_x - t.iris.right_x)});
      for (const auto& r : label_components_8(seg.filtered))
        for (const auto& p : r.pixels)
          if (std::hypot(p.x - t.pupil.x_cp, p.y - t.pupil.y_cp) > t.pupil.r_x + 1.5) {
            ++lash_survivors;
            break;
          }
    } catch (const Error&) {
      ++failures;
    }
  }
  const bool ok = failures == 0 && worst_c <= 2.0 && worst_r <= 0.10 && worst_b <= 5 && lash_survivors == 0;
  return {ok, "centroid err " + fmt("%.3f", worst_c) + " px, radius err " + fmt("%.1f", 100 * worst_r) +
                  "%, bounds err " + std::to_string(worst_b) + " px, eyelash survivors " +
                  std::to_string(lash_survivors) + ", failures " + std::to_string(failures)};
}

struct GridRun {
  ExperimentGrid grid;
  std::string error;
};

GridRun synthetic_grid(const fs::path& data) {
  GridRun run;
  try {
    const Dataset ds = load_dataset(data);
    PipelineConfig cfg;
    cfg.experiment.class_counts = {3, 4, 5, 6, 7, 8, 9};
    cfg.experiment.dims = {3, 20};
    run.grid = run_experiment(ds, cfg);
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

const GridCell* cell(const GridRun& run, std::size_t classes, std::size_t dim) {
  for (const auto& c : run.grid.cells)
    if (c.classes == classes && c.dim == dim) return &c;
  return nullptr;
}

// 6. Five classes, k = 20.
Outcome end_to_end(const GridRun& run) {
  const GridCell* c = cell(run, 5, 20);
  if (!c) return {false, "cell missing: " + run.error};
  if (c->failed) return {false, "cell failed: " + c->error};
  return within_budget({c->rate >= 0.8, "rate " + fmt("%.4f", c->rate) + " after " + std::to_string(c->epochs) +
                                           " epochs (" + c->stop_reason + ")"},
                       c->seconds, 120);
}

// 7. rate(k = 20) >= rate(k = 3) for 3..9 classes.
Outcome dimension_trend(const GridRun& run) {
  bool ok = run.error.empty();
  std::string detail;
  for (std::size_t c = 3; c <= 9; ++c) {
    const GridCell* lo = cell(run, c, 3);
    const GridCell* hi = cell(run, c, 20);
    if (!lo || !hi || lo->failed || hi->failed) {
      ok = false;
      detail += std::to_string(c) + ":missing ";
      continue;
    }
    ok = ok && hi->rate >= lo->rate;
    detail += std::to_string(c) + ":" + fmt("%.2f", lo->rate) + "<=" + fmt("%.2f", hi->rate) + " ";
  }
  if (!detail.empty()) detail.pop_back();
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Two CLI experiment runs give byte-identical CSV.
Outcome determinism(const fs::path& data, const fs::path& work) {
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = work / ("grid" + std::to_string(i) + ".csv");
    const std::string cmd = std::string("\"") + IRISVD_CLI + "\" experiment --data \"" + data.string() +
                            "\" --classes 3,5,9 --dims 3,20 --epochs 2000 --seed 7 --out \"" + out.string() +
                            "\" 2>/dev/null";
    const int raw = std::system(cmd.c_str());
    if (!WIFEXITED(raw) || WEXITSTATUS(raw) != 0) return {false, "run " + std::to_string(i + 1) + " failed"};
    csv[i] = slurp(out);
  }
  const bool ok = !csv[0].empty() && csv[0] == csv[1];
  return {ok, std::to_string(csv[0].size()) + " bytes, " + (ok ? "identical" : "different")};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "irisvd_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path data = work / "data";
  generate_dataset(9, 7, 2024, data);

  int failed = 0;
  auto report = [&](int id, const char* name, double limit, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = fn();
    const double secs = seconds_since(t0);
    if (limit > 0 && secs > limit) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", limit) + " s budget";
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "svd oracle", 10, svd_oracle);
  report(2, "gradient check", 10, gradient_check);
  ToyRun toy;
  double toy_secs = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    toy = toy_run();
    toy_secs = seconds_since(t0);
  }
  const ToyRun aggressive = toy_run(50.0, 300);
  report(3, "adaptive rate contract", 0, [&] { return rate_contract({&toy, &aggressive}); });
  report(4, "toy convergence", 0, [&] { return within_budget(toy_convergence(toy), toy_secs, 30); });
  report(5, "segmentation ground truth", 30, segmentation_truth);
  GridRun grid;
  double grid_secs = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    grid = synthetic_grid(data);
    grid_secs = seconds_since(t0);
  }
  report(6, "end-to-end recognition", 0, [&] { return end_to_end(grid); });
  report(7, "dimension trend", 0, [&] { return within_budget(dimension_trend(grid), grid_secs, 600); });
  report(8, "experiment determinism", 0, [&] { return determinism(data, work); });

  fs::remove_all(work);
  std::printf("%d of 8 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
