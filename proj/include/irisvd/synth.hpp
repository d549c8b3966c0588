#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/image.hpp"
#include "irisvd/iris_boundary.hpp"
#include "irisvd/rng.hpp"
#include "irisvd/segmentation.hpp"

namespace irisvd {

struct SynthOptions {
  int width = 320;
  int height = 280;
  int noise_amplitude = 6;
  int eyelash_count = 12;
  bool bright_spot = false;
  bool jitter = true;  // per-sample centre, dilation and gain variation
};

struct EyeSpec {
  std::uint64_t class_seed = 0;
  std::uint64_t sample_seed = 0;
  int width = 320;
  int height = 280;
  double center_x = 160.0;
  double center_y = 140.0;
  double pupil_radius = 34.0;
  double iris_radius = 92.0;
  int pupil_intensity = 25;  // <= 40
  int iris_base = 120;       // 80..160
  int sclera_intensity = 215;  // >= 200
  double gain = 1.0;
  int eyelash_count = 12;
  int noise_amplitude = 6;
  bool bright_spot = false;

  // Class-level appearance from class_seed; per-sample centre, dilation and
  // gain jitter from sample_seed.
  static EyeSpec sample(std::uint64_t class_seed, std::uint64_t sample_seed, const SynthOptions& opt = {}) {
    EyeSpec s;
    s.class_seed = class_seed;
    s.sample_seed = sample_seed;
    s.width = opt.width;
    s.height = opt.height;
    s.noise_amplitude = opt.noise_amplitude;
    s.eyelash_count = opt.eyelash_count;
    s.bright_spot = opt.bright_spot;

    SplitMix64 cls(derive_seed(class_seed, {0x636c617373ULL}));
    s.pupil_radius = cls.uniform(31.0, 38.0);
    s.iris_radius = cls.uniform(86.0, 98.0);
    s.pupil_intensity = 15 + static_cast<int>(cls.below(16));
    s.iris_base = 110 + static_cast<int>(cls.below(21));
    s.sclera_intensity = 212 + static_cast<int>(cls.below(13));
    s.center_x = opt.width / 2.0;
    s.center_y = opt.height / 2.0;

    if (opt.jitter) {
      SplitMix64 smp(derive_seed(sample_seed, {0x6a6974746572ULL}));
      s.center_x += smp.uniform(-3.0, 3.0);
      s.center_y += smp.uniform(-3.0, 3.0);
      s.pupil_radius += smp.uniform(-1.5, 1.5);
      s.gain = smp.uniform(0.95, 1.05);
    }
    return s;
  }

  void validate() const {
    if (width < 16 || height < 16) throw InvalidSpec("eye image must be at least 16x16");
    if (pupil_radius < 29.0) throw InvalidSpec("pupil radius must be at least 29 px");
    if (!(iris_radius > pupil_radius)) throw InvalidSpec("iris radius must exceed pupil radius");
    const double border = std::min({center_x, center_y, width - 1 - center_x, height - 1 - center_y});
    if (!(iris_radius < border)) throw InvalidSpec("iris disk must lie inside the image");
    if (pupil_intensity < 0 || pupil_intensity > 40) throw InvalidSpec("pupil intensity must lie in [0, 40]");
    if (iris_base < 80 || iris_base > 160) throw InvalidSpec("iris base intensity must lie in [80, 160]");
    if (sclera_intensity < 200 || sclera_intensity > 255) throw InvalidSpec("sclera intensity must lie in [200, 255]");
    if (gain <= 0.0 || sclera_intensity * gain < 200.0 || pupil_intensity * gain > 40.0)
      throw InvalidSpec("gain pushes pupil or sclera outside their intensity ranges");
    if (eyelash_count < 0 || noise_amplitude < 0) throw InvalidSpec("counts must be nonnegative");
  }
};

struct EyeTruth {
  PupilGeometry pupil;
  IrisBounds iris;
  double iris_radius = 0.0;
};

struct SyntheticEye {
  GrayImage image;
  EyeTruth truth;
};

namespace detail {

// Band texture from angular harmonics and crypt-like blobs in polar
// coordinates. Depends on the class seed only.
struct IrisTexture {
  struct Term {
    double amp, freq, phase;
  };
  struct Crypt {
    double rho, theta, rho_size, theta_size, amp;
  };
  std::vector<Term> angular;
  std::vector<Crypt> crypts;
  double mod_depth = 0.0, mod_wavelength = 40.0, mod_phase = 0.0;
  double ripple_amp = 0.0, ripple_wavelength = 40.0, ripple_phase = 0.0;

  explicit IrisTexture(std::uint64_t class_seed) {
    SplitMix64 g(derive_seed(class_seed, {0x74657874ULL}));
    angular.resize(8);
    for (auto& t : angular) {
      t.amp = g.uniform(1.5, 4.5);
      t.freq = static_cast<double>(1 + g.below(16));
      t.phase = g.uniform(0.0, 2.0 * std::numbers::pi);
    }
    mod_depth = g.uniform(0.1, 0.3);
    mod_wavelength = g.uniform(30.0, 50.0);
    mod_phase = g.uniform(0.0, 2.0 * std::numbers::pi);
    ripple_amp = g.uniform(1.0, 3.0);
    ripple_wavelength = g.uniform(30.0, 50.0);
    ripple_phase = g.uniform(0.0, 2.0 * std::numbers::pi);
    crypts.resize(40);
    for (auto& c : crypts) {
      c.rho = g.uniform(2.0, 60.0);
      c.theta = g.uniform(-std::numbers::pi, std::numbers::pi);
      c.rho_size = g.uniform(2.5, 7.0);
      c.theta_size = g.uniform(0.04, 0.14);
      c.amp = (g.below(2) ? 1.0 : -1.0) * g.uniform(5.0, 10.0);
    }
  }

  double operator()(double rho, double theta) const {
    double a = 0.0;
    for (const auto& t : angular) a += t.amp * std::sin(t.freq * theta + t.phase);
    const double tau = 2.0 * std::numbers::pi;
    double v = a * (1.0 + mod_depth * std::sin(tau * rho / mod_wavelength + mod_phase)) +
               ripple_amp * std::sin(tau * rho / ripple_wavelength + ripple_phase);
    for (const auto& c : crypts) {
      const double dr = (rho - c.rho) / c.rho_size;
      double dt = std::remainder(theta - c.theta, tau) / c.theta_size;
      const double q = dr * dr + dt * dt;
      if (q < 9.0) v += c.amp * std::exp(-0.5 * q);
    }
    return v;
  }
};

inline void draw_line(GrayImage& img, int x0, int y0, int x1, int y1, Intensity v) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (img.contains(x0, y0)) img.at(x0, y0) = v;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace detail

// Renders sclera, textured iris, pupil, eyelash strokes above the iris and
// additive noise. Returns the exact geometry used.
inline SyntheticEye generate_eye(const EyeSpec& spec) {
  spec.validate();
  const detail::IrisTexture texture(spec.class_seed);
  SyntheticEye eye{GrayImage(spec.width, spec.height), {}};
  GrayImage& img = eye.image;

  const double cx = spec.center_x;
  const double cy = spec.center_y;
  const double rp = spec.pupil_radius;
  const double ri = spec.iris_radius;
  std::size_t pupil_area = 0;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      double v;
      if (d <= rp) {
        v = spec.pupil_intensity;
        ++pupil_area;
      } else {
        // Two-pixel blend across the limbus.
        const double t = std::clamp(d - (ri - 1.0), 0.0, 2.0) / 2.0;
        const double iris =
            t < 1.0 ? std::clamp(spec.iris_base + texture(d - rp, std::atan2(-dy, dx)), 80.0, 160.0) : 0.0;
        v = iris * (1.0 - t) + spec.sclera_intensity * t;
      }
      img.at(x, y) = static_cast<Intensity>(std::clamp(round_half_away(v * spec.gain), 0.0, 255.0));
    }
  }

  SplitMix64 rng(derive_seed(spec.sample_seed, {0x6c61736865ULL}));
  for (int i = 0; i < spec.eyelash_count; ++i) {
    double x = rng.uniform(cx - ri, cx + ri);
    double y = rng.uniform(cy - ri - 35.0, cy - ri - 8.0);
    const auto shade = static_cast<Intensity>(10 + rng.below(31));
    for (int seg = 0; seg < 3; ++seg) {
      const double angle = -std::numbers::pi / 2 + rng.uniform(-0.6, 0.6);
      const double len = rng.uniform(5.0, 10.0);
      const double nx = x + len * std::cos(angle);
      const double ny = y + len * std::sin(angle);
      detail::draw_line(img, static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)),
                        static_cast<int>(std::lround(nx)), static_cast<int>(std::lround(ny)), shade);
      x = nx;
      y = ny;
    }
  }

  if (spec.noise_amplitude > 0) {
    SplitMix64 noise(derive_seed(spec.sample_seed, {0x6e6f697365ULL}));
    const auto span = static_cast<std::uint64_t>(2 * spec.noise_amplitude + 1);
    for (auto& p : img.pixels) {
      const int n = static_cast<int>(noise.below(span)) - spec.noise_amplitude;
      p = static_cast<Intensity>(std::clamp(static_cast<int>(p) + n, 0, 255));
    }
  }

  if (spec.bright_spot) {
    const int sx = static_cast<int>(round_half_away(cx + (rp + ri) / 2.0));
    const int sy = static_cast<int>(round_half_away(cy));
    img.at(sx, sy) = 255;
  }

  eye.truth.pupil = PupilGeometry{cx, cy, rp, rp, pupil_area};
  eye.truth.iris_radius = ri;
  eye.truth.iris.left_x = static_cast<int>(round_half_away(cx - ri));
  eye.truth.iris.right_x = static_cast<int>(round_half_away(cx + ri));
  return eye;
}

struct ManifestRow {
  std::string filename;
  int class_index = 0;
  double x_cp = 0.0, y_cp = 0.0, r_pupil = 0.0, r_iris = 0.0;
};

inline std::string sample_filename(int class_index, int sample_index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "class%03d_sample%d.pgm", class_index, sample_index);
  return buf;
}

inline std::uint64_t class_seed_for(std::uint64_t base_seed, int class_index) {
  return derive_seed(base_seed, {static_cast<std::uint64_t>(class_index)});
}

inline std::uint64_t sample_seed_for(std::uint64_t class_seed, int sample_index) {
  return derive_seed(class_seed, {0x73616d70ULL, static_cast<std::uint64_t>(sample_index)});
}

inline constexpr const char* kManifestName = "manifest.csv";

// Writes class<ccc>_sample<s>.pgm (classes from 1, samples from 1) and manifest.csv.
inline std::vector<ManifestRow> generate_dataset(int n_classes, int samples_per_class, std::uint64_t base_seed,
                                                 const std::filesystem::path& out_dir, const SynthOptions& opt = {},
                                                 bool ascii = false) {
  if (n_classes < 1) throw InvalidArgument("generate_dataset: need at least one class");
  if (samples_per_class < 1) throw InvalidArgument("generate_dataset: need at least one sample per class");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<ManifestRow> rows;
  for (int c = 1; c <= n_classes; ++c) {
    const auto cseed = class_seed_for(base_seed, c);
    for (int s = 1; s <= samples_per_class; ++s) {
      const auto eye = generate_eye(EyeSpec::sample(cseed, sample_seed_for(cseed, s), opt));
      const std::string name = sample_filename(c, s);
      write_pgm_file(out_dir / name, eye.image, ascii);
      rows.push_back({name, c, eye.truth.pupil.x_cp, eye.truth.pupil.y_cp, eye.truth.pupil.r_x, eye.truth.iris_radius});
    }
  }

  std::ofstream m(out_dir / kManifestName, std::ios::binary);
  if (!m) throw IoError("cannot write manifest in " + out_dir.string());
  m << "filename,class,x_cp,y_cp,r_pupil,r_iris\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.4f,%.4f\n", r.filename.c_str(), r.class_index, r.x_cp, r.y_cp,
                  r.r_pupil, r.r_iris);
    m << buf;
  }
  if (!m) throw IoError("manifest write failed in " + out_dir.string());
  return rows;
}

inline std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ManifestRow r;
    char name[256];
    if (std::sscanf(line.c_str(), "%255[^,],%d,%lf,%lf,%lf,%lf", name, &r.class_index, &r.x_cp, &r.y_cp, &r.r_pupil,
                    &r.r_iris) != 6)
      throw IoError("malformed manifest row: " + line);
    r.filename = name;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace irisvd
