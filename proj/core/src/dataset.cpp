#include "hsr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hsr/error.hpp"
#include "hsr/random.hpp"

#ifdef HSR_HAVE_PNG
#include <png.h>
#endif

namespace hsr {

namespace fs = std::filesystem;

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in, const fs::path& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw IoError("truncated image header in " + path.string());
  return tok;
}

long pnm_int(std::istream& in, const fs::path& path) {
  const std::string tok = pnm_token(in, path);
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed image header field '" + tok + "' in " + path.string());
  }
}

Image read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in, path);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw IoError("unsupported image format '" + magic + "' in " + path.string());
  }
  const long cols = pnm_int(in, path);
  const long rows = pnm_int(in, path);
  const long maxval = pnm_int(in, path);
  if (maxval > 65535) throw IoError("maxval out of range in " + path.string());
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";
  const int channels = color ? 3 : 1;
  const int bytes = maxval > 255 ? 2 : 1;

  auto next_sample = [&]() -> double {
    long v = 0;
    if (binary) {
      unsigned char buf[2] = {0, 0};
      if (!in.read(reinterpret_cast<char*>(buf), bytes)) {
        throw IoError("truncated pixel data in " + path.string());
      }
      v = bytes == 2 ? (static_cast<long>(buf[0]) << 8) | buf[1] : buf[0];
    } else {
      if (!(in >> v)) throw IoError("truncated pixel data in " + path.string());
    }
    if (v < 0 || v > maxval) throw IoError("pixel value out of range in " + path.string());
    return static_cast<double>(v) / static_cast<double>(maxval);
  };

  Image img(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (channels == 1) {
        img(r, c) = next_sample();
      } else {
        const double red = next_sample();
        const double green = next_sample();
        const double blue = next_sample();
        img(r, c) = kLumaR * red + kLumaG * green + kLumaB * blue;
      }
    }
  }
  return img;
}

#ifdef HSR_HAVE_PNG
Image read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Image img(image.height, image.width);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c, k += 3) {
      img(r, c) = (kLumaR * buffer[k] + kLumaG * buffer[k + 1] + kLumaB * buffer[k + 2]) / 255.0;
    }
  }
  return img;
}
#endif

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(seed, stream));
}

}  // namespace

Image read_image(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".png") {
#ifdef HSR_HAVE_PNG
    return read_png(path);
#else
    throw IoError("PNG support not built in; cannot read " + path.string());
#endif
  }
  return read_pnm(path);
}

void write_pgm(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n65535\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
      const char bytes[2] = {static_cast<char>((q >> 8) & 0xff), static_cast<char>(q & 0xff)};
      out.write(bytes, 2);
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledImageSet load_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("dataset root " + root.string() + " is not a directory");
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  if (class_dirs.empty()) throw IoError("no classes found under " + root.string());
  std::sort(class_dirs.begin(), class_dirs.end());

  LabeledImageSet set;
  set.name = root.filename().string();
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    if (files.empty()) throw IoError("empty class directory " + class_dirs[label].string());
    std::sort(files.begin(), files.end());
    set.class_names.push_back(class_dirs[label].filename().string());
    for (const fs::path& f : files) {
      set.images.push_back(read_image(f));
      set.labels.push_back(static_cast<int>(label));
      set.files.push_back(f.string());
    }
  }

  const Eigen::Index rows = set.images.front().rows();
  const Eigen::Index cols = set.images.front().cols();
  std::ostringstream offenders;
  bool mixed = false;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    if (set.images[i].rows() != rows || set.images[i].cols() != cols) {
      offenders << "\n  " << set.files[i] << " (" << set.images[i].rows() << "x"
                << set.images[i].cols() << ")";
      mixed = true;
    }
  }
  if (mixed) {
    throw DimensionError("images differ from the " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " size of " + set.files.front() + ":" +
                         offenders.str());
  }
  return set;
}

void write_dataset(const LabeledImageSet& set, const fs::path& root,
                   const std::vector<std::pair<std::string, std::string>>& manifest) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  std::vector<int> counters(static_cast<std::size_t>(set.num_classes()), 0);
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const auto label = static_cast<std::size_t>(set.labels[i]);
    const fs::path dir = root / set.class_names.at(label);
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::ostringstream name;
    name.width(4);
    name.fill('0');
    name << counters[label]++;
    write_pgm(dir / (name.str() + ".pgm"), set.images[i]);
  }
  const fs::path manifest_path = root / "manifest.txt";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot create " + manifest_path.string());
  for (const auto& [key, value] : manifest) out << key << " = " << value << '\n';
  if (!out) throw IoError("failed writing " + manifest_path.string());
}

NormalizedImage normalize_image(const Image& img) {
  if (img.size() == 0) throw DimensionError("cannot normalize an empty image");
  NormalizedImage out;
  const double mean = img.mean();
  out.image = img.array() - mean;
  const double var = out.image.squaredNorm() / static_cast<double>(img.size());
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    out.image.setZero();
    out.degenerate = true;
    return out;
  }
  out.image /= sd;
  return out;
}

double normalized_correlation(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("image sizes differ");
  const Vector x = flatten(a).array() - a.mean();
  const Vector y = flatten(b).array() - b.mean();
  const double denom = x.norm() * y.norm();
  return denom == 0.0 ? 0.0 : x.dot(y) / denom;
}

namespace {

Image draw_prototype(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = std::min(rows, cols);
  Image proto = Image::Constant(rows, cols, 0.5);
  const int blobs = std::uniform_int_distribution<int>(3, 6)(rng);
  for (int k = 0; k < blobs; ++k) {
    const double cy = (0.1 + 0.8 * unit(rng)) * rows;
    const double cx = (0.1 + 0.8 * unit(rng)) * cols;
    const double width = (0.08 + 0.14 * unit(rng)) * scale;
    const double amp = (0.25 + 0.35 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        proto(r, c) += amp * std::exp(-d2 / (2.0 * width * width));
      }
  }
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  const double py = (0.3 + 0.4 * unit(rng)) * rows;
  const double px = (0.3 + 0.4 * unit(rng)) * cols;
  const double edge_width = 0.05 * scale;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double dist = std::cos(theta) * (c - px) + std::sin(theta) * (r - py);
      proto(r, c) += 0.2 * std::tanh(dist / edge_width);
    }
  return proto;
}

}  // namespace

std::vector<Image> synth_prototypes(const SynthSpec& spec) {
  if (spec.classes < 1 || spec.per_class < 1 || spec.rows < 1 || spec.cols < 1) {
    throw ParameterError("synthetic dataset counts and sizes must be >= 1");
  }
  if (!(spec.variation >= 0.0)) throw ParameterError("noise scale must be >= 0");
  std::mt19937_64 rng = substream(spec.seed, 0);
  std::vector<Image> protos;
  protos.reserve(static_cast<std::size_t>(spec.classes));
  for (int k = 0; k < spec.classes; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      Image candidate = draw_prototype(spec.rows, spec.cols, rng);
      placed = std::all_of(protos.begin(), protos.end(), [&](const Image& other) {
        return normalized_correlation(candidate, other) <= 0.8;
      });
      if (placed) protos.push_back(std::move(candidate));
    }
    if (!placed) {
      throw ConfigError("could not separate class prototype " + std::to_string(k) +
                        " from the others after 100 attempts");
    }
  }
  return protos;
}

LabeledImageSet synth_faces(const SynthSpec& spec) {
  const std::vector<Image> protos = synth_prototypes(spec);
  std::mt19937_64 rng = substream(spec.seed, 1);
  std::uniform_real_distribution<double> ramp(-0.15, 0.15);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledImageSet set;
  set.name = "synth";
  for (int k = 0; k < spec.classes; ++k) {
    std::ostringstream name;
    name << "class";
    name.width(3);
    name.fill('0');
    name << k;
    set.class_names.push_back(name.str());
  }
  for (int k = 0; k < spec.classes; ++k) {
    for (int s = 0; s < spec.per_class; ++s) {
      const double gy = ramp(rng);
      const double gx = ramp(rng);
      Image img = protos[static_cast<std::size_t>(k)];
      for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
          const double y = (r + 0.5) / spec.rows - 0.5;
          const double x = (c + 0.5) / spec.cols - 0.5;
          img(r, c) += gy * y + gx * x;
          if (spec.variation > 0.0) img(r, c) += spec.variation * noise(rng);
        }
      set.images.push_back(std::move(img));
      set.labels.push_back(k);
    }
  }
  return set;
}

std::string_view occlusion_shape_name(OcclusionShape s) {
  return s == OcclusionShape::kBand ? "band" : "block";
}

OcclusionShape parse_occlusion_shape(std::string_view name) {
  if (name == "block") return OcclusionShape::kBlock;
  if (name == "band") return OcclusionShape::kBand;
  throw ParameterError("unknown occlusion kind '" + std::string(name) + "'");
}

std::string_view occlusion_fill_name(OcclusionFill f) {
  switch (f) {
    case OcclusionFill::kRandomNoise: return "random-noise";
    case OcclusionFill::kConstant: return "constant";
    case OcclusionFill::kTexture: return "texture";
  }
  return "random-noise";
}

OcclusionFill parse_occlusion_fill(std::string_view name) {
  if (name == "random-noise" || name == "noise") return OcclusionFill::kRandomNoise;
  if (name == "constant") return OcclusionFill::kConstant;
  if (name == "texture") return OcclusionFill::kTexture;
  throw ParameterError("unknown occlusion fill '" + std::string(name) + "'");
}

void OcclusionSpec::validate() const {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("occlusion fraction must lie in (0, 1)");
}

Mask occlusion_mask(int rows, int cols, const OcclusionSpec& spec) {
  spec.validate();
  if (rows < 1 || cols < 1) throw DimensionError("cannot occlude an empty image");
  std::mt19937_64 rng = substream(spec.seed, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mask mask = Mask::Constant(rows, cols, false);
  const double target = spec.fraction * rows * cols;

  if (spec.kind == OcclusionShape::kBand) {
    const int h = std::clamp(static_cast<int>(std::lround(spec.fraction * rows)), 1, rows);
    const int lower_half = rows / 2;
    int top = rows - h;
    if (h <= rows - lower_half) {
      top = std::uniform_int_distribution<int>(lower_half, rows - h)(rng);
    }
    mask.block(top, 0, h, cols).setConstant(true);
    return mask;
  }

  const double aspect = 0.6 + 1.0 * unit(rng);  // height / width
  int h = std::clamp(static_cast<int>(std::lround(std::sqrt(target * aspect))), 1, rows);
  int w = std::clamp(static_cast<int>(std::lround(target / h)), 1, cols);
  if (w == cols) h = std::clamp(static_cast<int>(std::lround(target / w)), 1, rows);
  const int top = std::uniform_int_distribution<int>(0, rows - h)(rng);
  const int left = std::uniform_int_distribution<int>(0, cols - w)(rng);
  mask.block(top, left, h, w).setConstant(true);
  return mask;
}

Image apply_occlusion(const Image& img, const OcclusionSpec& spec) {
  const Mask mask = occlusion_mask(static_cast<int>(img.rows()), static_cast<int>(img.cols()), spec);
  std::mt19937_64 rng = substream(spec.seed, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double fy = 0.0, fx = 0.0, phase = 0.0;
  if (spec.fill == OcclusionFill::kTexture) {
    fy = 0.05 + 0.25 * unit(rng);
    fx = 0.05 + 0.25 * unit(rng);
    phase = 2.0 * std::numbers::pi * unit(rng);
  }
  Image out = img;
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      if (!mask(r, c)) continue;
      switch (spec.fill) {
        case OcclusionFill::kRandomNoise: out(r, c) = unit(rng); break;
        case OcclusionFill::kConstant: out(r, c) = spec.constant_value; break;
        case OcclusionFill::kTexture:
          out(r, c) = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (fy * r + fx * c) + phase);
          break;
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int rows, int cols) {
  if (rows < 1 || cols < 1 || img.size() == 0) throw DimensionError("resize needs nonempty shapes");
  if (rows == img.rows() && cols == img.cols()) return img;
  const double sy = static_cast<double>(img.rows()) / rows;
  const double sx = static_cast<double>(img.cols()) / cols;
  const auto max_r = static_cast<double>(img.rows() - 1);
  const auto max_c = static_cast<double>(img.cols() - 1);
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, max_r);
    const auto y0 = static_cast<Eigen::Index>(std::floor(y));
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, img.rows() - 1);
    const double ty = y - y0;
    for (int c = 0; c < cols; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, max_c);
      const auto x0 = static_cast<Eigen::Index>(std::floor(x));
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, img.cols() - 1);
      const double tx = x - x0;
      out(r, c) = (1 - ty) * ((1 - tx) * img(y0, x0) + tx * img(y0, x1)) +
                  ty * ((1 - tx) * img(y1, x0) + tx * img(y1, x1));
    }
  }
  return out;
}

TrainTestSplit split_train_test(const LabeledImageSet& set, int train_per_class, std::uint64_t seed) {
  if (train_per_class < 1) throw ConfigError("train_per_class must be >= 1");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(set.num_classes()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    by_class.at(static_cast<std::size_t>(set.labels[i])).push_back(i);
  }
  std::vector<bool> to_train(set.size(), false);
  std::mt19937_64 rng = substream(seed, 4);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    if (static_cast<int>(idx.size()) < train_per_class) {
      throw ConfigError("class " + set.class_names[k] + " has " + std::to_string(idx.size()) +
                        " images, fewer than train_per_class = " + std::to_string(train_per_class));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int j = 0; j < train_per_class; ++j) to_train[idx[static_cast<std::size_t>(j)]] = true;
  }
  TrainTestSplit out;
  out.train.name = out.test.name = set.name;
  out.train.class_names = out.test.class_names = set.class_names;
  out.train.split = Split::kTrain;
  out.test.split = Split::kTest;
  for (std::size_t i = 0; i < set.size(); ++i) {
    LabeledImageSet& dst = to_train[i] ? out.train : out.test;
    dst.images.push_back(set.images[i]);
    dst.labels.push_back(set.labels[i]);
    if (!set.files.empty()) dst.files.push_back(set.files[i]);
  }
  return out;
}

}  // namespace hsr
