#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hsr/types.hpp"

namespace hsr {

enum class Split { kTrain, kTest, kAll };

struct LabeledImageSet {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> files;  // source paths; empty for generated sets
  std::string name;
  Split split = Split::kAll;

  std::size_t size() const { return images.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Reads `root/<class>/<image>` with one class per subdirectory in
// lexicographic order. Images are decoded to grayscale in [0, 1].
LabeledImageSet load_dataset(const std::filesystem::path& root);

// Decodes a PGM/PPM (P2, P3, P5, P6; 8 or 16 bit) or, when built with libpng,
// a PNG file. Color is reduced with the ITU-R BT.601 luma weights.
Image read_image(const std::filesystem::path& path);

// 16-bit binary PGM; pixel values are clamped to [0, 1].
void write_pgm(const std::filesystem::path& path, const Image& img);

// Writes `root/<class>/<index>.pgm` plus a manifest.txt describing the set.
void write_dataset(const LabeledImageSet& set, const std::filesystem::path& root,
                   const std::vector<std::pair<std::string, std::string>>& manifest);

struct NormalizedImage {
  Image image;
  bool degenerate = false;  // constant input, returned as zeros
};

// Zero mean, unit (population) variance.
NormalizedImage normalize_image(const Image& img);

struct SynthSpec {
  int classes = 10;
  int per_class = 20;
  int rows = 32;
  int cols = 32;
  double variation = 0.05;  // standard deviation of the additive pixel noise
  std::uint64_t seed = 1;
};

// Smooth class prototypes (3-6 Gaussian blobs plus one oriented edge) with
// pairwise normalized correlation <= 0.8.
std::vector<Image> synth_prototypes(const SynthSpec& spec);

// Samples are prototype + a random illumination ramp + Gaussian noise.
LabeledImageSet synth_faces(const SynthSpec& spec);

// Pearson correlation of two equally sized images.
double normalized_correlation(const Image& a, const Image& b);

enum class OcclusionShape { kBlock, kBand };
enum class OcclusionFill { kRandomNoise, kConstant, kTexture };

std::string_view occlusion_shape_name(OcclusionShape s);
OcclusionShape parse_occlusion_shape(std::string_view name);
std::string_view occlusion_fill_name(OcclusionFill f);
OcclusionFill parse_occlusion_fill(std::string_view name);

struct OcclusionSpec {
  OcclusionShape kind = OcclusionShape::kBlock;
  double fraction = 0.2;
  OcclusionFill fill = OcclusionFill::kRandomNoise;
  std::uint64_t seed = 0;
  double constant_value = 0.0;

  void validate() const;
};

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Pixels the occlusion covers. Blocks are one seeded rectangle of area
// fraction * H * W; bands are full-width and sit in the lower half when they
// fit there, otherwise they end at the bottom row.
Mask occlusion_mask(int rows, int cols, const OcclusionSpec& spec);

// Pixels outside the mask are copied bit-for-bit.
Image apply_occlusion(const Image& img, const OcclusionSpec& spec);

// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& img, int rows, int cols);

struct TrainTestSplit {
  LabeledImageSet train;
  LabeledImageSet test;
};

// Seeded per-class split; the first `train_per_class` shuffled images of
// every class go to training.
TrainTestSplit split_train_test(const LabeledImageSet& set, int train_per_class,
                                std::uint64_t seed);

}  // namespace hsr
