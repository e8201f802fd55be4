#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hsr/dataset.hpp"
#include "hsr/dictionary_learning.hpp"
#include "hsr/elm_ae.hpp"
#include "hsr/gabor.hpp"
#include "hsr/sparse_coding.hpp"
#include "hsr/types.hpp"

namespace hsr {

enum class OcclusionKind { kNone, kIdentity, kLearned };

std::string_view occlusion_kind_name(OcclusionKind k);
OcclusionKind parse_occlusion_kind(std::string_view name);

// Global dictionary [training atoms | occlusion atoms] with unit-norm columns.
// Only the first n_train columns carry class labels.
struct Dictionary {
  Matrix atoms;
  std::vector<int> labels;
  OcclusionKind occlusion = OcclusionKind::kNone;
  int n_train = 0;
  int n_occ = 0;
  int num_classes = 0;

  Eigen::Index dim() const { return atoms.rows(); }
};

// train_features holds one atom per column. `occlusion_atoms` is required
// for kLearned and ignored otherwise; kIdentity appends the dim x dim identity.
Dictionary build_global_dictionary(const Matrix& train_features, std::span<const int> labels,
                                   OcclusionKind occlusion,
                                   const Matrix* occlusion_atoms = nullptr);

struct ClassificationResult {
  int identity = -1;
  Vector residuals;  // one per class
  SparseCode code;
  double coding_seconds = 0.0;
  double feature_norm = 0.0;  // norm of the coded feature vector
  bool solver_converged = false;
  // Partitioned classification only: per-block identity, -1 for abstentions.
  std::vector<int> block_votes;
};

// r_i = || y - occlusion part - (class-i training part) ||_2 for every class.
Vector class_residuals(const Vector& y, const Dictionary& dict, const Vector& omega);

// Lowest residual wins; exact ties go to the lowest class id.
int argmin_class(const Vector& residuals);

ClassificationResult classify(const Vector& y, const Dictionary& dict, double lambda, Penalty norm,
                              const SolverSchedule& schedule);

// Dictionary plus cached Gram matrix for repeated classification.
class SparseClassifier {
 public:
  SparseClassifier(Dictionary dict, double lambda, Penalty norm, SolverSchedule schedule);

  ClassificationResult classify(const Vector& y) const;

  const Dictionary& dictionary() const { return dict_; }
  double lambda() const { return lambda_; }
  Penalty norm() const { return norm_; }

 private:
  Dictionary dict_;
  GramCache cache_;
  double lambda_;
  Penalty norm_;
  SolverSchedule schedule_;
};

// One CSV row per result: sample_id,true,pred,time_s,iters,r_0,...,r_{k-1}
void write_classification_csv(std::ostream& out, std::span<const ClassificationResult> results,
                              std::span<const int> true_labels);

enum class PipelineMode {
  kSrc,   // normalized pixels, L1
  kGsrc,  // Gabor features, L1
  kHsr,   // Gabor features reduced by ELM-AE, L1/2
};

std::string_view pipeline_mode_name(PipelineMode m);
PipelineMode parse_pipeline_mode(std::string_view name);

enum class OcclusionSource {
  kDifference,  // feature(occluded image) - feature(clean image) on training images
  kBasis,       // features of single-pixel images on a stride grid
};

std::string_view occlusion_source_name(OcclusionSource s);
OcclusionSource parse_occlusion_source(std::string_view name);

struct OcclusionDictionaryOptions {
  OcclusionKind kind = OcclusionKind::kNone;
  int atoms = 16;
  double zeta = 0.05;
  OcclusionSource source = OcclusionSource::kDifference;
  // Shape, fill and fraction of the synthetic occlusions used to build Z.
  OcclusionSpec training_occlusion{OcclusionShape::kBand, 0.4, OcclusionFill::kRandomNoise, 0, 0.0};
  int samples = 200;
  int basis_stride = 2;
};

struct PipelineOptions {
  PipelineMode mode = PipelineMode::kHsr;
  GaborParams gabor;
  int reduce_dim = 64;
  double elm_C = 100.0;
  Activation activation = Activation::kSigmoid;
  double lambda = 0.001;
  std::optional<Penalty> norm;  // defaults: L1 for SRC/GSRC, L1/2 for HSR
  SolverSchedule schedule;
  OcclusionDictionaryOptions occlusion;
  std::uint64_t seed = 1;

  Penalty penalty() const;
  void validate() const;
};

struct PipelineTimings {
  double feature_seconds = 0.0;
  double reduction_seconds = 0.0;
  double occlusion_seconds = 0.0;
  double dictionary_seconds = 0.0;
};

// Trained feature extractor plus classifier. The projection model and the
// occlusion dictionary are fitted on training images only.
class Pipeline {
 public:
  static Pipeline train(std::span<const Image> images, std::span<const int> labels,
                        const PipelineOptions& options);

  // Feature vector in dictionary space, before unit normalization.
  Vector features(const Image& image) const;

  // Codes features(image) / ||features(image)|| over the global dictionary.
  ClassificationResult classify(const Image& image) const;
  ClassificationResult classify_features(const Vector& features) const;

  const Dictionary& dictionary() const { return classifier_->dictionary(); }
  const PipelineOptions& options() const { return options_; }
  const std::optional<ProjectionModel>& model() const { return model_; }
  const std::optional<LearnedOcclusionDictionary>& occlusion_dictionary() const { return occ_dict_; }
  const PipelineTimings& timings() const { return timings_; }
  int image_rows() const { return rows_; }
  int image_cols() const { return cols_; }

 private:
  Pipeline() = default;
  Vector base_features(const Image& image) const;

  PipelineOptions options_;
  int rows_ = 0;
  int cols_ = 0;
  std::optional<GaborBank> bank_;
  std::optional<ProjectionModel> model_;
  std::optional<LearnedOcclusionDictionary> occ_dict_;
  std::optional<SparseClassifier> classifier_;
  PipelineTimings timings_;
};

struct PartitionConfig {
  int rows = 4;
  int cols = 2;
  int block_height = 21;
  int block_width = 30;
  int per_block_occ_atoms = 20;

  void validate() const;
  int blocks() const { return rows * cols; }
};

// Rescales the image to (rows * block_height) x (cols * block_width) and
// cuts it into blocks in row-major grid order.
std::vector<Image> partition_image(const Image& image, const PartitionConfig& config);

// Majority vote over non-abstaining blocks. Vote ties go to the class with
// the lowest sum of r_i / ||y_block||, then to the lowest class id. Throws
// Error when every block abstained.
ClassificationResult aggregate_votes(std::span<const std::optional<ClassificationResult>> blocks,
                                     int num_classes);

// Classifies every block with its own pipeline; blocks whose pipeline
// throws abstain.
ClassificationResult classify_partitioned(const Image& image, const PartitionConfig& config,
                                          std::span<const Pipeline> block_pipelines);

class PartitionedPipeline {
 public:
  // Block b uses the base options with a derived seed and, when the base
  // occlusion dictionary is learned, per_block_occ_atoms atoms (none if 0).
  static PartitionedPipeline train(std::span<const Image> images, std::span<const int> labels,
                                   const PartitionConfig& config, const PipelineOptions& options);

  ClassificationResult classify(const Image& image) const;

  std::span<const Pipeline> blocks() const { return blocks_; }
  const PartitionConfig& config() const { return config_; }
  PipelineTimings timings() const;

 private:
  PartitionConfig config_;
  std::vector<Pipeline> blocks_;
};

}  // namespace hsr
