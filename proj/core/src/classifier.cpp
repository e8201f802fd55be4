#include "hsr/classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "hsr/error.hpp"
#include "hsr/random.hpp"
#include "hsr/serialization.hpp"

namespace hsr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string_view occlusion_kind_name(OcclusionKind k) {
  switch (k) {
    case OcclusionKind::kNone: return "none";
    case OcclusionKind::kIdentity: return "identity";
    case OcclusionKind::kLearned: return "learned";
  }
  return "none";
}

OcclusionKind parse_occlusion_kind(std::string_view name) {
  if (name == "none") return OcclusionKind::kNone;
  if (name == "identity") return OcclusionKind::kIdentity;
  if (name == "learned") return OcclusionKind::kLearned;
  throw ParameterError("unknown occlusion dictionary kind '" + std::string(name) + "'");
}

Dictionary build_global_dictionary(const Matrix& train_features, std::span<const int> labels,
                                   OcclusionKind occlusion, const Matrix* occlusion_atoms) {
  if (static_cast<Eigen::Index>(labels.size()) != train_features.cols()) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match training atom count " +
                         std::to_string(train_features.cols()));
  }
  if (labels.empty()) throw ConfigError("dictionary needs at least one training atom");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) {
    throw ConfigError("class labels must be nonnegative");
  }
  std::vector<int> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) throw ConfigError("class " + std::to_string(k) + " has no training atoms");
  }

  const Eigen::Index dim = train_features.rows();
  Matrix occ;
  switch (occlusion) {
    case OcclusionKind::kNone: break;
    case OcclusionKind::kIdentity: occ = Matrix::Identity(dim, dim); break;
    case OcclusionKind::kLearned:
      if (occlusion_atoms == nullptr) throw ConfigError("learned occlusion dictionary missing");
      if (occlusion_atoms->rows() != dim) {
        throw DimensionError("occlusion atoms have dimension " +
                             std::to_string(occlusion_atoms->rows()) + ", training atoms " +
                             std::to_string(dim));
      }
      occ = *occlusion_atoms;
      break;
  }

  Dictionary dict;
  dict.occlusion = occlusion;
  dict.n_train = static_cast<int>(train_features.cols());
  dict.n_occ = static_cast<int>(occ.cols());
  dict.num_classes = max_label + 1;
  dict.labels.assign(labels.begin(), labels.end());
  dict.atoms.resize(dim, dict.n_train + dict.n_occ);
  dict.atoms.leftCols(dict.n_train) = train_features;
  if (dict.n_occ > 0) dict.atoms.rightCols(dict.n_occ) = occ;
  if (!dict.atoms.allFinite()) throw DataError("dictionary atoms contain non-finite entries");
  for (Eigen::Index j = 0; j < dict.atoms.cols(); ++j) {
    const double norm = dict.atoms.col(j).norm();
    if (norm == 0.0) throw DataError("dictionary atom " + std::to_string(j) + " is all zeros");
    dict.atoms.col(j) /= norm;
  }
  return dict;
}

Vector class_residuals(const Vector& y, const Dictionary& dict, const Vector& omega) {
  if (y.size() != dict.dim() || omega.size() != dict.atoms.cols()) {
    throw DimensionError("residual operands do not match the dictionary");
  }
  Vector base = y;
  if (dict.n_occ > 0) base -= dict.atoms.rightCols(dict.n_occ) * omega.tail(dict.n_occ);
  Matrix partial = Matrix::Zero(dict.dim(), dict.num_classes);
  for (int j = 0; j < dict.n_train; ++j) {
    if (omega[j] != 0.0) partial.col(dict.labels[static_cast<std::size_t>(j)]) += omega[j] * dict.atoms.col(j);
  }
  Vector residuals(dict.num_classes);
  for (int k = 0; k < dict.num_classes; ++k) residuals[k] = (base - partial.col(k)).norm();
  return residuals;
}

int argmin_class(const Vector& residuals) {
  if (residuals.size() == 0) throw DimensionError("no class residuals");
  int best = 0;
  for (Eigen::Index k = 1; k < residuals.size(); ++k) {
    if (residuals[k] < residuals[best]) best = static_cast<int>(k);
  }
  return best;
}

SparseClassifier::SparseClassifier(Dictionary dict, double lambda, Penalty norm,
                                   SolverSchedule schedule)
    : dict_(std::move(dict)),
      cache_(dict_.atoms),
      lambda_(lambda),
      norm_(norm),
      schedule_(schedule) {
  if (norm_ == Penalty::kWeightedL1) throw ParameterError("classifier norm must be l1 or lhalf");
  schedule_.validate();
}

ClassificationResult SparseClassifier::classify(const Vector& y) const {
  if (y.size() != dict_.dim()) {
    throw DimensionError("feature length " + std::to_string(y.size()) +
                         " does not match dictionary dimension " + std::to_string(dict_.dim()));
  }
  ClassificationResult result;
  const auto start = Clock::now();
  result.code = solve(cache_, y, lambda_, norm_, schedule_);
  result.coding_seconds = seconds_since(start);
  result.residuals = class_residuals(y, dict_, result.code.omega);
  result.identity = argmin_class(result.residuals);
  result.solver_converged = result.code.converged;
  result.feature_norm = y.norm();
  return result;
}

ClassificationResult classify(const Vector& y, const Dictionary& dict, double lambda, Penalty norm,
                              const SolverSchedule& schedule) {
  return SparseClassifier(dict, lambda, norm, schedule).classify(y);
}

void write_classification_csv(std::ostream& out, std::span<const ClassificationResult> results,
                              std::span<const int> true_labels) {
  if (results.size() != true_labels.size()) throw DimensionError("one true label per result required");
  const Eigen::Index classes = results.empty() ? 0 : results.front().residuals.size();
  out << "sample_id,true,pred,time_s,iters";
  for (Eigen::Index k = 0; k < classes; ++k) out << ",r_" << k;
  out << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const ClassificationResult& r = results[i];
    out << i << ',' << true_labels[i] << ',' << r.identity << ',' << format_double(r.coding_seconds)
        << ',' << r.code.iterations;
    for (Eigen::Index k = 0; k < r.residuals.size(); ++k) out << ',' << format_double(r.residuals[k]);
    out << '\n';
  }
}

std::string_view pipeline_mode_name(PipelineMode m) {
  switch (m) {
    case PipelineMode::kSrc: return "src";
    case PipelineMode::kGsrc: return "gsrc";
    case PipelineMode::kHsr: return "hsr";
  }
  return "hsr";
}

PipelineMode parse_pipeline_mode(std::string_view name) {
  if (name == "src" || name == "raw+l1") return PipelineMode::kSrc;
  if (name == "gsrc" || name == "gabor+l1") return PipelineMode::kGsrc;
  if (name == "hsr" || name == "gabor+elm_ae+lhalf") return PipelineMode::kHsr;
  throw ParameterError("unknown pipeline '" + std::string(name) + "'");
}

std::string_view occlusion_source_name(OcclusionSource s) {
  return s == OcclusionSource::kBasis ? "basis" : "difference";
}

OcclusionSource parse_occlusion_source(std::string_view name) {
  if (name == "difference") return OcclusionSource::kDifference;
  if (name == "basis") return OcclusionSource::kBasis;
  throw ParameterError("unknown occlusion dictionary source '" + std::string(name) + "'");
}

Penalty PipelineOptions::penalty() const {
  if (norm) return *norm;
  return mode == PipelineMode::kHsr ? Penalty::kLHalf : Penalty::kL1;
}

void PipelineOptions::validate() const {
  if (mode != PipelineMode::kSrc) gabor.validate();
  if (mode == PipelineMode::kHsr && reduce_dim < 1) throw ConfigError("HSR mode requires reduce_dim >= 1");
  if (!(elm_C > 0.0)) throw ConfigError("elm C must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (penalty() == Penalty::kWeightedL1) throw ConfigError("pipeline norm must be l1 or lhalf");
  schedule.validate();
  if (occlusion.kind == OcclusionKind::kLearned) {
    if (occlusion.atoms < 1) throw ConfigError("learned occlusion dictionary needs atoms >= 1");
    if (!(occlusion.zeta > 0.0)) throw ConfigError("occlusion zeta must be > 0");
    if (occlusion.source == OcclusionSource::kDifference && occlusion.samples < occlusion.atoms) {
      throw ConfigError("occlusion samples must be >= atoms");
    }
    if (occlusion.basis_stride < 1) throw ConfigError("occlusion basis stride must be >= 1");
    occlusion.training_occlusion.validate();
  }
}

Vector Pipeline::base_features(const Image& image) const {
  const Image normalized = normalize_image(image).image;
  if (options_.mode == PipelineMode::kSrc) return flatten(normalized);
  return gabor_features(normalized, *bank_).values;
}

Vector Pipeline::features(const Image& image) const {
  if (image.rows() != rows_ || image.cols() != cols_) {
    throw DimensionError("image is " + std::to_string(image.rows()) + "x" +
                         std::to_string(image.cols()) + ", pipeline was trained on " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  Vector f = base_features(image);
  if (model_) f = model_->project(f);
  return f;
}

ClassificationResult Pipeline::classify_features(const Vector& features) const {
  const double norm = features.norm();
  const Vector y = norm > 0.0 ? Vector(features / norm) : features;
  ClassificationResult r = classifier_->classify(y);
  return r;
}

ClassificationResult Pipeline::classify(const Image& image) const {
  return classify_features(features(image));
}

Pipeline Pipeline::train(std::span<const Image> images, std::span<const int> labels,
                         const PipelineOptions& options) {
  options.validate();
  if (images.empty()) throw ConfigError("no training images");
  if (images.size() != labels.size()) throw DimensionError("one label per training image required");

  Pipeline p;
  p.options_ = options;
  p.rows_ = static_cast<int>(images.front().rows());
  p.cols_ = static_cast<int>(images.front().cols());
  for (const Image& img : images) {
    if (img.rows() != p.rows_ || img.cols() != p.cols_) {
      throw DimensionError("training images differ in size");
    }
  }
  if (options.mode != PipelineMode::kSrc) p.bank_.emplace(options.gabor);

  auto start = Clock::now();
  const Vector first = p.base_features(images.front());
  Matrix raw(first.size(), static_cast<Eigen::Index>(images.size()));
  raw.col(0) = first;
  for (std::size_t i = 1; i < images.size(); ++i) raw.col(static_cast<Eigen::Index>(i)) = p.base_features(images[i]);
  p.timings_.feature_seconds = seconds_since(start);

  Matrix train = raw;
  if (options.mode == PipelineMode::kHsr) {
    start = Clock::now();
    if (options.reduce_dim > raw.rows()) {
      throw ConfigError("reduce_dim " + std::to_string(options.reduce_dim) +
                        " exceeds the feature dimension " + std::to_string(raw.rows()));
    }
    p.model_ = train_elm_ae(raw.transpose(), options.reduce_dim, options.elm_C,
                            derive_seed(options.seed, 10), options.activation);
    train = p.model_->project_columns(raw);
    p.timings_.reduction_seconds = seconds_since(start);
  }

  Matrix occ_atoms;
  if (options.occlusion.kind == OcclusionKind::kLearned) {
    start = Clock::now();
    const OcclusionDictionaryOptions& occ = options.occlusion;
    std::vector<Vector> columns;
    if (occ.source == OcclusionSource::kDifference) {
      for (int s = 0; s < occ.samples; ++s) {
        const std::size_t idx = static_cast<std::size_t>(s) % images.size();
        OcclusionSpec spec = occ.training_occlusion;
        spec.seed = derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(s));
        Vector z = p.base_features(apply_occlusion(images[idx], spec)) - raw.col(static_cast<Eigen::Index>(idx));
        if (z.norm() > 0.0) columns.push_back(std::move(z));
      }
    } else {
      for (int r = 0; r < p.rows_; r += occ.basis_stride) {
        for (int c = 0; c < p.cols_; c += occ.basis_stride) {
          Image delta = Image::Zero(p.rows_, p.cols_);
          delta(r, c) = 1.0;
          Vector z = p.base_features(delta);
          if (z.norm() > 0.0) columns.push_back(std::move(z));
        }
      }
    }
    Matrix Z(raw.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) Z.col(static_cast<Eigen::Index>(j)) = columns[j];
    p.occ_dict_ = learn_compressed_dictionary(Z, occ.atoms, occ.zeta, options.schedule,
                                              derive_seed(options.seed, 20));
    occ_atoms = p.model_ ? p.model_->project_columns(p.occ_dict_->gamma) : p.occ_dict_->gamma;
    p.timings_.occlusion_seconds = seconds_since(start);
  }

  start = Clock::now();
  Dictionary dict = build_global_dictionary(train, labels, options.occlusion.kind,
                                            occ_atoms.size() > 0 ? &occ_atoms : nullptr);
  p.classifier_.emplace(std::move(dict), options.lambda, options.penalty(), options.schedule);
  p.timings_.dictionary_seconds = seconds_since(start);
  return p;
}

void PartitionConfig::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("partition grid must have at least one block");
  if (block_height < 1 || block_width < 1) throw ConfigError("partition block size must be >= 1");
  if (per_block_occ_atoms < 0) throw ConfigError("per_block_occ_atoms must be >= 0");
}

std::vector<Image> partition_image(const Image& image, const PartitionConfig& config) {
  config.validate();
  const Image scaled =
      resize_bilinear(image, config.rows * config.block_height, config.cols * config.block_width);
  std::vector<Image> blocks;
  blocks.reserve(static_cast<std::size_t>(config.blocks()));
  for (int r = 0; r < config.rows; ++r)
    for (int c = 0; c < config.cols; ++c)
      blocks.emplace_back(scaled.block(r * config.block_height, c * config.block_width,
                                       config.block_height, config.block_width));
  return blocks;
}

ClassificationResult aggregate_votes(std::span<const std::optional<ClassificationResult>> blocks,
                                     int num_classes) {
  if (num_classes < 1) throw ConfigError("vote needs at least one class");
  std::vector<int> votes(static_cast<std::size_t>(num_classes), 0);
  Vector normalized_sum = Vector::Zero(num_classes);
  ClassificationResult out;
  out.solver_converged = true;
  out.code.omega.resize(0);
  bool any = false;
  for (const auto& block : blocks) {
    if (!block) {
      out.block_votes.push_back(-1);
      continue;
    }
    if (block->identity < 0 || block->identity >= num_classes ||
        block->residuals.size() != num_classes) {
      throw DimensionError("block result does not match the class count");
    }
    any = true;
    ++votes[static_cast<std::size_t>(block->identity)];
    const double scale = block->feature_norm > 0.0 ? block->feature_norm : 1.0;
    normalized_sum += block->residuals / scale;
    out.block_votes.push_back(block->identity);
    out.coding_seconds += block->coding_seconds;
    out.code.iterations += block->code.iterations;
    out.solver_converged = out.solver_converged && block->solver_converged;
    const Eigen::Index offset = out.code.omega.size();
    out.code.omega.conservativeResize(offset + block->code.omega.size());
    out.code.omega.tail(block->code.omega.size()) = block->code.omega;
    out.code.objective += block->code.objective;
    out.code.lambda = block->code.lambda;
    out.code.norm = block->code.norm;
  }
  if (!any) throw Error("every block abstained; the image cannot be classified");

  const int top = *std::max_element(votes.begin(), votes.end());
  int winner = -1;
  for (int k = 0; k < num_classes; ++k) {
    if (votes[static_cast<std::size_t>(k)] != top) continue;
    if (winner < 0 || normalized_sum[k] < normalized_sum[winner]) winner = k;
  }
  out.identity = winner;
  out.residuals = normalized_sum;
  out.code.converged = out.solver_converged;
  out.feature_norm = 1.0;
  return out;
}

ClassificationResult classify_partitioned(const Image& image, const PartitionConfig& config,
                                          std::span<const Pipeline> block_pipelines) {
  if (static_cast<int>(block_pipelines.size()) != config.blocks()) {
    throw ConfigError("expected " + std::to_string(config.blocks()) + " block pipelines, got " +
                      std::to_string(block_pipelines.size()));
  }
  const std::vector<Image> blocks = partition_image(image, config);
  std::vector<std::optional<ClassificationResult>> results(blocks.size());
  int num_classes = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    num_classes = std::max(num_classes, block_pipelines[b].dictionary().num_classes);
    try {
      results[b] = block_pipelines[b].classify(blocks[b]);
      if (results[b]->residuals.size() < num_classes) results[b].reset();
    } catch (const Error&) {
      results[b].reset();
    }
  }
  return aggregate_votes(results, num_classes);
}

PartitionedPipeline PartitionedPipeline::train(std::span<const Image> images,
                                               std::span<const int> labels,
                                               const PartitionConfig& config,
                                               const PipelineOptions& options) {
  config.validate();
  if (options.mode != PipelineMode::kSrc &&
      (options.gabor.kernel_size > config.block_height || options.gabor.kernel_size > config.block_width)) {
    throw ConfigError("Gabor kernel size " + std::to_string(options.gabor.kernel_size) +
                      " exceeds the " + std::to_string(config.block_height) + "x" +
                      std::to_string(config.block_width) + " partition block");
  }
  std::vector<std::vector<Image>> per_block(static_cast<std::size_t>(config.blocks()));
  for (const Image& img : images) {
    std::vector<Image> blocks = partition_image(img, config);
    for (std::size_t b = 0; b < blocks.size(); ++b) per_block[b].push_back(std::move(blocks[b]));
  }
  PartitionedPipeline out;
  out.config_ = config;
  for (std::size_t b = 0; b < per_block.size(); ++b) {
    PipelineOptions block_options = options;
    block_options.seed = derive_seed(options.seed, 100 + b);
    if (options.occlusion.kind == OcclusionKind::kLearned) {
      if (config.per_block_occ_atoms == 0) {
        block_options.occlusion.kind = OcclusionKind::kNone;
      } else {
        block_options.occlusion.atoms = config.per_block_occ_atoms;
      }
    }
    out.blocks_.push_back(Pipeline::train(per_block[b], labels, block_options));
  }
  return out;
}

ClassificationResult PartitionedPipeline::classify(const Image& image) const {
  return classify_partitioned(image, config_, blocks_);
}

PipelineTimings PartitionedPipeline::timings() const {
  PipelineTimings t;
  for (const Pipeline& p : blocks_) {
    t.feature_seconds += p.timings().feature_seconds;
    t.reduction_seconds += p.timings().reduction_seconds;
    t.occlusion_seconds += p.timings().occlusion_seconds;
    t.dictionary_seconds += p.timings().dictionary_seconds;
  }
  return t;
}

}  // namespace hsr
