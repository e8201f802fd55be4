#include "hsr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

#include "hsr/error.hpp"
#include "hsr/random.hpp"
#include "hsr/serialization.hpp"

namespace hsr {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' expects true/false, got '" + v + "'");
}

template <typename F>
auto wrap_enum(const std::string& key, const std::string& v, F&& parse) {
  try {
    return parse(v);
  } catch (const Error& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

// Partition keys may precede `partition.enabled`; they are held here and
// applied only when partitioning is switched on.
struct ParseState {
  bool partition_enabled = false;
  PartitionConfig partition;
  bool occlusion_enabled = false;
  OcclusionSpec occlusion;
};

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["name"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; };
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); };
    t["dataset.source"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "synth") c.dataset.source = DatasetConfig::Source::kSynth;
      else if (v == "path") c.dataset.source = DatasetConfig::Source::kPath;
      else throw ConfigError("key '" + k + "' expects synth or path, got '" + v + "'");
    };
    t["dataset.path"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset.path = v; };
    t["dataset.test_path"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset.test_path = v; };
    t["dataset.classes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.classes = static_cast<int>(parse_int(k, v)); };
    t["dataset.per_class"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.per_class = static_cast<int>(parse_int(k, v)); };
    t["dataset.height"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.rows = static_cast<int>(parse_int(k, v)); };
    t["dataset.width"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.cols = static_cast<int>(parse_int(k, v)); };
    t["dataset.noise"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.variation = parse_real(k, v); };
    t["dataset.seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") c.dataset.seed.reset();
      else c.dataset.seed = parse_u64(k, v);
    };
    t["dataset.train_per_class"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.train_per_class = static_cast<int>(parse_int(k, v)); };
    t["pipeline"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.mode = wrap_enum(k, v, parse_pipeline_mode); };
    t["gabor.scales"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.num_scales = static_cast<int>(parse_int(k, v)); };
    t["gabor.orientations"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.num_orientations = static_cast<int>(parse_int(k, v)); };
    t["gabor.k_max"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.k_max = parse_real(k, v); };
    t["gabor.f"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.f = parse_real(k, v); };
    t["gabor.sigma"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.sigma = parse_real(k, v); };
    t["gabor.kernel_size"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.kernel_size = static_cast<int>(parse_int(k, v)); };
    t["gabor.downsample"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.gabor.downsample = static_cast<int>(parse_int(k, v)); };
    t["reduce.dim"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.reduce_dim = static_cast<int>(parse_int(k, v)); };
    t["elm.C"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.elm_C = parse_real(k, v); };
    t["elm.activation"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.activation = wrap_enum(k, v, parse_activation); };
    t["solver.lambda"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.lambda = parse_real(k, v); };
    t["solver.norm"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") c.pipeline.norm.reset();
      else c.pipeline.norm = wrap_enum(k, v, parse_penalty);
    };
    t["solver.inner_tol"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.inner_tol = parse_real(k, v); };
    t["solver.max_inner_iter"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.max_inner_iter = static_cast<int>(parse_int(k, v)); };
    t["solver.outer_iters"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.outer_reweight_iters = static_cast<int>(parse_int(k, v)); };
    t["solver.epsilon"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.epsilon_smoothing = parse_real(k, v); };
    t["solver.step_rule"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.step_rule = wrap_enum(k, v, parse_step_rule); };
    t["solver.optimality_tol"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.optimality_tol = parse_real(k, v); };
    t["solver.max_alternations"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.schedule.max_alternations = static_cast<int>(parse_int(k, v)); };
    t["occ_dict.kind"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.kind = wrap_enum(k, v, parse_occlusion_kind); };
    t["occ_dict.atoms"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.atoms = static_cast<int>(parse_int(k, v)); };
    t["occ_dict.zeta"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.zeta = parse_real(k, v); };
    t["occ_dict.source"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.source = wrap_enum(k, v, parse_occlusion_source); };
    t["occ_dict.samples"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.samples = static_cast<int>(parse_int(k, v)); };
    t["occ_dict.stride"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.basis_stride = static_cast<int>(parse_int(k, v)); };
    t["occ_dict.shape"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.training_occlusion.kind = wrap_enum(k, v, parse_occlusion_shape); };
    t["occ_dict.fraction"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.training_occlusion.fraction = parse_real(k, v); };
    t["occ_dict.fill"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.training_occlusion.fill = wrap_enum(k, v, parse_occlusion_fill); };
    t["occ_dict.value"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pipeline.occlusion.training_occlusion.constant_value = parse_real(k, v); };
    return t;
  }();
  return table;
}

void apply_deferred(ParseState& st, const std::string& key, const std::string& v) {
  if (key == "partition.enabled") st.partition_enabled = parse_bool(key, v);
  else if (key == "partition.rows") st.partition.rows = static_cast<int>(parse_int(key, v));
  else if (key == "partition.cols") st.partition.cols = static_cast<int>(parse_int(key, v));
  else if (key == "partition.block_height") st.partition.block_height = static_cast<int>(parse_int(key, v));
  else if (key == "partition.block_width") st.partition.block_width = static_cast<int>(parse_int(key, v));
  else if (key == "partition.occ_atoms") st.partition.per_block_occ_atoms = static_cast<int>(parse_int(key, v));
  else if (key == "occlusion.kind") {
    if (v == "none") {
      st.occlusion_enabled = false;
    } else {
      st.occlusion_enabled = true;
      st.occlusion.kind = wrap_enum(key, v, parse_occlusion_shape);
    }
  } else if (key == "occlusion.fraction") st.occlusion.fraction = parse_real(key, v);
  else if (key == "occlusion.fill") st.occlusion.fill = wrap_enum(key, v, parse_occlusion_fill);
  else if (key == "occlusion.value") st.occlusion.constant_value = parse_real(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  ParseState state;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    const auto it = setters().find(key);
    if (it != setters().end()) {
      it->second(cfg, key, value);
    } else {
      apply_deferred(state, key, value);
    }
  }
  if (state.partition_enabled) cfg.partition = state.partition;
  if (state.occlusion_enabled) cfg.occlusion = state.occlusion;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::echo() const {
  std::ostringstream o;
  auto kv = [&o](std::string_view k, const auto& v) { o << k << " = " << v << '\n'; };
  auto kd = [&o](std::string_view k, double v) { o << k << " = " << format_double(v) << '\n'; };
  kv("name", name);
  kv("seed", seed);
  kv("dataset.source", dataset.source == DatasetConfig::Source::kSynth ? "synth" : "path");
  if (!dataset.path.empty()) kv("dataset.path", dataset.path);
  if (!dataset.test_path.empty()) kv("dataset.test_path", dataset.test_path);
  kv("dataset.classes", dataset.synth.classes);
  kv("dataset.per_class", dataset.synth.per_class);
  kv("dataset.height", dataset.synth.rows);
  kv("dataset.width", dataset.synth.cols);
  kd("dataset.noise", dataset.synth.variation);
  if (dataset.seed) kv("dataset.seed", *dataset.seed);
  else kv("dataset.seed", "auto");
  kv("dataset.train_per_class", dataset.train_per_class);
  kv("pipeline", pipeline_mode_name(pipeline.mode));
  kv("gabor.scales", pipeline.gabor.num_scales);
  kv("gabor.orientations", pipeline.gabor.num_orientations);
  kd("gabor.k_max", pipeline.gabor.k_max);
  kd("gabor.f", pipeline.gabor.f);
  kd("gabor.sigma", pipeline.gabor.sigma);
  kv("gabor.kernel_size", pipeline.gabor.kernel_size);
  kv("gabor.downsample", pipeline.gabor.downsample);
  kv("reduce.dim", pipeline.reduce_dim);
  kd("elm.C", pipeline.elm_C);
  kv("elm.activation", activation_name(pipeline.activation));
  kd("solver.lambda", pipeline.lambda);
  if (pipeline.norm) kv("solver.norm", penalty_name(*pipeline.norm));
  else kv("solver.norm", "auto");
  kd("solver.inner_tol", pipeline.schedule.inner_tol);
  kv("solver.max_inner_iter", pipeline.schedule.max_inner_iter);
  kv("solver.outer_iters", pipeline.schedule.outer_reweight_iters);
  kd("solver.epsilon", pipeline.schedule.epsilon_smoothing);
  kv("solver.step_rule", step_rule_name(pipeline.schedule.step_rule));
  kd("solver.optimality_tol", pipeline.schedule.optimality_tol);
  kv("solver.max_alternations", pipeline.schedule.max_alternations);
  if (occlusion) {
    kv("occlusion.kind", occlusion_shape_name(occlusion->kind));
    kd("occlusion.fraction", occlusion->fraction);
    kv("occlusion.fill", occlusion_fill_name(occlusion->fill));
    kd("occlusion.value", occlusion->constant_value);
  } else {
    kv("occlusion.kind", "none");
  }
  const OcclusionDictionaryOptions& od = pipeline.occlusion;
  kv("occ_dict.kind", occlusion_kind_name(od.kind));
  kv("occ_dict.atoms", od.atoms);
  kd("occ_dict.zeta", od.zeta);
  kv("occ_dict.source", occlusion_source_name(od.source));
  kv("occ_dict.samples", od.samples);
  kv("occ_dict.stride", od.basis_stride);
  kv("occ_dict.shape", occlusion_shape_name(od.training_occlusion.kind));
  kd("occ_dict.fraction", od.training_occlusion.fraction);
  kv("occ_dict.fill", occlusion_fill_name(od.training_occlusion.fill));
  kd("occ_dict.value", od.training_occlusion.constant_value);
  kv("partition.enabled", partition ? "true" : "false");
  if (partition) {
    kv("partition.rows", partition->rows);
    kv("partition.cols", partition->cols);
    kv("partition.block_height", partition->block_height);
    kv("partition.block_width", partition->block_width);
    kv("partition.occ_atoms", partition->per_block_occ_atoms);
  }
  return o.str();
}

void ExperimentConfig::validate() const {
  if (dataset.source == DatasetConfig::Source::kPath && dataset.path.empty()) {
    throw ConfigError("dataset.source = path requires dataset.path");
  }
  if (dataset.train_per_class < 1) throw ConfigError("dataset.train_per_class must be >= 1");
  if (dataset.source == DatasetConfig::Source::kSynth &&
      dataset.train_per_class > dataset.synth.per_class) {
    throw ConfigError("dataset.train_per_class exceeds dataset.per_class");
  }
  pipeline.validate();
  if (occlusion) occlusion->validate();
  if (partition) partition->validate();
}

void MetricsReport::recompute_summary() {
  int classes = num_classes;
  for (const SampleRecord& s : samples) classes = std::max({classes, s.true_label + 1, s.predicted + 1});
  num_classes = classes;
  confusion = Eigen::MatrixXi::Zero(classes, classes);
  per_sample_times.clear();
  total_coding_time = 0.0;
  double iters = 0.0, nnz = 0.0;
  for (const SampleRecord& s : samples) {
    ++confusion(s.true_label, s.predicted);
    per_sample_times.push_back(s.time_s);
    total_coding_time += s.time_s;
    iters += s.iterations;
    nnz += static_cast<double>(s.nnz);
  }
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) {
    recognition_rate = std::numeric_limits<double>::quiet_NaN();
    mean_iterations = mean_nonzeros = 0.0;
  } else {
    recognition_rate = static_cast<double>(confusion.trace()) / static_cast<double>(confusion.sum());
    mean_iterations = iters / n;
    mean_nonzeros = nnz / n;
  }
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

TrainTestSplit load_experiment_data(const ExperimentConfig& config) {
  if (config.dataset.source == DatasetConfig::Source::kSynth) {
    SynthSpec spec = config.dataset.synth;
    spec.seed = config.dataset.seed.value_or(config.seed);
    return split_train_test(synth_faces(spec), config.dataset.train_per_class, config.seed);
  }
  LabeledImageSet all = load_dataset(config.dataset.path);
  if (config.dataset.test_path.empty()) {
    return split_train_test(all, config.dataset.train_per_class, config.seed);
  }
  TrainTestSplit split;
  split.train = std::move(all);
  split.train.split = Split::kTrain;
  split.test = load_dataset(config.dataset.test_path);
  split.test.split = Split::kTest;
  if (split.test.class_names != split.train.class_names) {
    throw ConfigError("train and test directories list different classes");
  }
  return split;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });

  TrainTestSplit data = stage("dataset", [&] { return load_experiment_data(config); });

  std::vector<Image> test_images = stage("occlusion", [&] {
    std::vector<Image> out;
    out.reserve(data.test.size());
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      if (config.occlusion) {
        OcclusionSpec spec = *config.occlusion;
        spec.seed = derive_seed(config.seed, 5000 + i);
        out.push_back(apply_occlusion(data.test.images[i], spec));
      } else {
        out.push_back(data.test.images[i]);
      }
    }
    return out;
  });

  PipelineOptions options = config.pipeline;
  options.seed = config.seed;

  MetricsReport report;
  report.name = config.name;
  report.num_classes = data.train.num_classes();
  report.config_echo = config.echo();

  std::optional<Pipeline> single;
  std::optional<PartitionedPipeline> partitioned;
  stage("training", [&] {
    PipelineTimings t;
    if (config.partition) {
      partitioned = PartitionedPipeline::train(data.train.images, data.train.labels,
                                               *config.partition, options);
      t = partitioned->timings();
    } else {
      single = Pipeline::train(data.train.images, data.train.labels, options);
      t = single->timings();
    }
    report.feature_seconds = t.feature_seconds;
    report.training_seconds = t.reduction_seconds + t.occlusion_seconds + t.dictionary_seconds;
    return 0;
  });

  stage("classification", [&] {
    const auto start = Clock::now();
    for (std::size_t i = 0; i < test_images.size(); ++i) {
      const ClassificationResult r =
          partitioned ? partitioned->classify(test_images[i]) : single->classify(test_images[i]);
      SampleRecord rec;
      rec.sample_id = static_cast<int>(i);
      rec.true_label = data.test.labels[i];
      rec.predicted = r.identity;
      rec.time_s = r.coding_seconds;
      rec.iterations = r.code.iterations;
      rec.nnz = r.code.nonzeros();
      rec.converged = r.solver_converged;
      rec.residuals = r.residuals;
      report.samples.push_back(std::move(rec));
    }
    report.feature_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    return 0;
  });
  // feature_seconds so far includes coding; keep only the non-coding share.
  report.recompute_summary();
  report.feature_seconds = std::max(0.0, report.feature_seconds - report.total_coding_time);
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "table" || name == "dat") return ReportFormat::kTable;
  throw ParameterError("unknown report format '" + std::string(name) + "'");
}

std::string summary_text(const MetricsReport& r) {
  std::ostringstream o;
  const auto n = r.samples.size();
  o << "name = " << r.name << '\n';
  o << "samples = " << n << '\n';
  o << "classes = " << r.num_classes << '\n';
  o << "recognition_rate = " << format_double(r.recognition_rate) << '\n';
  o << "total_coding_time_s = " << format_double(r.total_coding_time) << '\n';
  o << "mean_coding_time_s = "
    << format_double(n ? r.total_coding_time / static_cast<double>(n)
                       : std::numeric_limits<double>::quiet_NaN())
    << '\n';
  o << "mean_iterations = " << format_double(r.mean_iterations) << '\n';
  o << "mean_nonzeros = " << format_double(r.mean_nonzeros) << '\n';
  o << "feature_time_s = " << format_double(r.feature_seconds) << '\n';
  o << "training_time_s = " << format_double(r.training_seconds) << '\n';
  return o.str();
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<fs::path> emit_report(const MetricsReport& report, const fs::path& out_dir,
                                  const std::set<ReportFormat>& formats) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;

  if (formats.count(ReportFormat::kCsv)) {
    const fs::path path = out_dir / "samples.csv";
    std::ofstream out = open_output(path);
    out << "sample_id,true,pred,time_s,iters,nnz\n";
    for (const SampleRecord& s : report.samples) {
      out << s.sample_id << ',' << s.true_label << ',' << s.predicted << ','
          << format_double(s.time_s) << ',' << s.iterations << ',' << s.nnz << '\n';
    }
    finish(out, path);
    written.push_back(path);

    const fs::path rpath = out_dir / "residuals.csv";
    std::ofstream rout = open_output(rpath);
    rout << "sample_id,true,pred,time_s,iters";
    for (int k = 0; k < report.num_classes; ++k) rout << ",r_" << k;
    rout << '\n';
    for (const SampleRecord& s : report.samples) {
      rout << s.sample_id << ',' << s.true_label << ',' << s.predicted << ','
           << format_double(s.time_s) << ',' << s.iterations;
      for (Eigen::Index k = 0; k < s.residuals.size(); ++k) rout << ',' << format_double(s.residuals[k]);
      rout << '\n';
    }
    finish(rout, rpath);
    written.push_back(rpath);
  }

  if (formats.count(ReportFormat::kJson)) {
    nlohmann::json j;
    j["name"] = report.name;
    j["samples"] = report.samples.size();
    j["classes"] = report.num_classes;
    j["recognition_rate"] = std::isnan(report.recognition_rate) ? nlohmann::json("nan")
                                                                : nlohmann::json(report.recognition_rate);
    j["total_coding_time_s"] = report.total_coding_time;
    j["per_sample_times_s"] = report.per_sample_times;
    j["mean_iterations"] = report.mean_iterations;
    j["mean_nonzeros"] = report.mean_nonzeros;
    j["feature_time_s"] = report.feature_seconds;
    j["training_time_s"] = report.training_seconds;
    nlohmann::json conf = nlohmann::json::array();
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
      std::vector<int> row(static_cast<std::size_t>(report.confusion.cols()));
      for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) row[static_cast<std::size_t>(c)] = report.confusion(r, c);
      conf.push_back(row);
    }
    j["confusion"] = conf;
    j["config"] = report.config_echo;
    const fs::path path = out_dir / "report.json";
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
    finish(out, path);
    written.push_back(path);
  }

  if (formats.count(ReportFormat::kTable)) {
    const fs::path path = out_dir / "report.dat";
    std::ofstream out = open_output(path);
    out << "# sample_id true pred time_s iters nnz\n";
    for (const SampleRecord& s : report.samples) {
      out << s.sample_id << ' ' << s.true_label << ' ' << s.predicted << ' '
          << format_double(s.time_s) << ' ' << s.iterations << ' ' << s.nnz << '\n';
    }
    out << "\n\n# confusion (rows: true class, columns: predicted class)\n";
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
      for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) out << (c ? " " : "") << report.confusion(r, c);
      out << '\n';
    }
    finish(out, path);
    written.push_back(path);
  }

  const fs::path summary = out_dir / "summary.txt";
  std::ofstream sout = open_output(summary);
  sout << summary_text(report);
  finish(sout, summary);
  written.push_back(summary);

  if (!report.config_echo.empty()) {
    const fs::path cpath = out_dir / "config.txt";
    std::ofstream cout_ = open_output(cpath);
    cout_ << report.config_echo;
    finish(cout_, cpath);
    written.push_back(cpath);
  }
  return written;
}

MetricsReport load_samples_csv(const fs::path& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "sample_id,true,pred,time_s,iters,nnz") {
    throw IoError("unexpected header in " + path.string());
  }
  MetricsReport report;
  report.name = path.stem().string();
  report.num_classes = num_classes;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 6) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    }
    try {
      SampleRecord s;
      s.sample_id = std::stoi(fields[0]);
      s.true_label = std::stoi(fields[1]);
      s.predicted = std::stoi(fields[2]);
      s.time_s = parse_double(fields[3]);
      s.iterations = std::stoi(fields[4]);
      s.nnz = std::stol(fields[5]);
      if (s.true_label < 0 || s.predicted < 0) throw std::invalid_argument("negative label");
      report.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  report.recompute_summary();
  return report;
}

}  // namespace hsr
