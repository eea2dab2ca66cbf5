#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfm/bow.hpp"
#include "pfm/config.hpp"
#include "pfm/gmm.hpp"
#include "pfm/pipeline.hpp"
#include "pfm/pyramid.hpp"
#include "pfm/report.hpp"
#include "pfm/synth.hpp"

namespace pfm {

struct Partition {
  std::string id;
  std::vector<int> train;  // trajectory ids
  std::vector<int> test;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string preset = "pfm";
  PyramidConfig pyramid;
  std::filesystem::path manifest;  // empty: generate the synthetic dataset
  SynthSpec synth;
  std::vector<int> views;          // empty: every view
  std::vector<Partition> partitions;
  int k = 0;                       // GMM components or codebook size
  int low_pca = 0;                 // 0 disables
  int high_pca = 0;
  bool mirror = true;
  int max_samples = 20000;         // descriptors used to fit PCA / GMM / codebook
  EmParams em;
  KMeansParams kmeans;
  std::optional<double> svm_c;     // fixed C, otherwise chosen by cross-validation
  std::vector<double> c_candidates{0.1, 1.0, 10.0, 100.0};
  double svm_tol = 1e-4;
  ExtractParams extract;
  std::uint64_t seed = 0;
  std::filesystem::path cache_dir = "pfm_cache";
  int jobs = 1;
  std::string fingerprint;         // of every setting that affects results

  bool is_bow() const noexcept { return preset == "bow"; }
};

/// Builds and validates an experiment from `experiment.*`, `data.*`, `synth.*`, `split.*`,
/// `encoding.*`, `pyramid.*`, `svm.*`, `train.*`, `flow.*` and `tracker.*` keys.
/// `split.mode = loo` over `split.trajectories` yields one partition per held-out
/// trajectory; otherwise `split.train` / `split.test` give a single partition.
ExperimentConfig experiment_config(const Config& config, std::uint64_t seed, const std::filesystem::path& cache_dir,
                                   int jobs = 1);

struct PartitionResult {
  std::string id;
  double multiview_acc = 0.0;  // per (subject, trajectory) after voting over views
  double video_acc = 0.0;      // per single-view video
  int instances = 0;
  int videos = 0;
  double c = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::vector<PartitionResult> partitions;

  std::vector<ResultRow> rows() const;
};

// Pipeline stages. Each reads its inputs from and writes its outputs to the cache
// directory, skipping work whose outputs already exist, so staged and one-shot runs agree.
DatasetManifest stage_synth(const ExperimentConfig& config);
void stage_extract(const ExperimentConfig& config);
void stage_fit(const ExperimentConfig& config);
void stage_encode(const ExperimentConfig& config);
void stage_train(const ExperimentConfig& config);
ExperimentReport stage_evaluate(const ExperimentConfig& config);

/// All stages in order.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace pfm
