#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pfm/config.hpp"
#include "pfm/error.hpp"
#include "pfm/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string cache_dir = "pfm_cache";
  int jobs = 1;
  bool quiet = false;
};

pfm::ExperimentConfig load(const Options& o) {
  const pfm::Config config = o.config.empty() ? pfm::Config{} : pfm::Config::load(o.config);
  return pfm::experiment_config(config, o.seed, o.cache_dir, o.jobs);
}

void print_report(const pfm::ExperimentReport& report) {
  const auto rows = report.rows();
  std::fputs(pfm::format_table(rows).c_str(), stdout);
  std::fputs(pfm::format_results(rows).c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait recognition from dense motion descriptors"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "key=value configuration file");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--cache-dir", o.cache_dir, "directory for datasets, descriptors and models");
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", o.quiet, "only print errors");

  auto* synth = app.add_subcommand("synth", "render the synthetic multi-view dataset");
  auto* extract = app.add_subcommand("extract", "compute and cache trajectory descriptors");
  auto* fit = app.add_subcommand("fit", "fit PCA and the GMM or codebook on training descriptors");
  auto* encode = app.add_subcommand("encode", "build gait descriptors for every video");
  auto* train = app.add_subcommand("train", "train the one-vs-all SVMs");
  auto* evaluate = app.add_subcommand("evaluate", "classify test videos and write the results");
  auto* experiment = app.add_subcommand("experiment", "run every stage");
  CLI11_PARSE(app, argc, argv);

  spdlog::set_level(o.quiet ? spdlog::level::err : spdlog::level::info);
  try {
    const pfm::ExperimentConfig config = load(o);
    if (synth->parsed()) {
      const auto manifest = pfm::stage_synth(config);
      std::printf("%zu videos\n", manifest.entries.size());
    } else if (extract->parsed()) {
      pfm::stage_extract(config);
    } else if (fit->parsed()) {
      pfm::stage_fit(config);
    } else if (encode->parsed()) {
      pfm::stage_encode(config);
    } else if (train->parsed()) {
      pfm::stage_train(config);
    } else if (evaluate->parsed()) {
      print_report(pfm::stage_evaluate(config));
    } else if (experiment->parsed()) {
      print_report(pfm::run_experiment(config));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
