#include "pfm/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "pfm/cache.hpp"
#include "pfm/classify.hpp"
#include "pfm/error.hpp"
#include "pfm/fisher.hpp"
#include "pfm/parallel.hpp"
#include "pfm/pca.hpp"

namespace pfm {

namespace {

namespace fs = std::filesystem;

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  return hex;
}

std::string join(const std::vector<int>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

std::vector<double> double_list(const Config& c, const std::string& key, std::vector<double> fallback) {
  if (!c.has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : c.get_list(key)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "config key '" + key + "': '" + item + "' is not a number");
    }
  }
  return out;
}

Error stage_error(const std::string& stage, const std::exception& e) {
  return Error(ErrorKind::Stage, stage + ": " + e.what());
}

// ---- model (de)serialization; every model is used only after a float32 round trip ----

MatrixRowF row_of(const Eigen::VectorXd& v) { return v.transpose().cast<float>(); }

ModelFile to_file(const GaussianMixture& g) {
  return {ModelType::Gmm, {}, {row_of(g.weights()), g.means().cast<float>(), g.variances().cast<float>()}};
}

GaussianMixture gmm_from(const ModelFile& f) {
  if (f.matrices.size() != 3) throw Error(ErrorKind::Format, "GMM model needs 3 matrices");
  return GaussianMixture(f.matrices[0].row(0).transpose().cast<double>(), f.matrices[1].cast<double>(),
                         f.matrices[2].cast<double>());
}

ModelFile to_file(const PcaModel& p) {
  char tv[40];
  std::snprintf(tv, sizeof tv, "%.17g", p.total_variance);
  return {ModelType::Pca, {{"total_variance", tv}}, {row_of(p.mean), p.basis.cast<float>(), row_of(p.eigenvalues)}};
}

PcaModel pca_from(const ModelFile& f) {
  if (f.matrices.size() != 3) throw Error(ErrorKind::Format, "PCA model needs 3 matrices");
  PcaModel p;
  p.mean = f.matrices[0].row(0).transpose().cast<double>();
  p.basis = f.matrices[1].cast<double>();
  p.eigenvalues = f.matrices[2].row(0).transpose().cast<double>();
  p.total_variance = std::stod(f.params.at("total_variance"));
  return p;
}

ModelFile to_file(const Codebook& c) { return {ModelType::Codebook, {}, {c.centroids.cast<float>()}}; }

Codebook codebook_from(const ModelFile& f) {
  if (f.matrices.size() != 1) throw Error(ErrorKind::Format, "codebook model needs 1 matrix");
  return {f.matrices[0].cast<double>()};
}

ModelFile to_file(const OvaSvmModel& m) {
  Eigen::VectorXd labels(m.classes());
  for (int i = 0; i < m.classes(); ++i) labels(i) = m.labels[i];
  char c[40];
  std::snprintf(c, sizeof c, "%.17g", m.c);
  return {ModelType::Svm, {{"c", c}}, {m.weights.cast<float>(), row_of(m.biases), row_of(labels)}};
}

OvaSvmModel svm_from(const ModelFile& f) {
  if (f.matrices.size() != 3) throw Error(ErrorKind::Format, "SVM model needs 3 matrices");
  OvaSvmModel m;
  m.weights = f.matrices[0].cast<double>();
  m.biases = f.matrices[1].row(0).transpose().cast<double>();
  for (Eigen::Index i = 0; i < f.matrices[2].cols(); ++i) m.labels.push_back(static_cast<int>(f.matrices[2](0, i)));
  m.c = std::stod(f.params.at("c"));
  return m;
}

template <typename Model, typename From>
Model save_and_reload(const fs::path& path, const Model& model, From from) {
  const ModelFile file = to_file(model);
  write_model(path, file);
  return from(read_model(path, file.type));
}

// ---- dataset layout ----

struct Video {
  const ManifestEntry* entry = nullptr;
  bool mirrored = false;
};

struct Layout {
  fs::path run_dir;
  fs::path partition_dir(const Partition& p) const { return run_dir / p.id; }
};

Layout layout(const ExperimentConfig& c) { return {c.cache_dir / "runs" / (c.name + "_" + c.fingerprint)}; }

std::string synth_key(const ExperimentConfig& c) {
  std::ostringstream s;
  s.precision(17);
  const SynthSpec& p = c.synth;
  s << c.seed << ' ' << p.n_subjects << ' ' << p.frames << ' ' << p.width << ' ' << p.height << ' ' << p.fps << ' '
    << p.noise;
  for (const double a : p.view_azimuths) s << " a" << a;
  for (const auto& path : p.paths) s << " p" << static_cast<int>(path.shape) << ',' << path.heading_deg << ',' << path.radius << ',' << path.turn;
  return fnv_hex(s.str());
}

fs::path synth_dir(const ExperimentConfig& c) { return c.cache_dir / ("synth_" + synth_key(c)); }

DatasetManifest dataset(const ExperimentConfig& c) {
  if (!c.manifest.empty()) return load_manifest(c.manifest);
  const fs::path manifest = synth_dir(c) / "manifest.txt";
  if (!fs::exists(manifest)) return stage_synth(c);
  return load_manifest(manifest);
}

bool view_selected(const ExperimentConfig& c, int view) {
  return c.views.empty() || std::find(c.views.begin(), c.views.end(), view) != c.views.end();
}

std::vector<const ManifestEntry*> entries_for(const ExperimentConfig& c, const DatasetManifest& m,
                                              const std::vector<int>& trajectories) {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : m.entries) {
    if (view_selected(c, e.view_id) &&
        std::find(trajectories.begin(), trajectories.end(), e.trajectory_id) != trajectories.end()) {
      out.push_back(&e);
    }
  }
  std::sort(out.begin(), out.end(), [](const ManifestEntry* a, const ManifestEntry* b) {
    return std::tie(a->subject_id, a->trajectory_id, a->view_id) < std::tie(b->subject_id, b->trajectory_id, b->view_id);
  });
  return out;
}

std::vector<Video> train_videos(const ExperimentConfig& c, const DatasetManifest& m, const Partition& p) {
  std::vector<Video> out;
  for (const auto* e : entries_for(c, m, p.train)) {
    out.push_back({e, false});
    if (c.mirror) out.push_back({e, true});
  }
  return out;
}

std::vector<Video> test_videos(const ExperimentConfig& c, const DatasetManifest& m, const Partition& p) {
  std::vector<Video> out;
  for (const auto* e : entries_for(c, m, p.test)) out.push_back({e, false});
  return out;
}

VideoData load_video(const ExperimentConfig& c, const Video& v) {
  return load_or_extract(*v.entry, v.mirrored, c.extract, c.cache_dir);
}

// ---- encoded gait descriptors of one partition ----

struct EncodedRow {
  VideoKey key;
  bool processed = false;
};

struct Encoded {
  Eigen::MatrixXd values;  // one row per video: train videos first, then test videos
  std::vector<EncodedRow> rows;
  int n_train = 0;
};

void write_encoded(const fs::path& dir, const Encoded& e) {
  std::string meta = "train " + std::to_string(e.n_train) + "\n";
  for (const auto& r : e.rows) {
    meta += std::to_string(r.key.subject) + " " + std::to_string(r.key.trajectory) + " " + std::to_string(r.key.view) +
            " " + std::to_string(r.key.mirrored ? 1 : 0) + " " + std::to_string(r.processed ? 1 : 0) + "\n";
  }
  write_file_atomic(dir / "encoded.meta", meta);
  write_matrix(dir / "encoded.bin", e.values.cast<float>());
}

Encoded read_encoded(const fs::path& dir) {
  Encoded e;
  e.values = read_matrix(dir / "encoded.bin").cast<double>();
  std::istringstream in(read_file(dir / "encoded.meta"));
  std::string word;
  if (!(in >> word >> e.n_train) || word != "train") throw Error(ErrorKind::Format, "corrupt encoded.meta");
  int mirrored = 0, processed = 0;
  EncodedRow r;
  while (in >> r.key.subject >> r.key.trajectory >> r.key.view >> mirrored >> processed) {
    r.key.mirrored = mirrored != 0;
    r.processed = processed != 0;
    e.rows.push_back(r);
  }
  if (static_cast<Eigen::Index>(e.rows.size()) != e.values.rows()) throw Error(ErrorKind::Format, "corrupt encoded.meta");
  return e;
}

}  // namespace

std::vector<ResultRow> ExperimentReport::rows() const {
  std::vector<ResultRow> out;
  for (const auto& p : partitions) out.push_back({name, p.id, p.multiview_acc, p.video_acc});
  return out;
}

ExperimentConfig experiment_config(const Config& config, std::uint64_t seed, const fs::path& cache_dir, int jobs) {
  ExperimentConfig c;
  c.seed = seed;
  c.cache_dir = cache_dir;
  c.jobs = jobs;
  c.preset = config.get_string("experiment.preset", c.preset);
  c.name = config.get_string("experiment.name", c.preset);
  if (c.name.empty() || c.name.find_first_of(" \t=/") != std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "experiment.name must be non-empty without spaces, '=' or '/'");
  }
  c.pyramid = pyramid_preset(c.preset);
  if (config.has("pyramid.levels")) {
    c.pyramid.levels = parse_pyramid(config.get_string("pyramid.levels", "")).levels;
    c.pyramid.cells.clear();
  }
  c.pyramid.cells = config.get_int_list("pyramid.cells", c.pyramid.cells);
  c.manifest = config.get_string("data.manifest", "");
  c.views = config.get_int_list("data.views", {});

  c.synth.n_subjects = config.get_int("synth.subjects", c.synth.n_subjects);
  c.synth.frames = config.get_int("synth.frames", c.synth.frames);
  c.synth.width = config.get_int("synth.width", c.synth.width);
  c.synth.height = config.get_int("synth.height", c.synth.height);
  c.synth.fps = config.get_double("synth.fps", c.synth.fps);
  c.synth.noise = config.get_double("synth.noise", c.synth.noise);
  c.synth.view_azimuths = double_list(config, "synth.views", c.synth.view_azimuths);

  const std::string mode = config.get_string("split.mode", config.has("split.train") ? "fixed" : "loo");
  if (mode == "loo") {
    const auto trajectories = config.get_int_list("split.trajectories", {1, 2, 3});
    if (trajectories.size() < 2) throw Error(ErrorKind::InvalidArgument, "leave-one-out needs two trajectories");
    for (const int held : trajectories) {
      Partition p;
      for (const int t : trajectories) {
        if (t != held) p.train.push_back(t);
      }
      p.test = {held};
      p.id = "trj" + join(p.train, "+");
      c.partitions.push_back(p);
    }
  } else if (mode == "fixed" || mode == "each") {
    const auto train = config.get_int_list("split.train", {});
    const auto test = config.get_int_list("split.test", {});
    if (mode == "fixed") {
      c.partitions.push_back({"trj" + join(train, "+") + "_test" + join(test, "+"), train, test});
    } else {
      for (const int t : test) c.partitions.push_back({"test" + std::to_string(t), train, {t}});
    }
  } else {
    throw Error(ErrorKind::InvalidArgument, "split.mode must be loo, fixed or each");
  }
  for (const auto& p : c.partitions) {
    if (p.train.empty() || p.test.empty()) throw Error(ErrorKind::InvalidArgument, "empty train or test split");
    for (const int t : p.test) {
      if (std::find(p.train.begin(), p.train.end(), t) != p.train.end()) {
        throw Error(ErrorKind::InvalidArgument, "train and test trajectories overlap (trajectory " + std::to_string(t) + ")");
      }
    }
  }

  // Presets that split the person box default to 100 components, the whole-box one to 150.
  const bool split_box = std::any_of(c.pyramid.levels.begin(), c.pyramid.levels.end(),
                                     [](const GridLevel& g) { return g.cells() > 1; });
  const int default_k = c.is_bow() ? 500 : (split_box ? 100 : 150);
  c.k = config.get_int("encoding.k", config.get_int(c.is_bow() ? "encoding.bow_k" : "encoding.gmm_k", default_k));
  if (c.k < 1) throw Error(ErrorKind::InvalidArgument, "encoding.k must be at least 1");
  c.low_pca = config.get_int("encoding.low_pca", 0);
  c.high_pca = config.get_int("encoding.high_pca", 0);
  if (c.low_pca < 0 || c.high_pca < 0) throw Error(ErrorKind::InvalidArgument, "PCA dimensions must be >= 0");
  c.max_samples = config.get_int("encoding.max_samples", c.max_samples);
  c.em.max_iters = config.get_int("encoding.em_iters", c.em.max_iters);
  c.em.tol = config.get_double("encoding.em_tol", c.em.tol);
  c.kmeans.max_iters = config.get_int("encoding.kmeans_iters", c.kmeans.max_iters);
  c.em.seed = c.kmeans.seed = seed;
  if (config.has("svm.c")) c.svm_c = config.get_double("svm.c", 1.0);
  c.c_candidates = double_list(config, "svm.c_candidates", c.c_candidates);
  c.svm_tol = config.get_double("svm.tol", c.svm_tol);
  c.mirror = config.get_bool("train.mirror", c.mirror);
  c.extract = extract_params(config);
  c.fingerprint = fnv_hex(config.format() + "seed=" + std::to_string(seed));
  return c;
}

DatasetManifest stage_synth(const ExperimentConfig& c) {
  if (!c.manifest.empty()) return load_manifest(c.manifest);
  try {
    return synth_generate(c.synth, c.seed, synth_dir(c), c.jobs);
  } catch (const std::exception& e) {
    throw stage_error("synth", e);
  }
}

void stage_extract(const ExperimentConfig& c) {
  const DatasetManifest m = dataset(c);
  std::map<std::tuple<int, int, int, bool>, Video> needed;
  for (const auto& p : c.partitions) {
    for (const auto& v : train_videos(c, m, p)) needed[{v.entry->subject_id, v.entry->trajectory_id, v.entry->view_id, v.mirrored}] = v;
    for (const auto& v : test_videos(c, m, p)) needed[{v.entry->subject_id, v.entry->trajectory_id, v.entry->view_id, v.mirrored}] = v;
  }
  std::vector<Video> videos;
  for (const auto& [key, v] : needed) videos.push_back(v);
  parallel_for(videos.size(), c.jobs, [&](std::size_t i) { load_video(c, videos[i]); });
}

void stage_fit(const ExperimentConfig& c) {
  const DatasetManifest m = dataset(c);
  const Layout lay = layout(c);
  for (const auto& p : c.partitions) {
    const fs::path dir = lay.partition_dir(p);
    const fs::path model_path = dir / (c.is_bow() ? "codebook.pfmm" : "gmm.pfmm");
    if (fs::exists(model_path) && (c.low_pca == 0 || fs::exists(dir / "pca_low.pfmm"))) continue;
    try {
      const auto videos = train_videos(c, m, p);
      std::vector<VideoData> data(videos.size());
      parallel_for(videos.size(), c.jobs, [&](std::size_t i) { data[i] = load_video(c, videos[i]); });
      Eigen::Index total = 0;
      for (const auto& d : data) total += d.features.size();
      if (total == 0) throw Error(ErrorKind::InsufficientData, "no training descriptors");

      std::vector<Eigen::Index> pick(static_cast<std::size_t>(total));
      std::iota(pick.begin(), pick.end(), Eigen::Index{0});
      if (c.max_samples > 0 && total > c.max_samples) {
        std::mt19937_64 rng(c.seed);
        for (Eigen::Index i = 0; i < c.max_samples; ++i) {
          std::uniform_int_distribution<Eigen::Index> d(i, total - 1);
          std::swap(pick[static_cast<std::size_t>(i)], pick[static_cast<std::size_t>(d(rng))]);
        }
        pick.resize(static_cast<std::size_t>(c.max_samples));
        std::sort(pick.begin(), pick.end());
      }
      Eigen::MatrixXd sample(static_cast<Eigen::Index>(pick.size()), kDescriptorDim);
      {
        std::size_t next = 0;
        Eigen::Index offset = 0;
        for (const auto& d : data) {
          while (next < pick.size() && pick[next] < offset + d.features.size()) {
            sample.row(static_cast<Eigen::Index>(next)) = d.features.values.row(pick[next] - offset);
            ++next;
          }
          offset += d.features.size();
        }
      }
      fs::create_directories(dir);
      if (c.low_pca > 0) {
        const PcaModel pca = save_and_reload(dir / "pca_low.pfmm", fit_pca(sample, c.low_pca), pca_from);
        sample = apply_pca_rows(pca, sample);
      }
      if (c.is_bow()) {
        save_and_reload(model_path, fit_kmeans(sample, c.k, c.kmeans), codebook_from);
      } else {
        save_and_reload(model_path, fit_gmm(sample, c.k, c.em).model, gmm_from);
      }
    } catch (const std::exception& e) {
      throw stage_error("fit " + p.id, e);
    }
  }
}

void stage_encode(const ExperimentConfig& c) {
  const DatasetManifest m = dataset(c);
  const Layout lay = layout(c);
  for (const auto& p : c.partitions) {
    const fs::path dir = lay.partition_dir(p);
    if (fs::exists(dir / "encoded.bin") && fs::exists(dir / "encoded.meta")) continue;
    try {
      std::optional<PcaModel> low;
      if (c.low_pca > 0) low = pca_from(read_model(dir / "pca_low.pfmm", ModelType::Pca));
      std::optional<GaussianMixture> gmm;
      std::optional<Codebook> codebook;
      if (c.is_bow()) {
        codebook = codebook_from(read_model(dir / "codebook.pfmm", ModelType::Codebook));
      } else {
        gmm = gmm_from(read_model(dir / "gmm.pfmm", ModelType::Gmm));
      }
      auto videos = train_videos(c, m, p);
      const auto test = test_videos(c, m, p);
      Encoded enc;
      enc.n_train = static_cast<int>(videos.size());
      videos.insert(videos.end(), test.begin(), test.end());
      std::vector<GaitDescriptor> gait(videos.size());
      std::vector<std::string> failures(videos.size());
      parallel_for(videos.size(), c.jobs, [&](std::size_t i) {
        const VideoData v = load_video(c, videos[i]);
        try {
          gait[i] = c.is_bow() ? build_bow(v.features, v.track, c.pyramid, *codebook, low ? &*low : nullptr)
                               : build_pfm(v.features, v.track, c.pyramid, *gmm, low ? &*low : nullptr);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::InsufficientData) throw;
          failures[i] = v.key.name() + ": " + e.what();
        }
      });
      Eigen::Index dim = 0;
      for (const auto& g : gait) dim = std::max(dim, g.values.size());
      if (dim == 0) throw Error(ErrorKind::InsufficientData, "no video could be encoded");
      enc.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(videos.size()), dim);
      for (std::size_t i = 0; i < videos.size(); ++i) {
        const Video& v = videos[i];
        enc.rows.push_back({{v.entry->subject_id, v.entry->trajectory_id, v.entry->view_id, v.mirrored}, failures[i].empty()});
        if (failures[i].empty()) {
          enc.values.row(static_cast<Eigen::Index>(i)) = gait[i].values.transpose();
        } else {
          warn("unprocessable video " + failures[i]);
        }
      }
      // Same float32 representation the cached file will hold.
      enc.values = enc.values.cast<float>().cast<double>();
      if (c.high_pca > 0) {
        std::vector<Eigen::Index> train_rows;
        for (int i = 0; i < enc.n_train; ++i) {
          if (enc.rows[i].processed) train_rows.push_back(i);
        }
        const Eigen::MatrixXd train = enc.values(train_rows, Eigen::all);
        int k = c.high_pca;
        const int limit = static_cast<int>(std::min(train.rows(), train.cols()));
        if (k > limit) {
          warn("encoding.high_pca " + std::to_string(k) + " exceeds the " + std::to_string(limit) +
               " available training dimensions; using " + std::to_string(limit));
          k = limit;
        }
        fs::create_directories(dir);
        const PcaModel high = save_and_reload(dir / "pca_high.pfmm", fit_pca(train, k), pca_from);
        Eigen::MatrixXd reduced = apply_pca_rows(high, enc.values);
        for (std::size_t i = 0; i < enc.rows.size(); ++i) {
          if (!enc.rows[i].processed) reduced.row(static_cast<Eigen::Index>(i)).setZero();
        }
        enc.values = reduced;
      }
      fs::create_directories(dir);
      write_encoded(dir, enc);
    } catch (const std::exception& e) {
      throw stage_error("encode " + p.id, e);
    }
  }
}

void stage_train(const ExperimentConfig& c) {
  const Layout lay = layout(c);
  for (const auto& p : c.partitions) {
    const fs::path dir = lay.partition_dir(p);
    if (fs::exists(dir / "svm.pfmm")) continue;
    try {
      const Encoded enc = read_encoded(dir);
      std::vector<Eigen::Index> rows;
      std::vector<int> labels, folds;
      for (int i = 0; i < enc.n_train; ++i) {
        if (!enc.rows[i].processed) continue;
        rows.push_back(i);
        labels.push_back(enc.rows[i].key.subject);
        folds.push_back(enc.rows[i].key.trajectory);
      }
      const Eigen::MatrixXd x = enc.values(rows, Eigen::all);
      SvmParams params;
      params.tol = c.svm_tol;
      params.seed = c.seed;
      params.c = c.svm_c ? *c.svm_c : select_c(x, labels, folds, c.c_candidates, params);
      save_and_reload(dir / "svm.pfmm", train_ova(x, labels, params).model, svm_from);
    } catch (const std::exception& e) {
      throw stage_error("train " + p.id, e);
    }
  }
}

ExperimentReport stage_evaluate(const ExperimentConfig& c) {
  const Layout lay = layout(c);
  ExperimentReport report;
  report.name = c.name;
  for (const auto& p : c.partitions) {
    const fs::path dir = lay.partition_dir(p);
    try {
      const Encoded enc = read_encoded(dir);
      const OvaSvmModel model = svm_from(read_model(dir / "svm.pfmm", ModelType::Svm));
      PartitionResult r;
      r.id = p.id;
      r.c = model.c;
      std::map<std::pair<int, int>, std::vector<ViewPrediction>> instances;
      int correct_videos = 0;
      for (std::size_t i = static_cast<std::size_t>(enc.n_train); i < enc.rows.size(); ++i) {
        const EncodedRow& row = enc.rows[i];
        auto& views = instances[{row.key.subject, row.key.trajectory}];
        ++r.videos;
        if (!row.processed) continue;
        const Eigen::VectorXd scores = predict_scores(model, enc.values.row(static_cast<Eigen::Index>(i)).transpose());
        const int cls = argmax(scores);
        correct_videos += model.labels[static_cast<std::size_t>(cls)] == row.key.subject;
        views.push_back({cls, scores});
      }
      int correct_instances = 0;
      for (const auto& [key, views] : instances) {
        ++r.instances;
        if (views.empty()) continue;
        const VoteResult vote = majority_vote(views);
        correct_instances += model.labels[static_cast<std::size_t>(vote.predicted)] == key.first;
      }
      r.video_acc = r.videos ? static_cast<double>(correct_videos) / r.videos : 0.0;
      r.multiview_acc = r.instances ? static_cast<double>(correct_instances) / r.instances : 0.0;
      report.partitions.push_back(r);
    } catch (const std::exception& e) {
      throw stage_error("evaluate " + p.id, e);
    }
  }
  const auto rows = report.rows();
  fs::create_directories(lay.run_dir);
  write_file_atomic(lay.run_dir / "results.txt", format_results(rows));
  write_file_atomic(lay.run_dir / "table.txt", format_table(rows));
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& c) {
  if (c.manifest.empty()) dataset(c);
  stage_extract(c);
  stage_fit(c);
  stage_encode(c);
  stage_train(c);
  return stage_evaluate(c);
}

}  // namespace pfm
