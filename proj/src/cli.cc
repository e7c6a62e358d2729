#include "aa/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "aa/error.h"
#include "aa/gradsuite.h"
#include "aa/harness.h"
#include "aa/synth.h"

namespace aa {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string task;
  std::string manifest;
  ModelSpec spec;
  size_t chunk_size = 1000;
  uint64_t seed = 1;
  int jobs = 1;
  size_t folds = 5;
  bool oversample = false;
  std::string out = "out";
  std::vector<size_t> sizes = default_sweep_sizes();
  std::vector<std::string> tokens;
  size_t top_k = 5;
  size_t instances = 10;
  double tolerance = 1e-4;
  SynthConfig synth;

  nlohmann::json to_json() const {
    nlohmann::json j = spec.to_json();
    j["task"] = task;
    j["manifest"] = manifest;
    j["chunk_size"] = chunk_size;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["folds"] = folds;
    j["oversample"] = oversample;
    j["out"] = out;
    if (task == "sweep") j["sizes"] = sizes;
    if (task == "neighbors") {
      j["tokens"] = tokens;
      j["top_k"] = top_k;
    }
    if (task == "gradcheck") {
      j["instances"] = instances;
      j["tolerance"] = tolerance;
    }
    if (task == "synth") j["synth"] = synth.to_json();
    return j;
  }

  void merge_json(const nlohmann::json& j) {
    spec = ModelSpec::from_json(j);
    manifest = j.value("manifest", manifest);
    chunk_size = j.value("chunk_size", chunk_size);
    seed = j.value("seed", seed);
    jobs = j.value("jobs", jobs);
    folds = j.value("folds", folds);
    oversample = j.value("oversample", oversample);
    out = j.value("out", out);
    sizes = j.value("sizes", sizes);
    tokens = j.value("tokens", tokens);
    top_k = j.value("top_k", top_k);
    instances = j.value("instances", instances);
    tolerance = j.value("tolerance", tolerance);
    if (j.contains("synth")) synth = SynthConfig::from_json(j.at("synth"));
  }
};

// Raw flag values; only flags the user actually passed are applied.
struct Flags {
  std::string config, manifest, model, disc, reading, gaps, out, activation, preset;
  size_t chunk_size = 0, folds = 0, top_k = 0, instances = 0;
  uint64_t seed = 0;
  int jobs = 0;
  int epochs = 0, batch_size = 0, maps = 0, disc_maps = 0, char_dim = 0, disc_dim = 0;
  int max_char_len = 0, max_disc_len = 0, svm_max_iter = 0;
  double lr = 0, keep_prob = 0, svm_c = 0, svm_tol = 0, tolerance = 0;
  std::vector<int> windows, disc_windows;
  std::vector<size_t> sizes;
  std::vector<std::string> tokens;
  bool oversample = false;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--manifest", f.manifest, "corpus manifest JSON");
  app->add_option("--model", f.model, "cnn2 | cnn2-pv | cnn2-de | svm2 | svm2-pv");
  app->add_option("--disc", f.disc, "none | gr | rst");
  app->add_option("--reading", f.reading, "local | global | edu-order");
  app->add_option("--gaps", f.gaps, "compress | adjacent (GR global reading)");
  app->add_option("--chunk-size", f.chunk_size, "words per chunk");
  app->add_option("--folds", f.folds, "cross-validation folds");
  app->add_flag("--oversample", f.oversample, "top up minority authors in training folds");
  app->add_option("--epochs", f.epochs);
  app->add_option("--batch-size", f.batch_size);
  app->add_option("--lr", f.lr);
  app->add_option("--keep-prob", f.keep_prob);
  app->add_option("--maps", f.maps, "feature maps per character window");
  app->add_option("--disc-maps", f.disc_maps, "feature maps per discourse window");
  app->add_option("--char-dim", f.char_dim);
  app->add_option("--disc-dim", f.disc_dim);
  app->add_option("--windows", f.windows)->delimiter(',');
  app->add_option("--disc-windows", f.disc_windows)->delimiter(',');
  app->add_option("--max-char-len", f.max_char_len);
  app->add_option("--max-disc-len", f.max_disc_len);
  app->add_option("--activation", f.activation, "relu | tanh");
  app->add_option("--svm-c", f.svm_c);
  app->add_option("--svm-tol", f.svm_tol);
  app->add_option("--svm-max-iter", f.svm_max_iter);
}

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "run.json to start from");
  app->add_option("--seed", f.seed, "master seed")->envname("AA_SEED");
  app->add_option("--jobs", f.jobs, "worker threads");
  app->add_option("--out", f.out, "output directory");
}

RunConfig resolve(const CLI::App* app, const Flags& f) {
  RunConfig rc;
  rc.task = app->get_name();
  rc.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto given = [&](const char* name) {
    try {
      return app->count(name) > 0;
    } catch (const CLI::OptionNotFound&) {
      return false;
    }
  };
  if (given("--config")) {
    std::ifstream in(f.config);
    if (!in) throw Error(ErrorKind::kConfig, "cannot open config '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfig, f.config + ": " + e.what());
    }
    if (rc.task == "synth" && !j.contains("synth")) {
      rc.synth = SynthConfig::from_json(j);
    } else {
      try {
        rc.merge_json(j);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kConfig, f.config + ": " + e.what());
      }
    }
  }
  TrainConfig& t = rc.spec.train;
  if (given("--manifest")) rc.manifest = f.manifest;
  if (given("--model")) rc.spec.model = f.model;
  if (given("--disc")) rc.spec.disc = parse_disc_type(f.disc);
  if (given("--reading")) rc.spec.reading = parse_reading(f.reading);
  if (given("--gaps")) {
    if (f.gaps != "compress" && f.gaps != "adjacent") {
      throw Error(ErrorKind::kConfig, "--gaps must be compress or adjacent");
    }
    rc.spec.gaps = f.gaps == "adjacent" ? GapMode::kAdjacentOnly : GapMode::kCompress;
  }
  if (given("--chunk-size")) rc.chunk_size = f.chunk_size;
  if (given("--folds")) rc.folds = f.folds;
  if (given("--oversample")) rc.oversample = f.oversample;
  if (given("--epochs")) t.epochs = f.epochs;
  if (given("--batch-size")) t.batch_size = f.batch_size;
  if (given("--lr")) t.lr = f.lr;
  if (given("--keep-prob")) t.keep_prob = f.keep_prob;
  if (given("--maps")) t.maps = f.maps;
  if (given("--disc-maps")) t.disc_maps = f.disc_maps;
  if (given("--char-dim")) t.char_dim = f.char_dim;
  if (given("--disc-dim")) t.disc_dim = f.disc_dim;
  if (given("--windows")) t.windows = f.windows;
  if (given("--disc-windows")) t.disc_windows = f.disc_windows;
  if (given("--max-char-len")) t.max_char_len = f.max_char_len;
  if (given("--max-disc-len")) t.max_disc_len = f.max_disc_len;
  if (given("--activation")) {
    nlohmann::json j = t.to_json();
    j["activation"] = f.activation;
    t = TrainConfig::from_json(j);
  }
  if (given("--svm-c")) rc.spec.svm.c = f.svm_c;
  if (given("--svm-tol")) rc.spec.svm.tol = f.svm_tol;
  if (given("--svm-max-iter")) rc.spec.svm.max_iter = f.svm_max_iter;
  if (given("--seed")) rc.seed = f.seed;
  if (given("--jobs")) rc.jobs = f.jobs;
  if (given("--out")) rc.out = f.out;
  if (given("--sizes")) rc.sizes = f.sizes;
  if (given("--token")) rc.tokens = f.tokens;
  if (given("--top-k")) rc.top_k = f.top_k;
  if (given("--instances")) rc.instances = f.instances;
  if (given("--tolerance")) rc.tolerance = f.tolerance;
  if (given("--preset")) {
    const uint64_t seed = rc.synth.seed;
    rc.synth = synth_preset(f.preset);
    rc.synth.seed = seed;
  }
  if (rc.task == "synth" && given("--seed")) rc.synth.seed = f.seed;
  t.seed = rc.seed;
  if (rc.jobs < 1) throw Error(ErrorKind::kConfig, "--jobs must be at least 1");
  if (rc.chunk_size == 0) throw Error(ErrorKind::kConfig, "--chunk-size must be positive");
  return rc;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kMissingFile, "cannot write " + path.string());
  out << content;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

std::vector<AnnotatedDocument> load_corpus(const RunConfig& rc) {
  if (rc.manifest.empty()) throw Error(ErrorKind::kConfig, "--manifest is required");
  return load_annotations(load_manifest(rc.manifest));
}

ExperimentOptions options_of(const RunConfig& rc) {
  return {rc.folds, rc.seed, rc.jobs, rc.oversample};
}

int cmd_experiment(const RunConfig& rc, std::ostream& out) {
  rc.spec.validate();
  const auto docs = load_corpus(rc);
  const Dataset data = build_dataset(docs, rc.chunk_size);
  const ModelSpec spec = rc.spec;
  const ClassifierFactory factory = [spec] { return make_classifier(spec); };
  ExperimentResult result = rc.task == "pairwise" ? run_pairwise(data, factory, options_of(rc))
                                                  : run_multiclass(data, factory, options_of(rc));
  describe(result, rc.spec, rc.chunk_size);
  const fs::path dir = rc.out;
  write_json(dir / "run.json", rc.to_json());
  write_json(dir / "results.json", {{"config", rc.to_json()}, {"result", result_to_json(result)}});
  write_file(dir / "results.csv", results_csv_header() + results_csv_rows(rc.task, result));
  out << rc.task << ' ' << rc.spec.label() << " size=" << rc.chunk_size << ' ' << result.metric
      << '=' << result.mean << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& rc, std::ostream& out) {
  rc.spec.validate();
  const auto docs = load_corpus(rc);
  std::vector<ModelSpec> specs;
  if (rc.spec.model != "cnn2") {
    ModelSpec baseline;
    baseline.train = rc.spec.train;
    specs.push_back(baseline);
  }
  specs.push_back(rc.spec);
  const auto rows = chunk_sweep(docs, rc.sizes, specs, options_of(rc));
  const fs::path dir = rc.out;
  nlohmann::json j = {{"config", rc.to_json()}, {"rows", nlohmann::json::array()}};
  std::string flat = results_csv_header();
  for (const SweepRow& row : rows) {
    j["rows"].push_back({{"size", row.size},
                         {"model", row.model},
                         {"disc_type", row.disc_type},
                         {"reading", row.reading},
                         {"n_chunks", row.n_chunks},
                         {"macro_f1", row.macro_f1},
                         {"result", result_to_json(row.result)}});
    flat += results_csv_rows("sweep", row.result);
    out << "sweep size=" << row.size << ' ' << row.model << " macro_f1=" << row.macro_f1 << '\n';
  }
  write_json(dir / "run.json", rc.to_json());
  write_json(dir / "results.json", j);
  write_file(dir / "results.csv", flat);
  write_file(dir / "sweep.csv", sweep_csv(rows));
  return 0;
}

int cmd_featurize(const RunConfig& rc, std::ostream& out) {
  if (rc.spec.disc == DiscType::kNone && rc.spec.reading != Reading::kNone) {
    throw Error(ErrorKind::kConfig, "a reading only applies to discourse features (disc is none)");
  }
  if (rc.spec.reading == Reading::kEduOrder && rc.spec.disc != DiscType::kRst) {
    throw Error(ErrorKind::kConfig, "the edu-order reading is defined for RST relations only");
  }
  const auto docs = load_corpus(rc);
  const Dataset data = build_dataset(docs, rc.chunk_size);
  const DiscourseFeaturizer featurizer(rc.spec.disc, rc.spec.reading, rc.spec.gaps);
  Vocab relations;
  if (rc.spec.disc == DiscType::kRst) {
    std::vector<DiscourseSequence> seqs;
    for (const Sample& s : data.samples) seqs.push_back({featurizer.relation_labels(s)});
    relations = build_vocab(seqs, 1);
  }
  std::ostringstream lines;
  for (const Sample& s : data.samples) {
    nlohmann::json j = {{"doc_id", s.doc_id}, {"author", s.author}, {"pv", nullptr}, {"de", nullptr}};
    if (rc.spec.disc != DiscType::kNone) {
      if (auto pv = featurizer.pv(s, relations)) j["pv"] = pv->probs;
      if (rc.spec.reading != Reading::kNone) j["de"] = featurizer.sequence(s).tokens;
    }
    lines << j.dump() << '\n';
  }
  const fs::path dir = rc.out;
  write_json(dir / "run.json", rc.to_json());
  write_file(dir / "features.jsonl", lines.str());
  out << "featurize " << data.samples.size() << " chunks -> " << (dir / "features.jsonl").string()
      << '\n';
  return 0;
}

// Trains on every chunk of the corpus.
std::pair<std::unique_ptr<Classifier>, std::vector<std::string>> fit_all(const RunConfig& rc,
                                                                         const Dataset& data) {
  const std::vector<std::string> classes = data.authors();
  std::vector<const Sample*> samples;
  std::vector<int> labels;
  for (const Sample& s : data.samples) {
    samples.push_back(&s);
    labels.push_back(static_cast<int>(
        std::lower_bound(classes.begin(), classes.end(), s.author) - classes.begin()));
  }
  auto clf = make_classifier(rc.spec);
  clf->fit(samples, labels, classes.size(), Rng::mix(rc.seed, 100));
  return {std::move(clf), classes};
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  rc.spec.validate();
  const auto docs = load_corpus(rc);
  const Dataset data = build_dataset(docs, rc.chunk_size);
  auto [clf, classes] = fit_all(rc, data);
  const fs::path dir = rc.out;
  write_json(dir / "run.json", rc.to_json());
  nlohmann::json meta = {{"classes", classes}, {"config", rc.to_json()}};
  if (auto* cnn = dynamic_cast<CnnClassifier*>(clf.get())) {
    meta["vocab"] = cnn->vocab_meta();
    meta["epoch_loss"] = cnn->loss_trace();
    save_checkpoint(cnn->params(), meta, dir / "model.ckpt");
  } else {
    const auto& svm = dynamic_cast<SvmClassifier&>(*clf);
    save_linear_model(svm.model(), meta, dir / "model.ckpt");
  }
  out << "train " << rc.spec.label() << " on " << data.samples.size() << " chunks -> "
      << (dir / "model.ckpt").string() << '\n';
  return 0;
}

int cmd_neighbors(const RunConfig& rc, std::ostream& out) {
  rc.spec.validate();
  if (rc.spec.model != "cnn2-de") {
    throw Error(ErrorKind::kConfig, "neighbors needs --model cnn2-de (it reads discourse embeddings)");
  }
  const auto docs = load_corpus(rc);
  const Dataset data = build_dataset(docs, rc.chunk_size);
  auto [clf, classes] = fit_all(rc, data);
  const auto& cnn = dynamic_cast<const CnnClassifier&>(*clf);
  std::vector<std::string> queries = rc.tokens;
  if (queries.empty()) {
    for (const auto& tok : cnn.disc_vocab().tokens()) {
      if (tok != kPadToken && tok != kUnkToken) queries.push_back(tok);
    }
  }
  nlohmann::json j = nlohmann::json::object();
  for (const std::string& q : queries) {
    nlohmann::json list = nlohmann::json::array();
    out << q << ':';
    for (const Neighbor& n : nearest_neighbors(cnn.params().disc_emb, cnn.disc_vocab(), q, rc.top_k)) {
      list.push_back({{"token", n.token}, {"similarity", n.similarity}});
      out << ' ' << n.token << '(' << n.similarity << ')';
    }
    out << '\n';
    j[q] = list;
  }
  const fs::path dir = rc.out;
  write_json(dir / "run.json", rc.to_json());
  write_json(dir / "neighbors.json", j);
  return 0;
}

int cmd_gradcheck(const RunConfig& rc, const CLI::App* app, std::ostream& out) {
  const double tol = rc.tolerance;
  const ModelKind kind = parse_model_kind(rc.spec.model);
  const GradSuiteResult r = run_grad_suite(kind, rc.instances, rc.seed, tol);
  out << "gradcheck " << model_kind_name(kind) << " instances=" << r.instances.size()
      << " max_rel_error=" << r.max_rel_error << (r.passed(tol) ? " PASS" : " FAIL")
      << '\n';
  if (app->count("--out") > 0) {
    nlohmann::json j = {{"model", std::string(model_kind_name(kind))},
                        {"max_rel_error", r.max_rel_error},
                        {"tolerance", tol},
                        {"instances", nlohmann::json::array()}};
    for (const auto& rep : r.instances) {
      j["instances"].push_back({{"max_rel_error", rep.max_rel_error},
                                {"checked", rep.checked},
                                {"worst_tensor", rep.worst_tensor}});
    }
    write_json(fs::path(rc.out) / "run.json", rc.to_json());
    write_json(fs::path(rc.out) / "gradcheck.json", j);
  }
  return r.passed(tol) ? 0 : 1;
}

int cmd_synth(const RunConfig& rc, std::ostream& out) {
  const auto docs = generate_corpus(rc.synth);
  write_corpus(docs, rc.out);
  write_json(fs::path(rc.out) / "run.json", rc.to_json());
  out << "synth " << docs.size() << " documents -> " << rc.out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discourse-aware authorship attribution experiments", "aa"};
  app.require_subcommand(1);
  Flags f;
  const auto experiment = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_experiment_flags(sub, f);
    add_run_flags(sub, f);
    return sub;
  };
  experiment("featurize", "dump per-chunk probability vectors and discourse sequences");
  experiment("pairwise", "cross-validated accuracy over every author pair");
  experiment("multiclass", "cross-validated macro-F1 over all authors");
  CLI::App* sweep = experiment("sweep", "multiclass runs across chunk sizes");
  sweep->add_option("--sizes", f.sizes, "chunk sizes (default 200..2000 step 200)")->delimiter(',');
  CLI::App* neighbors = experiment("neighbors", "nearest discourse embeddings of a trained CNN2-DE");
  neighbors->add_option("--token", f.tokens, "query token (repeatable; default all)");
  neighbors->add_option("--top-k", f.top_k);
  experiment("train", "train one model on the whole corpus and save a checkpoint");
  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
  grad->add_option("--model", f.model, "cnn2 | cnn2-pv | cnn2-de");
  grad->add_option("--instances", f.instances, "random instances (default 10)");
  grad->add_option("--tolerance", f.tolerance, "largest accepted relative error (default 1e-4)");
  add_run_flags(grad, f);
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic annotated corpus");
  synth->add_option("--preset", f.preset, "discourse | char | sparse | interchangeable");
  add_run_flags(synth, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const CLI::App* sub = app.get_subcommands().front();
  try {
    const RunConfig rc = resolve(sub, f);
    const std::string& task = rc.task;
    if (task == "pairwise" || task == "multiclass") return cmd_experiment(rc, out);
    if (task == "sweep") return cmd_sweep(rc, out);
    if (task == "featurize") return cmd_featurize(rc, out);
    if (task == "train") return cmd_train(rc, out);
    if (task == "neighbors") return cmd_neighbors(rc, out);
    if (task == "gradcheck") return cmd_gradcheck(rc, sub, out);
    if (task == "synth") return cmd_synth(rc, out);
    err << "aa: unknown subcommand " << task << '\n';
    return 2;
  } catch (const Error& e) {
    err << "aa: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? 2 : 3;
  } catch (const std::exception& e) {
    err << "aa: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace aa
