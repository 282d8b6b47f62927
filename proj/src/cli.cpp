#include "mvmi/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvmi/evalkit.hpp"
#include "mvmi/pipeline.hpp"
#include "mvmi/synth.hpp"

namespace mvmi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Manifest goes in before any other output; written to a temp name and
// renamed so a crash never leaves a half manifest behind.
void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    std::uint64_t fingerprint, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  fs::create_directories(dir);
  json j{{"command", command},
         {"config", config},
         {"dataset_fingerprint", hex64(fingerprint)},
         {"tool_version", kToolVersion},
         {"seed", seed},
         {"created_at", iso_timestamp()},
         {"outputs", outputs}};
  const fs::path tmp = dir / ".manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, dir / "manifest.json");
}

int default_threads() {
  if (const char* env = std::getenv("MVMI_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

struct TrainArgs {
  std::string dataset, out, config_path;
  std::string model = "mvmift";
  std::string metric = "cosine";
  TrainConfig cfg;
  bool no_reconstruction = false;
  bool no_disagreement = false;
};

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--dataset", a.dataset, "dataset directory")->required();
  cmd->add_option("--out", a.out, "output directory")->required();
  cmd->add_option("--config", a.config_path, "JSON config file (flags override it)");
  cmd->add_option("--model", a.model, "mvmift|dgi");
  cmd->add_option("--k", a.cfg.knn_k, "KNN neighbor count for the feature view");
  cmd->add_option("--lambda-c", a.cfg.lambda_c, "common module weight");
  cmd->add_option("--lambda-d", a.cfg.lambda_d, "disagreement weight");
  cmd->add_option("--epochs", a.cfg.epochs, "training epochs");
  cmd->add_option("--hidden", a.cfg.hidden, "hidden dimension");
  cmd->add_option("--lr", a.cfg.lr, "learning rate");
  cmd->add_option("--seed", a.cfg.seed, "RNG seed");
  cmd->add_option("--metric", a.metric, "cosine|euclidean KNN metric");
  cmd->add_option("--pairs-per-node", a.cfg.pairs_per_node,
                  "reconstruction pairs sampled per node per view");
  cmd->add_option("--patience", a.cfg.patience, "early stopping patience (0 = off)");
  cmd->add_option("--threads", a.cfg.threads, "matmul threads (1 = deterministic)");
  cmd->add_flag("--no-reconstruction", a.no_reconstruction, "drop the reconstruction term");
  cmd->add_flag("--no-disagreement", a.no_disagreement, "drop the disagreement term");
}

TrainConfig resolve_train_config(const CLI::App* cmd, TrainArgs& a) {
  TrainConfig resolved;  // defaults
  resolved.threads = default_threads();
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw IoError("cannot read config " + a.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError(a.config_path + ": " + e.what());
    }
    resolved.apply_json(j);
  }
  // Flags win over the file; only explicitly passed flags are copied.
  json overrides = json::object();
  auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (passed("--model")) overrides["model"] = a.model;
  if (passed("--k")) overrides["k"] = a.cfg.knn_k;
  if (passed("--lambda-c")) overrides["lambda_c"] = a.cfg.lambda_c;
  if (passed("--lambda-d")) overrides["lambda_d"] = a.cfg.lambda_d;
  if (passed("--epochs")) overrides["epochs"] = a.cfg.epochs;
  if (passed("--hidden")) overrides["hidden"] = a.cfg.hidden;
  if (passed("--lr")) overrides["lr"] = a.cfg.lr;
  if (passed("--seed")) overrides["seed"] = a.cfg.seed;
  if (passed("--metric")) overrides["metric"] = a.metric;
  if (passed("--pairs-per-node")) overrides["pairs_per_node"] = a.cfg.pairs_per_node;
  if (passed("--patience")) overrides["patience"] = a.cfg.patience;
  if (passed("--threads")) overrides["threads"] = a.cfg.threads;
  if (a.no_reconstruction) overrides["use_reconstruction"] = false;
  if (a.no_disagreement) overrides["use_disagreement"] = false;
  resolved.apply_json(overrides);
  return resolved;
}

int run_train(const CLI::App* cmd, TrainArgs& a) {
  TrainConfig cfg = resolve_train_config(cmd, a);
  GraphDataset ds = load_dataset(a.dataset);
  write_manifest(a.out, "train", cfg.to_json(), dataset_fingerprint(ds), cfg.seed,
                 {"checkpoint.bin", "losses.csv", "config.json"});
  {
    std::ofstream out(fs::path(a.out) / "config.json");
    out << cfg.to_json().dump(2) << '\n';
  }
  const int report_every = std::max(1, cfg.epochs / 10);
  TrainedModel model = train(ds, cfg, [&](int epoch, const LossBreakdown& lb) {
    if (epoch % report_every == 0 || epoch == cfg.epochs)
      std::cerr << "epoch " << epoch << " total " << lb.total << "\n";
  });
  save_checkpoint(model, (fs::path(a.out) / "checkpoint.bin").string());
  write_losses_csv(model.history, (fs::path(a.out) / "losses.csv").string());
  return 0;
}

int run_synth(const std::string& kind, std::uint64_t seed, double center_scale,
              const std::string& out) {
  SynthConfig cfg;
  cfg.kind = parse_synth_kind(kind);
  cfg.seed = seed;
  if (center_scale > 0.0) cfg.center_scale = center_scale;
  GraphDataset ds = generate_synthetic(cfg);
  write_manifest(out, "synth",
                 json{{"kind", kind},
                      {"seed", seed},
                      {"center_scale", cfg.center_scale},
                      {"edges_undirected", ds.undirected_edge_count()},
                      {"edges_directed", ds.directed_edge_count()}},
                 dataset_fingerprint(ds), seed,
                 {"edges.tsv", "features.csv", "labels.txt"});
  save_dataset(ds, out);
  std::cerr << "generated " << ds.n << " nodes, " << ds.undirected_edge_count()
            << " undirected edges (" << ds.directed_edge_count() << " directed)\n";
  return 0;
}

int run_knn_graph(const std::string& dataset, int k, const std::string& metric,
                  std::string out) {
  GraphDataset ds = load_dataset(dataset);
  FeatureGraph fg = build_knn_graph(ds.features, k, parse_metric(metric));
  if (out.empty()) out = dataset + "-knn-k" + std::to_string(k) + "-" + metric;
  write_manifest(out, "knn-graph",
                 json{{"dataset", dataset},
                      {"k", k},
                      {"metric", metric},
                      {"edges_undirected", fg.edges.size()}},
                 dataset_fingerprint(ds), 0, {"edges.tsv"});
  std::ofstream edges(fs::path(out) / "edges.tsv");
  if (!edges) throw IoError("cannot write " + out + "/edges.tsv");
  for (auto [a, b] : fg.edges) edges << a << '\t' << b << '\n';
  return 0;
}

int run_embed(const std::string& model_dir, const std::string& dataset,
              const std::string& out) {
  fs::path ckpt = model_dir;
  if (fs::is_directory(ckpt)) ckpt /= "checkpoint.bin";
  TrainedModel model = load_checkpoint(ckpt.string());
  GraphDataset ds = load_dataset(dataset);
  DenseMatrix emb = export_embeddings(model, ds);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  write_embeddings_csv(emb, out);
  write_embeddings_bin(emb, out + ".bin");
  json j{{"command", "embed"},
         {"model", ckpt.string()},
         {"dataset", dataset},
         {"dataset_fingerprint", hex64(model.fingerprint)},
         {"tool_version", kToolVersion},
         {"created_at", iso_timestamp()},
         {"outputs", {out, out + ".bin"}}};
  std::ofstream mf(out + ".manifest.json");
  mf << j.dump(2) << '\n';
  return 0;
}

struct EvalArgs {
  std::string embeddings, dataset, out, label;
  int runs = 0;
  std::uint64_t seed = 1;
  bool resample_split = false;
  int per_class = 20;
};

int run_eval_classify(EvalArgs& a) {
  if (a.runs == 0) a.runs = 50;
  GraphDataset ds = load_dataset(a.dataset);
  DenseMatrix emb = load_embeddings(a.embeddings);
  contract(emb.rows() == ds.n, "eval: embeddings have " + std::to_string(emb.rows()) +
                                   " rows for " + std::to_string(ds.n) + " nodes");
  ProbeOptions opts;
  opts.runs = a.runs;
  opts.seed = a.seed;
  opts.per_class = a.per_class;
  // Public splits stay fixed across runs; datasets without one get a
  // fresh split per run.
  opts.resample_split = a.resample_split || !ds.split.has_value();
  Split split = ds.split ? *ds.split : make_split(ds.labels, a.per_class, a.seed);
  EvalReport report = linear_probe(emb, ds.labels, split, opts);
  report.label = a.label.empty() ? ds.name : a.label;

  write_manifest(a.out, "eval classify", report.config, dataset_fingerprint(ds), a.seed,
                 {"report.json", "report.csv"});
  std::ofstream out(fs::path(a.out) / "report.json");
  out << report.to_json().dump(2) << '\n';
  report.write_csv((fs::path(a.out) / "report.csv").string());
  std::cout << "accuracy " << report.mean("accuracy") << " +/- " << report.stddev("accuracy")
            << " over " << a.runs << " runs\n";
  return 0;
}

int run_eval_cluster(EvalArgs& a) {
  if (a.runs == 0) a.runs = 1;
  GraphDataset ds = load_dataset(a.dataset);
  DenseMatrix emb = load_embeddings(a.embeddings);
  contract(emb.rows() == ds.n, "eval: embeddings have " + std::to_string(emb.rows()) +
                                   " rows for " + std::to_string(ds.n) + " nodes");
  EvalReport report;
  report.task = "cluster";
  report.label = a.label.empty() ? ds.name : a.label;
  report.metric_names = {"nmi", "ari", "ch", "sh"};
  report.config = {{"runs", a.runs}, {"seed", a.seed}, {"k", ds.num_classes}};
  for (int r = 0; r < a.runs; ++r) {
    const std::uint64_t run_seed = a.seed + static_cast<std::uint64_t>(r);
    Pcg32 rng(run_seed, 3);
    KmeansResult km = kmeans(emb, ds.num_classes, rng);
    report.runs.push_back({nmi(km.assignment, ds.labels), ari(km.assignment, ds.labels),
                           calinski_harabasz(emb, km.assignment),
                           silhouette(emb, km.assignment)});
    report.seeds.push_back(run_seed);
  }
  write_manifest(a.out, "eval cluster", report.config, dataset_fingerprint(ds), a.seed,
                 {"report.json", "report.csv"});
  std::ofstream out(fs::path(a.out) / "report.json");
  out << report.to_json().dump(2) << '\n';
  report.write_csv((fs::path(a.out) / "report.csv").string());
  std::cout << "nmi " << report.mean("nmi") << " ari " << report.mean("ari") << " ch "
            << report.mean("ch") << " sh " << report.mean("sh") << "\n";
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<EvalReport> reports;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError(path + ": " + e.what());
    }
    reports.push_back(EvalReport::from_json(j));
  }
  auto rows = aggregate(reports);
  write_aggregate_csv(rows, out + ".csv");
  std::ofstream jout(out + ".json");
  if (!jout) throw IoError("cannot write " + out + ".json");
  jout << aggregate_json(rows).dump(2) << '\n';
  for (const auto& r : rows)
    std::cout << r.label << ' ' << r.metric << ' ' << r.mean << " +/- " << r.stddev << " ("
              << r.runs << " runs)\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"unsupervised node embeddings across feature and topology views"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // synth
  std::string synth_kind = "feature", synth_out;
  std::uint64_t synth_seed = 1;
  double synth_center_scale = 0.0;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  synth->add_option("--kind", synth_kind, "feature|topology")->required();
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--center-scale", synth_center_scale,
                    "distance of class centers from the origin");
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  // knn-graph
  std::string knn_dataset, knn_metric = "cosine", knn_out;
  int knn_k = 3;
  CLI::App* knng = app.add_subcommand("knn-graph", "export the feature-view KNN graph");
  knng->add_option("--dataset", knn_dataset, "dataset directory")->required();
  knng->add_option("--k", knn_k, "neighbors per node");
  knng->add_option("--metric", knn_metric, "cosine|euclidean");
  knng->add_option("--out", knn_out, "output directory (default <dataset>-knn-k<K>-<metric>)");

  // train
  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  add_train_flags(train_cmd, train_args);

  // embed
  std::string embed_model, embed_dataset, embed_out;
  CLI::App* embed = app.add_subcommand("embed", "export embeddings from a checkpoint");
  embed->add_option("--model", embed_model, "run directory or checkpoint file")->required();
  embed->add_option("--dataset", embed_dataset, "dataset directory")->required();
  embed->add_option("--out", embed_out, "output CSV path (binary twin written as .bin)")
      ->required();

  // eval classify|cluster
  CLI::App* eval = app.add_subcommand("eval", "evaluate exported embeddings");
  eval->require_subcommand(1);
  EvalArgs ec, ek;
  CLI::App* classify = eval->add_subcommand("classify", "linear probe accuracy");
  classify->add_option("--embeddings", ec.embeddings, "embedding file")->required();
  classify->add_option("--dataset", ec.dataset, "dataset directory")->required();
  classify->add_option("--runs", ec.runs, "probe runs (default 50)");
  classify->add_option("--seed", ec.seed, "base seed");
  classify->add_option("--per-class", ec.per_class, "train nodes per class when resampling");
  classify->add_flag("--resample-split", ec.resample_split,
                     "draw a fresh split per run even if the dataset ships one");
  classify->add_option("--label", ec.label, "row label used by `report`");
  classify->add_option("--out", ec.out, "output directory")->required();

  CLI::App* cluster = eval->add_subcommand("cluster", "k-means clustering quality");
  cluster->add_option("--embeddings", ek.embeddings, "embedding file")->required();
  cluster->add_option("--dataset", ek.dataset, "dataset directory")->required();
  cluster->add_option("--runs", ek.runs, "clustering runs (default 1)");
  cluster->add_option("--seed", ek.seed, "base seed");
  cluster->add_option("--label", ek.label, "row label used by `report`");
  cluster->add_option("--out", ek.out, "output directory")->required();

  // report
  std::vector<std::string> report_inputs;
  std::string report_out = "summary";
  CLI::App* report = app.add_subcommand("report", "aggregate eval reports into one table");
  report->add_option("--out", report_out, "output prefix (.csv and .json)");
  report->add_option("inputs", report_inputs, "report.json files")->required();

  std::vector<const char*> argv;
  argv.push_back("mvmi");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) return run_synth(synth_kind, synth_seed, synth_center_scale, synth_out);
    if (*knng) return run_knn_graph(knn_dataset, knn_k, knn_metric, knn_out);
    if (*train_cmd) return run_train(train_cmd, train_args);
    if (*embed) return run_embed(embed_model, embed_dataset, embed_out);
    if (*classify) return run_eval_classify(ec);
    if (*cluster) return run_eval_cluster(ek);
    if (*report) return run_report(report_inputs, report_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mvmi
