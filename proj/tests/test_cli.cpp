#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "mvmi/cli.hpp"
#include "mvmi/graph.hpp"
#include "mvmi/synth.hpp"

using namespace mvmi;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir() {
  fs::path p = fs::temp_directory_path() / "mvmi_cli_test";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// A dataset small enough for end-to-end runs in test time.
void write_small_dataset(const fs::path& dir) {
  GraphDataset ds;
  ds.name = dir.filename().string();
  ds.n = 24;
  ds.d = 5;
  Pcg32 rng(77);
  ds.features = DenseMatrix(24, 5);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 5; ++j)
      ds.features(i, j) = static_cast<float>(rng.normal()) + (i / 12 == j ? 2.0f : 0.0f);
  for (int i = 0; i + 1 < 24; ++i) ds.edges.emplace_back(i, i + 1);
  ds.labels.resize(24);
  for (int i = 0; i < 24; ++i) ds.labels[i] = i / 12;
  ds.num_classes = 2;
  save_dataset(ds, dir.string());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("help exits 0, unknown flags exit 1") {
  CHECK(dispatch({"--help"}) == 0);
  CHECK(dispatch({"train", "--help"}) == 0);
  CHECK(dispatch({"--bogus"}) == 1);
  CHECK(dispatch({"train", "--bogus-flag", "x"}) == 1);
  CHECK(dispatch({}) == 1);
}

TEST_CASE("missing dataset directory exits 2") {
  fs::path dir = work_dir();
  CHECK(dispatch({"train", "--dataset", (dir / "nope").string(), "--out",
                  (dir / "out").string()}) == 2);
}

TEST_CASE("synth writes a dataset directory with exactly one manifest") {
  fs::path dir = work_dir();
  const fs::path out = dir / "fea";
  CHECK(dispatch({"synth", "--kind", "feature", "--seed", "7", "--out", out.string()}) == 0);
  CHECK(fs::exists(out / "edges.tsv"));
  CHECK(fs::exists(out / "features.csv"));
  CHECK(fs::exists(out / "labels.txt"));
  int manifests = 0;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename().string().find("manifest") != std::string::npos) ++manifests;
  CHECK(manifests == 1);
  const json m = read_json(out / "manifest.json");
  CHECK(m.at("command") == "synth");
  CHECK(m.at("tool_version") == std::string(kToolVersion));
  CHECK(m.at("config").at("edges_undirected").get<long>() > 20000);

  GraphDataset ds = load_dataset(out.string());
  CHECK(ds.n == 2400);
  CHECK(ds.d == 20);
}

TEST_CASE("knn-graph exports edges without touching the input dataset") {
  fs::path dir = work_dir();
  const fs::path data = dir / "data";
  write_small_dataset(data);
  const auto before = fs::last_write_time(data / "edges.tsv");

  const fs::path out = dir / "knn";
  CHECK(dispatch({"knn-graph", "--dataset", data.string(), "--k", "2", "--metric", "cosine",
                  "--out", out.string()}) == 0);
  CHECK(fs::exists(out / "edges.tsv"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::last_write_time(data / "edges.tsv") == before);

  std::ifstream in(out / "edges.tsv");
  int a, b, lines = 0;
  while (in >> a >> b) {
    CHECK(a < b);
    ++lines;
  }
  CHECK(lines >= 24);  // K=2 union graph on 24 nodes
}

TEST_CASE("train/embed/eval/report end to end on a small dataset") {
  fs::path dir = work_dir();
  const fs::path data = dir / "data";
  write_small_dataset(data);

  const fs::path run = dir / "run";
  CHECK(dispatch({"train", "--dataset", data.string(), "--model", "mvmift", "--k", "2",
                  "--epochs", "5", "--hidden", "8", "--seed", "3", "--out",
                  run.string()}) == 0);
  CHECK(fs::exists(run / "manifest.json"));
  CHECK(fs::exists(run / "checkpoint.bin"));
  CHECK(fs::exists(run / "losses.csv"));
  CHECK(fs::exists(run / "config.json"));
  const json cfg = read_json(run / "config.json");
  CHECK(cfg.at("epochs") == 5);
  CHECK(cfg.at("hidden") == 8);

  const fs::path emb = dir / "emb.csv";
  CHECK(dispatch({"embed", "--model", run.string(), "--dataset", data.string(), "--out",
                  emb.string()}) == 0);
  CHECK(fs::exists(emb));
  CHECK(fs::exists(emb.string() + ".bin"));

  const fs::path eval_dir = dir / "eval";
  CHECK(dispatch({"eval", "classify", "--embeddings", emb.string() + ".bin", "--dataset",
                  data.string(), "--runs", "3", "--per-class", "4", "--label", "demo",
                  "--out", eval_dir.string()}) == 0);
  const json report = read_json(eval_dir / "report.json");
  CHECK(report.at("task") == "classify");
  CHECK(report.at("runs").size() == 3);
  const double mean = report.at("summary").at("accuracy").at("mean").get<double>();
  CHECK(mean >= 0.0);
  CHECK(mean <= 1.0);

  const fs::path cluster_dir = dir / "cluster";
  CHECK(dispatch({"eval", "cluster", "--embeddings", emb.string() + ".bin", "--dataset",
                  data.string(), "--label", "demo", "--out", cluster_dir.string()}) == 0);
  const json cl = read_json(cluster_dir / "report.json");
  CHECK(cl.at("task") == "cluster");
  CHECK(cl.at("summary").contains("nmi"));
  CHECK(cl.at("summary").contains("ch"));

  const fs::path summary = dir / "summary";
  CHECK(dispatch({"report", "--out", summary.string(),
                  (eval_dir / "report.json").string()}) == 0);
  CHECK(fs::exists(summary.string() + ".csv"));
  CHECK(fs::exists(summary.string() + ".json"));

  // Mixing tasks in one report run is a contract error (exit 1).
  CHECK(dispatch({"report", "--out", summary.string(), (eval_dir / "report.json").string(),
                  (cluster_dir / "report.json").string()}) == 1);

  // Input dataset directory is untouched by everything above.
  for (const auto& e : fs::directory_iterator(data))
    CHECK(e.path().filename().string().find("manifest") == std::string::npos);
}

TEST_CASE("config file overlays defaults and flags override the file") {
  fs::path dir = work_dir();
  const fs::path data = dir / "data";
  write_small_dataset(data);

  const fs::path cfg_empty = dir / "empty.json";
  std::ofstream(cfg_empty) << "{}";
  const fs::path run1 = dir / "run1";
  CHECK(dispatch({"train", "--dataset", data.string(), "--config", cfg_empty.string(),
                  "--epochs", "2", "--hidden", "8", "--out", run1.string()}) == 0);
  json resolved = read_json(run1 / "config.json");
  // Untouched keys keep their stock values.
  CHECK(resolved.at("lr").get<double>() == doctest::Approx(0.001));
  CHECK(resolved.at("k") == 3);
  CHECK(resolved.at("lambda_c").get<double>() == doctest::Approx(0.3));
  CHECK(resolved.at("lambda_d").get<double>() == doctest::Approx(0.01));

  const fs::path cfg_k4 = dir / "k4.json";
  std::ofstream(cfg_k4) << R"({"k": 4, "epochs": 2, "hidden": 8})";
  const fs::path run2 = dir / "run2";
  CHECK(dispatch({"train", "--dataset", data.string(), "--config", cfg_k4.string(), "--out",
                  run2.string()}) == 0);
  CHECK(read_json(run2 / "config.json").at("k") == 4);

  const fs::path run3 = dir / "run3";
  CHECK(dispatch({"train", "--dataset", data.string(), "--config", cfg_k4.string(), "--k",
                  "5", "--out", run3.string()}) == 0);
  CHECK(read_json(run3 / "config.json").at("k") == 5);

  const fs::path cfg_bad = dir / "bad.json";
  std::ofstream(cfg_bad) << R"({"hideen": 8})";
  CHECK(dispatch({"train", "--dataset", data.string(), "--config", cfg_bad.string(), "--out",
                  (dir / "run4").string()}) == 1);
}

TEST_CASE("rerunning a command reproduces byte-identical data outputs") {
  fs::path dir = work_dir();
  const fs::path data = dir / "data";
  write_small_dataset(data);
  auto train_to = [&](const fs::path& out) {
    REQUIRE(dispatch({"train", "--dataset", data.string(), "--epochs", "4", "--hidden", "8",
                      "--seed", "11", "--out", out.string()}) == 0);
  };
  train_to(dir / "a");
  train_to(dir / "b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "a" / "checkpoint.bin") == slurp(dir / "b" / "checkpoint.bin"));
  CHECK(slurp(dir / "a" / "losses.csv") == slurp(dir / "b" / "losses.csv"));
}
