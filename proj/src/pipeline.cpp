#include "mvmi/pipeline.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mvmi {

using nlohmann::json;

ModelKind parse_model_kind(const std::string& name) {
  if (name == "mvmift") return ModelKind::kMvmift;
  if (name == "dgi") return ModelKind::kDgi;
  throw ContractError("unknown model '" + name + "' (expected mvmift|dgi)");
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::kMvmift ? "mvmift" : "dgi";
}

json TrainConfig::to_json() const {
  return json{{"model", model_kind_name(model)},
              {"hidden", hidden},
              {"lr", lr},
              {"epochs", epochs},
              {"k", knn_k},
              {"lambda_c", lambda_c},
              {"lambda_d", lambda_d},
              {"metric", metric_name(metric)},
              {"seed", seed},
              {"use_reconstruction", use_reconstruction},
              {"use_disagreement", use_disagreement},
              {"pairs_per_node", pairs_per_node},
              {"patience", patience},
              {"threads", threads}};
}

void TrainConfig::apply_json(const json& j) {
  static const char* valid =
      "model, hidden, lr, epochs, k, lambda_c, lambda_d, metric, seed, "
      "use_reconstruction, use_disagreement, pairs_per_node, patience, threads";
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "model")
      model = parse_model_kind(it.value().get<std::string>());
    else if (key == "hidden")
      hidden = it.value().get<int>();
    else if (key == "lr")
      lr = it.value().get<float>();
    else if (key == "epochs")
      epochs = it.value().get<int>();
    else if (key == "k")
      knn_k = it.value().get<int>();
    else if (key == "lambda_c")
      lambda_c = it.value().get<float>();
    else if (key == "lambda_d")
      lambda_d = it.value().get<float>();
    else if (key == "metric")
      metric = parse_metric(it.value().get<std::string>());
    else if (key == "seed")
      seed = it.value().get<std::uint64_t>();
    else if (key == "use_reconstruction")
      use_reconstruction = it.value().get<bool>();
    else if (key == "use_disagreement")
      use_disagreement = it.value().get<bool>();
    else if (key == "pairs_per_node")
      pairs_per_node = it.value().get<int>();
    else if (key == "patience")
      patience = it.value().get<int>();
    else if (key == "threads")
      threads = it.value().get<int>();
    else
      throw ContractError("unknown config key '" + key + "'; valid keys: " + valid);
  }
  contract(hidden > 0 && epochs >= 0 && lr > 0.0f, "config: hidden/epochs/lr must be positive");
  contract(lambda_c >= 0.0f && lambda_d >= 0.0f, "config: lambda values must be >= 0");
  contract(pairs_per_node >= 1, "config: pairs_per_node must be >= 1");
}

namespace {

void check_finite_loss(const LossBreakdown& lb, int epoch) {
  if (std::isfinite(lb.total)) return;
  std::ostringstream os;
  os << "train: non-finite loss at epoch " << epoch << " (l_mmi=" << lb.l_mmi
     << " l_cmi=" << lb.l_cmi << " l_r=" << lb.l_r << " l_d=" << lb.l_d
     << " total=" << lb.total << ")";
  throw ContractError(os.str());
}

bool should_stop(const std::vector<LossBreakdown>& history, int patience) {
  if (patience <= 0 || static_cast<int>(history.size()) <= patience) return false;
  double best = history[0].total;
  int best_epoch = 0;
  for (int i = 1; i < static_cast<int>(history.size()); ++i) {
    if (history[i].total < best) {
      best = history[i].total;
      best_epoch = i;
    }
  }
  return static_cast<int>(history.size()) - 1 - best_epoch >= patience;
}

void warn_stderr(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

}  // namespace

TrainedModel train_mvmift(const GraphDataset& ds, const TrainConfig& config,
                          const EpochLogFn& log) {
  contract(config.knn_k >= 0 && config.knn_k < ds.n,
           "train: K must be in [0, n); got " + std::to_string(config.knn_k));
  set_kernel_threads(config.threads);

  FeatureGraph fg = build_knn_graph(ds.features, config.knn_k, config.metric);
  SparseMatrix adj_f = normalize_adjacency(fg.edges, ds.n);
  SparseMatrix adj_t = normalize_adjacency(ds.edges, ds.n);

  TrainedModel out;
  out.kind = ModelKind::kMvmift;
  out.config = config;
  out.fingerprint = dataset_fingerprint(ds);

  Pcg32 init_rng(config.seed, 0);
  out.params = ModelParams::init(ds.d, config.hidden, init_rng);
  Pcg32 epoch_rng(config.seed, 1);
  AdamState adam(config.lr);

  bool warned = false;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> perm = corruption_permutation(ds.n, epoch_rng);
    WarnFn warn = nullptr;
    if (!warned) warn = [&](const std::string& m) { warned = true; warn_stderr(m); };
    PairSample pairs =
        sample_pairs(fg.edges, ds.edges, ds.n, config.pairs_per_node, epoch_rng, warn);

    Tape tape;
    MvmiftNodes nodes = MvmiftNodes::bind(tape, out.params);
    NodeId x = tape.constant(ds.features);
    ForwardBundle fb = mvmift_forward(tape, nodes, &adj_f, &adj_t, x, &perm);

    NodeId l_mmi = multi_view_loss(tape, fb, nodes.disc_ft, nodes.disc_tf);
    NodeId l_cmi = common_mi_loss(tape, fb, nodes.disc_c);
    NodeId l_r = reconstruction_loss(tape, fb.z_c, pairs);
    NodeId l_d = disagreement_loss(tape, fb.z_f, fb.z_cf, fb.z_t, fb.z_ct);

    NodeId l_r_used = config.use_reconstruction ? l_r : tape.constant(DenseMatrix(1, 1));
    NodeId l_d_used = config.use_disagreement ? l_d : tape.constant(DenseMatrix(1, 1));
    NodeId total =
        total_loss(tape, l_mmi, l_cmi, l_r_used, l_d_used, config.lambda_c, config.lambda_d);

    LossBreakdown lb;
    lb.l_mmi = tape.value(l_mmi)(0, 0);
    lb.l_cmi = tape.value(l_cmi)(0, 0);
    lb.l_r = tape.value(l_r)(0, 0);
    lb.l_d = tape.value(l_d)(0, 0);
    lb.total = tape.value(total)(0, 0);
    check_finite_loss(lb, epoch);

    tape.backward(total);
    std::vector<const DenseMatrix*> grads;
    for (NodeId id : nodes.all()) grads.push_back(&tape.grad(id));
    adam.step(out.params.all(), grads);

    out.history.push_back(lb);
    if (log) log(epoch, lb);
    if (should_stop(out.history, config.patience)) break;
  }
  return out;
}

TrainedModel train_dgi(const GraphDataset& ds, const TrainConfig& config,
                       const EpochLogFn& log) {
  set_kernel_threads(config.threads);
  SparseMatrix adj_t = normalize_adjacency(ds.edges, ds.n);

  TrainedModel out;
  out.kind = ModelKind::kDgi;
  out.config = config;
  out.fingerprint = dataset_fingerprint(ds);

  Pcg32 init_rng(config.seed, 0);
  out.dgi = DgiParams::init(ds.d, config.hidden, init_rng);
  Pcg32 epoch_rng(config.seed, 1);
  AdamState adam(config.lr);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> perm = corruption_permutation(ds.n, epoch_rng);

    Tape tape;
    DgiNodes nodes = DgiNodes::bind(tape, out.dgi);
    NodeId x = tape.constant(ds.features);
    DgiForward fw = dgi_forward(tape, nodes, &adj_t, x, &perm);
    NodeId objective = js_mi_objective(tape, fw.z, fw.s, fw.corr, nodes.disc);
    NodeId total = tape.scale(objective, -1.0f);

    LossBreakdown lb;
    lb.l_mmi = tape.value(objective)(0, 0);
    lb.total = tape.value(total)(0, 0);
    check_finite_loss(lb, epoch);

    tape.backward(total);
    std::vector<const DenseMatrix*> grads;
    for (NodeId id : nodes.all()) grads.push_back(&tape.grad(id));
    adam.step(out.dgi.all(), grads);

    out.history.push_back(lb);
    if (log) log(epoch, lb);
    if (should_stop(out.history, config.patience)) break;
  }
  return out;
}

TrainedModel train(const GraphDataset& ds, const TrainConfig& config, const EpochLogFn& log) {
  return config.model == ModelKind::kMvmift ? train_mvmift(ds, config, log)
                                            : train_dgi(ds, config, log);
}

DenseMatrix export_embeddings(const TrainedModel& model, const GraphDataset& ds) {
  const std::uint64_t fp = dataset_fingerprint(ds);
  if (fp != model.fingerprint) {
    std::ostringstream os;
    os << "export_embeddings: dataset fingerprint " << std::hex << fp
       << " does not match the checkpoint's " << model.fingerprint;
    throw ContractError(os.str());
  }
  set_kernel_threads(model.config.threads);
  SparseMatrix adj_t = normalize_adjacency(ds.edges, ds.n);
  Tape tape;
  NodeId x = tape.constant(ds.features);
  if (model.kind == ModelKind::kDgi) {
    DgiNodes nodes = DgiNodes::bind(tape, model.dgi);
    DgiForward fw = dgi_forward(tape, nodes, &adj_t, x, nullptr);
    return tape.value(fw.z);
  }
  FeatureGraph fg = build_knn_graph(ds.features, model.config.knn_k, model.config.metric);
  SparseMatrix adj_f = normalize_adjacency(fg.edges, ds.n);
  MvmiftNodes nodes = MvmiftNodes::bind(tape, model.params);
  ForwardBundle fb = mvmift_forward(tape, nodes, &adj_f, &adj_t, x, nullptr);
  return aggregate_inference(tape.value(fb.z_f), tape.value(fb.z_t), tape.value(fb.z_c));
}

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'V', 'C', 'K'};
constexpr char kEmbeddingMagic[4] = {'M', 'V', 'E', 'B'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError(path + ": truncated");
  return v;
}

void write_tensor(std::ostream& out, const std::string& name, const DenseMatrix& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kCheckpointMagic, 4);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  const std::string cfg = model.config.to_json().dump();
  write_pod<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_pod<std::uint64_t>(out, model.fingerprint);
  write_pod<std::uint8_t>(out, model.kind == ModelKind::kMvmift ? 0 : 1);

  auto named = model.kind == ModelKind::kMvmift
                   ? static_cast<const ModelParams&>(model.params).named()
                   : std::vector<std::pair<std::string, const DenseMatrix*>>(
                         static_cast<const DgiParams&>(model.dgi).named());
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
  for (auto& [name, m] : named) write_tensor(out, name, *m);
  if (!out) throw IoError("failed writing " + path);
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IoError(path + ": not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto cfg_len = read_pod<std::uint64_t>(in, path);
  std::string cfg(cfg_len, '\0');
  in.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) throw IoError(path + ": truncated");

  TrainedModel model;
  try {
    model.config.apply_json(json::parse(cfg));
  } catch (const json::exception& e) {
    throw IoError(path + ": bad config snapshot: " + e.what());
  }
  model.fingerprint = read_pod<std::uint64_t>(in, path);
  model.kind = read_pod<std::uint8_t>(in, path) == 0 ? ModelKind::kMvmift : ModelKind::kDgi;

  const auto count = read_pod<std::uint32_t>(in, path);
  std::vector<std::pair<std::string, DenseMatrix>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = read_pod<std::uint32_t>(in, path);
    const auto cols = read_pod<std::uint32_t>(in, path);
    DenseMatrix m(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw IoError(path + ": truncated tensor '" + name + "'");
    tensors.emplace_back(std::move(name), std::move(m));
  }

  auto named = model.kind == ModelKind::kMvmift ? model.params.named() : model.dgi.named();
  contract(named.size() == tensors.size(),
           path + ": tensor count mismatch for model kind " + model_kind_name(model.kind));
  for (auto& [name, dst] : named) {
    bool found = false;
    for (auto& [tname, tm] : tensors) {
      if (tname == name) {
        *dst = std::move(tm);
        found = true;
        break;
      }
    }
    if (!found) throw IoError(path + ": missing tensor '" + name + "'");
  }
  return model;
}

void write_losses_csv(const std::vector<LossBreakdown>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,l_mmi,l_cmi,l_r,l_d,total\n";
  out.precision(9);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& lb = history[i];
    out << (i + 1) << ',' << lb.l_mmi << ',' << lb.l_cmi << ',' << lb.l_r << ',' << lb.l_d
        << ',' << lb.total << '\n';
  }
}

void write_embeddings_csv(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(9);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_embeddings_bin(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kEmbeddingMagic, 4);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

DenseMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (in && std::memcmp(magic, kEmbeddingMagic, 4) == 0) {
    const auto rows = read_pod<std::uint32_t>(in, path);
    const auto cols = read_pod<std::uint32_t>(in, path);
    DenseMatrix m(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw IoError(path + ": truncated");
    return m;
  }
  // CSV fallback.
  in.close();
  std::ifstream text(path);
  if (!text) throw IoError("cannot read " + path);
  std::vector<float> data;
  std::string line;
  int cols = -1, rows = 0;
  std::size_t lineno = 0;
  while (std::getline(text, line)) {
    ++lineno;
    if (line.empty()) continue;
    int count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::size_t end = comma == std::string::npos ? line.size() : comma;
      try {
        data.push_back(std::stof(line.substr(pos, end - pos)));
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(lineno) + ": expected float");
      }
      ++count;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) throw IoError(path + ":" + std::to_string(lineno) + ": ragged row");
    ++rows;
  }
  if (rows == 0) throw IoError(path + ": empty embedding file");
  return DenseMatrix(rows, cols, std::move(data));
}

}  // namespace mvmi
