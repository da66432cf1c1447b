#include "motionsynth/checkpoint.hpp"

#include <fstream>
#include <map>
#include <set>

namespace motionsynth {

using nlohmann::json;

namespace {

json tensors_to_json(const VtlnParams& params) {
  json arr = json::array();
  params.visit([&](const std::string& name, const double* d, Eigen::Index r, Eigen::Index c) {
    json values = json::array();
    // Row-major serialization; Eigen stores column-major.
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) values.push_back(d[j * r + i]);
    arr.push_back({{"name", name}, {"shape", {r, c}}, {"values", std::move(values)}});
  });
  return arr;
}

void tensors_from_json(const json& arr, VtlnParams& params) {
  std::map<std::string, const json*> by_name;
  for (const auto& t : arr) by_name[t.at("name").get<std::string>()] = &t;
  std::set<std::string> seen;
  params.visit([&](const std::string& name, double* d, Eigen::Index r, Eigen::Index c) {
    auto it = by_name.find(name);
    require(it != by_name.end(), Err::corrupt_file, "checkpoint is missing tensor " + name);
    const json& t = *it->second;
    const auto& shape = t.at("shape");
    require(shape.size() == 2 && shape[0].get<Eigen::Index>() == r && shape[1].get<Eigen::Index>() == c,
            Err::corrupt_file, "tensor " + name + " has the wrong shape");
    const auto& values = t.at("values");
    require(static_cast<Eigen::Index>(values.size()) == r * c, Err::corrupt_file,
            "tensor " + name + " has the wrong element count");
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) d[j * r + i] = values[static_cast<std::size_t>(k++)].get<double>();
    seen.insert(name);
  });
  require(seen.size() == by_name.size(), Err::corrupt_file, "checkpoint holds unexpected tensors");
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

void reject_unknown_keys(const json& doc, const std::set<std::string>& known, const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it)
    require(known.count(it.key()) > 0, Err::bad_config, where + ": unknown key '" + it.key() + "'");
}

}  // namespace

json config_to_json(const VtlnConfig& cfg) {
  return json{{"hidden_top", cfg.hidden_top},
              {"hidden_body", cfg.hidden_body},
              {"dim", cfg.dim},
              {"derivative_orders", cfg.derivative_orders},
              {"derivative_spacing", cfg.derivative_spacing},
              {"actions", cfg.actions},
              {"residual_output", cfg.residual_output},
              {"use_bias", cfg.use_bias},
              {"seed_frames", cfg.seed_frames},
              {"horizon", cfg.horizon},
              {"dropout", cfg.dropout}};
}

VtlnConfig config_from_json(const json& doc) {
  reject_unknown_keys(doc,
                      {"hidden_top", "hidden_body", "dim", "derivative_orders", "derivative_spacing", "actions",
                       "residual_output", "use_bias", "seed_frames", "horizon", "dropout"},
                      "model config");
  VtlnConfig cfg;
  cfg.hidden_top = doc.value("hidden_top", cfg.hidden_top);
  cfg.hidden_body = doc.value("hidden_body", cfg.hidden_body);
  cfg.dim = doc.value("dim", cfg.dim);
  cfg.derivative_orders = doc.value("derivative_orders", cfg.derivative_orders);
  cfg.derivative_spacing = doc.value("derivative_spacing", cfg.derivative_spacing);
  cfg.actions = doc.value("actions", cfg.actions);
  cfg.residual_output = doc.value("residual_output", cfg.residual_output);
  cfg.use_bias = doc.value("use_bias", cfg.use_bias);
  cfg.seed_frames = doc.value("seed_frames", cfg.seed_frames);
  cfg.horizon = doc.value("horizon", cfg.horizon);
  cfg.dropout = doc.value("dropout", cfg.dropout);
  cfg.validate();
  return cfg;
}

json train_options_to_json(const TrainOptions& opts) {
  json lambda = json::array();
  for (const auto& s : opts.lambda) lambda.push_back({{"iteration", s.iteration}, {"value", s.value}});
  return json{{"iterations", opts.iterations},
              {"batch_size", opts.batch_size},
              {"seed", opts.seed},
              {"clip_norm", opts.clip_norm},
              {"lr", {{"initial", opts.lr.initial}, {"decay", opts.lr.decay}, {"interval", opts.lr.interval},
                      {"cutoff", opts.lr.cutoff}}},
              {"lambda_schedule", std::move(lambda)},
              {"mode", opts.mode == TrainMode::multi_objective ? "multi_objective" : "auto_conditioning"},
              {"condition_length", opts.condition_length},
              {"stop_feedback_gradients", opts.stop_feedback_gradients},
              {"threads", opts.threads},
              {"standardize", opts.standardize}};
}

TrainOptions train_options_from_json(const json& doc) {
  reject_unknown_keys(doc,
                      {"iterations", "batch_size", "seed", "clip_norm", "lr", "lambda_schedule", "mode",
                       "condition_length", "stop_feedback_gradients", "threads", "standardize"},
                      "training config");
  TrainOptions opts;
  opts.iterations = doc.value("iterations", opts.iterations);
  opts.batch_size = doc.value("batch_size", opts.batch_size);
  opts.seed = doc.value("seed", opts.seed);
  opts.clip_norm = doc.value("clip_norm", opts.clip_norm);
  if (doc.contains("lr")) {
    const json& lr = doc.at("lr");
    reject_unknown_keys(lr, {"initial", "decay", "interval", "cutoff"}, "lr schedule");
    opts.lr.initial = lr.value("initial", opts.lr.initial);
    opts.lr.decay = lr.value("decay", opts.lr.decay);
    opts.lr.interval = lr.value("interval", opts.lr.interval);
    opts.lr.cutoff = lr.value("cutoff", opts.lr.cutoff);
  }
  if (doc.contains("lambda_schedule")) {
    opts.lambda.clear();
    for (const auto& s : doc.at("lambda_schedule")) {
      reject_unknown_keys(s, {"iteration", "value"}, "lambda schedule");
      opts.lambda.push_back({s.at("iteration").get<long>(), s.at("value").get<double>()});
    }
  }
  if (doc.contains("mode")) {
    const std::string mode = doc.at("mode").get<std::string>();
    if (mode == "multi_objective")
      opts.mode = TrainMode::multi_objective;
    else if (mode == "auto_conditioning")
      opts.mode = TrainMode::auto_conditioning;
    else
      fail(Err::bad_config, "unknown training mode '" + mode + "'");
  }
  opts.condition_length = doc.value("condition_length", opts.condition_length);
  opts.stop_feedback_gradients = doc.value("stop_feedback_gradients", opts.stop_feedback_gradients);
  opts.threads = doc.value("threads", opts.threads);
  opts.standardize = doc.value("standardize", opts.standardize);
  opts.validate();
  return opts;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.params.check_finite();
  json doc;
  doc["version"] = ckpt.version;
  doc["config"] = config_to_json(ckpt.config);
  doc["iteration"] = ckpt.iteration;
  doc["rng_state"] = ckpt.rng_state;
  doc["stats"] = {{"mean", vec_to_json(ckpt.stats.mean)}, {"stddev", vec_to_json(ckpt.stats.stddev)}};
  doc["tensors"] = tensors_to_json(ckpt.params);
  doc["optimizer"] = {{"rho", ckpt.opt.rho},
                      {"eps", ckpt.opt.eps},
                      {"iteration", ckpt.opt.iteration},
                      {"acc", tensors_to_json(ckpt.opt.acc)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::io_error, "cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) fail(Err::io_error, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::io_error, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(Err::corrupt_file, path.string() + ": " + e.what());
  }
  try {
    require(doc.contains("version"), Err::corrupt_file, "missing version field");
    require(doc.at("version").get<int>() == 1, Err::version_mismatch,
            "unsupported checkpoint version " + doc.at("version").dump());
    Checkpoint ckpt;
    ckpt.config = config_from_json(doc.at("config"));
    ckpt.iteration = doc.value("iteration", 0L);
    ckpt.rng_state = doc.value("rng_state", std::string());
    ckpt.params = VtlnParams::zeros(ckpt.config);
    tensors_from_json(doc.at("tensors"), ckpt.params);
    ckpt.stats.mean = vec_from_json(doc.at("stats").at("mean"));
    ckpt.stats.stddev = vec_from_json(doc.at("stats").at("stddev"));
    require(ckpt.stats.mean.size() == ckpt.config.dim && ckpt.stats.stddev.size() == ckpt.config.dim,
            Err::corrupt_file, "stats width does not match config");
    ckpt.opt = RmspropState::init(ckpt.config);
    const json& opt = doc.at("optimizer");
    ckpt.opt.rho = opt.at("rho").get<double>();
    ckpt.opt.eps = opt.at("eps").get<double>();
    ckpt.opt.iteration = opt.value("iteration", 0L);
    tensors_from_json(opt.at("acc"), ckpt.opt.acc);
    return ckpt;
  } catch (const json::exception& e) {
    fail(Err::corrupt_file, path.string() + ": " + e.what());
  }
}

Checkpoint make_checkpoint(const TrainResult& result, long iteration) {
  Checkpoint ckpt;
  ckpt.config = result.model.config;
  ckpt.params = result.model.params;
  ckpt.stats = result.stats;
  ckpt.opt = result.opt;
  ckpt.iteration = iteration;
  ckpt.rng_state = result.rng_state;
  return ckpt;
}

}  // namespace motionsynth
