#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "motionsynth/checkpoint.hpp"
#include "test_util.hpp"

using namespace motionsynth;
using motionsynth::test::thrown_code;

namespace {

Checkpoint random_checkpoint(std::uint64_t seed) {
  VtlnConfig cfg;
  cfg.hidden_top = 3;
  cfg.hidden_body = 5;
  cfg.dim = 2;
  cfg.actions = 2;
  cfg.seed_frames = 4;
  cfg.horizon = 3;
  Checkpoint ckpt;
  ckpt.config = cfg;
  Rng rng(seed);
  ckpt.params = VtlnParams::init(cfg, rng);
  // Exercise awkward values through the serializer.
  ckpt.params.mu[0] = 0.1 + 0.2;
  ckpt.params.mu[1] = 1e-300;
  ckpt.params.log_sigma[2] = -12345.6789012345678;
  ckpt.stats.mean = rng.normal_vector(cfg.dim);
  ckpt.stats.stddev = Vec::Constant(cfg.dim, 1.5);
  ckpt.opt = RmspropState::init(cfg);
  ckpt.opt.acc.body.W_c.setConstant(0.125);
  ckpt.iteration = 123;
  ckpt.rng_state = Rng(9).state();
  return ckpt;
}

std::vector<double> flatten(const VtlnParams& p) {
  std::vector<double> out;
  p.visit([&](const std::string&, const double* d, Eigen::Index r, Eigen::Index c) {
    for (Eigen::Index i = 0; i < r * c; ++i) out.push_back(d[i]);
  });
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("save/load round trip is bitwise on every tensor") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "motionsynth_ckpt_test.json";
  Checkpoint ckpt = random_checkpoint(11);
  save_checkpoint(ckpt, path);
  Checkpoint back = load_checkpoint(path);

  auto a = flatten(ckpt.params), b = flatten(back.params);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  auto oa = flatten(ckpt.opt.acc), ob = flatten(back.opt.acc);
  for (std::size_t i = 0; i < oa.size(); ++i) CHECK(oa[i] == ob[i]);
  CHECK(back.iteration == 123);
  CHECK(back.rng_state == ckpt.rng_state);
  CHECK((back.stats.mean - ckpt.stats.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.config.hidden_body == 5);

  // Saving the reloaded checkpoint reproduces the file byte for byte.
  const fs::path path2 = fs::temp_directory_path() / "motionsynth_ckpt_test2.json";
  save_checkpoint(back, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("truncated files and version bumps are rejected") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "motionsynth_ckpt_bad.json";
  Checkpoint ckpt = random_checkpoint(12);
  save_checkpoint(ckpt, path);

  std::string text;
  {
    std::ifstream in(path);
    text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
  }
  CHECK(thrown_code([&] { load_checkpoint(path); }) == Err::corrupt_file);

  nlohmann::json doc = nlohmann::json::parse(text);
  doc["version"] = 2;
  {
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump();
  }
  CHECK(thrown_code([&] { load_checkpoint(path); }) == Err::version_mismatch);
  fs::remove(path);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  nlohmann::json good = config_to_json(random_checkpoint(13).config);
  VtlnConfig cfg = config_from_json(good);
  CHECK(cfg.hidden_top == 3);

  nlohmann::json bad = good;
  bad["hidden_units"] = 12;
  CHECK(thrown_code([&] { config_from_json(bad); }) == Err::bad_config);

  nlohmann::json negative = good;
  negative["horizon"] = 0;
  CHECK(thrown_code([&] { config_from_json(negative); }) == Err::bad_config);
}

TEST_CASE("train options round trip through json") {
  TrainOptions opts;
  opts.iterations = 77;
  opts.mode = TrainMode::auto_conditioning;
  opts.lambda = {{0, 0.0}, {10, 0.3}};
  opts.lr = LrSchedule{3e-4, 0.5, 100, 1000};
  TrainOptions back = train_options_from_json(train_options_to_json(opts));
  CHECK(back.iterations == 77);
  CHECK(back.mode == TrainMode::auto_conditioning);
  CHECK(back.lambda.size() == 2);
  CHECK(back.lambda[1].value == 0.3);
  CHECK(back.lr.interval == 100);

  nlohmann::json doc = train_options_to_json(opts);
  doc["optimizer"] = "adam";
  CHECK(thrown_code([&] { train_options_from_json(doc); }) == Err::bad_config);
}

TEST_SUITE_END();
