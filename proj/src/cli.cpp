#include "liftgeo/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "liftgeo/checkpoint.hpp"
#include "liftgeo/data.hpp"
#include "liftgeo/eval.hpp"

namespace liftgeo {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigInvalid("'" + key + "' expects a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigInvalid("'" + key + "' expects an integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

std::size_t to_count(const std::string& key, const std::string& v) {
  const long n = to_long(key, v);
  if (n < 0) throw ConfigInvalid("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

AngleRange to_range(const std::string& key, const std::string& v) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw ConfigInvalid("'" + key + "' expects 'lo,hi'");
  AngleRange r{to_double(key, trim(v.substr(0, comma))), to_double(key, trim(v.substr(comma + 1)))};
  if (r.lo > r.hi) throw ConfigInvalid("'" + key + "' has lo > hi");
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

Json config_json(const TrainingConfig& cfg) {
  Json j;
  j["flags"] = cfg.flags.name();
  j["batch_size"] = cfg.batch_size;
  j["c"] = cfg.c;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["w2d"] = cfg.weights.w2d;
  j["w3d"] = cfg.weights.w3d;
  j["wt"] = cfg.weights.wt;
  j["lambda"] = cfg.weights.lambda;
  j["azimuth_range"] = {cfg.rotations.azimuth.lo, cfg.rotations.azimuth.hi};
  j["elevation_range"] = {cfg.rotations.elevation.lo, cfg.rotations.elevation.hi};
  j["temporal_m"] = cfg.temporal_m;
  j["lifter"] = {cfg.lifter.width, cfg.lifter.blocks};
  j["discriminator"] = {cfg.discriminator.width, cfg.discriminator.blocks};
  j["lr_lifter"] = cfg.lr_lifter;
  j["lr_discriminator"] = cfg.lr_discriminator;
  j["d_steps"] = cfg.d_steps;
  for (const auto& [k, v] : cfg.paths) j["paths"][k] = v;
  return j;
}

void check_ids(const std::vector<std::pair<std::string, long>>& a,
               const std::vector<std::pair<std::string, long>>& b, const std::string& what) {
  if (a.size() != b.size()) {
    throw IdMismatch(what + ": " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " rows");
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] != b[k]) {
      throw IdMismatch(what + ": row " + std::to_string(k + 1) + " is (" + a[k].first + ", " +
                       std::to_string(a[k].second) + ") vs (" + b[k].first + ", " +
                       std::to_string(b[k].second) + ")");
    }
  }
}

template <typename R>
std::vector<std::pair<std::string, long>> ids_of(const std::vector<R>& recs) {
  std::vector<std::pair<std::string, long>> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.emplace_back(r.seq_id, r.frame_idx);
  return out;
}

void check_finite(const Tensor<float>& t, const std::string& what) {
  if (!t.allFinite()) throw NumericFailure("non-finite values in " + what);
}

// ---------------------------------------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  double c = 10.0;
  bool sequences = false;
  std::size_t sequence_length = 50;
  std::size_t archetypes = 16;
  double spread = 0.1;
  std::uint64_t prior_seed = 0;
  double jitter = 0.0;
};

int cmd_synth(const SynthArgs& a) {
  SyntheticSkeletonConfig cfg;
  cfg.count = a.count;
  cfg.seed = a.seed;
  cfg.c = a.c;
  cfg.sequences = a.sequences;
  cfg.sequence_length = a.sequence_length;
  cfg.archetypes = a.archetypes;
  cfg.archetype_spread = a.spread;
  cfg.prior_seed = a.prior_seed;
  cfg.length_jitter = a.jitter;
  const SyntheticDataset ds = synth_generate(cfg);
  make_dir(a.out);
  save_poses(a.out / "poses2d.csv", ds.records2d());
  save_poses3d(a.out / "poses3d.csv", ds.records3d());
  Json m;
  m["command"] = "synth";
  m["seed"] = a.seed;
  m["count"] = a.count;
  m["c"] = a.c;
  m["sequences"] = a.sequences;
  m["sequence_length"] = a.sequence_length;
  m["archetypes"] = a.archetypes;
  m["archetype_spread"] = a.spread;
  m["prior_seed"] = a.prior_seed;
  m["length_jitter"] = a.jitter;
  m["files"] = {"poses2d.csv", "poses3d.csv"};
  write_text(a.out / "manifest.json", m.dump(2) + "\n");
  std::cout << "wrote " << ds.samples.size() << " samples to " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct AdaptArgs {
  fs::path source, target, out;
  AdapterConfig cfg;
};

int cmd_adapt(const AdaptArgs& a) {
  const auto src_recs = load_poses(a.source);
  const auto tgt_recs = load_poses(a.target);
  if (src_recs.size() < 2 || tgt_recs.size() < 2) throw DataMissing("adapt needs at least 2 source and 2 target poses");
  AdapterTrainer trainer(a.cfg, normalized_poses(src_recs, a.cfg.c), normalized_poses(tgt_recs, a.cfg.c));
  const double before = trainer.mean_correction_sq();
  make_dir(a.out);
  std::string log = "epoch,loss_dd,loss_c,correction_sq\n";
  for (int e = 0; e < a.cfg.epochs; ++e) {
    const AdapterLog l = trainer.run_epoch();
    if (!std::isfinite(l.loss_dd) || !std::isfinite(l.loss_c)) throw NumericFailure("adapter loss is not finite");
    log += std::to_string(l.epoch) + ',' + format_number(l.loss_dd) + ',' + format_number(l.loss_c) + ',' +
           format_number(l.correction_sq) + '\n';
  }
  const double after = trainer.mean_correction_sq();

  const std::vector<Pose2D> src = normalized_poses(src_recs, a.cfg.c);
  const Tensor<float> adapted = trainer.adapter().adapt_batch(to_batch<float>(std::span<const Pose2D>(src)));
  check_finite(adapted, "adapted poses");
  std::vector<PoseRecord> out = src_recs;
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (int j = 0; j < kNumJoints; ++j) {
      out[k].joints.joints(j, 0) = adapted(static_cast<Eigen::Index>(k), 2 * j);
      out[k].joints.joints(j, 1) = adapted(static_cast<Eigen::Index>(k), 2 * j + 1);
    }
  }
  save_poses(a.out / "adapted.csv", out);
  nn::save_checkpoint(a.out / "adapter.ckpt", trainer.adapter().to_checkpoint());
  nn::save_checkpoint(a.out / "domain_discriminator.ckpt", trainer.discriminator().to_checkpoint());
  write_text(a.out / "adapter_log.csv", log);
  Json m;
  m["command"] = "adapt";
  m["source"] = a.source.string();
  m["target"] = a.target.string();
  m["lambda"] = a.cfg.lambda;
  m["epochs"] = a.cfg.epochs;
  m["batch_size"] = a.cfg.batch_size;
  m["seed"] = a.cfg.seed;
  m["c"] = a.cfg.c;
  m["adapter"] = {a.cfg.adapter.width, a.cfg.adapter.blocks};
  m["discriminator"] = {a.cfg.discriminator.width, a.cfg.discriminator.blocks};
  m["correction_sq_initial"] = before;
  m["correction_sq_final"] = after;
  write_text(a.out / "manifest.json", m.dump(2) + "\n");
  std::cout << "mean |C(x_s)|^2: " << format_number(before) << " -> " << format_number(after) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct TrainArgs {
  fs::path config, out;
  std::vector<std::string> overrides;
  std::string data, real, eval2d, eval3d, adapter, flags;
  long seed = -1, epochs = -1;
  double unit_scale = kSyntheticUnitMm;
  double confidence = 0.0;
};

std::string path_or(const TrainingConfig& cfg, const std::string& given, const std::string& key) {
  if (!given.empty()) return given;
  const auto it = cfg.paths.find(key);
  return it == cfg.paths.end() ? std::string() : it->second;
}

int cmd_train(const TrainArgs& a) {
  std::map<std::string, std::string> settings;
  if (!a.config.empty()) settings = load_settings(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigInvalid("--set expects key=value, got '" + kv + "'");
    settings[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
  }
  if (!a.flags.empty()) settings["flags"] = a.flags;
  if (a.seed >= 0) settings["seed"] = std::to_string(a.seed);
  if (a.epochs >= 0) settings["epochs"] = std::to_string(a.epochs);
  TrainingConfig cfg = training_config_from(settings);
  cfg.validate();

  const std::string data_path = path_or(cfg, a.data, "train");
  if (data_path.empty()) throw ConfigInvalid("no training data (--data or path.train)");
  const std::string adapter_path = path_or(cfg, a.adapter, "adapter");
  if (cfg.flags.da && adapter_path.empty()) {
    throw ConfigInvalid("DA needs a pre-trained adapter checkpoint (--adapter or path.adapter)");
  }
  const std::string real_path = path_or(cfg, a.real, "real");
  const std::string eval2d = path_or(cfg, a.eval2d, "eval2d");
  const std::string eval3d = path_or(cfg, a.eval3d, "eval3d");
  if (eval2d.empty() != eval3d.empty()) throw ConfigInvalid("evaluation needs both 2D and 3D files");

  const auto recs = filter_complete(load_poses(data_path), a.confidence);
  TrainingData data;
  data.inputs = normalized_poses(recs, cfg.c);
  if (cfg.flags.td) {
    data.temporal = make_temporal_pairs(recs, cfg.temporal_m);
    if (data.temporal.empty()) {
      throw ConfigInvalid("TD needs sequence data: no runs of " + std::to_string(cfg.temporal_m + 1) +
                          " consecutive frames in " + data_path);
    }
  }
  if (cfg.flags.da) {
    // Domain correction is an offline preprocessing step applied to the lifter inputs.
    auto adapter = DomainAdapter<float>::from_checkpoint(nn::load_checkpoint(adapter_path));
    const Tensor<float> x = adapter->adapt_batch(to_batch<float>(std::span<const Pose2D>(data.inputs)));
    check_finite(x, "adapted inputs");
    for (std::size_t k = 0; k < data.inputs.size(); ++k) {
      for (int j = 0; j < kNumJoints; ++j) {
        data.inputs[k].joints(j, 0) = x(static_cast<Eigen::Index>(k), 2 * j);
        data.inputs[k].joints(j, 1) = x(static_cast<Eigen::Index>(k), 2 * j + 1);
      }
    }
  }
  if (!real_path.empty()) data.real = normalized_poses(load_poses(real_path), cfg.c);
  if (!eval2d.empty()) {
    const auto r2 = load_poses(eval2d);
    const auto r3 = load_poses3d(eval3d);
    check_ids(ids_of(r2), ids_of(r3), "evaluation files");
    EvalSet e;
    e.poses2d = normalized_poses(r2, cfg.c);
    for (const auto& r : r3) e.ground_truth.push_back(r.joints);
    e.unit_scale = a.unit_scale;
    data.eval = std::move(e);
  }

  make_dir(a.out);
  Trainer trainer(cfg, std::move(data));
  std::ofstream metrics(a.out / "metrics.csv", std::ios::binary);
  if (!metrics) throw IoError("cannot write " + (a.out / "metrics.csv").string());
  metrics << metrics_csv_header() << '\n';
  trainer.train([&](const EpochLog& log) {
    metrics << metrics_csv_row(log) << '\n' << std::flush;
    std::cout << "epoch " << log.epoch << " total " << format_number(log.loss_total);
    if (log.mpjpe) std::cout << " mpjpe " << format_number(*log.mpjpe);
    std::cout << "\n";
  });
  nn::save_checkpoint(a.out / "lifter.ckpt", trainer.lifter().to_checkpoint());
  if (trainer.discriminator()) nn::save_checkpoint(a.out / "discriminator.ckpt", trainer.discriminator()->to_checkpoint());
  if (trainer.temporal()) nn::save_checkpoint(a.out / "temporal.ckpt", trainer.temporal()->to_checkpoint());
  Json m;
  m["command"] = "train";
  m["config"] = config_json(cfg);
  m["data"] = data_path;
  if (!adapter_path.empty()) m["adapter"] = adapter_path;
  m["samples"] = recs.size();
  m["confidence_threshold"] = a.confidence;
  write_text(a.out / "manifest.json", m.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

int cmd_lift(const fs::path& ckpt_path, const fs::path& input, const fs::path& output) {
  auto lifter = LifterNet<float>::from_checkpoint(nn::load_checkpoint(ckpt_path));
  const auto recs = load_poses(input);
  const std::vector<Pose2D> x = normalized_poses(recs, lifter->c());
  std::vector<Pose3DRecord> out;
  out.reserve(recs.size());
  if (!recs.empty()) {
    const Tensor<float> X = lifter->lift_batch(to_batch<float>(std::span<const Pose2D>(x)));
    check_finite(X, "lifted poses");
    const std::vector<Pose3D> poses = poses3d_from_batch<float>(X);
    for (std::size_t k = 0; k < recs.size(); ++k) out.push_back({recs[k].seq_id, recs[k].frame_idx, poses[k]});
  }
  save_poses3d(output, out);
  std::cout << "lifted " << out.size() << " poses\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, const fs::path& out, double unit_scale,
             double threshold) {
  const auto pred = load_poses3d(pred_path);
  const auto gt = load_poses3d(gt_path);
  check_ids(ids_of(pred), ids_of(gt), "prediction vs ground truth");
  std::vector<Pose3D> p, g;
  for (const auto& r : pred) {
    if (!r.joints.joints.allFinite()) throw NumericFailure("non-finite prediction");
    p.push_back(r.joints);
  }
  for (const auto& r : gt) g.push_back(r.joints);
  const std::vector<double> errs = aligned_joint_errors(p, g, unit_scale);
  if (errs.empty()) throw EmptySet("no poses to evaluate");
  double sum = 0.0;
  for (double e : errs) sum += e;
  const double mp = sum / static_cast<double>(errs.size());
  const PckAuc pa = pck_auc(errs, threshold);
  std::cout << "MPJPE " << format_number(mp) << " mm\nPCK " << format_number(pa.pck) << " %\nAUC "
            << format_number(pa.auc) << " %\n";
  if (!out.empty()) {
    make_dir(out);
    write_text(out / "metrics.csv", "mpjpe,pck,auc\n" + format_number(mp) + ',' + format_number(pa.pck) + ',' +
                                        format_number(pa.auc) + '\n');
    write_text(out / "histogram.csv", format_ratio_histogram(limb_ratio_histogram(p, default_schema())));
    write_text(out / "histogram_gt.csv", format_ratio_histogram(limb_ratio_histogram(g, default_schema())));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

// One row per training run: the last epoch of its metrics log.
int cmd_report(const std::vector<fs::path>& runs, const fs::path& out) {
  std::string table = "run,flags," + metrics_csv_header() + '\n';
  for (const auto& dir : runs) {
    std::string flags;
    if (fs::exists(dir / "manifest.json")) {
      try {
        const Json m = Json::parse(read_text(dir / "manifest.json"));
        flags = m.at("config").at("flags").get<std::string>();
      } catch (const Json::exception& e) {
        throw IoError("bad manifest in " + dir.string() + ": " + e.what());
      }
    }
    std::istringstream lines(read_text(dir / "metrics.csv"));
    std::string line, header, last;
    std::getline(lines, header);
    if (trim(header) != metrics_csv_header()) throw IoError("unexpected metrics header in " + dir.string());
    while (std::getline(lines, line)) {
      if (!trim(line).empty()) last = trim(line);
    }
    if (last.empty()) throw DataMissing("no epochs logged in " + dir.string());
    table += dir.filename().string() + ',' + flags + ',' + last + '\n';
  }
  if (out.empty()) {
    std::cout << table;
  } else {
    write_text(out, table);
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

std::map<std::string, std::string> parse_settings(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigInvalid("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigInvalid("config line " + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_settings(const fs::path& path) { return parse_settings(read_text(path)); }

void apply_training_setting(TrainingConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "batch_size") cfg.batch_size = to_count(key, v);
  else if (key == "c") cfg.c = to_double(key, v);
  else if (key == "w2d") cfg.weights.w2d = to_double(key, v);
  else if (key == "w3d") cfg.weights.w3d = to_double(key, v);
  else if (key == "wt") cfg.weights.wt = to_double(key, v);
  else if (key == "lambda") cfg.weights.lambda = to_double(key, v);
  else if (key == "azimuth_range") cfg.rotations.azimuth = to_range(key, v);
  else if (key == "elevation_range") cfg.rotations.elevation = to_range(key, v);
  else if (key == "epochs") cfg.epochs = to_int(key, v);
  else if (key == "seed") cfg.seed = to_count(key, v);
  else if (key == "flags") cfg.flags = Flags::parse(v);
  else if (key == "temporal_m") cfg.temporal_m = to_int(key, v);
  else if (key == "lifter_width") cfg.lifter.width = to_int(key, v);
  else if (key == "lifter_blocks") cfg.lifter.blocks = to_int(key, v);
  else if (key == "disc_width") cfg.discriminator.width = to_int(key, v);
  else if (key == "disc_blocks") cfg.discriminator.blocks = to_int(key, v);
  else if (key == "lr_lifter") cfg.lr_lifter = to_double(key, v);
  else if (key == "lr_discriminator") cfg.lr_discriminator = to_double(key, v);
  else if (key == "d_steps") cfg.d_steps = to_int(key, v);
  else if (key == "eval_limit") cfg.eval_limit = to_count(key, v);
  else if (key.rfind("path.", 0) == 0 && key.size() > 5) cfg.paths[key.substr(5)] = v;
  else throw ConfigInvalid("unknown config key '" + key + "'");
}

TrainingConfig training_config_from(const std::map<std::string, std::string>& settings) {
  TrainingConfig cfg;
  for (const auto& [k, v] : settings) apply_training_setting(cfg, k, v);
  return cfg;
}

int thread_cap_from_env() {
  const char* v = std::getenv("LIFTGEO_THREADS");
  if (!v || !*v) return 0;
  const long n = to_long("LIFTGEO_THREADS", v);
  if (n < 1) throw ConfigInvalid("LIFTGEO_THREADS must be a positive integer");
  return static_cast<int>(n);
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Lifting 2D poses to 3D with geometric self-supervision"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic paired 2D/3D dataset");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--count", sa.count, "Number of poses");
  synth->add_option("--seed", sa.seed, "Random seed");
  synth->add_option("--c", sa.c, "Camera distance");
  synth->add_flag("--sequences", sa.sequences, "Smoothly animated sequences");
  synth->add_option("--sequence-length", sa.sequence_length, "Frames per sequence");
  synth->add_option("--archetypes", sa.archetypes, "Archetype poses in the prior (0 = uniform angles)");
  synth->add_option("--spread", sa.spread, "Archetype noise, fraction of each angle range");
  synth->add_option("--prior-seed", sa.prior_seed, "Seed of the archetype population");
  synth->add_option("--jitter", sa.jitter, "Per-sample bone-length jitter");

  AdaptArgs aa;
  aa.cfg.adapter = {256, 4};
  aa.cfg.discriminator = {256, 3};
  int adapter_width = 256;
  auto* adapt = app.add_subcommand("adapt", "Train the 2D domain adapter and write corrected source poses");
  adapt->add_option("--source", aa.source, "Source pose CSV")->required();
  adapt->add_option("--target", aa.target, "Target pose CSV")->required();
  adapt->add_option("--out", aa.out, "Output directory")->required();
  adapt->add_option("--lambda", aa.cfg.lambda, "Correction regularizer weight");
  adapt->add_option("--epochs", aa.cfg.epochs, "Epochs");
  adapt->add_option("--batch-size", aa.cfg.batch_size, "Batch size");
  adapt->add_option("--seed", aa.cfg.seed, "Random seed");
  adapt->add_option("--lr", aa.cfg.lr, "Learning rate");
  adapt->add_option("--width", adapter_width, "Hidden width of both networks");
  adapt->add_option("--c", aa.cfg.c, "Camera distance");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the lifter");
  train->add_option("--config", ta.config, "key = value config file");
  train->add_option("--set", ta.overrides, "Override a config key (key=value)");
  train->add_option("--data", ta.data, "Training 2D pose CSV");
  train->add_option("--real", ta.real, "Real 2D poses for the discriminator (default: training data)");
  train->add_option("--eval-2d", ta.eval2d, "Held-out 2D poses");
  train->add_option("--eval-3d", ta.eval3d, "Held-out 3D ground truth");
  train->add_option("--adapter", ta.adapter, "Adapter checkpoint applied to inputs (DA)");
  train->add_option("--flags", ta.flags, "SS, Adv, Adv+SS, Adv+SS+DA, Adv+SS+DA+TD, ...");
  train->add_option("--seed", ta.seed, "Random seed");
  train->add_option("--epochs", ta.epochs, "Epochs");
  train->add_option("--unit-scale", ta.unit_scale, "Millimetres per ground-truth unit");
  train->add_option("--confidence", ta.confidence, "Keep poses whose joint confidences are all >= this");
  train->add_option("--out", ta.out, "Output directory")->required();

  fs::path lift_ckpt, lift_in, lift_out;
  auto* lift = app.add_subcommand("lift", "Lift 2D poses with a trained checkpoint");
  lift->add_option("--checkpoint", lift_ckpt, "Lifter checkpoint")->required();
  lift->add_option("--input", lift_in, "2D pose CSV")->required();
  lift->add_option("--output", lift_out, "3D pose CSV to write")->required();

  fs::path eval_pred, eval_gt, eval_out;
  double eval_unit = kSyntheticUnitMm, eval_thr = 150.0;
  auto* eval = app.add_subcommand("eval", "Aligned MPJPE, PCK, AUC and limb-ratio histograms");
  eval->add_option("--pred", eval_pred, "Predicted 3D CSV")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth 3D CSV")->required();
  eval->add_option("--out", eval_out, "Directory for metrics.csv and histogram CSVs");
  eval->add_option("--unit-scale", eval_unit, "Millimetres per unit");
  eval->add_option("--threshold", eval_thr, "PCK threshold in mm");

  std::vector<fs::path> report_runs;
  fs::path report_out;
  auto* report = app.add_subcommand("report", "Tabulate the final epoch of training runs");
  report->add_option("--runs", report_runs, "Training output directories")->required();
  report->add_option("--out", report_out, "CSV to write (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const int threads = thread_cap_from_env();
    if (threads > 0) Eigen::setNbThreads(threads);
    if (*synth) return cmd_synth(sa);
    if (*adapt) {
      aa.cfg.adapter.width = adapter_width;
      aa.cfg.discriminator.width = adapter_width;
      return cmd_adapt(aa);
    }
    if (*train) return cmd_train(ta);
    if (*lift) return cmd_lift(lift_ckpt, lift_in, lift_out);
    if (*eval) return cmd_eval(eval_pred, eval_gt, eval_out, eval_unit, eval_thr);
    if (*report) return cmd_report(report_runs, report_out);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace liftgeo
