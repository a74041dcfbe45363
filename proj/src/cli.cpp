#include "ngsac/cli.hpp"

#include "ngsac/bench.hpp"
#include "ngsac/error.hpp"
#include "ngsac/io.hpp"
#include "ngsac/oracles.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/rng.hpp"
#include "ngsac/synthdata.hpp"
#include "ngsac/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace ngsac {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || s[0] == '-') throw UsageError("bad " + what + " '" + s + "'");
  return v;
}

double parse_f64(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError("bad " + what + " '" + s + "'");
  return v;
}

// "0-9" or "1,5,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64(item, "seed"));
      continue;
    }
    const auto lo = parse_u64(item.substr(0, dash), "seed range");
    const auto hi = parse_u64(item.substr(dash + 1), "seed range");
    if (hi < lo) throw UsageError("empty seed range '" + item + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw UsageError("no seeds given");
  return out;
}

SideInfo parse_side_info(const std::string& kind, double separation) {
  if (kind == "none") return SideInfo::none();
  if (kind == "informative") return SideInfo::informative(separation);
  if (kind == "uninformative") return SideInfo::uninformative();
  throw UsageError("unknown side info '" + kind + "'");
}

// Config values become "--key=value" arguments placed before the user's own,
// so flags win under the take-last policy.
std::vector<std::string> config_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "config") throw UsageError("config files cannot include other config files");
    std::string value;
    const auto& v = it.value();
    if (v.is_string()) {
      value = v.get<std::string>();
    } else if (v.is_boolean()) {
      value = v.get<bool>() ? "true" : "false";
    } else if (v.is_number()) {
      value = v.dump();
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!value.empty()) value += ',';
        value += e.is_string() ? e.get<std::string>() : e.dump();
      }
    } else {
      throw UsageError("unsupported value for config key '" + it.key() + "'");
    }
    out.push_back("--" + it.key() + "=" + value);
  }
  return out;
}

// Effective configuration: every option of the subcommand with its final
// value, in declaration order.
std::vector<std::pair<std::string, std::string>> effective_config(const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("command", sub.get_name());
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "help-all" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto r = opt->reduced_results();
      value = r.empty() ? "" : r.back();
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_type_size() == 0 && value.empty()) value = opt->count() > 0 ? "true" : "false";
    out.emplace_back(name, value);
  }
  return out;
}

std::vector<std::string> echo_lines(const std::vector<std::pair<std::string, std::string>>& cfg) {
  std::vector<std::string> out;
  for (const auto& [k, v] : cfg) out.push_back(k + " = " + v);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::PreconditionViolation, "cannot write " + path.string());
  return f;
}

struct SceneOptions {
  std::size_t n = 500;
  double outlier_rate = 0.5;
  double noise = 2e-4;
  std::string side_info = "informative";
  double separation = 0.3;

  void add(CLI::App* app) {
    app->add_option("--n", n, "Correspondences per scene")->check(CLI::Range(16, 10000000));
    app->add_option("--outlier-rate", outlier_rate, "Outlier fraction")->check(CLI::Range(0.0, 1.0));
    app->add_option("--noise", noise, "Inlier noise std (normalized units)")->check(CLI::NonNegativeNumber);
    app->add_option("--side-info", side_info, "Ratio side information")
        ->check(CLI::IsMember({"none", "informative", "uninformative"}));
    app->add_option("--separation", separation, "Ratio band separation (informative)")
        ->check(CLI::Range(0.0, 1.0));
  }

  EpipolarSceneConfig config(std::uint64_t seed) const {
    EpipolarSceneConfig c;
    c.n_correspondences = n;
    c.outlier_rate = outlier_rate;
    c.noise_std = noise;
    c.side_info = parse_side_info(side_info, separation);
    c.seed = seed;
    return c;
  }
};

CorrespondenceFile scene_file(const EpipolarScene& scene, bool pixels) {
  CorrespondenceFile f;
  f.correspondences = pixels ? to_pixels(scene) : scene.correspondences;
  f.has_ratio = !f.correspondences.empty() && f.correspondences.front().ratio.has_value();
  f.has_label = true;
  f.scaled_intrinsics = pixels;
  f.scale = pixels ? scene.pixel_scale : 1.0;
  f.gt_model = pixels ? scene.gt_fundamental : scene.gt_essential;
  f.gt_pose = scene.gt_pose;
  return f;
}

constexpr std::uint64_t kSceneTag = 0x5343454E;  // "SCEN"

// ---------------------------------------------------------------------------

struct SynthCmd {
  fs::path out_dir;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string task = "essential";
  SceneOptions scene;

  void add(CLI::App* app) {
    app->add_option("--out-dir", out_dir, "Directory for scene files")->required();
    app->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Base seed");
    app->add_option("--task", task, "essential (normalized) or fundamental (pixels)")
        ->check(CLI::IsMember({"essential", "fundamental"}));
    scene.add(app);
  }

  int run(const CLI::App& app, std::ostream& out) const {
    const auto echo = echo_lines(effective_config(app));
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < count; ++i) {
      const auto s = gen_epipolar_scene(scene.config(derive_seed(seed, kSceneTag, i)));
      auto f = scene_file(s, task == "fundamental");
      f.comments = echo;
      f.comments.push_back("scene = " + std::to_string(i));
      char name[32];
      std::snprintf(name, sizeof name, "scene_%04zu.txt", i);
      auto file = open_out(out_dir / name);
      write_correspondences(file, f);
    }
    out << "wrote " << count << " scene(s) to " << out_dir.string() << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct TrainCmd {
  std::string objective = "pose";
  std::size_t k = 4, m = 16, iters = 5000, kl_iters = 2000, batch = 32;
  double lr = 1e-4, kl_lr = 1e-3, kl_sigma = 1e-3;
  std::uint64_t seed = 0;
  std::string init = "kl";
  fs::path out;
  fs::path curve;
  std::string data;
  std::size_t scenes = 64;
  std::string task = "essential";
  std::size_t hidden = 32, blocks = 3;
  std::size_t checkpoint_interval = 0;
  std::size_t grid = 64, patch = 8;
  SceneOptions scene;

  void add(CLI::App* app) {
    app->add_option("--objective", objective, "Task loss")
        ->check(CLI::IsMember({"pose", "inliers", "fscore", "mean-epi", "line"}));
    app->add_option("--k", k, "Pools per example")->check(CLI::PositiveNumber);
    app->add_option("--m", m, "Hypotheses per pool")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--iters", iters, "Expected-loss iterations");
    app->add_option("--seed", seed, "Seed");
    app->add_option("--init", init, "Initialization")->check(CLI::IsMember({"kl", "none"}));
    app->add_option("--out", out, "Model file to write")->required();
    app->add_option("--curve", curve, "Loss curve CSV");
    app->add_option("--kl-iters", kl_iters, "KL initialization iterations");
    app->add_option("--kl-lr", kl_lr, "KL initialization learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--kl-sigma", kl_sigma, "KL target width (normalized units)")->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "Examples per iteration")->check(CLI::PositiveNumber);
    app->add_option("--data", data, "Comma-separated correspondence files (default: synthetic scenes)");
    app->add_option("--scenes", scenes, "Synthetic training scenes")->check(CLI::PositiveNumber);
    app->add_option("--task", task, "essential or fundamental")
        ->check(CLI::IsMember({"essential", "fundamental"}));
    app->add_option("--hidden", hidden, "Hidden width")->check(CLI::PositiveNumber);
    app->add_option("--blocks", blocks, "Residual blocks");
    app->add_option("--checkpoint-interval", checkpoint_interval, "Iterations between checkpoints (0: off)");
    app->add_option("--grid", grid, "Line task raster size")->check(CLI::PositiveNumber);
    app->add_option("--patch", patch, "Line task patch size")->check(CLI::PositiveNumber);
    scene.add(app);
  }

  TrainConfig config() const {
    TrainConfig c;
    c.k = k;
    c.m = m;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.iterations = iters;
    c.objective = parse_objective(objective);
    c.seed = seed;
    c.kl_init = init == "kl";
    c.kl_iterations = kl_iters;
    c.kl_learning_rate = kl_lr;
    c.kl_sigma = kl_sigma;
    c.checkpoint_interval = checkpoint_interval;
    if (checkpoint_interval > 0) c.checkpoint_path = fs::path(out.string() + ".ckpt");
    return c;
  }

  std::vector<EpipolarExample> dataset(bool pixels, bool self_supervised, bool& with_ratio) const {
    std::vector<EpipolarExample> out_set;
    if (!data.empty()) {
      for (const auto& path : split_list(data)) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::PreconditionViolation, "cannot open " + path);
        const auto f = read_correspondences(in);
        if (f.scaled_intrinsics != pixels) {
          throw Error(ErrorCode::PreconditionViolation, path + ": coordinate units do not match --task");
        }
        EpipolarExample ex{f.correspondences, f.gt_model, f.gt_pose};
        out_set.push_back(self_supervised ? strip_ground_truth(std::move(ex)) : std::move(ex));
      }
    } else {
      for (std::size_t i = 0; i < scenes; ++i) {
        const auto s = gen_epipolar_scene(scene.config(derive_seed(seed, kSceneTag, i)));
        auto ex = make_example(s, pixels);
        out_set.push_back(self_supervised ? strip_ground_truth(std::move(ex)) : std::move(ex));
      }
    }
    with_ratio = true;
    for (const auto& ex : out_set) {
      for (const auto& c : ex.correspondences) with_ratio = with_ratio && c.ratio.has_value();
    }
    return out_set;
  }

  int run(const CLI::App& app, std::ostream& out_stream) const {
    const auto echo = echo_lines(effective_config(app));
    TrainConfig cfg = config();
    std::ofstream curve_file;
    if (!curve.empty()) {
      curve_file = open_out(curve);
      write_comment_block(curve_file, echo);
      curve_file << "iteration,phase,loss,kl,skipped,seconds\n";
    }
    TrainCallbacks cb;
    cb.on_record = [&](const TrainRecord& r) {
      if (!curve_file.is_open()) return;
      curve_file << r.iteration << ',' << r.phase << ',' << format_double(r.loss) << ','
                 << format_double(r.kl) << ',' << r.skipped << ',' << format_double(r.seconds) << '\n';
    };

    GuidanceNetSpec spec;
    spec.hidden_dim = hidden;
    spec.n_blocks = blocks;
    TrainResult result{GuidanceNet::initialize(spec, seed), {}};
    if (cfg.objective == Objective::LineDistance) {
      if (grid % patch != 0) throw UsageError("--grid must be divisible by --patch");
      std::vector<LineScene> line_scenes;
      for (std::size_t i = 0; i < scenes; ++i) {
        LineSceneConfig lc;
        lc.grid = grid;
        lc.patch = patch;
        lc.seed = derive_seed(seed, kSceneTag, i);
        line_scenes.push_back(gen_line_scene(lc));
      }
      spec.input_dim = kLineFeatureDim;
      spec.heads = HeadMode::PointsAndWeights;
      spec.point_range = line_point_range(grid, patch);
      result = train_line_loop(line_scenes, GuidanceNet::initialize(spec, seed), cfg, cb);
    } else {
      const bool pixels = task == "fundamental";
      if (cfg.objective == Objective::PoseAngular && pixels) {
        throw UsageError("--objective pose needs --task essential");
      }
      const bool self_supervised = cfg.objective == Objective::InlierCount;
      bool with_ratio = false;
      const auto examples = dataset(pixels, self_supervised, with_ratio);
      spec.input_dim = with_ratio ? 5 : 4;
      if (pixels) cfg.kl_sigma *= scene.config(0).pixel_scale;
      const EpipolarProblem problem = pixels ? fundamental_problem() : essential_problem();
      result = train_loop(examples, GuidanceNet::initialize(spec, seed), cfg, problem, cb);
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_model(result.net, out);
    out_stream << "trained " << result.curve.size() << " iterations, " << result.net.parameter_count()
               << " parameters";
    if (!result.curve.empty()) out_stream << ", final loss " << format_double(result.curve.back().loss);
    out_stream << "\nmodel written to " << out.string() << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct EvalCmd {
  fs::path input;
  std::string method = "ransac";
  std::size_t m = 100;
  fs::path model;
  std::string task = "essential";
  std::uint64_t seed = 0;
  double ratio_threshold = 0.8;
  fs::path out;
  SceneOptions scene;

  void add(CLI::App* app) {
    app->add_option("--input", input, "Correspondence file (default: one synthetic scene)");
    app->add_option("--method", method, "Estimator")->check(CLI::IsMember(kBenchMethods));
    app->add_option("--m", m, "Hypotheses")->check(CLI::PositiveNumber);
    app->add_option("--model", model, "Guidance model file (learned methods)");
    app->add_option("--task", task, "essential or fundamental")
        ->check(CLI::IsMember({"essential", "fundamental"}));
    app->add_option("--seed", seed, "Seed");
    app->add_option("--ratio-threshold", ratio_threshold, "Ratio filter threshold");
    app->add_option("--out", out, "JSON report file (default: stdout)");
    scene.add(app);
  }

  int run(const CLI::App& app, std::ostream& out_stream) const {
    const auto cfg = effective_config(app);
    const bool pixels = task == "fundamental";
    CorrespondenceFile f;
    if (!input.empty()) {
      std::ifstream in(input);
      if (!in) throw Error(ErrorCode::PreconditionViolation, "cannot open " + input.string());
      f = read_correspondences(in);
      if (f.scaled_intrinsics != pixels) {
        throw Error(ErrorCode::PreconditionViolation, "coordinate units of the input do not match --task");
      }
    } else {
      f = scene_file(gen_epipolar_scene(scene.config(derive_seed(seed, kSceneTag, 0))), pixels);
    }
    std::unique_ptr<GuidanceNet> net;
    if (!model.empty()) net = std::make_unique<GuidanceNet>(load_model(model));
    const EpipolarProblem problem = pixels ? fundamental_problem() : essential_problem();
    const BenchTask bt = pixels ? BenchTask::Fundamental : BenchTask::Essential;
    const std::span<const Correspondence> corrs(f.correspondences);
    const auto report = run_method(method, corrs, problem, m, seed, net.get(), ratio_threshold);
    MetricRecord rec;
    rec.task = task;
    rec.method = method;
    rec.m = m;
    rec.seed = seed;
    fill_metrics(rec, report, corrs, problem, bt, f.gt_model, f.gt_pose);
    const std::string json = report_to_json(report, cfg, rec) + "\n";
    if (out.empty()) {
      out_stream << json;
    } else {
      auto file = open_out(out);
      file << json;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct BenchCmd {
  std::string task = "essential";
  std::string methods = "ransac";
  std::string budgets = "100";
  std::string rates = "0.5";
  std::string seeds = "0";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double ratio_threshold = 0.8;
  fs::path model;
  fs::path out;
  SceneOptions scene;

  void add(CLI::App* app) {
    app->add_option("--task", task, "essential or fundamental")
        ->check(CLI::IsMember({"essential", "fundamental"}));
    app->add_option("--methods", methods, "Comma-separated methods");
    app->add_option("--budgets", budgets, "Comma-separated hypothesis budgets M");
    app->add_option("--outlier-rates", rates, "Comma-separated outlier rates");
    app->add_option("--seeds", seeds, "Scene seeds, e.g. 0-9 or 1,4,7");
    app->add_option("--seed", seed, "Offset added to every scene seed");
    app->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
    app->add_option("--ratio-threshold", ratio_threshold, "Ratio filter threshold");
    app->add_option("--model", model, "Guidance model file (learned methods)");
    app->add_option("--out", out, "CSV file (default: stdout)");
    scene.add(app);
  }

  BenchMatrix matrix() const {
    BenchMatrix mx;
    mx.task = parse_task(task);
    mx.methods = split_list(methods);
    for (const auto& m : mx.methods) {
      if (std::find(kBenchMethods.begin(), kBenchMethods.end(), m) == kBenchMethods.end()) {
        throw UsageError("unknown method '" + m + "'");
      }
    }
    mx.budgets.clear();
    for (const auto& b : split_list(budgets)) {
      const auto v = parse_u64(b, "budget");
      if (v == 0) throw UsageError("budgets must be positive");
      mx.budgets.push_back(v);
    }
    mx.outlier_rates.clear();
    for (const auto& r : split_list(rates)) {
      const double v = parse_f64(r, "outlier rate");
      if (!(v >= 0.0 && v <= 1.0)) throw UsageError("outlier rates must lie in [0, 1]");
      mx.outlier_rates.push_back(v);
    }
    mx.seeds.clear();
    for (const auto s : parse_seed_list(seeds)) mx.seeds.push_back(s + seed);
    if (mx.methods.empty() || mx.budgets.empty() || mx.outlier_rates.empty()) {
      throw UsageError("every benchmark axis needs at least one value");
    }
    const auto sc = scene.config(0);
    mx.n_correspondences = sc.n_correspondences;
    mx.noise_std = sc.noise_std;
    mx.side_info = sc.side_info;
    mx.ratio_threshold = ratio_threshold;
    mx.jobs = jobs;
    if (!model.empty()) mx.net = std::make_shared<const GuidanceNet>(load_model(model));
    return mx;
  }

  int run(const CLI::App& app, std::ostream& out_stream) const {
    const auto echo = echo_lines(effective_config(app));
    const BenchMatrix mx = matrix();
    std::ofstream file;
    if (!out.empty()) file = open_out(out);
    std::ostream& dst = out.empty() ? out_stream : file;
    write_comment_block(dst, echo);
    dst << kMetricHeader << '\n';
    dst.flush();
    std::size_t failed = 0;
    run_benchmark(mx, [&](const MetricRecord& r) {
      dst << metric_row(r) << '\n';
      dst.flush();
      failed += !r.error.empty();
    });
    if (!out.empty()) {
      out_stream << "wrote " << mx.cell_count() << " records to " << out.string();
      if (failed) out_stream << " (" << failed << " failed cells)";
      out_stream << '\n';
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct GradcheckCmd {
  bool full = false;

  void add(CLI::App* app) { app->add_flag("--full", full, "Run the full-size suites"); }

  int run(std::ostream& out) const {
    const auto results = oracle::run_gradcheck_suite(!full);
    std::size_t passed = 0;
    for (const auto& r : results) {
      char line[96];
      std::snprintf(line, sizeof line, "%-4s %-62s", r.passed ? "PASS" : "FAIL", r.name.c_str());
      out << line << " value=" << format_double(r.value) << " limit=" << format_double(r.threshold);
      if (!r.detail.empty()) out << "  (" << r.detail << ')';
      out << '\n';
      passed += r.passed;
    }
    out << passed << '/' << results.size() << " checks passed\n";
    return passed == results.size() ? kExitOk : kExitRuntime;
  }
};

bool has_option(const std::string& sub, const std::string& name) {
  if (name == "--seed") return sub == "synth" || sub == "train" || sub == "eval" || sub == "bench";
  return false;
}

}  // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural-guided RANSAC toolkit", "ngsac"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SynthCmd synth;
  TrainCmd train;
  EvalCmd eval;
  BenchCmd bench;
  GradcheckCmd gradcheck;
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with option values (keys are flag names)");
  };
  CLI::App* synth_app = app.add_subcommand("synth", "Write synthetic scenes");
  CLI::App* train_app = app.add_subcommand("train", "Train a guidance network");
  CLI::App* eval_app = app.add_subcommand("eval", "Estimate one scene and print a JSON report");
  CLI::App* bench_app = app.add_subcommand("bench", "Run a benchmark sweep to CSV");
  CLI::App* grad_app = app.add_subcommand("gradcheck", "Run the gradient oracle suites");
  synth.add(synth_app);
  train.add(train_app);
  eval.add(eval_app);
  bench.add(bench_app);
  gradcheck.add(grad_app);
  for (auto* sub : {synth_app, train_app, eval_app, bench_app, grad_app}) add_config(sub);

  std::vector<std::string> args;
  try {
    // Assemble: subcommand, env seed, config values, then the user's flags.
    std::vector<std::string> prefix, rest;
    std::string sub_name;
    if (!args_in.empty() && !args_in[0].empty() && args_in[0][0] != '-') {
      sub_name = args_in[0];
      rest.assign(args_in.begin() + 1, args_in.end());
    } else {
      rest = args_in;
    }
    std::string cfg_file;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == "--config" && i + 1 < rest.size()) cfg_file = rest[i + 1];
      if (rest[i].rfind("--config=", 0) == 0) cfg_file = rest[i].substr(9);
    }
    if (!sub_name.empty()) prefix.push_back(sub_name);
    if (const char* env = std::getenv(kSeedEnv); env && has_option(sub_name, "--seed")) {
      parse_u64(env, std::string(kSeedEnv) + " value");
      prefix.push_back(std::string("--seed=") + env);
    }
    if (!cfg_file.empty()) {
      const auto c = config_args(cfg_file);
      prefix.insert(prefix.end(), c.begin(), c.end());
    }
    args = prefix;
    args.insert(args.end(), rest.begin(), rest.end());
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<const char*> argv{"ngsac"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_app->parsed()) return synth.run(*synth_app, out);
    if (train_app->parsed()) return train.run(*train_app, out);
    if (eval_app->parsed()) return eval.run(*eval_app, out);
    if (bench_app->parsed()) return bench.run(*bench_app, out);
    if (grad_app->parsed()) return gradcheck.run(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ngsac
