// tdt: decision-tree induction experiments, property suite, single builds
// and exact verification.
//
// Exit status: 0 on success, 2 on a property violation, 1 on a usage or
// input error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdt/tdt.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kViolation = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tdt::InvalidArgument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_run(const std::string& config_path, const std::string& out_override, std::size_t threads) {
  tdt::ExperimentConfig cfg = tdt::load_experiment_config(config_path);
  if (!out_override.empty()) cfg.out = out_override;
  if (threads > 0) cfg.threads = threads;
  if (cfg.out.empty()) throw tdt::InvalidArgument("no output path: set \"out\" in the config or pass --out");

  if (cfg.experiment == tdt::ExperimentKind::properties) {
    auto res = tdt::run_property_suite(cfg.seed, cfg.count);
    tdt::write_property_suite(res, cfg.out);
    std::cout << tdt::property_report(res);
    return res.exit_status;
  }
  const auto res = tdt::run_experiment(cfg);
  tdt::write_experiment(res, cfg.out);
  std::size_t failed = 0;
  for (const auto& r : res.rows)
    if (r.status.rfind("error", 0) == 0) ++failed;
  std::cout << res.rows.size() << " runs, " << res.summary.size() << " points, " << failed << " failed runs; wrote "
            << cfg.out << "\n";
  return 0;
}

int cmd_props(std::uint64_t seed, std::size_t count, const std::string& out, std::size_t max_n) {
  tdt::PropertySuiteOptions opts;
  opts.max_n = max_n;
  auto res = tdt::run_property_suite(seed, count, opts);
  if (!out.empty()) tdt::write_property_suite(res, out);
  std::cout << tdt::property_report(res);
  return res.exit_status;
}

int cmd_build(const std::string& target_path, const std::string& dist_path, double epsilon, double delta,
              std::uint64_t seed, const std::string& mode, bool halve, const std::string& out,
              const std::string& usage_out) {
  const tdt::DecisionTree target = tdt::parse_decision_tree(read_file(target_path));
  const tdt::ProductDistribution dist = tdt::parse_distribution(read_file(dist_path));
  tdt::validate_dimension(target, dist.dimension());

  nlohmann::ordered_json summary;
  summary["mode"] = mode;
  tdt::DecisionTree tree;
  std::string usage;
  if (mode == "exact") {
    tdt::ExactBuildOptions opts;
    opts.epsilon = epsilon;
    opts.ground_truth = tdt::depths_of(target, dist);
    const auto res = tdt::build_topdown_exact(target, dist, opts);
    tree = res.tree;
    usage = tdt::trace_csv(res.trace);
    summary["terminated"] = res.terminated;
    summary["splits"] = res.trace.steps.size();
    summary["final_cost"] = res.trace.final_cost;
  } else {
    tdt::PracticalOptions opts;
    opts.epsilon = epsilon;
    opts.delta = delta;
    opts.seed = seed;
    opts.halve_epsilon = halve;
    const auto res = tdt::build_topdown_practical(tdt::TargetOracle::from_tree(target, dist), opts);
    tree = res.tree;
    usage = tdt::usage_csv(res.usage);
    summary["terminated"] = res.terminated;
    summary["splits"] = res.trace.size();
    summary["label_queries"] = res.label_queries;
    summary["random_draws"] = res.random_draws;
  }
  summary["size"] = tree.size();
  if (dist.dimension() <= tdt::kDefaultEnumerationCap) summary["exact_error"] = tdt::tree_error(tree, target, dist);
  summary["tree"] = nlohmann::ordered_json::parse(tdt::serialize_tree(tree));
  if (!out.empty()) tdt::write_file(out, tdt::serialize_tree(tree) + "\n");
  if (!usage_out.empty()) tdt::write_file(usage_out, usage);
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_verify(const std::string& tree_path, const std::string& target_path, const std::string& dist_path,
               std::optional<double> epsilon) {
  const tdt::DecisionTree tree = tdt::parse_decision_tree(read_file(tree_path));
  const tdt::DecisionTree target = tdt::parse_decision_tree(read_file(target_path));
  const tdt::ProductDistribution dist = tdt::parse_distribution(read_file(dist_path));
  const double err = tdt::tree_error(tree, target, dist);
  std::cout << "error " << g17(err) << "\n";
  if (epsilon && err > *epsilon) {
    std::cout << "error exceeds epsilon " << g17(*epsilon) << "\n";
    return kViolation;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-down decision-tree induction under product distributions"};
  app.require_subcommand(1);

  std::string config, run_out;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Override the config's output path");
  run->add_option("--threads", threads, "Override the config's worker count");

  std::uint64_t props_seed = 1;
  std::size_t props_count = 200, props_max_n = 6;
  std::string props_out;
  auto* props = app.add_subcommand("props", "Run the property suite on generated instances");
  props->add_option("--seed", props_seed, "Master seed")->capture_default_str();
  props->add_option("--count", props_count, "Number of instances")->capture_default_str();
  props->add_option("--max-n", props_max_n, "Largest instance dimension (1..8)")->capture_default_str();
  props->add_option("--out", props_out, "CSV report path (text report and witnesses go alongside)");

  std::string target, dist, mode = "practical", build_out, usage_out;
  double epsilon = 0.1, delta = 0.1;
  std::uint64_t seed = 0;
  bool halve = false;
  auto* build = app.add_subcommand("build", "Build one tree for a target given as a tree file");
  build->add_option("--target", target, "Target tree (JSON)")->required()->check(CLI::ExistingFile);
  build->add_option("--dist", dist, "Distribution (JSON)")->required()->check(CLI::ExistingFile);
  build->add_option("--epsilon", epsilon, "Accuracy target")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  build->add_option("--delta", delta, "Failure probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  build->add_option("--seed", seed, "Master seed for the sample-based builder")->capture_default_str();
  build->add_option("--mode", mode, "Builder")->capture_default_str()->check(CLI::IsMember({"exact", "practical"}));
  build->add_flag("--halve-epsilon", halve, "Sample-based builder aims for epsilon/2");
  build->add_option("--out", build_out, "Write the tree (JSON) here");
  build->add_option("--usage", usage_out, "Write the sample-usage (practical) or trace (exact) CSV here");

  std::string tree, vtarget, vdist;
  std::optional<double> vepsilon;
  auto* verify = app.add_subcommand("verify", "Exact error of a tree against a target");
  verify->add_option("--tree", tree, "Hypothesis tree (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--target", vtarget, "Target tree (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--dist", vdist, "Distribution (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--epsilon", vepsilon, "Exit with status 2 when the error exceeds this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return cmd_run(config, run_out, threads);
    if (*props) return cmd_props(props_seed, props_count, props_out, props_max_n);
    if (*build) return cmd_build(target, dist, epsilon, delta, seed, mode, halve, build_out, usage_out);
    if (*verify) return cmd_verify(tree, vtarget, vdist, vepsilon);
  } catch (const std::exception& e) {
    std::cerr << "tdt: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
