#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "klgauss/experiment.hpp"

using namespace klgauss;

namespace {

enum Exit { kOk = 0, kUsage = 2, kFailure = 3 };

struct Options {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool paper_scale = false;
  bool check = false;
  std::string spec_path;
  bool flat = false;
};

ExperimentConfig load_config(const Options& opt) {
  if (!opt.config_path.empty() && !opt.preset_name.empty()) throw ConfigError("--config and --preset are exclusive");
  ExperimentConfig cfg;
  if (!opt.config_path.empty())
    cfg = parse_config(read_text(opt.config_path));
  else if (!opt.preset_name.empty())
    cfg = preset(opt.preset_name);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.paper_scale) apply_paper_scale(cfg);
  validate(cfg);
  return cfg;
}

CommandOutput dispatch(const std::string& command, const ExperimentConfig& cfg, const Options& opt,
                       const fs::path& out) {
  if (command == "optimize") return cmd_optimize(cfg, out);
  if (command == "sample") {
    std::optional<fs::path> spec;
    if (!opt.spec_path.empty()) spec = opt.spec_path;
    return cmd_sample(cfg, out, spec, opt.flat);
  }
  return cmd_compare(cfg, out);
}

// Runs a command into `out` and records the manifest, including on failure.
int run_once(const std::string& command, const ExperimentConfig& cfg, const Options& opt, const fs::path& out,
             bool quiet) {
  ManifestInfo info;
  info.command = command;
  info.config_text = serialize_config(cfg);
  info.seed = cfg.seed;
  info.started = utc_timestamp();
  fs::create_directories(out);
  write_text(out / "config.ini", info.config_text);
  std::vector<std::string> files{"config.ini"};
  try {
    const CommandOutput result = dispatch(command, cfg, opt, out);
    files.insert(files.end(), result.files.begin(), result.files.end());
    info.finished = utc_timestamp();
    write_manifest(out, info, files);
    if (!quiet) std::cout << result.summary;
    return kOk;
  } catch (const ConfigError& e) {
    info.status = "error";
    info.error = e.what();
    info.finished = utc_timestamp();
    write_manifest(out, info, files);
    std::cerr << "klgauss: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    info.status = "error";
    info.error = e.what();
    info.finished = utc_timestamp();
    for (const char* f : {"trace.csv", "snapshots.csv", "final_spec.txt", "data.csv"})
      if (fs::exists(out / f)) files.push_back(f);
    write_manifest(out, info, files);
    std::cerr << "klgauss: " << e.what() << "\n";
    return kFailure;
  }
}

int run_command(const std::string& command, const Options& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt);
  } catch (const std::exception& e) {
    std::cerr << "klgauss: " << e.what() << "\n";
    return kUsage;
  }
  const int rc = run_once(command, cfg, opt, opt.out, false);
  if (rc != kOk || !opt.check) return rc;

  const fs::path rerun = fs::temp_directory_path() / ("klgauss-check-" + std::to_string(::getpid()));
  fs::remove_all(rerun);
  const int rc2 = run_once(command, cfg, opt, rerun, true);
  std::vector<std::string> diffs;
  if (rc2 == kOk) diffs = compare_manifests(opt.out, rerun);
  fs::remove_all(rerun);
  if (rc2 != kOk) return rc2;
  // The manifest itself carries timestamps; compare only the listed outputs.
  if (diffs.empty()) {
    std::cout << "check: rerun reproduced every output\n";
    return kOk;
  }
  for (const auto& d : diffs) std::cerr << "check: " << d << "\n";
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian approximation by relative entropy minimisation, and pCN sampling"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "INI experiment file")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset_name, "Named experiment")
        ->check(CLI::IsMember(preset_names()));
    sub->add_option("--seed", opt.seed, "Override the run seed");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_flag("--paper-scale", opt.paper_scale, "Use the published run lengths");
    sub->add_flag("--check", opt.check, "Rerun into a temporary directory and compare output hashes");
  };

  CLI::App* optimize = app.add_subcommand("optimize", "Fit the Gaussian by stochastic approximation");
  add_common(optimize);
  CLI::App* sample = app.add_subcommand("sample", "Run a pCN chain");
  add_common(sample);
  sample->add_option("--spec", opt.spec_path, "Fitted Gaussian to use as proposal")->check(CLI::ExistingFile);
  sample->add_flag("--flat", opt.flat, "Replace the potential by zero");
  CLI::App* compare = app.add_subcommand("compare", "Fit, then run reference and informed chains");
  add_common(compare);

  double eps = 0.01;
  int n_grid = 200;
  std::string analytic_out;
  CLI::App* analytic = app.add_subcommand("scalar-analytic", "Closed-form objective for the scalar problem");
  analytic->add_option("--epsilon", eps, "Well width")->check(CLI::PositiveNumber);
  analytic->add_option("--grid", n_grid, "Number of sigma values")->check(CLI::Range(2, 1000000));
  analytic->add_option("--out", analytic_out, "Also write the table to this file");

  std::string check_dir;
  CLI::App* check = app.add_subcommand("check", "Verify output files against their manifest");
  check->add_option("dir", check_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (analytic->parsed()) {
      const std::string table = cmd_scalar_analytic(eps, n_grid);
      std::cout << table;
      if (!analytic_out.empty()) write_text(analytic_out, table);
      return kOk;
    }
    if (check->parsed()) {
      const auto problems = check_manifest(check_dir);
      for (const auto& p : problems) std::cerr << "check: " << p << "\n";
      if (problems.empty()) std::cout << "check: all files match\n";
      return problems.empty() ? kOk : kFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "klgauss: " << e.what() << "\n";
    return kFailure;
  }

  for (CLI::App* sub : {optimize, sample, compare})
    if (sub->parsed()) return run_command(sub->get_name(), opt);
  return kUsage;
}
