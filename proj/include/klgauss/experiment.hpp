#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "klgauss/config.hpp"
#include "klgauss/pcn.hpp"
#include "klgauss/robbins_monro.hpp"

namespace klgauss {

namespace fs = std::filesystem;

// Independent random streams of one run.
enum class Stream : std::uint64_t { Optimizer = 1, ReferenceChain = 2, InformedChain = 3, Data = 11 };
std::uint64_t stream_seed(const ExperimentConfig& cfg, Stream s);

struct Experiment {
  std::unique_ptr<TargetProblem> problem;
  GaussianSpec initial;
  RMConfig rm;
  ChainConfig chain;
  std::optional<SyntheticData> data;
  Vec truth;
};

Experiment build_experiment(const ExperimentConfig& cfg);

// Text form of an optimised Gaussian. First line is the version header.
inline constexpr const char* kSpecHeader = "klgauss-spec 1";
std::string serialize_spec(const GaussianSpec& spec, const std::string& problem);
GaussianSpec parse_spec(const std::string& text, std::string* problem = nullptr);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

std::string trace_csv(const RMTrace& trace);
std::string snapshots_csv(const RMTrace& trace);
std::string chain_diag_csv(const ChainDiag& diag, long record_every);
std::string posterior_summary_csv(const ChainDiag& diag);
std::string autocov_csv(const ChainDiag& diag);

// Git blob hash: sha1("blob <size>\0" + bytes), hex encoded.
std::string git_blob_sha1(const std::string& bytes);

struct CommandOutput {
  std::vector<std::string> files;  // relative to the output directory
  std::string summary;
};

CommandOutput cmd_optimize(const ExperimentConfig& cfg, const fs::path& out);
// Reference proposals when spec_path is empty. flat replaces Phi by 0.
CommandOutput cmd_sample(const ExperimentConfig& cfg, const fs::path& out, const std::optional<fs::path>& spec_path,
                         bool flat = false);
CommandOutput cmd_compare(const ExperimentConfig& cfg, const fs::path& out);
// Closed-form table for the scalar problem on a sigma grid.
std::string cmd_scalar_analytic(double eps, int n_grid = 200);

struct ManifestInfo {
  std::string command;
  std::string config_text;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::string status = "ok";
  std::string error;
};

void write_manifest(const fs::path& out, const ManifestInfo& info, const std::vector<std::string>& files);
// Returns a description of each file whose hash or presence disagrees.
std::vector<std::string> check_manifest(const fs::path& out);
// Compares file hashes listed in two manifests.
std::vector<std::string> compare_manifests(const fs::path& expected, const fs::path& actual);

std::string utc_timestamp();

}  // namespace klgauss
