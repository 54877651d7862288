#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <sstream>

#include "klgauss/experiment.hpp"

using namespace klgauss;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("klgauss-test-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentConfig tiny(const std::string& name) {
  ExperimentConfig c = preset(name);
  c.iterations = 30;
  c.samples = 10;
  c.steps = 300;
  c.max_lag = 20;
  c.snapshot_every = 10;
  c.record_every = 10;
  c.thinning = 100;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Seeds, StreamsAreDistinct) {
  ExperimentConfig c;
  EXPECT_NE(stream_seed(c, Stream::Optimizer), stream_seed(c, Stream::ReferenceChain));
  EXPECT_NE(stream_seed(c, Stream::ReferenceChain), stream_seed(c, Stream::InformedChain));
  c.seed = 2;
  EXPECT_NE(stream_seed(c, Stream::Optimizer), stream_seed(ExperimentConfig{}, Stream::Optimizer));
}

TEST(Build, PresetsProduceConsistentExperiments) {
  for (const std::string& name : preset_names()) {
    const Experiment ex = build_experiment(preset(name));
    EXPECT_EQ(ex.initial.mean.size(), ex.problem->dim()) << name;
    EXPECT_NO_THROW(evaluate_batch(ex.initial, *ex.problem, [&] {
      RandomStream rng(1);
      return draw_batch(ex.initial, *ex.problem, 4, rng);
    }()));
  }
}

TEST(Build, DarcyDataAndInitialFactor) {
  const Experiment ex = build_experiment(preset("darcy-g0.1"));
  ASSERT_TRUE(ex.data.has_value());
  EXPECT_EQ(ex.data->y.size(), 4);
  const auto& B = std::get<FiniteRank>(ex.initial.cov).B;
  const auto& basis = std::get<FourierBasis>(ex.problem->reference());
  EXPECT_DOUBLE_EQ(B(0, 0), basis.amplitude(1));
  EXPECT_DOUBLE_EQ(B(1, 1), basis.amplitude(2));
  EXPECT_EQ(B(0, 1), 0.0);
  EXPECT_NEAR(ex.truth[32], 2.0, 1e-12);  // A sin(2 pi x) at x = 1/4
}

TEST(Spec, RoundTripIsExact) {
  const Vec m = Vec::LinSpaced(5, -0.1, 1.0 / 3.0);
  const std::vector<GaussianSpec> specs{
      {Vec::Constant(1, 0.1), Vec::Zero(1), ScalarVariance{0.09498958}},
      {m, Vec::Zero(5), FiniteRank{(Mat(2, 2) << 0.1, 0.02, 0.02, 0.3).finished()}},
      {m, m, ConstantPotential{3.14159, 0.05}},
      {m, m, VariablePotential{Vec::LinSpaced(5, 1, 2), 0.05, 0.01, 2.0}}};
  for (const GaussianSpec& s : specs) {
    std::string name;
    const GaussianSpec back = parse_spec(serialize_spec(s, "diffusion"), &name);
    EXPECT_EQ(name, "diffusion");
    EXPECT_EQ(back.mean, s.mean);
    EXPECT_EQ(back.reference_mean, s.reference_mean);
    EXPECT_EQ(cov_to_vector(back.cov), cov_to_vector(s.cov));
    EXPECT_EQ(back.cov.index(), s.cov.index());
  }
}

TEST(Spec, HeaderIsVersioned) {
  const std::string text = serialize_spec({Vec::Zero(1), Vec::Zero(1), ScalarVariance{1.0}}, "scalar");
  EXPECT_EQ(lines(text).front(), "klgauss-spec 1");
  EXPECT_THROW(parse_spec("klgauss-spec 2\n"), ConfigError);
  EXPECT_THROW(parse_spec(text.substr(0, text.find("cov"))), ConfigError);
}

TEST(Spec, RejectsWrongLengths) {
  EXPECT_THROW(parse_spec("klgauss-spec 1\nproblem scalar\nkind scalar-variance\ndim 2\nmean 0\nreference_mean 0\ncov 1\n"),
               ConfigError);
  EXPECT_THROW(parse_spec("klgauss-spec 1\nproblem scalar\nkind scalar-variance\ndim 1\nmean 0\nreference_mean 0\ncov 1 2\n"),
               ConfigError);
}

TEST(Hash, GitBlobSha1) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Csv, TraceHeaderAndRows) {
  RMTrace t;
  KLEstimate e;
  e.value = 1.5;
  t.records.push_back({1, 0.1, e, 0.2, 0.3, true, true});
  const auto l = lines(trace_csv(t));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "n,a_n,dkl_estimate,dkl_stderr,mean_norm,cov_param_summary,proj_active");
  EXPECT_EQ(l[1].substr(0, 2), "1,");
  EXPECT_EQ(l[1].back(), '3');
}

TEST(Csv, ChainDiagThinningKeepsLastRow) {
  ChainDiag d;
  d.accepted = {1, 0, 1, 1, 0};
  d.probe = {0.1, 0.1, 0.3, 0.4, 0.4};
  const auto l = lines(chain_diag_csv(d, 2));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "k,accepted,running_accept_rate,probe_value");
  EXPECT_EQ(l[1].substr(0, 4), "2,0,");
  EXPECT_EQ(l[3].substr(0, 4), "5,0,");
  EXPECT_THROW(chain_diag_csv(d, 0), InvalidArgument);
}

TEST(ScalarAnalyticTable, MinimumSitsNextToOptimum) {
  const double eps = 0.01;
  const std::string table = cmd_scalar_analytic(eps, 301);
  const double s_opt = scalar_sigma_opt(eps);
  double best_s = 0.0, best_d = INFINITY, nearest = 0.0;
  for (const std::string& l : lines(table)) {
    if (l.empty() || l[0] == '#' || l[0] == 's') continue;
    const auto comma = l.find(',');
    const double s = std::stod(l.substr(0, comma)), d = std::stod(l.substr(comma + 1));
    EXPECT_GE(d, 0.0);
    if (d < best_d) best_d = d, best_s = s;
    if (std::abs(std::log(s / s_opt)) < std::abs(std::log(nearest / s_opt)) || nearest == 0.0) nearest = s;
  }
  EXPECT_EQ(best_s, nearest);
  EXPECT_NE(table.find("# sigma_opt = 0.0949"), std::string::npos);
  EXPECT_THROW(cmd_scalar_analytic(0.0), InvalidArgument);
}

TEST(ScalarAnalyticTable, SixteenthGivesOneOverTwentyFour) {
  const std::string table = cmd_scalar_analytic(1.0 / 16.0, 3);
  const auto l = lines(table);
  EXPECT_NEAR(std::stod(l[1].substr(l[1].find('=') + 1)), 1.0 / 24.0, 1e-15);
}

TEST(Commands, CompareWritesManifestedFilesDeterministically) {
  TempDir a("cmp-a"), b("cmp-b");
  const ExperimentConfig cfg = tiny("darcy-g0.1");
  const CommandOutput out_a = cmd_compare(cfg, a.path());
  const CommandOutput out_b = cmd_compare(cfg, b.path());
  ManifestInfo info{"compare", serialize_config(cfg), cfg.seed, "t0", "t1", "ok", ""};
  write_manifest(a.path(), info, out_a.files);
  info.started = "t2";
  write_manifest(b.path(), info, out_b.files);
  EXPECT_TRUE(compare_manifests(a.path(), b.path()).empty());
  EXPECT_TRUE(check_manifest(a.path()).empty());
  for (const char* f : {"trace.csv", "snapshots.csv", "final_spec.txt", "data.csv", "compare.csv",
                        "chain_diag_reference.csv", "chain_diag_informed.csv", "autocov_informed.csv",
                        "posterior_summary_reference.csv"})
    EXPECT_TRUE(fs::exists(a.path() / f)) << f;
  const auto cmp = lines(read_text(a.path() / "compare.csv"));
  ASSERT_EQ(cmp.size(), 3u);
  EXPECT_EQ(cmp[0], "chain,acceptance_rate,iact,acov_lag0,acov_lag1,acov_lag10,acov_lag100");
  EXPECT_NE(cmp[2].find("nan"), std::string::npos);  // max_lag 20 has no lag 100
}

TEST(Commands, ManifestDetectsTampering) {
  TempDir dir("tamper");
  const ExperimentConfig cfg = tiny("scalar");
  const CommandOutput out = cmd_optimize(cfg, dir.path());
  write_manifest(dir.path(), {"optimize", serialize_config(cfg), cfg.seed, "", "", "ok", ""}, out.files);
  EXPECT_TRUE(check_manifest(dir.path()).empty());
  write_text(dir.path() / "trace.csv", "tampered\n");
  const auto problems = check_manifest(dir.path());
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("trace.csv"), std::string::npos);
  fs::remove(dir.path() / "final_spec.txt");
  EXPECT_EQ(check_manifest(dir.path()).size(), 2u);
}

TEST(Commands, SampleFromFittedSpec) {
  TempDir dir("sample");
  const ExperimentConfig cfg = tiny("diffusion-constB");
  cmd_optimize(cfg, dir.path());
  const CommandOutput s = cmd_sample(cfg, dir.path() / "chain", dir.path() / "final_spec.txt");
  EXPECT_NE(s.summary.find("informed"), std::string::npos);
  const auto post = lines(read_text(dir.path() / "chain" / "posterior_summary.csv"));
  EXPECT_EQ(post.size(), 100u);  // header + 99 nodes
}

TEST(Commands, SampleRejectsSpecForAnotherProblem) {
  TempDir dir("mismatch");
  const ExperimentConfig scalar = tiny("scalar");
  cmd_optimize(scalar, dir.path());
  EXPECT_THROW(cmd_sample(tiny("diffusion-constB"), dir.path() / "x", dir.path() / "final_spec.txt"), ConfigError);
}

TEST(Commands, FlatSampleKeepsEveryProposal) {
  TempDir dir("flat");
  const CommandOutput s = cmd_sample(tiny("darcy-g0.1"), dir.path(), std::nullopt, true);
  const auto rows = lines(read_text(dir.path() / "chain_diag.csv"));
  EXPECT_NE(rows.back().find(",1,1,"), std::string::npos);
}

TEST(Commands, PosteriorMeansStayInsideTheMeanBox) {
  TempDir dir("box");
  const ExperimentConfig cfg = tiny("diffusion-varB");
  cmd_optimize(cfg, dir.path());
  const GaussianSpec s = parse_spec(read_text(dir.path() / "final_spec.txt"));
  EXPECT_TRUE(s.mean.allFinite());
  EXPECT_GE(s.mean.minCoeff(), cfg.mean_lo);
  EXPECT_LE(s.mean.maxCoeff(), cfg.mean_hi);
}
