#include "klgauss/experiment.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace klgauss {

using nlohmann::json;

std::uint64_t stream_seed(const ExperimentConfig& cfg, Stream s) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(s));
}

namespace {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  Experiment ex;
  if (cfg.problem == "scalar") {
    ex.problem = std::make_unique<ScalarDoubleWell>(cfg.epsilon);
    ex.initial = GaussianSpec{Vec::Zero(1), Vec::Zero(1), ScalarVariance{cfg.initial_sigma}};
  } else if (cfg.problem == "darcy") {
    const Grid1D grid = Grid1D::periodic(cfg.grid_points);
    FourierBasis basis(grid, cfg.delta);
    if (cfg.rank >= basis.n_modes()) throw ConfigError("approximation.rank: too large for the grid");
    const Vec x = grid.nodes();
    ex.truth = cfg.truth_amplitude * (2.0 * M_PI * x.array()).sin().matrix();
    const Vec points = to_vec(cfg.obs_points);
    RandomStream data_rng(stream_seed(cfg, Stream::Data));
    ex.data = synthesize_data(ex.truth, points, cfg.gamma_obs, cfg.p_minus, cfg.p_plus, data_rng);
    Mat B = Mat::Zero(cfg.rank, cfg.rank);
    for (int k = 1; k <= cfg.rank; ++k) B(k - 1, k - 1) = basis.amplitude(k);
    ex.problem = std::make_unique<DarcyProblem>(
        basis, DarcyObservations{points, ex.data->y, cfg.gamma_obs, cfg.p_minus, cfg.p_plus});
    ex.initial = GaussianSpec{Vec::Zero(grid.size()), Vec::Zero(grid.size()), FiniteRank{B}};
  } else {
    auto problem = std::make_unique<DiffusionProblem>(cfg.epsilon, cfg.grid_points);
    const Vec m0 = problem->reference_mean();
    CovParam cov = ConstantPotential{cfg.initial_potential, cfg.epsilon};
    if (cfg.param == "variable-potential")
      cov = VariablePotential{Vec::Constant(cfg.grid_points, cfg.initial_potential), cfg.epsilon, cfg.alpha,
                              cfg.right_value};
    ex.initial = GaussianSpec{m0, m0, cov};
    ex.problem = std::move(problem);
  }

  ex.rm.n_iters = cfg.iterations;
  ex.rm.M = cfg.samples;
  ex.rm.schedule = {cfg.a0, cfg.gamma_exp};
  ex.rm.mean_lo = cfg.mean_lo;
  ex.rm.mean_hi = cfg.mean_hi;
  ex.rm.spec_lo = cfg.spectrum_lo;
  ex.rm.spec_hi = cfg.spectrum_hi;
  ex.rm.seed = stream_seed(cfg, Stream::Optimizer);
  ex.rm.snapshot_every = cfg.snapshot_every;
  ex.rm.sampling = cfg.sampler == "exact" ? PotentialSampling::Exact : PotentialSampling::OuBridge;

  ex.chain.beta = cfg.beta;
  ex.chain.n_steps = cfg.steps;
  ex.chain.thinning = cfg.thinning;
  ex.chain.burn_in_fraction = cfg.burn_in;
  ex.chain.probe = cfg.probe;
  ex.chain.max_lag = cfg.max_lag;
  return ex;
}

// ---------------------------------------------------------------------------
// Spec text form

namespace {

std::string join(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
  return out;
}

Vec split(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw ConfigError("spec: cannot parse '" + tok + "' in " + key);
    out.push_back(x);
  }
  return to_vec(out);
}

}  // namespace

std::string serialize_spec(const GaussianSpec& spec, const std::string& problem) {
  std::ostringstream out;
  out << kSpecHeader << "\n";
  out << "problem " << problem << "\n";
  out << "kind " << cov_kind_name(spec.cov) << "\n";
  out << "dim " << spec.mean.size() << "\n";
  std::visit(Overloaded{[&](const ScalarVariance&) {},
                        [&](const FiniteRank& f) { out << "rank " << f.rank() << "\n"; },
                        [&](const ConstantPotential& c) { out << "eps " << format_double(c.eps) << "\n"; },
                        [&](const VariablePotential& v) {
                          out << "eps " << format_double(v.eps) << "\n";
                          out << "alpha " << format_double(v.alpha) << "\n";
                          out << "right_value " << format_double(v.right_value) << "\n";
                        }},
             spec.cov);
  out << "mean " << join(spec.mean) << "\n";
  out << "reference_mean " << join(spec.reference_mean) << "\n";
  out << "cov " << join(cov_to_vector(spec.cov)) << "\n";
  return out.str();
}

GaussianSpec parse_spec(const std::string& text, std::string* problem) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSpecHeader) throw ConfigError("spec: missing header '" + std::string(kSpecHeader) + "'");
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    if (!fields.emplace(key, sp == std::string::npos ? "" : line.substr(sp + 1)).second)
      throw ConfigError("spec: duplicate field '" + key + "'");
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("spec: missing field '" + key + "'");
    return it->second;
  };
  auto number = [&](const std::string& key) {
    const Vec v = split(need(key), key);
    if (v.size() != 1) throw ConfigError("spec: field '" + key + "' must hold one number");
    return v[0];
  };

  GaussianSpec spec;
  spec.mean = split(need("mean"), "mean");
  spec.reference_mean = split(need("reference_mean"), "reference_mean");
  const long dim = std::lround(number("dim"));
  if (spec.mean.size() != dim || spec.reference_mean.size() != dim) throw ConfigError("spec: mean length differs from dim");
  const Vec theta = split(need("cov"), "cov");
  const std::string& kind = need("kind");
  CovParam like;
  if (kind == "scalar-variance") {
    like = ScalarVariance{1.0};
  } else if (kind == "finite-rank") {
    const long K = std::lround(number("rank"));
    if (K < 1) throw ConfigError("spec: rank must be >= 1");
    like = FiniteRank{Mat::Identity(K, K)};
  } else if (kind == "constant-potential") {
    like = ConstantPotential{1.0, number("eps")};
  } else if (kind == "variable-potential") {
    like = VariablePotential{Vec::Ones(dim), number("eps"), number("alpha"), number("right_value")};
  } else {
    throw ConfigError("spec: unknown kind '" + kind + "'");
  }
  if (theta.size() != cov_to_vector(like).size()) throw ConfigError("spec: cov has the wrong length");
  spec.cov = cov_from_vector(like, theta);
  if (problem) *problem = need("problem");
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

std::string trace_csv(const RMTrace& trace) {
  std::string out = "n,a_n,dkl_estimate,dkl_stderr,mean_norm,cov_param_summary,proj_active\n";
  for (const RMRecord& r : trace.records) {
    const int active = (r.mean_clamped ? 1 : 0) | (r.cov_clamped ? 2 : 0);
    out += std::to_string(r.n) + "," + format_double(r.a_n) + "," + format_double(r.estimate.value) + "," +
           format_double(r.estimate.std_error) + "," + format_double(r.mean_norm) + "," +
           format_double(r.cov_summary) + "," + std::to_string(active) + "\n";
  }
  return out;
}

std::string snapshots_csv(const RMTrace& trace) {
  std::string out = "n,field,index,value\n";
  for (const RMSnapshot& s : trace.snapshots) {
    for (Eigen::Index i = 0; i < s.mean.size(); ++i)
      out += std::to_string(s.n) + ",mean," + std::to_string(i) + "," + format_double(s.mean[i]) + "\n";
    for (Eigen::Index i = 0; i < s.cov.size(); ++i)
      out += std::to_string(s.n) + ",cov," + std::to_string(i) + "," + format_double(s.cov[i]) + "\n";
  }
  return out;
}

std::string chain_diag_csv(const ChainDiag& diag, long record_every) {
  if (record_every < 1) throw InvalidArgument("record interval must be >= 1");
  std::string out = "k,accepted,running_accept_rate,probe_value\n";
  long acc = 0;
  for (std::size_t i = 0; i < diag.accepted.size(); ++i) {
    acc += diag.accepted[i];
    const long k = static_cast<long>(i) + 1;
    if (k % record_every != 0 && i + 1 != diag.accepted.size()) continue;
    out += std::to_string(k) + "," + std::to_string(int(diag.accepted[i])) + "," +
           format_double(static_cast<double>(acc) / static_cast<double>(k)) + "," + format_double(diag.probe[i]) +
           "\n";
  }
  return out;
}

std::string posterior_summary_csv(const ChainDiag& diag) {
  std::string out = "node,mean,variance\n";
  for (Eigen::Index i = 0; i < diag.post_mean.size(); ++i)
    out += std::to_string(i) + "," + format_double(diag.post_mean[i]) + "," + format_double(diag.post_var[i]) + "\n";
  return out;
}

std::string autocov_csv(const ChainDiag& diag) {
  std::string out = "lag,value\n";
  for (Eigen::Index i = 0; i < diag.autocov.size(); ++i)
    out += std::to_string(i) + "," + format_double(diag.autocov[i]) + "\n";
  return out;
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string payload = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void emit(const fs::path& out, CommandOutput& result, const std::string& name, const std::string& text) {
  write_text(out / name, text);
  result.files.push_back(name);
}

void emit_data(const fs::path& out, CommandOutput& result, const Experiment& ex, const ExperimentConfig& cfg) {
  if (!ex.data) return;
  std::string csv = "point,y,noise\n";
  for (std::size_t i = 0; i < cfg.obs_points.size(); ++i)
    csv += format_double(cfg.obs_points[i]) + "," + format_double(ex.data->y[Eigen::Index(i)]) + "," +
           format_double(ex.data->noise[Eigen::Index(i)]) + "\n";
  emit(out, result, "data.csv", csv);
}

void emit_chain(const fs::path& out, CommandOutput& result, const std::string& suffix, const ChainDiag& diag,
                const ExperimentConfig& cfg) {
  emit(out, result, "chain_diag" + suffix + ".csv", chain_diag_csv(diag, cfg.record_every));
  emit(out, result, "posterior_summary" + suffix + ".csv", posterior_summary_csv(diag));
  emit(out, result, "autocov" + suffix + ".csv", autocov_csv(diag));
}

std::string chain_line(const std::string& label, const ChainDiag& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s acceptance %.4f  iact %.2f  non-finite %ld\n", label.c_str(),
                d.acceptance_rate(), d.iact, d.n_non_finite);
  return buf;
}

double window_mean(const RMTrace& trace, bool head) {
  const std::size_t n = trace.records.size();
  const std::size_t w = std::max<std::size_t>(1, n / 10);
  double s = 0.0;
  for (std::size_t i = 0; i < w; ++i) s += trace.records[head ? i : n - w + i].estimate.value;
  return s / static_cast<double>(w);
}

RMResult optimize_into(const Experiment& ex, const ExperimentConfig& cfg, const fs::path& out,
                       CommandOutput& result) {
  fs::create_directories(out);
  RMResult rm = rm_minimize(ex.initial, *ex.problem, ex.rm);
  emit(out, result, "trace.csv", trace_csv(rm.trace));
  emit(out, result, "snapshots.csv", snapshots_csv(rm.trace));
  emit(out, result, "final_spec.txt", serialize_spec(rm.spec, ex.problem->name()));
  emit_data(out, result, ex, cfg);
  if (!rm.completed) throw std::runtime_error("optimizer stopped at " + rm.error);
  std::ostringstream s;
  s << "problem " << ex.problem->name() << ", " << cov_kind_name(rm.spec.cov) << ", " << rm.trace.records.size()
    << " iterations\n";
  if (!rm.trace.records.empty())
    s << "objective (first/last 10%): " << format_double(window_mean(rm.trace, true)) << " -> "
      << format_double(window_mean(rm.trace, false)) << "\n";
  s << "mean norm " << format_double(rm.trace.records.back().mean_norm) << ", covariance summary "
    << format_double(cov_summary(rm.spec.cov)) << "\n";
  result.summary += s.str();
  return rm;
}

}  // namespace

CommandOutput cmd_optimize(const ExperimentConfig& cfg, const fs::path& out) {
  const Experiment ex = build_experiment(cfg);
  CommandOutput result;
  optimize_into(ex, cfg, out, result);
  return result;
}

CommandOutput cmd_sample(const ExperimentConfig& cfg, const fs::path& out, const std::optional<fs::path>& spec_path,
                         bool flat) {
  const Experiment ex = build_experiment(cfg);
  std::unique_ptr<TargetProblem> flat_problem;
  const TargetProblem* problem = ex.problem.get();
  if (flat) {
    flat_problem = std::make_unique<FlatProblem>(ex.problem->reference(), ex.problem->reference_mean());
    problem = flat_problem.get();
  }
  fs::create_directories(out);
  CommandOutput result;
  ChainConfig chain = ex.chain;
  ChainDiag diag;
  if (spec_path) {
    std::string name;
    const GaussianSpec nu = parse_spec(read_text(*spec_path), &name);
    if (name != ex.problem->name())
      throw ConfigError("spec was fitted for '" + name + "', config describes '" + ex.problem->name() + "'");
    if (nu.mean.size() != ex.problem->dim()) throw ConfigError("spec dimension does not match the problem grid");
    chain.seed = stream_seed(cfg, Stream::InformedChain);
    diag = run_informed_chain(*problem, nu, chain);
    result.summary = chain_line("informed", diag);
  } else {
    chain.seed = stream_seed(cfg, Stream::ReferenceChain);
    diag = run_reference_chain(*problem, chain);
    result.summary = chain_line("reference", diag);
  }
  emit_chain(out, result, "", diag, cfg);
  emit_data(out, result, ex, cfg);
  return result;
}

CommandOutput cmd_compare(const ExperimentConfig& cfg, const fs::path& out) {
  const Experiment ex = build_experiment(cfg);
  CommandOutput result;
  const RMResult rm = optimize_into(ex, cfg, out, result);

  ChainConfig ref_cfg = ex.chain;
  ref_cfg.seed = stream_seed(cfg, Stream::ReferenceChain);
  ChainConfig inf_cfg = ex.chain;
  inf_cfg.seed = stream_seed(cfg, Stream::InformedChain);
  auto ref_future = std::async(std::launch::async, [&] { return run_reference_chain(*ex.problem, ref_cfg); });
  const ChainDiag informed = run_informed_chain(*ex.problem, rm.spec, inf_cfg);
  const ChainDiag reference = ref_future.get();

  emit_chain(out, result, "_reference", reference, cfg);
  emit_chain(out, result, "_informed", informed, cfg);
  std::string csv = "chain,acceptance_rate,iact,acov_lag0,acov_lag1,acov_lag10,acov_lag100\n";
  for (const auto& [label, d] : {std::pair<std::string, const ChainDiag&>{"reference", reference},
                                 std::pair<std::string, const ChainDiag&>{"informed", informed}}) {
    csv += label + "," + format_double(d.acceptance_rate()) + "," + format_double(d.iact);
    for (Eigen::Index lag : {0, 1, 10, 100})
      csv += "," + (lag < d.autocov.size() ? format_double(d.autocov[lag]) : std::string("nan"));
    csv += "\n";
  }
  emit(out, result, "compare.csv", csv);
  result.summary += chain_line("reference", reference) + chain_line("informed", informed);
  return result;
}

std::string cmd_scalar_analytic(double eps, int n_grid) {
  if (!(eps > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (n_grid < 2) throw InvalidArgument("grid needs at least two points");
  const double s_opt = scalar_sigma_opt(eps);
  const double d_opt = scalar_dkl_analytic(0.0, s_opt, eps);
  std::string out;
  out += "# sigma_opt = " + format_double(s_opt) + "\n";
  out += "# sigma_opt^2 = " + format_double(s_opt * s_opt) + "\n";
  out += "# eps - 12 eps^2 = " + format_double(eps - 12.0 * eps * eps) + "\n";
  out += "sigma,dkl_minus_min\n";
  // Log-spaced over two decades either side of sqrt(eps).
  const double lo = std::log(std::sqrt(eps) / 100.0);
  const double hi = std::log(std::sqrt(eps) * 100.0);
  for (int i = 0; i < n_grid; ++i) {
    const double s = std::exp(lo + (hi - lo) * i / (n_grid - 1));
    out += format_double(s) + "," + format_double(scalar_dkl_analytic(0.0, s, eps) - d_opt) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& out, const ManifestInfo& info, const std::vector<std::string>& files) {
  fs::create_directories(out);
  json j;
  j["command"] = info.command;
  j["config"] = info.config_text;
  j["config_sha1"] = git_blob_sha1(info.config_text);
  j["seed"] = info.seed;
  j["started"] = info.started;
  j["finished"] = info.finished;
  j["status"] = info.status;
  if (!info.error.empty()) j["error"] = info.error;
  j["files"] = json::array();
  for (const std::string& f : files) {
    const std::string bytes = read_text(out / f);
    j["files"].push_back({{"path", f}, {"bytes", bytes.size()}, {"sha1", git_blob_sha1(bytes)}});
  }
  write_text(out / "manifest.json", j.dump(2) + "\n");
}

namespace {

std::map<std::string, std::string> manifest_hashes(const fs::path& dir) {
  const json j = json::parse(read_text(dir / "manifest.json"));
  std::map<std::string, std::string> out;
  for (const auto& f : j.at("files")) out[f.at("path").get<std::string>()] = f.at("sha1").get<std::string>();
  return out;
}

}  // namespace

std::vector<std::string> check_manifest(const fs::path& out) {
  std::vector<std::string> problems;
  for (const auto& [path, sha] : manifest_hashes(out)) {
    if (!fs::exists(out / path)) {
      problems.push_back(path + ": missing");
      continue;
    }
    if (git_blob_sha1(read_text(out / path)) != sha) problems.push_back(path + ": hash mismatch");
  }
  return problems;
}

std::vector<std::string> compare_manifests(const fs::path& expected, const fs::path& actual) {
  const auto a = manifest_hashes(expected);
  const auto b = manifest_hashes(actual);
  std::vector<std::string> problems;
  for (const auto& [path, sha] : a) {
    const auto it = b.find(path);
    if (it == b.end())
      problems.push_back(path + ": missing from rerun");
    else if (it->second != sha)
      problems.push_back(path + ": differs (" + sha.substr(0, 10) + " vs " + it->second.substr(0, 10) + ")");
  }
  for (const auto& [path, sha] : b)
    if (!a.count(path)) problems.push_back(path + ": only in rerun");
  return problems;
}

}  // namespace klgauss
