#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace klgauss {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment description. The text form is INI-like: "[section]" headers and
// "key = value" lines, '#' comments. Every key has a default; unknown
// sections or keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  // [problem]
  std::string problem = "scalar";  // scalar | darcy | diffusion
  double epsilon = 0.01;
  double gamma_obs = 0.1;
  double delta = 1.0;
  int grid_points = 128;
  std::vector<double> obs_points{0.2, 0.4, 0.6, 0.8};
  double p_minus = 0.0;
  double p_plus = 2.0;
  double truth_amplitude = 2.0;  // u_true(x) = A sin(2 pi x)

  // [approximation]
  std::string param = "scalar-variance";  // finite-rank | constant-potential | variable-potential
  int rank = 2;
  double alpha = 1e-2;
  double initial_sigma = 1.0;
  double initial_potential = 1.0;
  double right_value = 2.0;

  // [optimizer]
  long iterations = 10000;
  int samples = 100;
  double a0 = 0.1;
  double gamma_exp = 0.6;
  double mean_lo = -0.5;
  double mean_hi = 0.5;
  double spectrum_lo = 1e-3;
  double spectrum_hi = 1.0;
  int snapshot_every = 100;
  std::string sampler = "ou-bridge";  // ou-bridge | exact (constant potential only)

  // [chain]
  double beta = 1.0;
  long steps = 100000;
  double burn_in = 0.1;
  int probe = -1;
  long max_lag = 1000;
  long record_every = 1;
  long thinning = 1000;

  bool operator==(const ExperimentConfig&) const = default;
};

// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double x);

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

// Published run lengths: 10^5 optimizer iterations, 10^6 chain steps.
void apply_paper_scale(ExperimentConfig& cfg);

}  // namespace klgauss
