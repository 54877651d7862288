#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace klgauss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a matrix that should define a Gaussian is not positive definite.
class NotACovariance : public std::runtime_error {
 public:
  NotACovariance(const std::string& what, double eigenvalue)
      : std::runtime_error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class NonFiniteObjective : public std::runtime_error {
 public:
  NonFiniteObjective(const std::string& what, std::size_t sample_index)
      : std::runtime_error(what), sample_index_(sample_index) {}
  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

class DegenerateWeights : public std::runtime_error {
 public:
  DegenerateWeights(const std::string& what, double max_exponent)
      : std::runtime_error(what), max_exponent_(max_exponent) {}
  double max_exponent() const { return max_exponent_; }

 private:
  double max_exponent_;
};

class SingularFactor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded stream of standard normals and uniforms. The draw counter records
// how many variates have been consumed, so a sample can be traced back to
// (seed, index).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  double normal() {
    ++draws_;
    return normal_(engine_);
  }
  double uniform() {
    ++draws_;
    return uniform_(engine_);
  }
  void fill_normal(Vec& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }
  Vec normal_vector(Eigen::Index n) {
    Vec out(n);
    fill_normal(out);
    return out;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Decorrelated child seed for an independent stream (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace klgauss
