#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgld {

// d-dimensional optimization state
struct ParameterPoint {
  std::vector<double> coords;

  ParameterPoint() = default;
  explicit ParameterPoint(std::vector<double> c) : coords(std::move(c)) {}
  ParameterPoint(std::initializer_list<double> c) : coords(c) {}

  int dim() const { return static_cast<int>(coords.size()); }
  double& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }

  bool all_finite() const {
    for (double v : coords)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct SgldConfig {
  double lambda = 1e-4;
  double beta = 1e8;        // callers wanting plain SGD pass a large finite value (1e30)
  std::int64_t iterations = 1000000;
  std::int64_t burn_in = 10000;
  ParameterPoint theta0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda > 0) || !std::isfinite(lambda))
      throw std::invalid_argument("SgldConfig: lambda must be positive and finite");
    if (!(beta > 0) || !std::isfinite(beta))
      throw std::invalid_argument("SgldConfig: beta must be positive and finite");
    if (iterations <= 0) throw std::invalid_argument("SgldConfig: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("SgldConfig: burn_in must satisfy 0 <= burn_in < iterations");
    if (theta0.dim() == 0) throw std::invalid_argument("SgldConfig: theta0 is empty");
    if (!theta0.all_finite()) throw std::invalid_argument("SgldConfig: theta0 has non-finite coordinates");
  }
};

// Constants attached to a gradient oracle's F + G decomposition.
struct AssumptionConstants {
  double rho = 0;       // joint Lipschitz growth exponent of F
  double l1 = 0;        // Lipschitz constant of F in theta
  double l2 = 0;        // Lipschitz constant of F in x
  double k1_bound = 0;  // bound on |G| (or an expectation surrogate)
  double l_clc = 0;     // conditional Lipschitz constant of H
  double a_dissip = 0;  // dissipativity curvature
  double b_dissip = 0;  // dissipativity offset
  double e_k_rho = 1;   // E[(1 + 2|X_0|)^{4 rho + 4}]

  void validate() const {
    if (rho < 0 || l1 < 0 || l2 < 0 || k1_bound < 0 || b_dissip < 0)
      throw std::invalid_argument("AssumptionConstants: negative constant");
    if (!(a_dissip > 0)) throw std::invalid_argument("AssumptionConstants: a_dissip must be positive");
    if (!(l_clc > 0)) throw std::invalid_argument("AssumptionConstants: l_clc must be positive");
    if (!(e_k_rho >= 1)) throw std::invalid_argument("AssumptionConstants: e_k_rho must be >= 1");
  }
};

// Recorded iterates of one chain (post burn-in, strided). terminal always
// equals the final iterate of the run.
struct ChainTrace {
  std::vector<ParameterPoint> iterates;
  ParameterPoint terminal;
  SgldConfig config;
  std::int64_t stride = 0;  // 0: terminal only
};

// Terminal points across chains; point i occupies [i*dim, (i+1)*dim).
struct SampleSet {
  int dim = 0;
  std::vector<double> data;

  int count() const { return dim == 0 ? 0 : static_cast<int>(data.size()) / dim; }
  std::span<const double> point(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  // all values of one coordinate, e.g. for per-parameter distances
  std::vector<double> coordinate(int c) const {
    std::vector<double> out(static_cast<std::size_t>(count()));
    for (int i = 0; i < count(); ++i) out[static_cast<std::size_t>(i)] = point(i)[static_cast<std::size_t>(c)];
    return out;
  }
};

class ChainDivergedError : public std::runtime_error {
 public:
  ChainDivergedError(std::uint64_t chain, std::int64_t iteration)
      : std::runtime_error("chain " + std::to_string(chain) + " diverged at iteration " +
                           std::to_string(iteration)),
        chain_index(chain),
        iteration(iteration) {}
  std::uint64_t chain_index;
  std::int64_t iteration;
};

}  // namespace sgld
