#pragma once

// Stochastic-gradient oracles for quantile estimation, VaR/CVaR of a single
// payoff, and CVaR minimization over softmax portfolio weights, with the
// Monte Carlo objective-value estimators used for CVaR read-outs.

#include <span>
#include <vector>

#include "sgld/core/engine.hpp"

namespace sgld::objectives {

struct QuantileObjective {
  double q = 0.95;       // quantile level in (0,1)
  double gamma = 1e-6;   // L2 regularization weight
  void validate() const;
};

struct VarCvarObjective {
  double q_bar = 0.95;   // confidence level in (0,1)
  double gamma = 1e-8;
  void validate() const;
};

struct PortfolioObjective {
  double q_bar = 0.95;
  double gamma = 1e-8;
  int n_assets = 2;
  void validate() const;
};

// (theta, w): VaR threshold coordinate plus pre-softmax logits
struct PortfolioParameter {
  double theta = 0.0;
  std::vector<double> w;
};

// ---- gradient formulas -------------------------------------------------------

// H(theta, x) = -q + 1{x < theta} + 2 gamma theta
double quantile_grad(double theta, double x, const QuantileObjective& obj);

// H(theta, x) = 1 - 1{x >= theta}/(1-qbar) + 2 gamma theta
double var_cvar_grad(double theta, double x, const VarCvarObjective& obj);

// g_i(w) = exp(w_i) / sum_j exp(w_j), max-subtracted
std::vector<double> softmax_weights(std::span<const double> w);

// J[i*n + j] = dg_i / dw_j
std::vector<double> softmax_jacobian(std::span<const double> w);

// (H_theta, H_{w_1}, ..., H_{w_n})
std::vector<double> portfolio_grad(const PortfolioParameter& param,
                                   std::span<const double> x,
                                   const PortfolioObjective& obj);

// ---- objective values ----------------------------------------------------------

// theta + mean((x - theta)_+)/(1-qbar) + gamma theta^2
double objective_value_mc(double theta, const VarCvarObjective& obj,
                          std::span<const double> samples);

// portfolio form; samples is row-major [count][n_assets], penalty gamma |(theta,w)|^2
double objective_value_mc(const PortfolioParameter& param, const PortfolioObjective& obj,
                          std::span<const double> samples);

// ---- oracles -------------------------------------------------------------------

class QuantileOracle final : public GradientOracle {
 public:
  explicit QuantileOracle(QuantileObjective obj) : obj_(obj) { obj_.validate(); }
  int dim() const override { return 1; }
  int data_dim() const override { return 1; }
  void grad(std::span<const double> theta, std::span<const double> x,
            std::span<double> out) const override;
  std::string_view name() const override { return "quantile"; }
  AssumptionConstants constants() const override;

  const QuantileObjective& objective() const { return obj_; }
  void set_e_k_rho(double v) { e_k_rho_ = v; }

 private:
  QuantileObjective obj_;
  double e_k_rho_ = 1.0;
};

class VarCvarOracle final : public GradientOracle {
 public:
  explicit VarCvarOracle(VarCvarObjective obj) : obj_(obj) { obj_.validate(); }
  int dim() const override { return 1; }
  int data_dim() const override { return 1; }
  void grad(std::span<const double> theta, std::span<const double> x,
            std::span<double> out) const override;
  std::string_view name() const override { return "var-cvar"; }
  AssumptionConstants constants() const override;

  const VarCvarObjective& objective() const { return obj_; }
  void set_e_k_rho(double v) { e_k_rho_ = v; }
  void set_density_sup(double v) { density_sup_ = v; }

 private:
  VarCvarObjective obj_;
  double e_k_rho_ = 1.0;
  double density_sup_ = 1.0;
};

class PortfolioOracle final : public GradientOracle {
 public:
  explicit PortfolioOracle(PortfolioObjective obj) : obj_(obj) { obj_.validate(); }
  int dim() const override { return obj_.n_assets + 1; }
  int data_dim() const override { return obj_.n_assets; }
  void grad(std::span<const double> theta, std::span<const double> x,
            std::span<double> out) const override;
  std::string_view name() const override { return "portfolio"; }
  AssumptionConstants constants() const override;

  const PortfolioObjective& objective() const { return obj_; }
  void set_e_k_rho(double v) { e_k_rho_ = v; }

 private:
  PortfolioObjective obj_;
  double e_k_rho_ = 1.0;
};

}  // namespace sgld::objectives
