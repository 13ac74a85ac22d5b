#include "sgld/objectives/objectives.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "sgld/kernels/batch.hpp"
#include "sgld/kernels/step_math.hpp"
#include "sgld/kernels/vmath.hpp"

namespace sgld::objectives {

void QuantileObjective::validate() const {
  if (!(q > 0) || !(q < 1)) throw std::invalid_argument("quantile objective: q in (0,1)");
  if (!(gamma > 0)) throw std::invalid_argument("quantile objective: gamma must be positive");
}

void VarCvarObjective::validate() const {
  if (!(q_bar > 0) || !(q_bar < 1)) throw std::invalid_argument("var-cvar objective: q_bar in (0,1)");
  if (!(gamma > 0)) throw std::invalid_argument("var-cvar objective: gamma must be positive");
}

void PortfolioObjective::validate() const {
  if (!(q_bar > 0) || !(q_bar < 1)) throw std::invalid_argument("portfolio objective: q_bar in (0,1)");
  if (!(gamma > 0)) throw std::invalid_argument("portfolio objective: gamma must be positive");
  if (n_assets < 2) throw std::invalid_argument("portfolio objective: need at least 2 assets");
}

double quantile_grad(double theta, double x, const QuantileObjective& obj) {
  if (!std::isfinite(theta) || !std::isfinite(x))
    throw std::invalid_argument("quantile_grad: non-finite input");
  return step_math::quantile_grad(theta, x, obj.q, 2.0 * obj.gamma);
}

double var_cvar_grad(double theta, double x, const VarCvarObjective& obj) {
  if (!std::isfinite(theta) || !std::isfinite(x))
    throw std::invalid_argument("var_cvar_grad: non-finite input");
  return step_math::var_cvar_grad(theta, x, 1.0 / (1.0 - obj.q_bar), 2.0 * obj.gamma);
}

std::vector<double> softmax_weights(std::span<const double> w) {
  if (w.empty()) throw std::invalid_argument("softmax_weights: empty input");
  double m = w[0];
  for (double v : w) m = v > m ? v : m;
  std::vector<double> g(w.size());
  double sum_e = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    g[a] = vmath::exp_real(w[a] - m);
    sum_e += g[a];
  }
  for (double& v : g) v = v / sum_e;
  return g;
}

std::vector<double> softmax_jacobian(std::span<const double> w) {
  const std::size_t n = w.size();
  double m = w[0];
  for (double v : w) m = v > m ? v : m;
  std::vector<double> e(n);
  double sum_e = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    e[a] = vmath::exp_real(w[a] - m);
    sum_e += e[a];
  }
  const double s2 = sum_e * sum_e;
  std::vector<double> jac(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) {
        jac[i * n + j] = e[j] * (sum_e - e[j]) / s2;
      } else {
        jac[i * n + j] = -(e[i] * e[j]) / s2;
      }
    }
  }
  return jac;
}

std::vector<double> portfolio_grad(const PortfolioParameter& param,
                                   std::span<const double> x, const PortfolioObjective& obj) {
  const int n = obj.n_assets;
  if (static_cast<int>(param.w.size()) != n || static_cast<int>(x.size()) != n)
    throw std::invalid_argument("portfolio_grad: dimension mismatch");

  const double inv_q = 1.0 / (1.0 - obj.q_bar);
  const double two_gamma = 2.0 * obj.gamma;
  const std::vector<double> g = softmax_weights(param.w);
  double port = 0.0;
  for (int a = 0; a < n; ++a) port = std::fma(g[static_cast<std::size_t>(a)], x[static_cast<std::size_t>(a)], port);
  const bool in_tail = port >= param.theta;

  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  out[0] = step_math::portfolio_theta_grad(param.theta, port, inv_q, two_gamma);
#ifndef NDEBUG
  double abs_x_sum = 0.0;
  for (int a = 0; a < n; ++a) abs_x_sum += std::fabs(x[static_cast<std::size_t>(a)]);
#endif
  for (int a = 0; a < n; ++a) {
    out[static_cast<std::size_t>(a) + 1] =
        step_math::portfolio_w_grad(param.w[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(a)],
                                    x[static_cast<std::size_t>(a)], port, in_tail, inv_q, two_gamma);
    assert(std::fabs(g[static_cast<std::size_t>(a)] * (x[static_cast<std::size_t>(a)] - port)) <=
           abs_x_sum * (1.0 + 1e-12) + 1e-300);
  }
  return out;
}

double objective_value_mc(double theta, const VarCvarObjective& obj,
                          std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("objective_value_mc: empty sample set");
  const auto& kt = kernels::active_table();
  const double shortfall = kt.shortfall_sum(samples.data(), samples.size(), theta);
  return theta + shortfall / (static_cast<double>(samples.size()) * (1.0 - obj.q_bar)) +
         obj.gamma * theta * theta;
}

double objective_value_mc(const PortfolioParameter& param, const PortfolioObjective& obj,
                          std::span<const double> samples) {
  const int n = obj.n_assets;
  if (samples.empty() || samples.size() % static_cast<std::size_t>(n) != 0)
    throw std::invalid_argument("objective_value_mc: sample matrix shape mismatch");
  const std::size_t count = samples.size() / static_cast<std::size_t>(n);
  const std::vector<double> g = softmax_weights(param.w);

  double shortfall = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    double port = 0.0;
    for (int a = 0; a < n; ++a)
      port = std::fma(g[static_cast<std::size_t>(a)], samples[i * n + static_cast<std::size_t>(a)], port);
    const double d = port - param.theta;
    shortfall += d > 0.0 ? d : 0.0;
  }
  double penalty = param.theta * param.theta;
  for (double v : param.w) penalty += v * v;
  return param.theta + shortfall / (static_cast<double>(count) * (1.0 - obj.q_bar)) +
         obj.gamma * penalty;
}

// ---- oracles -------------------------------------------------------------------

void QuantileOracle::grad(std::span<const double> theta, std::span<const double> x,
                          std::span<double> out) const {
  out[0] = step_math::quantile_grad(theta[0], x[0], obj_.q, 2.0 * obj_.gamma);
}

AssumptionConstants QuantileOracle::constants() const {
  AssumptionConstants c;
  c.rho = 0;
  c.l1 = 2.0 * obj_.gamma;
  c.l2 = 0;
  c.k1_bound = 1.0;
  c.l_clc = 2.0 * obj_.gamma + 1.0;
  c.a_dissip = obj_.gamma;
  c.b_dissip = obj_.q * obj_.q / (4.0 * obj_.gamma);
  c.e_k_rho = e_k_rho_;
  return c;
}

void VarCvarOracle::grad(std::span<const double> theta, std::span<const double> x,
                         std::span<double> out) const {
  out[0] = step_math::var_cvar_grad(theta[0], x[0], 1.0 / (1.0 - obj_.q_bar), 2.0 * obj_.gamma);
}

AssumptionConstants VarCvarOracle::constants() const {
  const double one_m_q = 1.0 - obj_.q_bar;
  AssumptionConstants c;
  c.rho = 0;
  c.l1 = 2.0 * obj_.gamma;
  c.l2 = 0;
  c.k1_bound = 1.0 / one_m_q;
  c.l_clc = 2.0 * obj_.gamma + density_sup_ / one_m_q;
  c.a_dissip = obj_.gamma;
  c.b_dissip = obj_.q_bar * obj_.q_bar / (4.0 * obj_.gamma * one_m_q * one_m_q);
  c.e_k_rho = e_k_rho_;
  return c;
}

void PortfolioOracle::grad(std::span<const double> theta, std::span<const double> x,
                           std::span<double> out) const {
  const int n = obj_.n_assets;
  const double inv_q = 1.0 / (1.0 - obj_.q_bar);
  const double two_gamma = 2.0 * obj_.gamma;

  // softmax over logits theta[1..n], same arithmetic as the batch kernels
  double m = theta[1];
  for (int a = 1; a < n; ++a) m = theta[static_cast<std::size_t>(1 + a)] > m ? theta[static_cast<std::size_t>(1 + a)] : m;
  double g[kernels::kMaxPortfolioAssets];
  double sum_e = 0.0;
  for (int a = 0; a < n; ++a) {
    g[a] = vmath::exp_real(theta[static_cast<std::size_t>(1 + a)] - m);
    sum_e += g[a];
  }
  double port = 0.0;
  for (int a = 0; a < n; ++a) {
    g[a] = g[a] / sum_e;
    port = std::fma(g[a], x[static_cast<std::size_t>(a)], port);
  }
  const bool in_tail = port >= theta[0];

  out[0] = step_math::portfolio_theta_grad(theta[0], port, inv_q, two_gamma);
  for (int a = 0; a < n; ++a)
    out[static_cast<std::size_t>(1 + a)] =
        step_math::portfolio_w_grad(theta[static_cast<std::size_t>(1 + a)], g[a],
                                    x[static_cast<std::size_t>(a)], port, in_tail, inv_q, two_gamma);
}

AssumptionConstants PortfolioOracle::constants() const {
  const double one_m_q = 1.0 - obj_.q_bar;
  AssumptionConstants c;
  c.rho = 0;
  c.l1 = 2.0 * obj_.gamma;
  c.l2 = 0;
  c.k1_bound = (2.0 - obj_.q_bar) / one_m_q;  // theta coordinate; w-bound scales with sum|x_i|
  c.l_clc = 2.0 * obj_.gamma + 1.0 / one_m_q;
  c.a_dissip = 2.0 * obj_.gamma;
  c.b_dissip = 0.0;
  c.e_k_rho = e_k_rho_;
  return c;
}

}  // namespace sgld::objectives
