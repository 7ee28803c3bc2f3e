#include "ecop/approx.hpp"

#include <cmath>
#include <stdexcept>

#include "ecop/autodiff.hpp"
#include "ecop/rng.hpp"
#include "ecop/serialize.hpp"
#include "json.hpp"

namespace ecop {

namespace {

constexpr double kTimeDenomGuard = 1.0;

Eigen::VectorXd with_time_feature(const Eigen::VectorXd& obs, int h, int horizon) {
  Eigen::VectorXd x(obs.size() + 1);
  x.head(obs.size()) = obs;
  x[obs.size()] = static_cast<double>(h) / std::max<double>(horizon, kTimeDenomGuard);
  return x;
}

// weights ~ N(0, 1/fan_in), biases 0
void init_mlp_params(ParamVector& pv, const std::vector<int>& dims, Rng& rng) {
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const BlockSpec& w = pv.layout->block("W" + std::to_string(l));
    double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (int i = 0; i < w.size(); ++i) pv.values[w.offset + i] = scale * rng.normal();
  }
}

std::shared_ptr<ParamLayout> mlp_layout(const std::vector<int>& dims) {
  auto layout = std::make_shared<ParamLayout>();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layout->add("W" + std::to_string(l), dims[l + 1], dims[l]);
    layout->add("b" + std::to_string(l), dims[l + 1]);
  }
  return layout;
}

int mlp_forward(ad::Tape& tape, const ParamLayout& layout, int x, int n_layers) {
  int cur = x;
  for (int l = 0; l < n_layers; ++l) {
    const BlockSpec& w = layout.block("W" + std::to_string(l));
    const BlockSpec& b = layout.block("b" + std::to_string(l));
    cur = tape.affine(cur, w.offset, b.offset, w.rows);
    if (l + 1 < n_layers) cur = tape.tanh(cur);
  }
  return cur;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

const BlockSpec& ParamLayout::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::invalid_argument("param layout: no block named " + name);
}

int ParamLayout::add(const std::string& name, int rows, int cols) {
  blocks.push_back({name, total, rows, cols});
  total += rows * cols;
  return blocks.back().offset;
}

void ParamLayout::validate() const {
  int expect = 0;
  for (const auto& b : blocks) {
    if (b.rows <= 0 || b.cols <= 0)
      throw std::invalid_argument("param layout: non-positive block shape");
    if (b.offset != expect)
      throw std::invalid_argument("param layout: blocks must tile the vector in order");
    expect += b.size();
  }
  if (expect != total) throw std::invalid_argument("param layout: size mismatch");
}

PolicyApproximator PolicyApproximator::tabular_softmax(int horizon, int num_states,
                                                       int num_actions) {
  PolicyApproximator a;
  a.kind_ = PolicyKind::kTabularSoftmax;
  a.horizon_ = horizon;
  a.num_states_ = num_states;
  a.num_actions_ = num_actions;
  auto layout = std::make_shared<ParamLayout>();
  layout->add("logits", horizon * num_states, num_actions);
  layout->validate();
  a.params_.layout = layout;
  a.params_.values = Eigen::VectorXd::Zero(layout->total);
  return a;
}

PolicyApproximator PolicyApproximator::discrete_net(int horizon, int obs_dim,
                                                    const std::vector<int>& hidden,
                                                    int num_actions, std::uint64_t seed) {
  PolicyApproximator a;
  a.kind_ = PolicyKind::kTimeConditionedNet;
  a.horizon_ = horizon;
  a.obs_dim_ = obs_dim;
  a.num_actions_ = num_actions;
  a.hidden_ = hidden;
  std::vector<int> dims{obs_dim + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_actions);
  auto layout = mlp_layout(dims);
  layout->validate();
  a.params_.layout = layout;
  a.params_.values = Eigen::VectorXd::Zero(layout->total);
  Rng rng(seed);
  init_mlp_params(a.params_, dims, rng);
  return a;
}

PolicyApproximator PolicyApproximator::gaussian_net(int horizon, int obs_dim,
                                                    const std::vector<int>& hidden,
                                                    int action_dim, std::uint64_t seed,
                                                    double init_log_std) {
  PolicyApproximator a;
  a.kind_ = PolicyKind::kTimeConditionedNet;
  a.gaussian_ = true;
  a.horizon_ = horizon;
  a.obs_dim_ = obs_dim;
  a.action_dim_ = action_dim;
  a.hidden_ = hidden;
  std::vector<int> dims{obs_dim + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(action_dim);
  auto layout = mlp_layout(dims);
  layout->add("log_std", action_dim);
  layout->validate();
  a.params_.layout = layout;
  a.params_.values = Eigen::VectorXd::Zero(layout->total);
  Rng rng(seed);
  init_mlp_params(a.params_, dims, rng);
  const BlockSpec& ls = layout->block("log_std");
  a.params_.values.segment(ls.offset, ls.size()).setConstant(init_log_std);
  return a;
}

Eigen::VectorXd PolicyApproximator::action_probabilities(int h, int state) const {
  if (kind_ != PolicyKind::kTabularSoftmax)
    throw std::invalid_argument("state-indexed probabilities need a tabular policy");
  if (h < 0 || h >= horizon_ || state < 0 || state >= num_states_)
    throw std::out_of_range("action_probabilities: step or state out of range");
  const int off = (h * num_states_ + state) * num_actions_;
  return softmax(params_.values.segment(off, num_actions_));
}

Eigen::VectorXd PolicyApproximator::action_probabilities(int h,
                                                         const Eigen::VectorXd& obs) const {
  if (kind_ != PolicyKind::kTimeConditionedNet || gaussian_)
    throw std::invalid_argument("observation probabilities need a discrete net policy");
  if (h < 0 || h >= horizon_)
    throw std::out_of_range("action_probabilities: step out of range");
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int logits = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  return softmax(tape.value(logits));
}

double PolicyApproximator::log_prob(int h, int state, const Eigen::VectorXd& obs,
                                    int action) const {
  if (kind_ == PolicyKind::kTabularSoftmax) {
    const int off = (h * num_states_ + state) * num_actions_;
    Eigen::VectorXd z = params_.values.segment(off, num_actions_);
    double zmax = z.maxCoeff();
    return z[action] - zmax - std::log((z.array() - zmax).exp().sum());
  }
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int logits = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  return tape.scalar(tape.log_softmax_pick(logits, action));
}

void PolicyApproximator::add_log_prob_grad(int h, int state, const Eigen::VectorXd& obs,
                                           int action, double coeff,
                                           Eigen::VectorXd& grad) const {
  if (kind_ == PolicyKind::kTabularSoftmax) {
    // d log softmax / d logit_j = 1{j == action} - pi_j
    const int off = (h * num_states_ + state) * num_actions_;
    Eigen::VectorXd pi = softmax(params_.values.segment(off, num_actions_));
    grad.segment(off, num_actions_) -= coeff * pi;
    grad[off + action] += coeff;
    return;
  }
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int logits = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  tape.backward(tape.log_softmax_pick(logits, action), coeff, grad);
}

void PolicyApproximator::gaussian_params(int h, const Eigen::VectorXd& obs,
                                         Eigen::VectorXd& mean,
                                         Eigen::VectorXd& log_std) const {
  if (!gaussian_) throw std::invalid_argument("gaussian_params needs a gaussian policy");
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int out = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  mean = tape.value(out);
  const BlockSpec& ls = params_.layout->block("log_std");
  log_std = params_.values.segment(ls.offset, ls.size());
}

double PolicyApproximator::log_prob(int h, const Eigen::VectorXd& obs,
                                    const Eigen::VectorXd& action) const {
  if (!gaussian_) throw std::invalid_argument("vector actions need a gaussian policy");
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int mean = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  const BlockSpec& ls = params_.layout->block("log_std");
  return tape.scalar(tape.gaussian_log_prob(mean, ls.offset, action));
}

void PolicyApproximator::add_log_prob_grad(int h, const Eigen::VectorXd& obs,
                                           const Eigen::VectorXd& action, double coeff,
                                           Eigen::VectorXd& grad) const {
  if (!gaussian_) throw std::invalid_argument("vector actions need a gaussian policy");
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int mean = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  const BlockSpec& ls = params_.layout->block("log_std");
  tape.backward(tape.gaussian_log_prob(mean, ls.offset, action), coeff, grad);
}

Critic Critic::tabular(int horizon, int num_states) {
  Critic c;
  c.tabular_ = true;
  c.horizon_ = horizon;
  c.num_states_ = num_states;
  c.table_.assign(static_cast<std::size_t>(horizon) * num_states, 0.0);
  return c;
}

Critic Critic::net(int horizon, int obs_dim, const std::vector<int>& hidden,
                   std::uint64_t seed) {
  Critic c;
  c.tabular_ = false;
  c.horizon_ = horizon;
  c.obs_dim_ = obs_dim;
  c.hidden_ = hidden;
  std::vector<int> dims{obs_dim + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  auto layout = mlp_layout(dims);
  layout->validate();
  c.params_.layout = layout;
  c.params_.values = Eigen::VectorXd::Zero(layout->total);
  Rng rng(seed);
  init_mlp_params(c.params_, dims, rng);
  return c;
}

double Critic::value(int h, int state, const Eigen::VectorXd& obs) const {
  if (tabular_) return table_[static_cast<std::size_t>(h) * num_states_ + state];
  ad::Tape tape(params_.values);
  int x = tape.input(with_time_feature(obs, h, horizon_));
  int out = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
  return tape.scalar(out);
}

void Critic::fit(const std::vector<Sample>& samples, double lr, int epochs) {
  if (samples.empty()) throw std::invalid_argument("critic fit: empty batch");
  if (tabular_) {
    std::vector<double> sum(table_.size(), 0.0);
    std::vector<int> count(table_.size(), 0);
    for (const auto& s : samples) {
      std::size_t i = static_cast<std::size_t>(s.h) * num_states_ + s.state;
      sum[i] += s.target;
      ++count[i];
    }
    for (std::size_t i = 0; i < table_.size(); ++i)
      if (count[i] > 0) table_[i] = sum[i] / count[i];
    return;
  }
  Eigen::VectorXd grad(params_.values.size());
  ad::Tape tape(params_.values);
  for (int e = 0; e < epochs; ++e) {
    grad.setZero();
    for (const auto& s : samples) {
      tape.reset();
      int x = tape.input(with_time_feature(*s.obs, s.h, horizon_));
      int out = mlp_forward(tape, *params_.layout, x, static_cast<int>(hidden_.size()) + 1);
      double err = tape.scalar(out) - s.target;
      tape.backward(out, 2.0 * err / samples.size(), grad);
    }
    params_.values -= lr * grad;
  }
}

double Critic::mse(const std::vector<Sample>& samples) const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) {
    double err = value(s.h, s.state, s.obs ? *s.obs : Eigen::VectorXd()) - s.target;
    acc += err * err;
  }
  return acc / samples.size();
}

double EpisodeBatch::mean_total_reward() const {
  double acc = 0.0;
  for (const auto& ep : episodes)
    for (const auto& st : ep) acc += st.reward;
  return episodes.empty() ? 0.0 : acc / episodes.size();
}

double EpisodeBatch::mean_total_cost(int channel) const {
  double acc = 0.0;
  for (const auto& ep : episodes)
    for (const auto& st : ep) acc += st.costs.at(channel);
  return episodes.empty() ? 0.0 : acc / episodes.size();
}

AdvantageEstimates monte_carlo_advantages(const EpisodeBatch& batch,
                                          const CriticSet& critics) {
  AdvantageEstimates est;
  est.costs.resize(batch.num_costs);
  for (const auto& ep : batch.episodes) {
    const int n = static_cast<int>(ep.size());
    // return-to-go for reward, then each channel, critic subtracted per step
    std::vector<double> rtg(n + 1, 0.0);
    for (int i = n - 1; i >= 0; --i) rtg[i] = ep[i].reward + rtg[i + 1];
    for (int i = 0; i < n; ++i)
      est.reward.push_back(rtg[i] - critics.reward.value(ep[i].h, ep[i].state, ep[i].obs));
    for (int c = 0; c < batch.num_costs; ++c) {
      std::fill(rtg.begin(), rtg.end(), 0.0);
      for (int i = n - 1; i >= 0; --i) rtg[i] = ep[i].costs[c] + rtg[i + 1];
      for (int i = 0; i < n; ++i)
        est.costs[c].push_back(rtg[i] -
                               critics.costs[c].value(ep[i].h, ep[i].state, ep[i].obs));
    }
  }

  const std::size_t n = est.reward.size();
  if (n > 0) {
    double mean = 0.0;
    for (double v : est.reward) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : est.reward) var += (v - mean) * (v - mean);
    double std = std::sqrt(var / n);
    est.reward_raw_mean = mean;
    est.reward_raw_std = std;
    // zero-variance guard: divisor floored so constant batches map to zeros
    double denom = std::max(std, 1e-8);
    for (double& v : est.reward) v = (v - mean) / denom;
  }
  return est;
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double eps) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (int i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    double hi = f(probe);
    probe[i] = x[i] - eps;
    double lo = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw std::domain_error("finite_diff_gradient: non-finite function value at coordinate " +
                              std::to_string(i));
    g[i] = (hi - lo) / (2.0 * eps);
  }
  return g;
}

void save_checkpoint(const PolicyApproximator& approx, const std::string& path) {
  nlohmann::json j;
  j["kind"] = approx.kind() == PolicyKind::kTabularSoftmax ? "tabular_softmax" : "net";
  j["gaussian"] = approx.gaussian();
  j["horizon"] = approx.horizon();
  j["num_states"] = approx.num_states();
  j["num_actions"] = approx.num_actions();
  j["obs_dim"] = approx.obs_dim();
  j["action_dim"] = approx.action_dim();
  j["hidden"] = approx.hidden();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : approx.params().layout->blocks)
    blocks.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows},
                      {"cols", b.cols}});
  j["layout"] = std::move(blocks);
  std::vector<double> values(approx.params().values.data(),
                             approx.params().values.data() + approx.params().values.size());
  j["values"] = std::move(values);
  write_file(path, j.dump(2) + "\n");
}

PolicyApproximator load_checkpoint(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  std::string kind = j.at("kind").get<std::string>();
  PolicyApproximator a =
      kind == "tabular_softmax"
          ? PolicyApproximator::tabular_softmax(j.at("horizon"), j.at("num_states"),
                                                j.at("num_actions"))
          : (j.at("gaussian").get<bool>()
                 ? PolicyApproximator::gaussian_net(j.at("horizon"), j.at("obs_dim"),
                                                    j.at("hidden").get<std::vector<int>>(),
                                                    j.at("action_dim"), 0)
                 : PolicyApproximator::discrete_net(j.at("horizon"), j.at("obs_dim"),
                                                    j.at("hidden").get<std::vector<int>>(),
                                                    j.at("num_actions"), 0));
  auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != a.params().layout->total)
    throw std::invalid_argument("checkpoint: value count does not match layout");
  const auto& blocks_json = j.at("layout");
  const auto& blocks = a.params().layout->blocks;
  if (blocks_json.size() != blocks.size())
    throw std::invalid_argument("checkpoint: layout mismatch");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks_json[i].at("name") != blocks[i].name ||
        blocks_json[i].at("offset") != blocks[i].offset ||
        blocks_json[i].at("rows") != blocks[i].rows ||
        blocks_json[i].at("cols") != blocks[i].cols)
      throw std::invalid_argument("checkpoint: layout mismatch");
  a.params().values = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
  return a;
}

}  // namespace ecop
