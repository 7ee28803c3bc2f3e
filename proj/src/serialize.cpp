#include "ecop/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ecop {

using nlohmann::json;

namespace {

json tensor_sas(const EpisodicCmdp& m, const std::vector<double>& t) {
  json out = json::array();
  for (int s = 0; s < m.num_states; ++s) {
    json row_s = json::array();
    for (int a = 0; a < m.num_actions; ++a) {
      json row_a = json::array();
      for (int s2 = 0; s2 < m.num_states; ++s2) row_a.push_back(t[m.sas(s, a, s2)]);
      row_s.push_back(std::move(row_a));
    }
    out.push_back(std::move(row_s));
  }
  return out;
}

std::vector<double> tensor_from_json(const json& j, int S, int A) {
  std::vector<double> t(static_cast<std::size_t>(S) * A * S);
  if (static_cast<int>(j.size()) != S) throw std::invalid_argument("cmdp file: bad tensor shape");
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(j[s].size()) != A)
      throw std::invalid_argument("cmdp file: bad tensor shape");
    for (int a = 0; a < A; ++a) {
      if (static_cast<int>(j[s][a].size()) != S)
        throw std::invalid_argument("cmdp file: bad tensor shape");
      for (int s2 = 0; s2 < S; ++s2)
        t[(static_cast<std::size_t>(s) * A + a) * S + s2] = j[s][a][s2].get<double>();
    }
  }
  return t;
}

}  // namespace

std::string cmdp_to_text(const EpisodicCmdp& m) {
  json j;
  j["name"] = m.name;
  j["num_states"] = m.num_states;
  j["num_actions"] = m.num_actions;
  j["horizon"] = m.horizon;
  j["mu"] = m.mu;
  j["transition"] = tensor_sas(m, m.transition);
  j["reward"] = tensor_sas(m, m.reward);
  json costs = json::array();
  for (const auto& c : m.costs) costs.push_back(tensor_sas(m, c));
  j["costs"] = std::move(costs);
  json th = json::array();
  for (double d : m.thresholds) {
    if (std::isinf(d))
      th.push_back("inf");
    else
      th.push_back(d);
  }
  j["thresholds"] = std::move(th);
  return j.dump(2) + "\n";
}

EpisodicCmdp cmdp_from_text(const std::string& text) {
  json j = json::parse(text);
  EpisodicCmdp m;
  m.name = j.value("name", "");
  m.num_states = j.at("num_states").get<int>();
  m.num_actions = j.at("num_actions").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.mu = j.at("mu").get<std::vector<double>>();
  m.transition = tensor_from_json(j.at("transition"), m.num_states, m.num_actions);
  m.reward = tensor_from_json(j.at("reward"), m.num_states, m.num_actions);
  for (const auto& c : j.at("costs"))
    m.costs.push_back(tensor_from_json(c, m.num_states, m.num_actions));
  for (const auto& d : j.at("thresholds")) {
    if (d.is_string() && d.get<std::string>() == "inf")
      m.thresholds.push_back(std::numeric_limits<double>::infinity());
    else
      m.thresholds.push_back(d.get<double>());
  }
  m.validate();
  return m;
}

void save_cmdp(const EpisodicCmdp& m, const std::string& path) {
  write_file(path, cmdp_to_text(m));
}

EpisodicCmdp load_cmdp(const std::string& path) { return cmdp_from_text(read_file(path)); }

std::string format_value(double v) { return json(v).dump(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ecop
