#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "abrl/errors.hpp"
#include "abrl/learner.hpp"
#include "abrl/rng.hpp"
#include "abrl/schedule.hpp"

namespace abrl {

// Versioned key-value learner checkpoint. Scalars are written as C99 hex
// floats and the generator state verbatim, so a reload resumes the exact
// trajectory from the saved stream position.
struct Checkpoint {
  std::string algorithm;
  std::uint64_t seed = 0;
  LearnerState<double> state;
  StepSchedule<double> schedule;
  bool has_bank = false;
  EstimatorBank<double> bank;
  std::string rng_state;
  // environment cursor
  long env_state_index = -1;        // finite chains
  Eigen::VectorXd env_state_vector; // continuous state, empty if unused
  long episode_steps = 0;
};

namespace detail {

inline std::string hexs(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline void write_vector(std::ostream& os, const std::string& key,
                         const Eigen::VectorXd& v) {
  os << key << " " << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) os << " " << hexs(v[i]);
  os << "\n";
}

inline void write_matrix(std::ostream& os, const std::string& key,
                         const Eigen::MatrixXd& m) {
  os << key << " " << m.rows() << " " << m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << " " << hexs(m(i, j));
  os << "\n";
}

struct TokenLine {
  std::vector<std::string> tokens;
};

inline double parse_double(const std::string& tok) {
  return std::strtod(tok.c_str(), nullptr);
}

inline Eigen::VectorXd read_vector(const std::vector<std::string>& toks) {
  const long n = std::strtol(toks[1].c_str(), nullptr, 10);
  if (static_cast<long>(toks.size()) != n + 2)
    throw IoError("checkpoint: vector token count for " + toks[0]);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = parse_double(toks[i + 2]);
  return v;
}

inline Eigen::MatrixXd read_matrix(const std::vector<std::string>& toks) {
  const long r = std::strtol(toks[1].c_str(), nullptr, 10);
  const long c = std::strtol(toks[2].c_str(), nullptr, 10);
  if (static_cast<long>(toks.size()) != r * c + 3)
    throw IoError("checkpoint: matrix token count for " + toks[0]);
  Eigen::MatrixXd m(r, c);
  long k = 3;
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = parse_double(toks[k++]);
  return m;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Checkpoint& cp) {
  os << "abrl-checkpoint v1\n";
  os << "algorithm " << cp.algorithm << "\n";
  os << "seed " << cp.seed << "\n";
  os << "step_count " << cp.state.step_count << "\n";
  os << "eta " << detail::hexs(cp.state.eta) << "\n";
  detail::write_vector(os, "r", cp.state.r);
  detail::write_vector(os, "theta", cp.state.theta);
  detail::write_vector(os, "s", cp.state.s);
  for (int i = 0; i < 4; ++i) {
    os << "schedule" << i << " " << detail::hexs(cp.schedule.scales[i].coeff)
       << " " << detail::hexs(cp.schedule.scales[i].offset) << " "
       << detail::hexs(cp.schedule.scales[i].exponent) << "\n";
  }
  os << "sts " << (cp.schedule.single_time_scale ? 1 : 0) << "\n";
  if (cp.has_bank) {
    os << "bank_steps " << cp.bank.step_count << "\n";
    detail::write_matrix(os, "bank_A", cp.bank.A);
    os << "bank_As_count " << cp.bank.A_s.size() << "\n";
    for (std::size_t i = 0; i < cp.bank.A_s.size(); ++i)
      detail::write_matrix(os, "bank_As" + std::to_string(i), cp.bank.A_s[i]);
    detail::write_matrix(os, "bank_bs", cp.bank.b_s);
    detail::write_vector(os, "bank_w", cp.bank.w);
    detail::write_matrix(os, "bank_wr", cp.bank.w_r);
    detail::write_matrix(os, "bank_ws", cp.bank.w_s);
  }
  os << "env_state_index " << cp.env_state_index << "\n";
  detail::write_vector(os, "env_state_vector", cp.env_state_vector);
  os << "episode_steps " << cp.episode_steps << "\n";
  os << "rng " << cp.rng_state << "\n";
}

inline Checkpoint load_checkpoint(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "abrl-checkpoint v1")
    throw IoError("checkpoint: unsupported header '" + header + "'");
  Checkpoint cp;
  std::string line;
  std::map<std::string, std::vector<std::string>> lines;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    lines[toks[0]] = toks;
  }
  auto need = [&](const std::string& key) -> const std::vector<std::string>& {
    auto it = lines.find(key);
    if (it == lines.end()) throw IoError("checkpoint: missing key " + key);
    return it->second;
  };

  cp.algorithm = need("algorithm").at(1);
  cp.seed = std::strtoull(need("seed").at(1).c_str(), nullptr, 10);
  cp.state.step_count = std::strtol(need("step_count").at(1).c_str(), nullptr, 10);
  cp.state.eta = detail::parse_double(need("eta").at(1));
  cp.state.r = detail::read_vector(need("r"));
  cp.state.theta = detail::read_vector(need("theta"));
  cp.state.s = detail::read_vector(need("s"));
  for (int i = 0; i < 4; ++i) {
    const auto& toks = need("schedule" + std::to_string(i));
    cp.schedule.scales[i].coeff = detail::parse_double(toks.at(1));
    cp.schedule.scales[i].offset = detail::parse_double(toks.at(2));
    cp.schedule.scales[i].exponent = detail::parse_double(toks.at(3));
  }
  cp.schedule.single_time_scale = need("sts").at(1) == "1";

  if (lines.count("bank_steps")) {
    cp.has_bank = true;
    cp.bank.step_count = std::strtol(need("bank_steps").at(1).c_str(), nullptr, 10);
    cp.bank.A = detail::read_matrix(need("bank_A"));
    const long k_s = std::strtol(need("bank_As_count").at(1).c_str(), nullptr, 10);
    cp.bank.A_s.resize(k_s);
    for (long i = 0; i < k_s; ++i)
      cp.bank.A_s[i] = detail::read_matrix(need("bank_As" + std::to_string(i)));
    cp.bank.b_s = detail::read_matrix(need("bank_bs"));
    cp.bank.w = detail::read_vector(need("bank_w"));
    cp.bank.w_r = detail::read_matrix(need("bank_wr"));
    cp.bank.w_s = detail::read_matrix(need("bank_ws"));
  }

  cp.env_state_index = std::strtol(need("env_state_index").at(1).c_str(), nullptr, 10);
  cp.env_state_vector = detail::read_vector(need("env_state_vector"));
  cp.episode_steps = std::strtol(need("episode_steps").at(1).c_str(), nullptr, 10);

  const auto& rng_toks = need("rng");
  std::string rng_state;
  for (std::size_t i = 1; i < rng_toks.size(); ++i) {
    if (i > 1) rng_state += " ";
    rng_state += rng_toks[i];
  }
  cp.rng_state = rng_state;
  return cp;
}

inline std::string rng_to_string(const Rng& rng) {
  std::ostringstream ss;
  rng.save(ss);
  return ss.str();
}

inline Rng rng_from_string(const std::string& text) {
  Rng rng(0);
  std::istringstream ss(text);
  rng.load(ss);
  return rng;
}

}  // namespace abrl
