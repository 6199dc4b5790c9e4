#include "sdre/mdp_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sdre {

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string tok;
    while (in_ >> tok) {
      if (tok.front() == '#') {
        std::string rest;
        std::getline(in_, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("unexpected end of input");
  }

  void expect(const std::string& word) {
    const std::string tok = next();
    if (tok != word) throw std::runtime_error("expected '" + word + "', found '" + tok + "'");
  }

  double number() {
    const std::string tok = next();
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw std::runtime_error("malformed number '" + tok + "'");
    }
    return x;
  }

  std::size_t count() {
    const double x = number();
    if (!(x >= 1.0) || x != std::floor(x)) throw std::runtime_error("expected a positive count");
    return static_cast<std::size_t>(x);
  }

 private:
  std::istream& in_;
};

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ' ';
    out << format_exact(row[i]);
  }
  out << '\n';
}

}  // namespace

std::string format_exact(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_exact: conversion failed");
  return std::string(buf, ptr);
}

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  out << "sdre-mdp 1\n";
  out << "states " << n << "\nactions " << m << "\n";
  out << "initial\n";
  write_row(out, mdp.initial_distribution());
  out << "transition\n";
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < m; ++a) write_row(out, mdp.transition_row(s, a));
  }
  out << "reward\n";
  for (StateId s = 0; s < n; ++s) {
    write_row(out, std::span<const double>(mdp.reward_data().data() + s * m, m));
  }
  out << "end\n";
}

TabularMdp read_mdp(std::istream& in) {
  TokenReader tok(in);
  tok.expect("sdre-mdp");
  if (tok.number() != 1.0) throw std::runtime_error("unsupported sdre-mdp version");
  tok.expect("states");
  const std::size_t n = tok.count();
  tok.expect("actions");
  const std::size_t m = tok.count();
  std::vector<double> d0(n);
  tok.expect("initial");
  for (auto& x : d0) x = tok.number();
  std::vector<double> t(n * m * n);
  tok.expect("transition");
  for (auto& x : t) x = tok.number();
  std::vector<double> r(n * m);
  tok.expect("reward");
  for (auto& x : r) x = tok.number();
  tok.expect("end");
  return TabularMdp(n, m, std::move(t), std::move(r), std::move(d0));
}

void write_policy(std::ostream& out, const StochasticPolicy& policy) {
  out << "sdre-policy 1\n";
  out << "states " << policy.num_states() << "\nactions " << policy.num_actions() << "\n";
  out << "probs\n";
  for (StateId s = 0; s < policy.num_states(); ++s) write_row(out, policy.row(s));
  out << "end\n";
}

StochasticPolicy read_policy(std::istream& in) {
  TokenReader tok(in);
  tok.expect("sdre-policy");
  if (tok.number() != 1.0) throw std::runtime_error("unsupported sdre-policy version");
  tok.expect("states");
  const std::size_t n = tok.count();
  tok.expect("actions");
  const std::size_t m = tok.count();
  std::vector<double> p(n * m);
  tok.expect("probs");
  for (auto& x : p) x = tok.number();
  tok.expect("end");
  return StochasticPolicy(n, m, std::move(p));
}

void save_mdp(const std::filesystem::path& path, const TabularMdp& mdp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_mdp(out, mdp);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TabularMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_mdp(in);
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  out << "trajectory,t,s,a,s_next,r\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    for (const TransitionSample& x : trajectories[i].steps) {
      out << i << ',' << x.t << ',' << x.s << ',' << x.a << ',' << x.s_next << ','
          << format_exact(x.r) << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "trajectory,t,s,a,s_next,r") {
    throw std::runtime_error("trajectory file: missing header 'trajectory,t,s,a,s_next,r'");
  }
  std::vector<Trajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double v[6];
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error("trajectory file line " + std::to_string(line_no) +
                                 ": expected 6 fields");
      }
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v[k]);
      if (ec != std::errc() || ptr != cell.data() + cell.size() ||
          (k < 5 && (v[k] < 0.0 || v[k] != std::floor(v[k])))) {
        throw std::runtime_error("trajectory file line " + std::to_string(line_no) +
                                 ": malformed field '" + cell + "'");
      }
    }
    const auto traj = static_cast<std::size_t>(v[0]);
    if (traj == out.size()) out.emplace_back();
    if (traj + 1 != out.size()) {
      throw std::runtime_error("trajectory file line " + std::to_string(line_no) +
                               ": trajectory ids must be contiguous");
    }
    Trajectory& cur = out.back();
    TransitionSample x{static_cast<StateId>(v[2]), static_cast<ActionId>(v[3]),
                       static_cast<StateId>(v[4]), v[5], static_cast<std::size_t>(v[1])};
    if (x.t != cur.steps.size() || (!cur.steps.empty() && cur.steps.back().s_next != x.s)) {
      throw std::runtime_error("trajectory file line " + std::to_string(line_no) +
                               ": steps do not chain");
    }
    cur.steps.push_back(x);
  }
  return out;
}

void save_trajectories(const std::filesystem::path& path,
                       std::span<const Trajectory> trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trajectories(out, trajectories);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_trajectories(in);
}

}  // namespace sdre
