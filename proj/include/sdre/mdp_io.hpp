#pragma once

#include "sdre/mdp.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sdre {

// Plain-text MDP format, version 1. Whitespace separated; '#' starts a comment.
//
//   sdre-mdp 1
//   states <S>
//   actions <A>
//   initial
//   <S numbers>
//   transition
//   <S*A lines of S numbers: T(.|s,a) for s-major, a-minor order>
//   reward
//   <S lines of A numbers: r(s,.)>
//   end
//
// Numbers are written with 17 significant digits, so every double round-trips
// exactly. Policies use the same layout with header `sdre-policy 1`, the
// `states`/`actions` lines and a `probs` block of S lines of A numbers.

void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);

void write_policy(std::ostream& out, const StochasticPolicy& policy);
StochasticPolicy read_policy(std::istream& in);

void save_mdp(const std::filesystem::path& path, const TabularMdp& mdp);
TabularMdp load_mdp(const std::filesystem::path& path);

/// Trajectory CSV with header `trajectory,t,s,a,s_next,r`, one row per step,
/// trajectories in order. Reading checks that t counts up from 0 and that
/// consecutive steps chain (s_next of step k is s of step k + 1).
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in);
void save_trajectories(const std::filesystem::path& path,
                       std::span<const Trajectory> trajectories);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `x` (at most 17 digits).
std::string format_exact(double x);

}  // namespace sdre
