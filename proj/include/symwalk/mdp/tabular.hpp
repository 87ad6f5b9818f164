#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace symwalk::mdp {

// Finite MDP with explicit transition tensor and reward table. valid marks
// the admissible state-action pairs.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<char> valid;  // [s*n_actions + a]
  std::vector<double> P;    // [s*n_actions*n_states + a*n_states + s2]
  std::vector<double> R;    // [s*n_actions + a]

  static TabularMdp make(int n_states, int n_actions) {
    TabularMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.valid.assign(n_states * n_actions, 1);
    m.P.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    m.R.assign(n_states * n_actions, 0.0);
    return m;
  }

  bool is_valid(int s, int a) const { return valid[s * n_actions + a] != 0; }
  double& p(int s, int a, int s2) {
    return P[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double p(int s, int a, int s2) const {
    return P[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& r(int s, int a) { return R[s * n_actions + a]; }
  double r(int s, int a) const { return R[s * n_actions + a]; }

  // Row-stochasticity over valid pairs.
  void validate(double tol = 1e-9) const {
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        if (!is_valid(s, a)) continue;
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          const double v = p(s, a, s2);
          if (v < -tol || v > 1.0 + tol)
            throw std::invalid_argument("TabularMdp: probability out of [0,1]");
          sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
          throw std::invalid_argument("TabularMdp: transition row not stochastic");
      }
  }
};

// State permutation f plus a state-indexed action permutation g_s.
struct StateActionPermutation {
  std::vector<int> f;               // f[s]
  std::vector<std::vector<int>> g;  // g[s][a]
};

inline bool is_permutation_of(const std::vector<int>& p, int n) {
  if (static_cast<int>(p.size()) != n) return false;
  std::vector<char> seen(n, 0);
  for (int v : p) {
    if (v < 0 || v >= n || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

struct Witness {
  int s = -1, a = -1, s_next = -1;
};

struct AutomorphismReport {
  bool is_automorphism = false;
  double max_transition_violation = 0.0;
  double max_reward_violation = 0.0;
  Witness witness;  // worst offender; s_next = -1 for reward violations
};

// Checks p(f(s), g_s(a), f(s')) = p(s, a, s') and r(f(s), g_s(a)) = r(s, a)
// over every valid triple. Throws before checking anything if the transform
// is not bijective on the MDP's state and action sets.
inline AutomorphismReport check_automorphism(const TabularMdp& mdp,
                                             const StateActionPermutation& tr,
                                             double tol = 1e-9) {
  if (!is_permutation_of(tr.f, mdp.n_states))
    throw std::invalid_argument("check_automorphism: f is not a state bijection");
  if (static_cast<int>(tr.g.size()) != mdp.n_states)
    throw std::invalid_argument("check_automorphism: g must be state-indexed");
  for (const auto& gs : tr.g)
    if (!is_permutation_of(gs, mdp.n_actions))
      throw std::invalid_argument(
          "check_automorphism: g_s is not an action bijection");

  AutomorphismReport rep;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!mdp.is_valid(s, a)) continue;
      const int fs = tr.f[s];
      const int ga = tr.g[s][a];
      const double dr = std::abs(mdp.r(fs, ga) - mdp.r(s, a));
      if (dr > rep.max_reward_violation) {
        rep.max_reward_violation = dr;
        if (dr > tol && dr >= rep.max_transition_violation)
          rep.witness = {s, a, -1};
      }
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double dp = std::abs(mdp.p(fs, ga, tr.f[s2]) - mdp.p(s, a, s2));
        if (dp > rep.max_transition_violation) {
          rep.max_transition_violation = dp;
          if (dp > tol) rep.witness = {s, a, s2};
        }
      }
    }
  rep.is_automorphism = rep.max_transition_violation <= tol &&
                        rep.max_reward_violation <= tol;
  return rep;
}

// Surjective maps onto an abstract MDP plus the partition B of the concrete
// state set used for block sums.
struct HomomorphismReport {
  bool holds = false;
  double max_transition_violation = 0.0;
  double max_reward_violation = 0.0;
  Witness witness;
};

// Checks p_bar(f(s), g_s(a), f(s')) = sum_{s'' in [s']_B} p(s, a, s'') and
// the reward equality. B must partition the concrete states and f must be
// constant on its blocks.
inline HomomorphismReport check_homomorphism(
    const TabularMdp& mdp, const TabularMdp& abstract,
    const std::vector<int>& f, const std::vector<std::vector<int>>& g,
    const std::vector<std::vector<int>>& partition, double tol = 1e-9) {
  // partition validity: covers every state exactly once
  std::vector<int> block_of(mdp.n_states, -1);
  for (std::size_t b = 0; b < partition.size(); ++b) {
    if (partition[b].empty())
      throw std::invalid_argument("check_homomorphism: empty partition block");
    for (int s : partition[b]) {
      if (s < 0 || s >= mdp.n_states || block_of[s] != -1)
        throw std::invalid_argument("check_homomorphism: malformed partition");
      block_of[s] = static_cast<int>(b);
    }
  }
  for (int s = 0; s < mdp.n_states; ++s)
    if (block_of[s] == -1)
      throw std::invalid_argument("check_homomorphism: partition misses a state");

  if (static_cast<int>(f.size()) != mdp.n_states)
    throw std::invalid_argument("check_homomorphism: f has wrong size");
  for (int s : f)
    if (s < 0 || s >= abstract.n_states)
      throw std::invalid_argument("check_homomorphism: f out of range");
  for (const auto& blk : partition)
    for (int s : blk)
      if (f[s] != f[blk.front()])
        throw std::invalid_argument(
            "check_homomorphism: f not constant on a partition block");
  if (static_cast<int>(g.size()) != mdp.n_states)
    throw std::invalid_argument("check_homomorphism: g must be state-indexed");

  HomomorphismReport rep;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!mdp.is_valid(s, a)) continue;
      const int fs = f[s];
      const int ga = g[s][a];
      const double dr = std::abs(abstract.r(fs, ga) - mdp.r(s, a));
      if (dr > rep.max_reward_violation) {
        rep.max_reward_violation = dr;
        if (dr > tol && dr >= rep.max_transition_violation)
          rep.witness = {s, a, -1};
      }
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        double block_sum = 0.0;
        for (int s3 : partition[block_of[s2]]) block_sum += mdp.p(s, a, s3);
        const double dp = std::abs(abstract.p(fs, ga, f[s2]) - block_sum);
        if (dp > rep.max_transition_violation) {
          rep.max_transition_violation = dp;
          if (dp > tol) rep.witness = {s, a, s2};
        }
      }
    }
  rep.holds = rep.max_transition_violation <= tol &&
              rep.max_reward_violation <= tol;
  return rep;
}

}  // namespace symwalk::mdp
