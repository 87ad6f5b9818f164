#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "symwalk/core/math.hpp"

namespace symwalk::mdp {

// Sign/permutation map: out[i] = sign[i] * in[src[i]]. This is the whole
// sagittal mirror for vectors whose layout encodes the gait phase as
// (sin, cos), where the half-cycle shift is a plain sign flip.
struct IndexSignMap {
  std::vector<int> src;
  std::vector<double> sign;

  int size() const { return static_cast<int>(src.size()); }

  Vec apply(const Vec& v) const {
    if (v.size() != size())
      throw std::invalid_argument("IndexSignMap: vector length mismatch");
    Vec out(v.size());
    for (int i = 0; i < size(); ++i) out(i) = sign[i] * v(src[i]);
    return out;
  }

  // Transposed application; for an involution this equals apply.
  Vec apply_transpose(const Vec& v) const {
    if (v.size() != size())
      throw std::invalid_argument("IndexSignMap: vector length mismatch");
    Vec out = Vec::Zero(v.size());
    for (int i = 0; i < size(); ++i) out(src[i]) += sign[i] * v(i);
    return out;
  }

  bool is_involution() const {
    for (int i = 0; i < size(); ++i) {
      const int j = src[i];
      if (j < 0 || j >= size()) return false;
      if (src[j] != i) return false;
      if (sign[i] * sign[j] != 1.0) return false;
    }
    return true;
  }

  void validate() const {
    if (src.size() != sign.size())
      throw std::invalid_argument("IndexSignMap: src/sign length mismatch");
    std::vector<char> seen(src.size(), 0);
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] < 0 || src[i] >= size() || seen[src[i]])
        throw std::invalid_argument("IndexSignMap: src is not a permutation");
      seen[src[i]] = 1;
      if (sign[i] != 1.0 && sign[i] != -1.0)
        throw std::invalid_argument("IndexSignMap: sign must be +/-1");
    }
  }
};

// The pair (f, g): state mirror and action mirror for the continuous case.
struct MirrorTransform {
  IndexSignMap state;
  IndexSignMap action;

  void validate() const {
    state.validate();
    action.validate();
    if (!state.is_involution() || !action.is_involution())
      throw std::invalid_argument("MirrorTransform: maps must be involutions");
  }
};

inline Vec mirror_state(const MirrorTransform& tr, const Vec& s) {
  return tr.state.apply(s);
}

// g_s(a); the observation argument pins the expected layout.
inline Vec mirror_action(const MirrorTransform& tr, const Vec& s,
                         const Vec& a) {
  if (s.size() != tr.state.size())
    throw std::invalid_argument("mirror_action: observation length mismatch");
  return tr.action.apply(a);
}

inline YAML::Node index_sign_to_yaml(const IndexSignMap& m) {
  YAML::Node node;
  for (int i = 0; i < m.size(); ++i) {
    node["src"].push_back(m.src[i]);
    node["sign"].push_back(static_cast<int>(m.sign[i]));
  }
  node["src"].SetStyle(YAML::EmitterStyle::Flow);
  node["sign"].SetStyle(YAML::EmitterStyle::Flow);
  return node;
}

inline IndexSignMap index_sign_from_yaml(const YAML::Node& node) {
  IndexSignMap m;
  if (!node["src"] || !node["sign"])
    throw std::invalid_argument("IndexSignMap: missing src/sign lists");
  for (const auto& v : node["src"]) m.src.push_back(v.as<int>());
  for (const auto& v : node["sign"]) m.sign.push_back(v.as<double>());
  m.validate();
  return m;
}

inline YAML::Node mirror_to_yaml(const MirrorTransform& tr) {
  YAML::Node node;
  node["state"] = index_sign_to_yaml(tr.state);
  node["action"] = index_sign_to_yaml(tr.action);
  return node;
}

inline MirrorTransform mirror_from_yaml(const YAML::Node& node) {
  MirrorTransform tr;
  tr.state = index_sign_from_yaml(node["state"]);
  tr.action = index_sign_from_yaml(node["action"]);
  tr.validate();
  return tr;
}

}  // namespace symwalk::mdp
