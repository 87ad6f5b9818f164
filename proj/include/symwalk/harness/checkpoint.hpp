#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "symwalk/core/rng.hpp"
#include "symwalk/rl/policy.hpp"

namespace symwalk::harness {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned binary dump of the learner state: policy and value parameters,
// optimizer moments, step counters and the RNG streams.
struct Checkpoint {
  static constexpr std::uint32_t kMagic = 0x5357'4350;  // "SWCP"
  static constexpr std::uint32_t kVersion = 1;

  std::vector<int> policy_layers;
  std::vector<int> value_layers;
  Vec theta;
  Vec omega;
  Vec adam_pol_m, adam_pol_v;
  long adam_pol_t = 0;
  Vec adam_vf_m, adam_vf_v;
  long adam_vf_t = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t updates = 0;
  std::vector<std::string> rng_states;  // shuffle rng + per-worker streams
};

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
inline void put_vec(std::ostream& os, const Vec& v) {
  put<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}
inline void get_vec(std::istream& is, Vec& v) {
  std::int64_t n = 0;
  get(is, n);
  if (n < 0 || n > (1 << 28)) throw CheckpointError("checkpoint: bad vector size");
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}
inline void put_ints(std::ostream& os, const std::vector<int>& v) {
  put<std::int32_t>(os, static_cast<std::int32_t>(v.size()));
  for (int x : v) put<std::int32_t>(os, x);
}
inline void get_ints(std::istream& is, std::vector<int>& v) {
  std::int32_t n = 0;
  get(is, n);
  if (n < 0 || n > 4096) throw CheckpointError("checkpoint: bad list size");
  v.resize(n);
  for (auto& x : v) {
    std::int32_t t;
    get(is, t);
    x = t;
  }
}
inline void put_str(std::ostream& os, const std::string& s) {
  put<std::int32_t>(os, static_cast<std::int32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void get_str(std::istream& is, std::string& s) {
  std::int32_t n = 0;
  get(is, n);
  if (n < 0 || n > (1 << 24)) throw CheckpointError("checkpoint: bad string size");
  s.resize(n);
  is.read(s.data(), n);
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path);
  using namespace detail;
  put(os, Checkpoint::kMagic);
  put(os, Checkpoint::kVersion);
  put_ints(os, ck.policy_layers);
  put_ints(os, ck.value_layers);
  put_vec(os, ck.theta);
  put_vec(os, ck.omega);
  put_vec(os, ck.adam_pol_m);
  put_vec(os, ck.adam_pol_v);
  put<std::int64_t>(os, ck.adam_pol_t);
  put_vec(os, ck.adam_vf_m);
  put_vec(os, ck.adam_vf_v);
  put<std::int64_t>(os, ck.adam_vf_t);
  put(os, ck.total_steps);
  put(os, ck.updates);
  put<std::int32_t>(os, static_cast<std::int32_t>(ck.rng_states.size()));
  for (const auto& s : ck.rng_states) put_str(os, s);
  if (!os) throw CheckpointError("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path);
  using namespace detail;
  std::uint32_t magic = 0, version = 0;
  get(is, magic);
  get(is, version);
  if (magic != Checkpoint::kMagic)
    throw CheckpointError("checkpoint: bad magic in " + path);
  if (version != Checkpoint::kVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));
  Checkpoint ck;
  get_ints(is, ck.policy_layers);
  get_ints(is, ck.value_layers);
  get_vec(is, ck.theta);
  get_vec(is, ck.omega);
  get_vec(is, ck.adam_pol_m);
  get_vec(is, ck.adam_pol_v);
  std::int64_t t = 0;
  get(is, t);
  ck.adam_pol_t = t;
  get_vec(is, ck.adam_vf_m);
  get_vec(is, ck.adam_vf_v);
  get(is, t);
  ck.adam_vf_t = t;
  get(is, ck.total_steps);
  get(is, ck.updates);
  std::int32_t n_rng = 0;
  get(is, n_rng);
  if (n_rng < 0 || n_rng > 4096)
    throw CheckpointError("checkpoint: bad rng count");
  ck.rng_states.resize(n_rng);
  for (auto& s : ck.rng_states) get_str(is, s);
  if (!is) throw CheckpointError("checkpoint: truncated file " + path);
  return ck;
}

}  // namespace symwalk::harness
