#pragma once

#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mapctr {

// Error taxonomy shared by library and CLI. The CLI maps `usage` and
// `config` to exit code 2, everything else to 1.
class Error : public std::runtime_error {
 public:
  enum class Kind { usage, config, data, contract, runtime };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

  static Error usage(const std::string& m) { return Error(Kind::usage, m); }
  static Error config(const std::string& m) { return Error(Kind::config, m); }
  static Error data(const std::string& m) { return Error(Kind::data, m); }
  static Error contract(const std::string& m) { return Error(Kind::contract, m); }
  static Error runtime(const std::string& m) { return Error(Kind::runtime, m); }

 private:
  Kind kind_;
};

inline const char* kind_name(Error::Kind k) {
  switch (k) {
    case Error::Kind::usage: return "usage";
    case Error::Kind::config: return "config";
    case Error::Kind::data: return "data";
    case Error::Kind::contract: return "contract";
    case Error::Kind::runtime: return "runtime";
  }
  return "unknown";
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used for feature-map hashes and report/file fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  return fnv1a64(buf, 8, h);
}

// Deterministic random stream. The generator state advances by a fully
// specified recurrence so that identical seeds give identical draws on any
// platform; std distributions are avoided for the same reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {
    // Warm up so that small consecutive seeds do not give correlated
    // leading outputs.
    for (int i = 0; i < 2; ++i) (void)splitmix64(state_);
  }

  std::uint64_t u64() { return splitmix64(state_); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Multiply-shift with widening; bias below 2^-64 per draw is rejected.
    for (;;) {
      std::uint64_t x = u64();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= n) return static_cast<std::uint64_t>(m >> 64);
      std::uint64_t t = (-n) % n;
      if (lo >= t) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; one value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Derives an independent stream id from a seed plus context tags, e.g.
// (seed, epoch, batch, purpose). Streams for distinct tags never overlap
// in practice because the mix is a strong 64-bit permutation chain.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a = 0,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL ^ seed;
  h = fnv1a64_u64(a + 1, h);
  h = fnv1a64_u64(b + 1, h);
  h = fnv1a64_u64(c + 1, h);
  std::uint64_t s = h;
  return splitmix64(s);
}

// Stream purposes used throughout training so that skipping one consumer
// never shifts another consumer's draws.
enum class StreamTag : std::uint64_t {
  init = 1,
  shuffle = 2,
  mask_corrupt = 3,
  replace_corrupt = 4,
  nce_noise = 5,
  dropout_supervised = 6,
  dropout_mask_path = 7,
  dropout_replace_path = 8,
  head_init = 9,
  synth = 10,
};

inline std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  unsigned long long x = std::strtoull(v, &end, 10);
  if (end == v) return fallback;
  return static_cast<std::uint64_t>(x);
}

inline bool env_flag(const char* name) {
  const char* v = std::getenv(name);
  return v && *v && std::string(v) != "0";
}

}  // namespace mapctr
