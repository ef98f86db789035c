#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fosae {

// Network arithmetic runs in double by default; -DFOSAE_REAL32 switches the
// whole library to float for faster training. Gradient checks require double.
#ifdef FOSAE_REAL32
using real = float;
#else
using real = double;
#endif

using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct resource_error : std::runtime_error {
  resource_error(const std::string& msg, long expanded, long generated)
      : std::runtime_error(msg), expanded(expanded), generated(generated) {}
  long expanded = 0;
  long generated = 0;
};

struct parse_error : std::runtime_error {
  parse_error(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ")"),
        line(line),
        col(col) {}
  int line = 0;
  int col = 0;
};

inline std::string shape_str(const Mat& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

// Seedable generator used everywhere: mt19937_64 with a fixed 53-bit
// uniform mapping, so streams are identical across platforms and stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_mix_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    // rejection-free enough for our range sizes; n is always small
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }

  // Gumbel(0,1) = -log(-log u), u clamped away from {0,1} so the noise
  // stays finite.
  double gumbel() {
    double u = uniform();
    if (u < 1e-20) u = 1e-20;
    if (u > 1.0 - 1e-7) u = 1.0 - 1e-7;
    return -std::log(-std::log(u));
  }

  // Independent child stream; splitmix64 keeps substreams decorrelated.
  Rng child(std::uint64_t stream) const {
    std::uint64_t z = seed_mix_ + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_mix_ = 0;
};

// argmax with lowest-index tie-breaking, the convention used everywhere.
inline int argmax_row(const Mat& m, Eigen::Index row) {
  int best = 0;
  real best_v = m(row, 0);
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > best_v) {
      best_v = m(row, j);
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace fosae
