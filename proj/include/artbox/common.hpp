// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace artbox {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Error taxonomy. Every throwing function documents which of these it uses.
// ---------------------------------------------------------------------------

struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInput : std::runtime_error {
  explicit SingularInput(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidState : std::runtime_error {
  explicit InvalidState(const std::string& what) : std::runtime_error(what) {}
};

struct AllZeroWeights : std::runtime_error {
  explicit AllZeroWeights(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

struct SingularScale : std::runtime_error {
  explicit SingularScale(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Deterministic random engine. mt19937_64 supplies the bit stream and the
// variate transforms are written out by hand, so a given seed produces the
// same sequence on every platform / standard library.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  // Standard normal via Box-Muller (cosine branch; one uniform pair per draw).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  Vec3 normal3(double sigma) {
    return Vec3(normal(0.0, sigma), normal(0.0, sigma), normal(0.0, sigma));
  }

  // Uniform direction on the unit sphere.
  Vec3 unit_vector() {
    while (true) {
      const Vec3 v(normal(), normal(), normal());
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  VecX unit_vector(int dim) {
    while (true) {
      VecX v(dim);
      for (int i = 0; i < dim; ++i) v[i] = normal();
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  // Uniform rotation from a uniformly distributed unit quaternion.
  Mat3 random_rotation() {
    const double q0 = normal(), q1 = normal(), q2 = normal(), q3 = normal();
    const double n = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
    if (n < 1e-12) return random_rotation();
    return Eigen::Quaterniond(q0 / n, q1 / n, q2 / n, q3 / n).toRotationMatrix();
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace artbox
