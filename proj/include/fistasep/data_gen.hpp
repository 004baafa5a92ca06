#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fistasep/esp.hpp"
#include "fistasep/svm.hpp"
#include "fistasep/types.hpp"

namespace fistasep::datagen {

class InvalidDataModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadImage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Identifier recorded in instance metadata so generated data is
/// reproducible across implementations.
inline constexpr const char* kRngAlgorithm = "mt19937_64/boxmuller";

/// Seeded, portable draws: uniforms are (x >> 11) * 2^-53 from the raw
/// mt19937_64 stream, normals consume exactly two uniforms via Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();      // [0, 1)
  double uniform_pos();  // (0, 1]
  double normal();
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/// Two clusters of well-classified points plus bounded noise:
/// j0 points in B(sigma1 e1, rho), l0 in B(-sigma2 e1, rho), and at most
/// nu*n noisy points in the enclosing ball, labels uniform at random.
struct TwoBallModel {
  double sigma1 = 0.75;
  double sigma2 = 0.75;
  double rho = 0.05;
  double nu = 0.01;
  long n = 300;
  int dim = 2;
  std::uint64_t seed = 1;
};

struct Planted {
  std::vector<Index> c_indices;  // rows of c_points inside B(sigma1 e1, rho)
  std::vector<Index> d_indices;  // rows of d_points inside B(-sigma2 e1, rho)
  long j0 = 0;
  long l0 = 0;
  long n_noise = 0;
};

std::pair<svm::Dataset, Planted> gen_two_ball(const TwoBallModel& model);

/// 2D sweep of the paper-style distance experiment: two ellipsoids with
/// centers (-d, 0) and (d, 0) and shapes omega Q Q' + eps I sampled once
/// per seed (fixed across all distances), then normalized.
struct SweepConfig {
  double omega = 0.1;
  double eps = 1e-3;
  std::uint64_t seed = 1;
};

std::vector<esp::Ellipsoid> sweep_ellipsoids(const SweepConfig& cfg, double dist);
esp::Instance gen_sweep_instance(const SweepConfig& cfg, double dist);

/// Maps a 28x28 image with values in [0, 255] to an ellipsoid: the center
/// is the [0,1]-normalized pixel vector x, the shape is
/// diag(eps + alpha (1 - theta)) with theta_i = |2 x_i - 1| (per-pixel
/// confidence).
esp::Ellipsoid image_to_ellipsoid(const Vector& pixels, double eps = 1e-10, double alpha = 0.5,
                                  esp::Label label = esp::Label::ClassC);

struct IdxImages {
  long count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major per image

  Vector image(long i) const;
};

/// Big-endian IDX readers (magic 0x00000803 for images, 0x00000801 for
/// labels).  No network access; paths must point at local files.
IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

/// per_class digits of class 0 (ClassC) and of class 1 (ClassD), sampled
/// without replacement with the given seed and mapped to ellipsoids.
std::vector<esp::Ellipsoid> mnist_ellipsoids(const IdxImages& images,
                                             const std::vector<std::uint8_t>& labels,
                                             long per_class, std::uint64_t seed,
                                             double eps = 1e-10, double alpha = 0.5);

/// normalize_instance over mnist_ellipsoids.
esp::Instance mnist_instance(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                             long per_class, std::uint64_t seed, double eps = 1e-10,
                             double alpha = 0.5);

}  // namespace fistasep::datagen
