#include "fistasep/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace fistasep::datagen {

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1p-53; }

double Rng::uniform_pos() { return static_cast<double>((eng_() >> 11) + 1) * 0x1p-53; }

double Rng::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

Vector gaussian_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

Vector uniform_in_ball(Rng& rng, const Vector& center, double radius) {
  const int dim = static_cast<int>(center.size());
  Vector dir = gaussian_vector(rng, dim);
  double n = dir.norm();
  while (n == 0.0) {
    dir = gaussian_vector(rng, dim);
    n = dir.norm();
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return center + (r / n) * dir;
}

}  // namespace

std::pair<svm::Dataset, Planted> gen_two_ball(const TwoBallModel& model) {
  if (!(model.sigma1 >= 0.5 && model.sigma1 <= 1.0 && model.sigma2 >= 0.5 && model.sigma2 <= 1.0))
    throw InvalidDataModel("gen_two_ball: sigma values must lie in [1/2, 1]");
  if (!(model.rho > 0.0 && model.rho < std::min(model.sigma1, model.sigma2)))
    throw InvalidDataModel("gen_two_ball: need 0 < rho < min(sigma1, sigma2)");
  if (!(model.nu >= 0.0)) throw InvalidDataModel("gen_two_ball: nu must be >= 0");
  if (model.dim < 1) throw InvalidDataModel("gen_two_ball: dim must be >= 1");

  const long n_noise = static_cast<long>(std::floor(model.nu * static_cast<double>(model.n)));
  const long j0 = (model.n - n_noise + 1) / 2;
  const long l0 = model.n - n_noise - j0;
  if (3 * j0 < model.n || 3 * l0 < model.n)
    throw InvalidDataModel("gen_two_ball: counts violate j0, l0 >= n/3");

  Rng rng(model.seed);
  Vector c_center = Vector::Zero(model.dim);
  c_center[0] = model.sigma1;
  Vector d_center = Vector::Zero(model.dim);
  d_center[0] = -model.sigma2;
  Vector noise_center = Vector::Zero(model.dim);
  noise_center[0] = 0.5 * (model.sigma1 - model.sigma2);
  const double noise_radius = 0.5 * (model.sigma1 + model.sigma2) + model.rho;

  std::vector<Vector> c_rows, d_rows;
  c_rows.reserve(static_cast<size_t>(j0 + n_noise));
  d_rows.reserve(static_cast<size_t>(l0 + n_noise));
  for (long i = 0; i < j0; ++i) c_rows.push_back(uniform_in_ball(rng, c_center, model.rho));
  for (long i = 0; i < l0; ++i) d_rows.push_back(uniform_in_ball(rng, d_center, model.rho));
  for (long i = 0; i < n_noise; ++i) {
    Vector p = uniform_in_ball(rng, noise_center, noise_radius);
    if (rng.uniform() < 0.5)
      c_rows.push_back(std::move(p));
    else
      d_rows.push_back(std::move(p));
  }

  Matrix c(static_cast<Index>(c_rows.size()), model.dim);
  for (size_t i = 0; i < c_rows.size(); ++i) c.row(static_cast<Index>(i)) = c_rows[i];
  Matrix d(static_cast<Index>(d_rows.size()), model.dim);
  for (size_t i = 0; i < d_rows.size(); ++i) d.row(static_cast<Index>(i)) = d_rows[i];

  Planted planted;
  planted.j0 = j0;
  planted.l0 = l0;
  planted.n_noise = n_noise;
  for (long i = 0; i < j0; ++i) planted.c_indices.push_back(i);
  for (long i = 0; i < l0; ++i) planted.d_indices.push_back(i);

  return {svm::make_dataset(std::move(c), std::move(d)), std::move(planted)};
}

std::vector<esp::Ellipsoid> sweep_ellipsoids(const SweepConfig& cfg, double dist) {
  if (!(dist > 0)) throw std::invalid_argument("sweep_ellipsoids: dist must be positive");
  Rng rng(cfg.seed);
  auto sample_shape = [&]() {
    Matrix q(2, 2);
    q << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    return Matrix(cfg.omega * q * q.transpose() + cfg.eps * Matrix::Identity(2, 2));
  };
  const Matrix a0 = sample_shape();
  const Matrix a1 = sample_shape();
  Vector c0(2), c1(2);
  c0 << -dist, 0.0;
  c1 << dist, 0.0;
  return {esp::make_ellipsoid(c0, a0, esp::Label::ClassC),
          esp::make_ellipsoid(c1, a1, esp::Label::ClassD)};
}

esp::Instance gen_sweep_instance(const SweepConfig& cfg, double dist) {
  return esp::normalize_instance(sweep_ellipsoids(cfg, dist));
}

esp::Ellipsoid image_to_ellipsoid(const Vector& pixels, double eps, double alpha,
                                  esp::Label label) {
  if (pixels.size() != 784) throw BadImage("image_to_ellipsoid: expected 784 pixels");
  if (!(eps > 0) || !(alpha >= 0))
    throw std::invalid_argument("image_to_ellipsoid: need eps > 0 and alpha >= 0");
  Vector center(784), diag(784);
  for (Index i = 0; i < 784; ++i) {
    const double p = pixels[i];
    if (!(p >= 0.0 && p <= 255.0)) throw BadImage("image_to_ellipsoid: pixel outside [0, 255]");
    const double x = p / 255.0;
    const double theta = std::abs(2.0 * x - 1.0);
    center[i] = x;
    diag[i] = eps + alpha * (1.0 - theta);
  }
  return esp::make_ellipsoid(std::move(center), Matrix(diag.asDiagonal()), label);
}

namespace {

std::uint32_t read_u32_be(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw BadImage("idx: truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

Vector IdxImages::image(long i) const {
  const long px = static_cast<long>(rows) * cols;
  Vector v(px);
  for (long k = 0; k < px; ++k) v[k] = static_cast<double>(pixels[static_cast<size_t>(i * px + k)]);
  return v;
}

IdxImages read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadImage("idx: cannot open " + path);
  if (read_u32_be(in) != 0x00000803u) throw BadImage("idx: bad image magic in " + path);
  IdxImages out;
  out.count = read_u32_be(in);
  out.rows = static_cast<int>(read_u32_be(in));
  out.cols = static_cast<int>(read_u32_be(in));
  const size_t total = static_cast<size_t>(out.count) * out.rows * out.cols;
  out.pixels.resize(total);
  in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(total));
  if (!in) throw BadImage("idx: truncated image data in " + path);
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadImage("idx: cannot open " + path);
  if (read_u32_be(in) != 0x00000801u) throw BadImage("idx: bad label magic in " + path);
  const std::uint32_t count = read_u32_be(in);
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
  if (!in) throw BadImage("idx: truncated label data in " + path);
  return labels;
}

std::vector<esp::Ellipsoid> mnist_ellipsoids(const IdxImages& images,
                                             const std::vector<std::uint8_t>& labels,
                                             long per_class, std::uint64_t seed, double eps,
                                             double alpha) {
  if (static_cast<long>(labels.size()) != images.count)
    throw BadImage("mnist_ellipsoids: image/label count mismatch");
  std::vector<long> zeros, ones;
  for (long i = 0; i < images.count; ++i) {
    if (labels[static_cast<size_t>(i)] == 0) zeros.push_back(i);
    if (labels[static_cast<size_t>(i)] == 1) ones.push_back(i);
  }
  if (static_cast<long>(zeros.size()) < per_class || static_cast<long>(ones.size()) < per_class)
    throw InvalidDataModel("mnist_ellipsoids: not enough digits of each class");

  // seeded sampling without replacement
  Rng rng(seed);
  auto take = [&](std::vector<long>& pool) {
    for (size_t i = 0; i + 1 < pool.size(); ++i) {
      const size_t r = i + static_cast<size_t>(rng.raw() % (pool.size() - i));
      std::swap(pool[i], pool[r]);
    }
    pool.resize(static_cast<size_t>(per_class));
  };
  take(zeros);
  take(ones);

  std::vector<esp::Ellipsoid> ells;
  ells.reserve(static_cast<size_t>(2 * per_class));
  for (long i : zeros) ells.push_back(image_to_ellipsoid(images.image(i), eps, alpha, esp::Label::ClassC));
  for (long i : ones) ells.push_back(image_to_ellipsoid(images.image(i), eps, alpha, esp::Label::ClassD));
  return ells;
}

esp::Instance mnist_instance(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                             long per_class, std::uint64_t seed, double eps, double alpha) {
  return esp::normalize_instance(mnist_ellipsoids(images, labels, per_class, seed, eps, alpha));
}

}  // namespace fistasep::datagen
