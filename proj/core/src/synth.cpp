#include "mixagg/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "mixagg/errors.hpp"
#include "mixagg/tensor_io.hpp"

namespace mixagg {
namespace {

std::string place_name(std::size_t p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%04zu", p);
  return buf;
}

std::string view_name(std::size_t p, std::size_t v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "p%04zu_v%02zu", p, v);
  return buf;
}

}  // namespace

SynthData synth_build(const SynthOptions& options) {
  if (options.places == 0 || options.views == 0) throw ParamError("synth needs places, views >= 1");
  if (options.channels == 0 || options.height == 0 || options.width == 0 || options.latent_dim == 0) {
    throw ParamError("synth needs c, h, w, latent_dim >= 1");
  }
  if (!(options.noise_variance >= 0.0)) throw ParamError("noise variance must be >= 0");

  const std::size_t dim = options.channels * options.height * options.width;
  const std::size_t k = options.latent_dim;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform01(0.0, 1.0);

  Eigen::MatrixXd lift(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
  const double lift_std = 1.0 / std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < lift.rows(); ++i) {
    for (Eigen::Index j = 0; j < lift.cols(); ++j) lift(i, j) = unit(rng) * lift_std;
  }
  Eigen::MatrixXd latents(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(options.places));
  for (Eigen::Index p = 0; p < latents.cols(); ++p) {
    for (Eigen::Index j = 0; j < latents.rows(); ++j) latents(j, p) = unit(rng);
  }

  SynthData data;
  const auto grid = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(options.places))));
  for (std::size_t p = 0; p < options.places; ++p) {
    const double north = static_cast<double>(p / grid) * options.place_spacing_m;
    const double east = static_cast<double>(p % grid) * options.place_spacing_m;
    data.place_centers.push_back(offset_m(options.origin, north, east));
  }

  const double noise_std = std::sqrt(options.noise_variance);
  const Eigen::LLT<Eigen::MatrixXd> normal_eq(lift.transpose() * lift);
  std::vector<PlaceRecord> records;
  std::size_t oracle_hits = 0;
  for (std::size_t p = 0; p < options.places; ++p) {
    const Eigen::VectorXd clean = lift * latents.col(static_cast<Eigen::Index>(p));
    for (std::size_t v = 0; v < options.views; ++v) {
      Eigen::VectorXd view = clean;
      for (Eigen::Index i = 0; i < view.size(); ++i) view(i) += noise_std * unit(rng);
      // Uniform point in a disc; the radius stays strictly inside the bound.
      const double radius = options.view_jitter_m * std::sqrt(uniform01(rng)) * 0.999;
      const double angle = 2.0 * std::numbers::pi * uniform01(rng);

      const Eigen::VectorXd estimate = normal_eq.solve(lift.transpose() * view);
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < options.places; ++q) {
        const double d2 = (estimate - latents.col(static_cast<Eigen::Index>(q))).squaredNorm();
        if (d2 < best_dist) {
          best_dist = d2;
          best = q;
        }
      }
      if (best == p) ++oracle_hits;

      std::vector<float> values(dim);
      for (std::size_t i = 0; i < dim; ++i) values[i] = static_cast<float>(view(static_cast<Eigen::Index>(i)));
      data.tensors.emplace_back(Shape{options.channels, options.height, options.width}, std::move(values));

      PlaceRecord r;
      r.id = view_name(p, v);
      r.place = place_name(p);
      r.position = offset_m(data.place_centers[p], radius * std::cos(angle), radius * std::sin(angle));
      r.tensor = std::filesystem::path("tensors") / (r.id + ".mxt");
      records.push_back(std::move(r));
    }
  }
  data.latent_oracle_accuracy =
      static_cast<double>(oracle_hits) / static_cast<double>(options.places * options.views);
  data.manifest = Manifest(std::move(records));
  return data;
}

SynthData synth_generate(const SynthOptions& options, const std::filesystem::path& out_dir) {
  auto data = synth_build(options);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "tensors", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "tensors").string() + ": " + ec.message());
  for (std::size_t i = 0; i < data.tensors.size(); ++i) {
    save_tensor(out_dir / data.manifest[i].tensor, data.tensors[i]);
  }
  data.manifest = Manifest(data.manifest.records(), out_dir);
  save_manifest(data.manifest, out_dir / "manifest.jsonl");
  return data;
}

}  // namespace mixagg
