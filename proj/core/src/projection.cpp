#include "phasornet/projection.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "phasornet/error.hpp"
#include "phasornet/rng.hpp"

namespace phasornet {

std::string_view to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::kNone: return "none";
    case ProjectionKind::kNrp: return "nrp";
    case ProjectionKind::kRpp: return "rpp";
  }
  return "none";
}

ProjectionKind parse_projection_kind(std::string_view name) {
  if (name == "none") return ProjectionKind::kNone;
  if (name == "nrp") return ProjectionKind::kNrp;
  if (name == "rpp") return ProjectionKind::kRpp;
  throw Error("unknown projection kind '" + std::string(name) + "'");
}

NormMoments NormMoments::identity(std::size_t n) {
  const auto len = static_cast<Eigen::Index>(n);
  return {Eigen::VectorXd::Zero(len), Eigen::VectorXd::Ones(len)};
}

ProjectionSpec make_projection(ProjectionKind kind, std::size_t dimension,
                               std::uint64_t seed, double density) {
  PHASORNET_CHECK(dimension > 0, "projection dimension must be positive");
  PHASORNET_CHECK(density > 0.0 && density <= 1.0,
                  "projection density must be in (0, 1]");
  ProjectionSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.dimension = dimension;
  spec.density = density;
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(dimension);
  if (kind == ProjectionKind::kNrp) {
    spec.matrix.resize(n, n);
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        const double v = rng.uniform(-1.0, 1.0);
        const bool keep = density >= 1.0 || rng.uniform() < density;
        spec.matrix(r, c) = keep ? v : 0.0;
      }
    }
    spec.moments = NormMoments::identity(dimension);
  } else if (kind == ProjectionKind::kRpp) {
    spec.mask.resize(dimension);
    for (auto& m : spec.mask) m = (rng.next() & 1U) ? 1 : -1;
  }
  return spec;
}

namespace {

void check_dimension(std::span<const double> image,
                     const ProjectionSpec& spec) {
  PHASORNET_CHECK(image.size() == spec.dimension,
                  "projection: image has " + std::to_string(image.size()) +
                      " pixels, projection expects " +
                      std::to_string(spec.dimension));
}

void normalize_and_clip(Eigen::MatrixXd& projected, const NormMoments& m) {
  for (Eigen::Index c = 0; c < projected.cols(); ++c) {
    auto col = projected.col(c);
    col = ((col - m.mean).array() / (kNrpQuantile * m.stddev.array()))
              .cwiseMax(-1.0)
              .cwiseMin(1.0)
              .matrix();
  }
}

}  // namespace

PhaseVector nrp_project(std::span<const double> image,
                        const ProjectionSpec& spec) {
  PHASORNET_CHECK(spec.kind == ProjectionKind::kNrp,
                  "nrp_project: projection is not nrp");
  check_dimension(image, spec);
  const Eigen::Map<const Eigen::VectorXd> img(
      image.data(), static_cast<Eigen::Index>(image.size()));
  Eigen::MatrixXd p = spec.matrix * img;
  normalize_and_clip(p, spec.moments);
  return PhaseVector(p.data(), p.data() + p.size());
}

PhaseVector rpp_project(std::span<const double> image,
                        const ProjectionSpec& spec) {
  PHASORNET_CHECK(spec.kind == ProjectionKind::kRpp,
                  "rpp_project: projection is not rpp");
  check_dimension(image, spec);
  PhaseVector out(image.size());
  for (std::size_t j = 0; j < image.size(); ++j) {
    out[j] = spec.mask[j] * image[j];
  }
  return out;
}

PhaseVector project(std::span<const double> image, const ProjectionSpec& spec) {
  switch (spec.kind) {
    case ProjectionKind::kNrp: return nrp_project(image, spec);
    case ProjectionKind::kRpp: return rpp_project(image, spec);
    case ProjectionKind::kNone: break;
  }
  check_dimension(image, spec);
  return PhaseVector(image.begin(), image.end());
}

NormMoments batch_moments(const Eigen::MatrixXd& projected) {
  PHASORNET_CHECK(projected.cols() > 0, "batch_moments: empty batch");
  NormMoments m;
  m.mean = projected.rowwise().mean();
  const Eigen::MatrixXd centered = projected.colwise() - m.mean;
  m.stddev = (centered.array().square().rowwise().sum() /
              static_cast<double>(projected.cols()))
                 .sqrt()
                 .cwiseMax(kStdFloor)
                 .matrix();
  return m;
}

NormMoments fit_norm_moments(const Eigen::MatrixXd& projected,
                             const NormMoments& running, double momentum) {
  const NormMoments batch = batch_moments(projected);
  PHASORNET_CHECK(running.mean.size() == batch.mean.size(),
                  "fit_norm_moments: moment dimension mismatch");
  NormMoments out;
  out.mean = momentum * running.mean + (1.0 - momentum) * batch.mean;
  out.stddev = momentum * running.stddev + (1.0 - momentum) * batch.stddev;
  return out;
}

Eigen::MatrixXd project_batch(ProjectionSpec& spec,
                              const Eigen::MatrixXd& images, bool training) {
  if (!training || spec.kind != ProjectionKind::kNrp) {
    return project_batch(std::as_const(spec), images);
  }
  PHASORNET_CHECK(images.rows() == static_cast<Eigen::Index>(spec.dimension),
                  "project_batch: pixel count mismatch");
  Eigen::MatrixXd p = spec.matrix * images;
  const NormMoments current = batch_moments(p);
  spec.moments = fit_norm_moments(p, spec.moments, spec.momentum);
  normalize_and_clip(p, current);
  return p;
}

Eigen::MatrixXd project_batch(const ProjectionSpec& spec,
                              const Eigen::MatrixXd& images) {
  PHASORNET_CHECK(images.rows() == static_cast<Eigen::Index>(spec.dimension),
                  "project_batch: pixel count mismatch");
  switch (spec.kind) {
    case ProjectionKind::kNrp: {
      Eigen::MatrixXd p = spec.matrix * images;
      normalize_and_clip(p, spec.moments);
      return p;
    }
    case ProjectionKind::kRpp: {
      Eigen::MatrixXd p = images;
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        p.row(r) *= spec.mask[static_cast<std::size_t>(r)];
      }
      return p;
    }
    case ProjectionKind::kNone: break;
  }
  return images;
}

}  // namespace phasornet
