#pragma once

// Intensity-to-phase encoders applied before the first dense layer.
//
//   nrp: normalized random projection. A seeded uniform[-1,1] matrix mixes
//        the pixels, per-feature moments rescale the result so that ~99% of
//        values fall in [-1, 1], and outliers are clipped.
//   rpp: random pixel phase. Each pixel keeps its magnitude and gets a fixed
//        random sign.
//   none: intensities are used as phases directly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "phasornet/phase.hpp"

namespace phasornet {

enum class ProjectionKind { kNone, kNrp, kRpp };

std::string_view to_string(ProjectionKind kind);
ProjectionKind parse_projection_kind(std::string_view name);

// Two-sided 99% normal quantile: a normalized value of +-1 sits at 2.576 std.
inline constexpr double kNrpQuantile = 2.576;
inline constexpr double kStdFloor = 1e-6;
inline constexpr double kDefaultMomentum = 0.99;

struct NormMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static NormMoments identity(std::size_t n);
};

struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::kNone;
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  // Fraction of nonzero entries in the nrp matrix.
  double density = 1.0;
  double momentum = kDefaultMomentum;
  Eigen::MatrixXd matrix;     // nrp only, dimension x dimension
  std::vector<int> mask;      // rpp only, entries +1 / -1
  NormMoments moments;        // nrp only
};

// Generates the matrix or mask for `kind` from `seed`.
ProjectionSpec make_projection(ProjectionKind kind, std::size_t dimension,
                               std::uint64_t seed, double density = 1.0);

PhaseVector nrp_project(std::span<const double> image,
                        const ProjectionSpec& spec);
PhaseVector rpp_project(std::span<const double> image,
                        const ProjectionSpec& spec);

// Dispatches on spec.kind using the frozen (running) moments.
PhaseVector project(std::span<const double> image, const ProjectionSpec& spec);

// Per-feature population mean and std over the columns of `projected`.
NormMoments batch_moments(const Eigen::MatrixXd& projected);

// Running update: moment <- momentum * moment + (1 - momentum) * batch value.
// Batch std is floored at kStdFloor before mixing.
NormMoments fit_norm_moments(const Eigen::MatrixXd& projected,
                             const NormMoments& running, double momentum);

// Projects a batch (one image per column). When `training` is set and the
// projection is nrp, the batch's own statistics normalize it and the running
// moments in `spec` are updated; otherwise the frozen moments are used.
Eigen::MatrixXd project_batch(ProjectionSpec& spec,
                              const Eigen::MatrixXd& images, bool training);
Eigen::MatrixXd project_batch(const ProjectionSpec& spec,
                              const Eigen::MatrixXd& images);

}  // namespace phasornet
