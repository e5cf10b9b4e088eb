#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "varlm/corpus.hpp"

namespace varlm {

/// n points of dimension D (one per row) with plotting labels.
struct PointSet {
  Eigen::MatrixXd points;
  std::vector<std::string> groups;
  std::vector<Kind> kinds;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  /// Throws ValidationError unless n >= 2, coordinates are finite, and labels match.
  void check() const;
};

struct PcaResult {
  PointSet projected;
  Eigen::VectorXd variances;   // per component, non-increasing
  Eigen::MatrixXd components;  // D x out_dim, orthonormal columns
  double total_variance = 0.0;
};

/// Projection onto the top principal axes of the centered data. Each
/// component's largest-magnitude loading is made positive.
PcaResult pca(const PointSet& points, Eigen::Index out_dim);

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double learning_rate = 0.0;  // 0 = n / 12
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  std::size_t kl_interval = 50;
  Eigen::Index pca_dim = 50;  // pre-reduction when D exceeds it
};

struct TsneResult {
  PointSet layout;  // 2-d
  std::vector<std::pair<std::size_t, double>> kl_trace;  // (iteration, KL(P || Q)), first entry at 0
};

/// Symmetrized input affinities P (n x n, zero diagonal, sums to 1), with
/// per-point Gaussian bandwidths binary-searched to the target perplexity.
Eigen::MatrixXd tsne_affinities(const Eigen::MatrixXd& points, double perplexity);

/// KL(P || Q) for a layout, with Q the Student-t kernel over pairwise distances.
double tsne_kl(const Eigen::MatrixXd& affinities, const Eigen::MatrixXd& layout);

/// Exact O(n^2) t-SNE. Requires n <= 5000 and 5 <= perplexity <= (n - 1) / 3.
TsneResult tsne(const PointSet& points, const TsneOptions& options);

/// Runs the optimizer from a given initial layout (n x 2).
TsneResult tsne_from(const PointSet& points, const Eigen::MatrixXd& initial_layout,
                     const TsneOptions& options);

/// Writes <stem>.csv (x,y,group,kind) and <stem>.svg (one color per group,
/// circles for poetry, crosses for prose).
void export_plot(const PointSet& layout, const std::filesystem::path& stem);

std::string scatter_svg(const PointSet& layout);

}  // namespace varlm
