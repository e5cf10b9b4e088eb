#include "varlm/projection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "varlm/errors.hpp"
#include "varlm/rng.hpp"
#include "varlm/svg.hpp"

namespace varlm {

void PointSet::check() const {
  if (points.rows() < 2) throw ValidationError("a point set needs at least 2 points");
  if (!points.allFinite()) throw ValidationError("point coordinates must be finite");
  if (groups.size() != static_cast<std::size_t>(points.rows()) ||
      kinds.size() != static_cast<std::size_t>(points.rows()))
    throw ValidationError("labels do not match the number of points");
}

PcaResult pca(const PointSet& points, Eigen::Index out_dim) {
  points.check();
  const Eigen::Index n = points.size(), dim = points.dim();
  if (out_dim < 1 || out_dim > dim) throw ValidationError("PCA output dimension must lie in [1, D]");
  if (n <= out_dim) throw ValidationError("PCA needs more points than output dimensions");

  const Eigen::RowVectorXd mean = points.points.colwise().mean();
  const Eigen::MatrixXd centered = points.points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double total = cov.trace();
  const double scale = points.points.cwiseAbs().maxCoeff();
  if (!(total > 1e-24 * std::max(1.0, scale * scale)))
    throw ValidationError("degenerate covariance: all points are identical");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigen-decomposition failed");

  PcaResult r;
  r.total_variance = total;
  r.components.resize(dim, out_dim);
  r.variances.resize(out_dim);
  for (Eigen::Index k = 0; k < out_dim; ++k) {
    // Eigenvalues come back in increasing order.
    const Eigen::Index src = dim - 1 - k;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.col(k) = v;
    r.variances(k) = std::max(0.0, solver.eigenvalues()(src));
  }
  r.projected.points = centered * r.components;
  r.projected.groups = points.groups;
  r.projected.kinds = points.kinds;
  return r;
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

}  // namespace

Eigen::MatrixXd tsne_affinities(const Eigen::MatrixXd& points, double perplexity) {
  const Eigen::Index n = points.rows();
  const Eigen::MatrixXd d2 = squared_distances(points);
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    // Distances relative to the nearest neighbour keep exp() in range.
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d2(i, j));
    Eigen::VectorXd row(n);
    for (int iter = 0; iter < 200; ++iter) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-(d2(i, j) - dmin) * beta);
        sum += row(j);
        weighted += (d2(i, j) - dmin) * row(j);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row.transpose();
  }
  p = p + p.transpose().eval();
  p /= p.sum();
  return p;
}

double tsne_kl(const Eigen::MatrixXd& affinities, const Eigen::MatrixXd& layout) {
  const Eigen::Index n = layout.rows();
  Eigen::MatrixXd num = (1.0 + squared_distances(layout).array()).inverse().matrix();
  num.diagonal().setZero();
  const double z = num.sum();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double pij = affinities(i, j);
      if (i == j || pij <= 0.0) continue;
      const double qij = std::max(num(i, j) / z, 1e-300);
      kl += pij * std::log(pij / qij);
    }
  return kl;
}

namespace {

PointSet prepare(const PointSet& points, const TsneOptions& options) {
  points.check();
  const Eigen::Index n = points.size();
  if (n > 5000) throw ValidationError("exact t-SNE supports at most 5000 points");
  if (options.perplexity < 5.0 || options.perplexity > static_cast<double>(n - 1) / 3.0)
    throw ValidationError("t-SNE perplexity " + std::to_string(options.perplexity) +
                          " infeasible for " + std::to_string(n) + " points (need 5 <= p <= (n-1)/3)");
  if (options.pca_dim > 0 && points.dim() > options.pca_dim)
    return pca(points, std::min(options.pca_dim, n - 1)).projected;
  return points;
}

}  // namespace

TsneResult tsne_from(const PointSet& points, const Eigen::MatrixXd& initial_layout,
                     const TsneOptions& options) {
  const PointSet input = prepare(points, options);
  const Eigen::Index n = input.size();
  if (initial_layout.rows() != n || initial_layout.cols() != 2)
    throw ShapeError("initial layout must be n x 2");

  const Eigen::MatrixXd p = tsne_affinities(input.points, options.perplexity).cwiseMax(1e-12);
  const double lr = options.learning_rate > 0.0 ? options.learning_rate : static_cast<double>(n) / 12.0;

  Eigen::MatrixXd y = initial_layout;
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);

  TsneResult result;
  result.kl_trace.emplace_back(0, tsne_kl(p, y));
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    const double exag = iter < options.exaggeration_iterations ? options.exaggeration : 1.0;
    const double momentum = iter < options.momentum_switch ? options.initial_momentum : options.final_momentum;

    Eigen::MatrixXd num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    const Eigen::MatrixXd q = (num / num.sum()).cwiseMax(1e-12);
    const Eigen::MatrixXd pq = ((exag * p - q).array() * num.array()).matrix();
    const Eigen::MatrixXd grad =
        4.0 * (pq.rowwise().sum().asDiagonal() * y - pq * y);

    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      double& g = gains.data()[k];
      const bool same_sign = (grad.data()[k] > 0) == (velocity.data()[k] > 0);
      g = same_sign ? std::max(g * 0.8, 0.01) : g + 0.2;
    }
    velocity = momentum * velocity - lr * gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();

    const std::size_t done = iter + 1;
    if ((options.kl_interval > 0 && done % options.kl_interval == 0) || done == options.iterations)
      result.kl_trace.emplace_back(done, tsne_kl(p, y));
  }
  if (!y.allFinite()) throw NumericError("t-SNE diverged");
  result.layout.points = y;
  result.layout.groups = input.groups;
  result.layout.kinds = input.kinds;
  return result;
}

TsneResult tsne(const PointSet& points, const TsneOptions& options) {
  points.check();
  Rng rng(mix_seed(options.seed));
  Eigen::MatrixXd init(points.size(), 2);
  for (Eigen::Index k = 0; k < init.size(); ++k) init.data()[k] = 1e-4 * rng.normal();
  return tsne_from(points, init, options);
}

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string scatter_svg(const PointSet& layout) {
  if (layout.dim() != 2) throw ShapeError("scatter plot needs 2-d points");
  std::vector<std::string> groups;
  for (const auto& g : layout.groups)
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  const bool has_poetry = std::count(layout.kinds.begin(), layout.kinds.end(), Kind::poetry) > 0;
  const bool has_prose = std::count(layout.kinds.begin(), layout.kinds.end(), Kind::prose) > 0;

  constexpr double kPlot = 560, kMargin = 20, kLegend = 180;
  svg::Canvas canvas(kPlot + 2 * kMargin + kLegend, kPlot + 2 * kMargin);
  const Eigen::Index n = layout.size();
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (n > 0) {
    xmin = layout.points.col(0).minCoeff();
    xmax = layout.points.col(0).maxCoeff();
    ymin = layout.points.col(1).minCoeff();
    ymax = layout.points.col(1).maxCoeff();
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  auto sx = [&](double x) { return kMargin + (x - xmin) / span * kPlot; };
  auto sy = [&](double y) { return kMargin + kPlot - (y - ymin) / span * kPlot; };
  auto color = [&](const std::string& g) {
    const auto idx = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), g) - groups.begin());
    return kPalette[idx % kPalette.size()];
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = color(layout.groups[static_cast<std::size_t>(i)]);
    if (layout.kinds[static_cast<std::size_t>(i)] == Kind::poetry)
      canvas.circle(sx(layout.points(i, 0)), sy(layout.points(i, 1)), 3.5, c);
    else
      canvas.cross(sx(layout.points(i, 0)), sy(layout.points(i, 1)), 3.5, c);
  }

  double ly = kMargin + 10;
  const double lx = kPlot + 2 * kMargin;
  for (const auto& g : groups) {
    canvas.rect(lx, ly, 12, 12, color(g));
    canvas.text(lx + 18, ly + 10, g, 12);
    ly += 20;
  }
  ly += 10;
  if (has_poetry) {
    canvas.circle(lx + 6, ly + 6, 4, "#333333");
    canvas.text(lx + 18, ly + 10, "poetry", 12);
    ly += 20;
  }
  if (has_prose) {
    canvas.cross(lx + 6, ly + 6, 4, "#333333");
    canvas.text(lx + 18, ly + 10, "prose", 12);
  }
  return canvas.str();
}

void export_plot(const PointSet& layout, const std::filesystem::path& stem) {
  if (layout.dim() != 2) throw ShapeError("export_plot needs 2-d points");
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";

  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "x,y,group,kind\n";
  for (Eigen::Index i = 0; i < layout.size(); ++i) {
    csv << svg::num(layout.points(i, 0), 6) << ',' << svg::num(layout.points(i, 1), 6) << ','
        << layout.groups[static_cast<std::size_t>(i)] << ','
        << to_string(layout.kinds[static_cast<std::size_t>(i)]) << '\n';
  }
  if (!csv) throw IoError("write failed: " + csv_path.string());

  std::ofstream svg_out(svg_path, std::ios::binary);
  if (!svg_out) throw IoError("cannot write " + svg_path.string());
  svg_out << scatter_svg(layout);
  if (!svg_out) throw IoError("write failed: " + svg_path.string());
}

}  // namespace varlm
