#include "deepkm/cli/projection.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <sstream>

namespace deepkm::cli {

Projection2D project_2d(const Matrix& latents) {
  if (latents.rows() < 2) {
    throw InputError("project_2d needs at least two points");
  }
  if (latents.cols() < 1) {
    throw InputError("project_2d needs at least one feature");
  }
  const RowVector mean = latents.colwise().mean();
  const Matrix centered = latents.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(latents.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("project_2d: eigen-decomposition failed");
  }
  const Index dim = latents.cols();
  Projection2D out;
  out.components = Matrix::Zero(dim, 2);
  out.variances.setZero();
  for (Index c = 0; c < std::min<Index>(2, dim); ++c) {
    // Eigenvalues come back in ascending order.
    const Index source = dim - 1 - c;
    Eigen::VectorXd v = solver.eigenvectors().col(source);
    Index peak = 0;
    for (Index i = 1; i < dim; ++i) {
      if (std::abs(v[i]) > std::abs(v[peak])) peak = i;
    }
    if (v[peak] < 0.0) v = -v;
    out.components.col(c) = v;
    out.variances[c] = std::max(0.0, solver.eigenvalues()[source]);
  }
  out.coords = centered * out.components;
  return out;
}

std::string projection_tsv(const Projection2D& projection, std::span<const int> predicted,
                           std::optional<std::span<const int>> truth) {
  const auto n = static_cast<std::size_t>(projection.coords.rows());
  if (predicted.size() != n || (truth && truth->size() != n)) {
    throw InputError("projection_tsv: label count differs from point count");
  }
  std::ostringstream out;
  out << "x\ty\tpred" << (truth ? "\ttruth" : "") << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Index>(i);
    std::snprintf(buffer, sizeof(buffer), "%.10g\t%.10g", projection.coords(r, 0),
                  projection.coords(r, 1));
    out << buffer << '\t' << predicted[i];
    if (truth) out << '\t' << (*truth)[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace deepkm::cli
