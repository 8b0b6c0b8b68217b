#pragma once

#include <optional>
#include <vector>

#include "apf/core.hpp"

namespace apf {

/// Eigenvalues (descending) and matching unit eigenvectors (as rows) of a
/// symmetric matrix, via cyclic Jacobi rotations.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;  // row i is the eigenvector for values[i]
};
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-14, int max_sweeps = 100);

/// Principal components of a data matrix (population covariance).
///
/// All d components are kept in `components` (rows, descending variance);
/// `retained` is the number used for the clustering space.
struct PcaModel {
    std::vector<double> mean;
    Matrix components;
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
    std::size_t retained = 0;
    double variance_target = 0.9;

    std::size_t dims() const { return mean.size(); }
};

/// Fit on an n x d matrix. `retained` is the smallest r whose cumulative
/// explained ratio reaches variance_target. Each component is signed so its
/// largest-magnitude coordinate is positive.
PcaModel pca_fit(const Matrix& data, double variance_target = 0.9);

/// Project onto the first `dims` components (default: model.retained).
Matrix pca_transform(const PcaModel& model, const Matrix& data, std::optional<std::size_t> dims = std::nullopt);

/// Map reduced coordinates back to the input space.
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& reduced);

/// Mean over rows of the squared reconstruction error using `dims` components.
/// Equals the sum of the discarded eigenvalues on the fit data.
double reconstruction_error(const PcaModel& model, const Matrix& data, std::optional<std::size_t> dims = std::nullopt);

}  // namespace apf
