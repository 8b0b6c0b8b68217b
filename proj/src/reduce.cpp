#include "apf/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace apf {

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
    const std::size_t n = symmetric.rows();
    if (n != symmetric.cols()) throw InvalidInput("jacobi_eigen needs a square matrix");
    Matrix a = symmetric;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    double scale = 0.0;
    for (double x : a.data()) scale = std::max(scale, std::abs(x));

    for (int sweep = 0; sweep < max_sweeps && off_norm() > tolerance * std::max(scale, 1e-300); ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // rotation angle that zeroes a(p, q)
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.vectors = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        out.values.push_back(a(order[r], order[r]));
        for (std::size_t k = 0; k < n; ++k) out.vectors(r, k) = v(k, order[r]);
    }
    return out;
}

PcaModel pca_fit(const Matrix& data, double variance_target) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) throw InvalidInput("PCA needs at least 2 rows");
    if (!(variance_target > 0.0 && variance_target <= 1.0)) throw InvalidInput("variance_target must lie in (0, 1]");
    for (double x : data.data())
        if (!std::isfinite(x)) throw InvalidInput("PCA input contains non-finite values");

    PcaModel model;
    model.variance_target = variance_target;
    model.mean.resize(d);
    for (std::size_t c = 0; c < d; ++c) model.mean[c] = stats::mean(data.column(c));

    Matrix centered(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) centered(r, c) = data(r, c) - model.mean[c];
    Matrix cov(d, d);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            for (std::size_t r = 0; r < n; ++r) prod[r] = centered(r, i) * centered(r, j);
            cov(i, j) = cov(j, i) = stats::sum(prod) / static_cast<double>(n);
        }
    }

    SymmetricEigen eig = jacobi_eigen(cov);
    model.components = std::move(eig.vectors);
    for (std::size_t r = 0; r < d; ++r) {
        auto row = model.components.row(r);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < d; ++k)
            if (std::abs(row[k]) > std::abs(row[arg]) + 1e-12) arg = k;
        if (row[arg] < 0.0)
            for (double& x : row) x = -x;
    }
    model.eigenvalues.resize(d);
    for (std::size_t r = 0; r < d; ++r) model.eigenvalues[r] = std::max(0.0, eig.values[r]);

    const double total = std::accumulate(model.eigenvalues.begin(), model.eigenvalues.end(), 0.0);
    model.explained_variance_ratio.assign(d, 0.0);
    if (total > 0.0) {
        for (std::size_t r = 0; r < d; ++r) model.explained_variance_ratio[r] = model.eigenvalues[r] / total;
    } else if (d > 0) {
        model.explained_variance_ratio[0] = 1.0;
    }

    double cumulative = 0.0;
    model.retained = d;
    for (std::size_t r = 0; r < d; ++r) {
        cumulative += model.explained_variance_ratio[r];
        if (cumulative >= variance_target - 1e-10) {
            model.retained = r + 1;
            break;
        }
    }
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& data, std::optional<std::size_t> dims) {
    const std::size_t d = model.dims();
    if (data.cols() != d) throw InvalidInput("PCA transform: column count does not match the model");
    const std::size_t r = dims.value_or(model.retained);
    if (r > d) throw InvalidInput("PCA transform: more components requested than available");
    Matrix out(data.rows(), r);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t k = 0; k < r; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += (data(i, c) - model.mean[c]) * model.components(k, c);
            out(i, k) = s;
        }
    }
    return out;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& reduced) {
    const std::size_t d = model.dims();
    const std::size_t r = reduced.cols();
    if (r > d) throw InvalidInput("PCA inverse: too many coordinates");
    Matrix out(reduced.rows(), d);
    for (std::size_t i = 0; i < reduced.rows(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            double s = model.mean[c];
            for (std::size_t k = 0; k < r; ++k) s += reduced(i, k) * model.components(k, c);
            out(i, c) = s;
        }
    }
    return out;
}

double reconstruction_error(const PcaModel& model, const Matrix& data, std::optional<std::size_t> dims) {
    const Matrix back = pca_inverse_transform(model, pca_transform(model, data, dims));
    std::vector<double> per_row(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < data.cols(); ++c) s += (data(i, c) - back(i, c)) * (data(i, c) - back(i, c));
        per_row[i] = s;
    }
    return stats::mean(per_row);
}

}  // namespace apf
