#pragma once

#include "gsentinel/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace gsentinel {

struct PcaModel {
    Eigen::VectorXd mean;
    /// One component per column, unit length, mutually orthogonal.
    Eigen::MatrixXd components;
    /// Variances along the components, descending.
    Eigen::VectorXd eigenvalues;
};

struct PcaFit {
    PcaModel model;
    Eigen::MatrixXd projected; // rows x k
};

/// Each component is flipped so its largest-magnitude entry is positive
/// (first such entry on ties).
inline void fix_component_signs(Eigen::MatrixXd& components) {
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
        Eigen::Index arg = 0;
        for (Eigen::Index r = 1; r < components.rows(); ++r)
            if (std::abs(components(r, c)) > std::abs(components(arg, c)))
                arg = r;
        if (components(arg, c) < 0.0)
            components.col(c) *= -1.0;
    }
}

/// Top-k principal axes of the population covariance.
inline PcaFit fit_pca(const Eigen::MatrixXd& data, Eigen::Index k = 2) {
    const Eigen::Index n = data.rows();
    if (n < 3)
        throw TooFewRows(static_cast<std::size_t>(n), 3);
    if (k < 1 || k > data.cols())
        throw InvalidParams("pca: k must lie in [1, " + std::to_string(data.cols()) + "]");

    PcaFit fit;
    fit.model.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - fit.model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw Error("pca: eigen decomposition failed");
    // Eigen returns ascending eigenvalues.
    const Eigen::Index d = cov.rows();
    fit.model.components.resize(d, k);
    fit.model.eigenvalues.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        fit.model.components.col(i) = solver.eigenvectors().col(d - 1 - i);
        fit.model.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
    }
    fix_component_signs(fit.model.components);
    fit.projected = centered * fit.model.components;
    return fit;
}

inline Eigen::MatrixXd project(const PcaModel& model, const Eigen::MatrixXd& data) {
    return (data.rowwise() - model.mean.transpose()) * model.components;
}

} // namespace gsentinel
