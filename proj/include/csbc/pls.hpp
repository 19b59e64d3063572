#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include <Eigen/Dense>

#include "csbc/features.hpp"

namespace csbc {

struct PlsOptions {
    // Divide centred feature columns by their standard deviation.
    bool scale = false;
};

/// Single-response PLS regression fitted by NIPALS.
///
/// Stores the centring/scaling statistics, the weight matrix W (unit
/// columns), loadings P, response loadings q and the regression vector
/// B = W (P'W)^-1 q in the (optionally scaled) centred feature space.
class PlsModel {
public:
    PlsModel(Eigen::VectorXd x_mean, Eigen::VectorXd x_scale, double y_mean, Eigen::MatrixXd weights,
             Eigen::MatrixXd loadings, Eigen::VectorXd y_loadings, DescriptorTag feature_tag,
             int requested_components);

    /// A model whose prediction is `value` for every input of the given width.
    static PlsModel constant(std::size_t dims, double value, DescriptorTag feature_tag);

    std::size_t dims() const noexcept { return static_cast<std::size_t>(x_mean_.size()); }
    int n_components() const noexcept { return static_cast<int>(weights_.cols()); }
    int requested_components() const noexcept { return requested_components_; }
    DescriptorTag feature_tag() const noexcept { return feature_tag_; }

    const Eigen::VectorXd& x_mean() const noexcept { return x_mean_; }
    const Eigen::VectorXd& x_scale() const noexcept { return x_scale_; }
    double y_mean() const noexcept { return y_mean_; }
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    const Eigen::MatrixXd& loadings() const noexcept { return loadings_; }
    const Eigen::VectorXd& y_loadings() const noexcept { return y_loadings_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }

    /// y_mean + standardized(x) . B. InputError on a width mismatch or non-finite input.
    double predict(std::span<const double> x) const;
    double predict(const FeatureVector& x) const { return predict(std::span<const double>(x.values)); }
    Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const;

    /// Same prediction obtained by projecting onto the latent components one
    /// at a time and deflating, without using B.
    double predict_latent(std::span<const double> x) const;

    /// Latent scores (one column per component) of each row.
    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;

private:
    friend PlsModel load_model(std::istream& in);

    Eigen::VectorXd standardize(std::span<const double> x) const;

    Eigen::VectorXd x_mean_;
    Eigen::VectorXd x_scale_;
    double y_mean_;
    Eigen::MatrixXd weights_;
    Eigen::MatrixXd loadings_;
    Eigen::VectorXd y_loadings_;
    Eigen::VectorXd coefficients_;
    DescriptorTag feature_tag_;
    int requested_components_;
};

/// Fits k components on n rows of X against y.
///
/// Errors: InputError for shape mismatch, n < 2 or non-finite data;
/// ConfigError unless 1 <= k <= min(n - 1, d); DegenerateError for a
/// constant y or when not even one component can be extracted. Fitting stops
/// early (fewer components) once the residual covariance X'y vanishes.
PlsModel fit_pls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, PlsOptions options = {},
                 DescriptorTag feature_tag = DescriptorTag::External);

/// Coefficient of determination of the model on (X, y).
double r_squared(const PlsModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Text container, see README for the layout. Numbers are written in their
/// shortest exact form so load(save(m)) reproduces every field bit for bit.
void save_model(const PlsModel& model, std::ostream& out);
PlsModel load_model(std::istream& in);
void save_model_file(const PlsModel& model, const std::filesystem::path& path);
PlsModel load_model_file(const std::filesystem::path& path);

}  // namespace csbc
