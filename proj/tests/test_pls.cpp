#include <doctest.h>

#include <random>
#include <sstream>

#include "csbc/error.hpp"
#include "csbc/pls.hpp"
#include "oracles.hpp"

using namespace csbc;

namespace {

Eigen::MatrixXd random_matrix(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            X(i, j) = g(rng);
        }
    }
    return X;
}

Eigen::VectorXd noisy_response(const Eigen::MatrixXd& X, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd beta(X.cols());
    for (int j = 0; j < X.cols(); ++j) {
        beta(j) = g(rng);
    }
    Eigen::VectorXd y = X * beta;
    for (int i = 0; i < y.size(); ++i) {
        y(i) += 0.3 * g(rng) + 2.0;
    }
    return y;
}

std::string saved(const PlsModel& m) {
    std::ostringstream out;
    save_model(m, out);
    return out.str();
}

}  // namespace

TEST_CASE("one feature, one component reproduces simple linear regression") {
    Eigen::MatrixXd X(5, 1);
    X << 1, 2, 3, 4, 5;
    Eigen::VectorXd y(5);
    y << 2.1, 3.9, 6.2, 7.8, 10.1;
    const double mx = 3.0;
    const double my = y.mean();
    double sxy = 0.0;
    double sxx = 0.0;
    for (int i = 0; i < 5; ++i) {
        sxy += (X(i, 0) - mx) * (y(i) - my);
        sxx += (X(i, 0) - mx) * (X(i, 0) - mx);
    }
    const double slope = sxy / sxx;
    const auto model = fit_pls(X, y, 1);
    for (double x : {0.0, 2.5, 7.0}) {
        const std::vector<double> v{x};
        CHECK(model.predict(v) == doctest::Approx(my + slope * (x - mx)).epsilon(1e-12));
    }
}

TEST_CASE("full-rank fit with all components equals least squares") {
    const auto X = random_matrix(20, 6, 1);
    const auto y = noisy_response(X, 2);
    const auto model = fit_pls(X, y, 6);
    CHECK(model.n_components() == 6);
    const Eigen::VectorXd fitted = model.predict(X);
    const Eigen::VectorXd ols = oracle::ols_fitted(X, y);
    CHECK((fitted - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("latent scores are mutually orthogonal") {
    const auto X = random_matrix(20, 6, 3);
    const auto y = noisy_response(X, 4);
    const auto model = fit_pls(X, y, 6);
    const Eigen::MatrixXd T = model.transform(X);
    REQUIRE(T.cols() == 6);
    const Eigen::MatrixXd gram = T.transpose() * T;
    for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
            if (a != b) {
                CHECK(std::abs(gram(a, b)) / std::sqrt(gram(a, a) * gram(b, b)) < 1e-8);
            }
        }
    }
    for (int a = 0; a < 6; ++a) {
        CHECK(model.weights().col(a).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("training r squared does not decrease with more components") {
    const auto X = random_matrix(40, 8, 5);
    const auto y = noisy_response(X, 6);
    double previous = -1.0;
    for (int k = 1; k <= 8; ++k) {
        const double r2 = r_squared(fit_pls(X, y, k), X, y);
        CHECK(r2 >= previous - 1e-12);
        CHECK(r2 <= 1.0 + 1e-12);
        previous = r2;
    }
}

TEST_CASE("coefficient prediction agrees with sequential deflation") {
    const auto X = random_matrix(30, 10, 7);
    const auto y = noisy_response(X, 8);
    const auto model = fit_pls(X, y, 4);
    const auto probes = random_matrix(25, 10, 9);
    for (int i = 0; i < probes.rows(); ++i) {
        const Eigen::VectorXd row = probes.row(i).transpose();
        const std::vector<double> xv(row.data(), row.data() + row.size());
        CHECK(model.predict(xv) == doctest::Approx(model.predict_latent(xv)).epsilon(1e-8));
    }
}

TEST_CASE("the feature mean predicts the response mean") {
    const auto X = random_matrix(15, 4, 10);
    const auto y = noisy_response(X, 11);
    const auto model = fit_pls(X, y, 2);
    const Eigen::VectorXd mean = X.colwise().mean().transpose();
    CHECK(model.predict(std::vector<double>(mean.data(), mean.data() + 4)) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("predictions are affine in the response") {
    const auto X = random_matrix(25, 5, 12);
    const auto y = noisy_response(X, 13);
    const Eigen::VectorXd y2 = 3.0 * y.array() - 7.0;
    const auto a = fit_pls(X, y, 3);
    const auto b = fit_pls(X, y2, 3);
    const Eigen::VectorXd pa = a.predict(X);
    const Eigen::VectorXd pb = b.predict(X);
    for (int i = 0; i < pa.size(); ++i) {
        CHECK(pb(i) == doctest::Approx(3.0 * pa(i) - 7.0).epsilon(1e-9));
    }
}

TEST_CASE("fitting is deterministic") {
    const auto X = random_matrix(30, 7, 14);
    const auto y = noisy_response(X, 15);
    CHECK(saved(fit_pls(X, y, 4)) == saved(fit_pls(X, y, 4)));
}

TEST_CASE("predictions may leave the label range") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    Eigen::VectorXd y(4);
    y << 0, 0.33, 0.66, 1.0;
    const auto model = fit_pls(X, y, 1);
    CHECK(model.predict(std::vector<double>{10.0}) > 1.0);
    CHECK(model.predict(std::vector<double>{-10.0}) < 0.0);
}

TEST_CASE("invalid fits are rejected") {
    const auto X = random_matrix(10, 3, 16);
    const auto y = noisy_response(X, 17);
    CHECK_THROWS_AS(fit_pls(X, y, 0), ConfigError);
    CHECK_THROWS_AS(fit_pls(X, y, 4), ConfigError);
    CHECK_THROWS_AS(fit_pls(X, Eigen::VectorXd::Constant(10, 0.4), 2), DegenerateError);
    CHECK_THROWS_AS(fit_pls(X, Eigen::VectorXd::Zero(9), 2), InputError);
    Eigen::MatrixXd bad = X;
    bad(2, 1) = std::nan("");
    CHECK_THROWS_AS(fit_pls(bad, y, 2), InputError);
    const auto model = fit_pls(X, y, 2);
    CHECK_THROWS_AS(model.predict(std::vector<double>{1.0, 2.0}), InputError);
}

TEST_CASE("fitting stops once the response is exhausted") {
    Eigen::MatrixXd X(10, 3);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) {
        X(i, 0) = i;
        X(i, 1) = 4.0;
        X(i, 2) = -1.0;
        y(i) = 0.1 * i;
    }
    const auto model = fit_pls(X, y, 3);
    CHECK(model.n_components() == 1);
    CHECK(model.requested_components() == 3);
    CHECK(model.predict(std::vector<double>{4.0, 4.0, -1.0}) == doctest::Approx(0.4));
    // constant columns carry no weight
    CHECK(model.coefficients()(1) == 0.0);
    CHECK(model.coefficients()(2) == 0.0);
}

TEST_CASE("scaling option standardizes columns") {
    auto X = random_matrix(30, 4, 18);
    X.col(2) *= 1000.0;
    const auto y = noisy_response(X, 19);
    PlsOptions opt;
    opt.scale = true;
    const auto model = fit_pls(X, y, 2, opt);
    CHECK(model.x_scale()(2) > 100.0);
    std::istringstream in(saved(model));
    const auto back = load_model(in);
    CHECK(saved(back) == saved(model));
}

TEST_CASE("saved models reload bit-exactly") {
    const auto X = random_matrix(40, 12, 20);
    const auto y = noisy_response(X, 21);
    const auto model = fit_pls(X, y, 5, {}, DescriptorTag::Gray);
    const auto text = saved(model);
    std::istringstream in(text);
    const auto back = load_model(in);
    CHECK(back.feature_tag() == DescriptorTag::Gray);
    CHECK(back.n_components() == 5);
    CHECK(saved(back) == text);
    const auto probes = random_matrix(100, 12, 22);
    for (int i = 0; i < probes.rows(); ++i) {
        const Eigen::VectorXd row = probes.row(i).transpose();
        const std::vector<double> x(row.data(), row.data() + row.size());
        REQUIRE(back.predict(x) == model.predict(x));
    }
}

TEST_CASE("damaged model files are rejected") {
    const auto X = random_matrix(12, 3, 23);
    const auto text = saved(fit_pls(X, noisy_response(X, 24), 2));
    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_model(truncated), FormatError);

    std::string future = text;
    future.replace(future.find("csbc-pls 1"), 10, "csbc-pls 9");
    std::istringstream in(future);
    try {
        load_model(in);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("unsupported pls model version") != std::string::npos);
    }
    CHECK_THROWS_AS(load_model_file("/nonexistent/m.plsmodel"), IoError);
}

TEST_CASE("constant model predicts its value") {
    const auto model = PlsModel::constant(4, 0.25, DescriptorTag::Glcm);
    CHECK(model.n_components() == 0);
    CHECK(model.predict(std::vector<double>{1, 2, 3, 4}) == 0.25);
    std::istringstream in(saved(model));
    CHECK(load_model(in).predict(std::vector<double>{9, 9, 9, 9}) == 0.25);
}
