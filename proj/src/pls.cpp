#include "csbc/pls.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "csbc/error.hpp"
#include "csbc/text.hpp"

namespace csbc {

namespace {

constexpr const char* kMagic = "csbc-pls";
constexpr const char* kVersion = "1";

// Relative floor on ||X'y|| below which no further component is extracted.
constexpr double kCovarianceTol = 1e-12;

bool all_finite(const Eigen::MatrixXd& m) {
    return m.allFinite();
}

}  // namespace

PlsModel::PlsModel(Eigen::VectorXd x_mean, Eigen::VectorXd x_scale, double y_mean, Eigen::MatrixXd weights,
                   Eigen::MatrixXd loadings, Eigen::VectorXd y_loadings, DescriptorTag feature_tag,
                   int requested_components)
    : x_mean_(std::move(x_mean)),
      x_scale_(std::move(x_scale)),
      y_mean_(y_mean),
      weights_(std::move(weights)),
      loadings_(std::move(loadings)),
      y_loadings_(std::move(y_loadings)),
      feature_tag_(feature_tag),
      requested_components_(requested_components) {
    const auto d = x_mean_.size();
    const auto k = weights_.cols();
    if (x_scale_.size() != d || weights_.rows() != d || loadings_.rows() != d || loadings_.cols() != k ||
        y_loadings_.size() != k) {
        throw InputError("pls model matrices have inconsistent shapes");
    }
    if (!all_finite(x_mean_) || !all_finite(x_scale_) || !std::isfinite(y_mean_) || !all_finite(weights_) ||
        !all_finite(loadings_) || !all_finite(y_loadings_)) {
        throw InputError("pls model holds non-finite values");
    }
    if ((x_scale_.array() <= 0.0).any()) {
        throw InputError("pls feature scales must be positive");
    }
    if (k == 0) {
        coefficients_ = Eigen::VectorXd::Zero(d);
    } else {
        const Eigen::MatrixXd ptw = loadings_.transpose() * weights_;
        coefficients_ = weights_ * ptw.partialPivLu().solve(y_loadings_);
    }
}

PlsModel PlsModel::constant(std::size_t dims, double value, DescriptorTag feature_tag) {
    const auto d = static_cast<Eigen::Index>(dims);
    return PlsModel(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), value, Eigen::MatrixXd(d, 0),
                    Eigen::MatrixXd(d, 0), Eigen::VectorXd(0), feature_tag, 0);
}

Eigen::VectorXd PlsModel::standardize(std::span<const double> x) const {
    if (x.size() != dims()) {
        throw InputError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                         std::to_string(dims()));
    }
    Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    if (!v.allFinite()) {
        throw InputError("feature vector holds non-finite values");
    }
    return ((v - x_mean_).array() / x_scale_.array()).matrix();
}

double PlsModel::predict(std::span<const double> x) const {
    return y_mean_ + standardize(x).dot(coefficients_);
}

Eigen::VectorXd PlsModel::predict(const Eigen::MatrixXd& rows) const {
    Eigen::VectorXd out(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Eigen::VectorXd row = rows.row(i).transpose();
        out(i) = predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
    return out;
}

double PlsModel::predict_latent(std::span<const double> x) const {
    Eigen::VectorXd residual = standardize(x);
    double y = y_mean_;
    for (int a = 0; a < n_components(); ++a) {
        const double t = residual.dot(weights_.col(a));
        y += y_loadings_(a) * t;
        residual -= t * loadings_.col(a);
    }
    return y;
}

Eigen::MatrixXd PlsModel::transform(const Eigen::MatrixXd& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != dims()) {
        throw InputError("row width does not match the model");
    }
    Eigen::MatrixXd residual = (rows.rowwise() - x_mean_.transpose()).array().rowwise() /
                               x_scale_.transpose().array();
    Eigen::MatrixXd scores(rows.rows(), n_components());
    for (int a = 0; a < n_components(); ++a) {
        scores.col(a) = residual * weights_.col(a);
        residual -= scores.col(a) * loadings_.col(a).transpose();
    }
    return scores;
}

PlsModel fit_pls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, PlsOptions options,
                 DescriptorTag feature_tag) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (y.size() != n) {
        throw InputError("X has " + std::to_string(n) + " rows but y has " + std::to_string(y.size()) + " entries");
    }
    if (n < 2 || d < 1) {
        throw InputError("pls needs at least two samples and one feature");
    }
    if (!X.allFinite() || !y.allFinite()) {
        throw InputError("pls training data holds NaN or infinite values");
    }
    if (k < 1 || k > std::min<Eigen::Index>(n - 1, d)) {
        throw ConfigError("component count " + std::to_string(k) + " outside [1, " +
                          std::to_string(std::min<Eigen::Index>(n - 1, d)) + "]");
    }
    if (y.maxCoeff() == y.minCoeff()) {
        throw DegenerateError("pls target is constant");
    }

    const Eigen::VectorXd x_mean = X.colwise().mean().transpose();
    Eigen::MatrixXd E = X.rowwise() - x_mean.transpose();
    Eigen::VectorXd x_scale = Eigen::VectorXd::Ones(d);
    if (options.scale) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double sd = std::sqrt(E.col(j).squaredNorm() / static_cast<double>(n - 1));
            if (sd > 0.0) {
                x_scale(j) = sd;
                E.col(j) /= sd;
            }
        }
    }
    const double y_mean = y.mean();
    Eigen::VectorXd f = (y.array() - y_mean).matrix();

    Eigen::MatrixXd W(d, k);
    Eigen::MatrixXd P(d, k);
    Eigen::VectorXd q(k);
    int extracted = 0;
    double first_norm = 0.0;
    for (int a = 0; a < k; ++a) {
        Eigen::VectorXd w = E.transpose() * f;
        const double norm = w.norm();
        if (a == 0) {
            first_norm = norm;
        }
        if (norm < kCovarianceTol * std::max(1.0, first_norm)) {
            break;
        }
        w /= norm;
        const Eigen::VectorXd t = E * w;
        const double tt = t.squaredNorm();
        if (!(tt > 0.0)) {
            break;
        }
        const Eigen::VectorXd p = E.transpose() * t / tt;
        const double qa = f.dot(t) / tt;
        E.noalias() -= t * p.transpose();
        f -= qa * t;
        W.col(a) = w;
        P.col(a) = p;
        q(a) = qa;
        ++extracted;
    }
    if (extracted == 0) {
        throw DegenerateError("features carry no covariance with the target");
    }
    return PlsModel(x_mean, x_scale, y_mean, W.leftCols(extracted), P.leftCols(extracted), q.head(extracted),
                    feature_tag, k);
}

double r_squared(const PlsModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd pred = model.predict(X);
    const double ss_res = (y - pred).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

namespace {

void write_row(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
    out << name;
    for (double x : v) {
        out << ' ' << text::format_double(x);
    }
    out << '\n';
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c == 0 ? "" : " ") << text::format_double(m(r, c));
        }
        out << '\n';
    }
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string tok;
        if (!(in_ >> tok)) {
            throw FormatError(std::string("pls model truncated while reading ") + what);
        }
        return tok;
    }

    void expect(const char* keyword) {
        auto tok = next(keyword);
        if (tok != keyword) {
            throw FormatError(std::string("pls model: expected '") + keyword + "', found '" + tok + "'");
        }
    }

    double number(const char* what) {
        auto tok = next(what);
        auto v = text::parse_double(tok);
        if (!v) {
            throw FormatError(std::string("pls model: invalid ") + what + " '" + tok + "'");
        }
        return *v;
    }

    long long integer(const char* what) {
        auto tok = next(what);
        auto v = text::parse_int(tok);
        if (!v || *v < 0) {
            throw FormatError(std::string("pls model: invalid ") + what + " '" + tok + "'");
        }
        return *v;
    }

    Eigen::VectorXd row(const char* name, Eigen::Index size) {
        expect(name);
        Eigen::VectorXd v(size);
        for (Eigen::Index i = 0; i < size; ++i) {
            v(i) = number(name);
        }
        return v;
    }

    Eigen::MatrixXd matrix(const char* name, Eigen::Index rows, Eigen::Index cols) {
        expect(name);
        if (integer(name) != rows || integer(name) != cols) {
            throw FormatError(std::string("pls model: ") + name + " has unexpected shape");
        }
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                m(r, c) = number(name);
            }
        }
        return m;
    }

private:
    std::istream& in_;
};

}  // namespace

void save_model(const PlsModel& model, std::ostream& out) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "feature_tag " << to_string(model.feature_tag()) << '\n';
    out << "dims " << model.dims() << '\n';
    out << "components " << model.n_components() << ' ' << model.requested_components() << '\n';
    out << "y_mean " << text::format_double(model.y_mean()) << '\n';
    write_row(out, "x_mean", model.x_mean());
    write_row(out, "x_scale", model.x_scale());
    write_matrix(out, "W", model.weights());
    write_matrix(out, "P", model.loadings());
    write_row(out, "q", model.y_loadings());
    write_row(out, "B", model.coefficients());
    out << "end\n";
    if (!out) {
        throw IoError("failed to write pls model");
    }
}

PlsModel load_model(std::istream& in) {
    TokenReader rd(in);
    if (rd.next("header") != kMagic) {
        throw FormatError("not a pls model file");
    }
    auto version = rd.next("version");
    if (version != kVersion) {
        throw FormatError("unsupported pls model version '" + version + "'");
    }
    rd.expect("feature_tag");
    const auto tag_name = rd.next("feature_tag");
    DescriptorTag tag;
    try {
        tag = parse_descriptor_tag(tag_name);
    } catch (const ConfigError&) {
        throw FormatError("pls model: unknown feature tag '" + tag_name + "'");
    }
    rd.expect("dims");
    const auto d = static_cast<Eigen::Index>(rd.integer("dims"));
    rd.expect("components");
    const auto k = static_cast<Eigen::Index>(rd.integer("components"));
    const auto requested = static_cast<int>(rd.integer("components"));
    rd.expect("y_mean");
    const double y_mean = rd.number("y_mean");
    auto x_mean = rd.row("x_mean", d);
    auto x_scale = rd.row("x_scale", d);
    auto W = rd.matrix("W", d, k);
    auto P = rd.matrix("P", d, k);
    auto q = rd.row("q", k);
    auto B = rd.row("B", d);
    rd.expect("end");
    try {
        PlsModel model(std::move(x_mean), std::move(x_scale), y_mean, std::move(W), std::move(P), std::move(q),
                       tag, requested);
        if (!B.allFinite()) {
            throw InputError("regression vector holds non-finite values");
        }
        // The stored B is authoritative so predictions survive a round trip bit for bit.
        model.coefficients_ = std::move(B);
        return model;
    } catch (const InputError& e) {
        throw FormatError(std::string("pls model: ") + e.what());
    }
}

void save_model_file(const PlsModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write model '" + path.string() + "'");
    }
    save_model(model, out);
}

PlsModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model '" + path.string() + "'");
    }
    try {
        return load_model(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace csbc
