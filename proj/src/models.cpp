#include "sgq/models.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"
#include "sgq/rng.hpp"

namespace sgq {

using nlohmann::json;

// -------------------------------------------------------------- random ----

double RandomScorer::score(const Image&, const std::string& frame_id) const {
    return hash_uniform(seed_, frame_id);
}

// ----------------------------------------------------------- sharpness ----

double SharpnessScorer::score(const Image& frame, const std::string&) const {
    ImageF mag = gradient_magnitude(to_float(frame));
    double gmax = 0.0;
    for (double v : mag.pixels) gmax = std::max(gmax, v);
    if (gmax <= 0.0) return 0.0;

    std::array<std::uint64_t, 256> hist{};
    for (double v : mag.pixels) {
        int bin = std::min(255, static_cast<int>(v / gmax * 256.0));
        ++hist[static_cast<std::size_t>(bin)];
    }
    int theta;
    try {
        theta = otsu_threshold(hist);
    } catch (const NumericError&) {
        return 0.0;  // single-level histogram
    }
    double num = 0.0, den = 0.0;
    for (int b = theta + 1; b < 256; ++b) {
        double center = (b + 0.5) * gmax / 256.0;
        double count = static_cast<double>(hist[static_cast<std::size_t>(b)]);
        num += center * count;
        den += count;
    }
    return den > 0.0 ? num / den : 0.0;
}

// ---------------------------------------------------------------- blur ----

BlurBreakdown BlurScorer::breakdown(const Image& frame) const {
    BlurBreakdown b;
    b.csp = csp_;

    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t v : frame.pixels) ++hist[v];
    int theta;
    try {
        theta = otsu_threshold(hist);
    } catch (const NumericError&) {
        return b;  // constant image: no anchors, t = 0 sentinel
    }
    int black_mode = 0, white_mode = 255;
    std::uint64_t best = 0;
    for (int v = 0; v <= theta; ++v)
        if (hist[static_cast<std::size_t>(v)] > best) { best = hist[static_cast<std::size_t>(v)]; black_mode = v; }
    best = 0;
    for (int v = theta + 1; v < 256; ++v)
        if (hist[static_cast<std::size_t>(v)] > best) { best = hist[static_cast<std::size_t>(v)]; white_mode = v; }

    double w = band_scale_ * (white_mode - black_mode);
    double lo = theta - w, hi = theta + w;

    for (std::uint8_t v : frame.pixels) b.u += v >= lo && v <= hi;

    // dark-to-light crossings within csp pixels, rows then columns
    auto scan = [&](auto value_at, int count, int length) {
        for (int line = 0; line < count; ++line) {
            int last_anchor = -1;  // -1 none, 0 dark, 1 light
            int last_idx = 0;
            for (int i = 0; i < length; ++i) {
                double v = value_at(line, i);
                int cls = v < lo ? 0 : v > hi ? 1 : -1;
                if (cls < 0) continue;
                if (cls == 1 && last_anchor == 0 && i - last_idx <= csp_) ++b.t;
                last_anchor = cls;
                last_idx = i;
            }
        }
    };
    scan([&](int y, int x) { return static_cast<double>(frame.at(x, y)); }, frame.height, frame.width);
    scan([&](int x, int y) { return static_cast<double>(frame.at(x, y)); }, frame.width, frame.height);

    if (b.t > 0) b.q_blur = static_cast<double>(b.u) / (static_cast<double>(b.t) * csp_);
    return b;
}

double BlurScorer::score(const Image& frame, const std::string&) const {
    BlurBreakdown b = breakdown(frame);
    if (b.t == 0) return std::numeric_limits<double>::lowest();
    return -b.q_blur;
}

// ----------------------------------------------------------------- MVG ----

MVGModel fit_mvg(const std::vector<std::vector<double>>& features, FeatureKind kind, double epsilon_scale) {
    const int d = feature_dim(kind);
    const auto n = static_cast<Eigen::Index>(features.size());
    if (n < d + 1)
        throw DataError("fit_mvg: needs at least " + std::to_string(d + 1) + " qualifying frames, got " +
                        std::to_string(n) + "; lower the score cutoff or enlarge the corpus");
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<int>(features[static_cast<std::size_t>(i)].size()) != d)
            throw std::invalid_argument("fit_mvg: feature dimension mismatch");
        for (int j = 0; j < d; ++j) X(i, j) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    MVGModel model;
    model.feature_kind = kind;
    model.mu = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - model.mu.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    model.epsilon = epsilon_scale * cov.trace() / d;
    Eigen::MatrixXd reg = cov + model.epsilon * Eigen::MatrixXd::Identity(d, d);

    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success)
        throw NumericError("fit_mvg: regularized covariance is not positive definite; increase epsilon");
    model.cov_reg_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    return model;
}

double mahalanobis_distance(const MVGModel& model, std::span<const double> f) {
    if (static_cast<int>(f.size()) != model.mu.size()) throw std::invalid_argument("mahalanobis: dimension mismatch");
    Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
    Eigen::VectorXd d = x - model.mu;
    double sq = d.dot(model.cov_reg_inv * d);
    return std::sqrt(std::max(0.0, sq));
}

double NiqeScorer::score(const Image& frame, const std::string& frame_id) const {
    FeatureVector f = model_.feature_kind == FeatureKind::brisque36 ? brisque_features(frame, frame_id)
                                                                    : lbp_features(frame);
    return -mahalanobis_distance(model_, f.values);
}

// -------------------------------------------------------- kernel ridge ----

namespace {

constexpr double kDefaultLambdas[] = {1e-3, 1e-2, 1e-1, 1.0};
constexpr double kDefaultGammas[] = {0.01, 0.1, 1.0, 10.0};

Eigen::MatrixXd standardized(const std::vector<std::vector<double>>& rows, const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& std, int d) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), d);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (static_cast<int>(r.size()) != d) throw std::invalid_argument("feature dimension mismatch");
        for (int j = 0; j < d; ++j) X(i, j) = (r[static_cast<std::size_t>(j)] - mean(j)) / std(j);
    }
    return X;
}

Eigen::MatrixXd pair_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::VectorXd a2 = A.rowwise().squaredNorm();
    Eigen::VectorXd b2 = B.rowwise().squaredNorm();
    Eigen::MatrixXd D = -2.0 * A * B.transpose();
    D.colwise() += a2;
    D.rowwise() += b2.transpose();
    return D.cwiseMax(0.0);
}

}  // namespace

KernelRidgeModel fit_kernel_ridge(const std::vector<std::vector<double>>& train_x, const std::vector<double>& train_y,
                                  const std::vector<std::vector<double>>& val_x, const std::vector<double>& val_y,
                                  FeatureKind kind, std::span<const double> lambda_grid, std::span<const double> gamma_grid,
                                  std::vector<KrrGridPoint>* grid_report) {
    if (train_x.empty() || train_x.size() != train_y.size() || val_x.size() != val_y.size() || val_x.empty())
        throw std::invalid_argument("fit_kernel_ridge: bad train/val shapes");
    if (lambda_grid.empty()) lambda_grid = kDefaultLambdas;
    if (gamma_grid.empty()) gamma_grid = kDefaultGammas;

    const int d = static_cast<int>(train_x.front().size());
    const auto n = static_cast<Eigen::Index>(train_x.size());

    KernelRidgeModel model;
    model.feature_kind = kind;
    model.feat_mean = Eigen::VectorXd::Zero(d);
    model.feat_std = Eigen::VectorXd::Ones(d);
    for (const auto& r : train_x)
        for (int j = 0; j < d; ++j) model.feat_mean(j) += r[static_cast<std::size_t>(j)];
    model.feat_mean /= static_cast<double>(n);
    for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (const auto& r : train_x) {
            double c = r[static_cast<std::size_t>(j)] - model.feat_mean(j);
            acc += c * c;
        }
        double s = std::sqrt(acc / static_cast<double>(n));
        model.feat_std(j) = s > 1e-12 ? s : 1.0;
    }

    Eigen::MatrixXd X = standardized(train_x, model.feat_mean, model.feat_std, d);
    Eigen::MatrixXd Xv = standardized(val_x, model.feat_mean, model.feat_std, d);
    Eigen::Map<const Eigen::VectorXd> y(train_y.data(), n);
    Eigen::Map<const Eigen::VectorXd> yv(val_y.data(), static_cast<Eigen::Index>(val_y.size()));

    Eigen::MatrixXd D2 = pair_sqdist(X, X);
    Eigen::MatrixXd D2v = pair_sqdist(Xv, X);

    double best_mse = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double gamma : gamma_grid) {
        Eigen::MatrixXd K = (-gamma * D2).array().exp();
        Eigen::MatrixXd Kv = (-gamma * D2v).array().exp();
        for (double lambda : lambda_grid) {
            Eigen::MatrixXd A = K + lambda * Eigen::MatrixXd::Identity(n, n);
            Eigen::LLT<Eigen::MatrixXd> llt(A);
            if (llt.info() != Eigen::Success) {
                std::cerr << "fit_kernel_ridge: skipping non-PD grid point (lambda=" << lambda << ", gamma=" << gamma
                          << ")\n";
                if (grid_report) grid_report->push_back({lambda, gamma, 0.0, true});
                continue;
            }
            Eigen::VectorXd w = llt.solve(y);
            double mse = (Kv * w - yv).squaredNorm() / static_cast<double>(val_y.size());
            if (grid_report) grid_report->push_back({lambda, gamma, mse, false});
            if (mse < best_mse) {
                best_mse = mse;
                model.rbf_gamma = gamma;
                model.ridge_lambda = lambda;
                model.dual_weights = w;
                found = true;
            }
        }
    }
    if (!found) throw NumericError("fit_kernel_ridge: every grid point failed the Cholesky factorization");
    model.support = X;
    model.targets = y;
    return model;
}

double krr_predict(const KernelRidgeModel& model, std::span<const double> f) {
    if (static_cast<Eigen::Index>(f.size()) != model.support.cols())
        throw std::invalid_argument("krr_predict: dimension mismatch");
    Eigen::VectorXd x(model.support.cols());
    for (Eigen::Index j = 0; j < x.size(); ++j)
        x(j) = (f[static_cast<std::size_t>(j)] - model.feat_mean(j)) / model.feat_std(j);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < model.support.rows(); ++i) {
        double d2 = (model.support.row(i).transpose() - x).squaredNorm();
        acc += model.dual_weights(i) * std::exp(-model.rbf_gamma * d2);
    }
    return acc;
}

double KernelRidgeScorer::score(const Image& frame, const std::string& frame_id) const {
    FeatureVector f = model_.feature_kind == FeatureKind::brisque36 ? brisque_features(frame, frame_id)
                                                                    : lbp_features(frame);
    return krr_predict(model_, f.values);
}

// ----------------------------------------------------------------- CNN ----

double CnnScorer::score(const Image& frame, const std::string&) const {
    int s = model_.input_size();
    ImageF small = resample_area(to_float(frame), s, s);
    std::vector<nn::real> x(small.pixels.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<nn::real>(small.pixels[i] / 255.0);
    nn::Cnn3x32::Cache cache;
    model_.forward(x.data(), 1, cache);
    return static_cast<double>(cache.pred[0]);
}

// ----------------------------------------------------------- artifacts ----

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    auto rows = static_cast<Eigen::Index>(j.size());
    auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

void write_artifact(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write model artifact: " + path.string());
    f << j.dump(2) << "\n";
}

}  // namespace

void save_random_artifact(const std::filesystem::path& path, const std::string& id, std::uint64_t seed,
                          const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id}, {"kind", "random"}, {"hyperparameters", {{"seed", seed}}},
                              {"config_hash", config_hash}});
}

void save_sharpness_artifact(const std::filesystem::path& path, const std::string& id, const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id}, {"kind", "sharpness"}, {"hyperparameters", json::object()},
                              {"config_hash", config_hash}});
}

void save_blur_artifact(const std::filesystem::path& path, const std::string& id, int csp, double band_scale,
                        const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id},
                              {"kind", "blur"},
                              {"hyperparameters", {{"csp", csp}, {"band_scale", band_scale}}},
                              {"config_hash", config_hash}});
}

void save_mvg_artifact(const std::filesystem::path& path, const std::string& id, const MVGModel& model, double cutoff,
                       const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id},
                              {"kind", "niqe"},
                              {"feature_kind", to_string(model.feature_kind)},
                              {"hyperparameters", {{"cutoff", cutoff}, {"epsilon", model.epsilon}}},
                              {"arrays", {{"mu", vector_to_json(model.mu)}, {"cov_reg_inv", matrix_to_json(model.cov_reg_inv)}}},
                              {"config_hash", config_hash}});
}

void save_krr_artifact(const std::filesystem::path& path, const std::string& id, const KernelRidgeModel& model,
                       const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id},
                              {"kind", "kernel_ridge"},
                              {"feature_kind", to_string(model.feature_kind)},
                              {"hyperparameters", {{"rbf_gamma", model.rbf_gamma}, {"ridge_lambda", model.ridge_lambda}}},
                              {"standardization", {{"mean", vector_to_json(model.feat_mean)}, {"std", vector_to_json(model.feat_std)}}},
                              {"arrays",
                               {{"support", matrix_to_json(model.support)},
                                {"dual_weights", vector_to_json(model.dual_weights)},
                                {"targets", vector_to_json(model.targets)}}},
                              {"config_hash", config_hash}});
}

void save_cnn_artifact(const std::filesystem::path& path, const std::string& id, const std::string& checkpoint_rel,
                       const std::string& config_hash) {
    write_artifact(path, json{{"model_id", id},
                              {"kind", "cnn3x32"},
                              {"hyperparameters", {{"checkpoint", checkpoint_rel}}},
                              {"config_hash", config_hash}});
}

std::unique_ptr<QualityScorer> load_scorer(const std::filesystem::path& path, std::string* config_hash) {
    std::ifstream f(path);
    if (!f) throw DataError("missing model artifact: " + path.string());
    json j = json::parse(f);
    std::string kind = j.at("kind").get<std::string>();
    std::string id = j.at("model_id").get<std::string>();
    if (config_hash) *config_hash = j.value("config_hash", "");

    if (kind == "random") return std::make_unique<RandomScorer>(id, j.at("hyperparameters").at("seed").get<std::uint64_t>());
    if (kind == "sharpness") return std::make_unique<SharpnessScorer>(id);
    if (kind == "blur")
        return std::make_unique<BlurScorer>(id, j.at("hyperparameters").at("csp").get<int>(),
                                            j.at("hyperparameters").at("band_scale").get<double>());
    if (kind == "niqe") {
        MVGModel m;
        m.feature_kind = feature_kind_from_string(j.at("feature_kind").get<std::string>());
        m.epsilon = j.at("hyperparameters").at("epsilon").get<double>();
        m.mu = vector_from_json(j.at("arrays").at("mu"));
        m.cov_reg_inv = matrix_from_json(j.at("arrays").at("cov_reg_inv"));
        if (m.cov_reg_inv.rows() != m.mu.size() || m.cov_reg_inv.cols() != m.mu.size())
            throw DataError("niqe artifact: inconsistent shapes in " + path.string());
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m.cov_reg_inv + m.cov_reg_inv.transpose()));
        if (llt.info() != Eigen::Success)
            throw DataError("niqe artifact: stored inverse covariance is not positive definite: " + path.string());
        return std::make_unique<NiqeScorer>(id, std::move(m));
    }
    if (kind == "kernel_ridge") {
        KernelRidgeModel m;
        m.feature_kind = feature_kind_from_string(j.at("feature_kind").get<std::string>());
        m.rbf_gamma = j.at("hyperparameters").at("rbf_gamma").get<double>();
        m.ridge_lambda = j.at("hyperparameters").at("ridge_lambda").get<double>();
        m.feat_mean = vector_from_json(j.at("standardization").at("mean"));
        m.feat_std = vector_from_json(j.at("standardization").at("std"));
        m.support = matrix_from_json(j.at("arrays").at("support"));
        m.dual_weights = vector_from_json(j.at("arrays").at("dual_weights"));
        m.targets = vector_from_json(j.at("arrays").at("targets"));
        // invariant: dual weights solve (K + lambda I) w = y
        Eigen::MatrixXd K = (-m.rbf_gamma * pair_sqdist(m.support, m.support)).array().exp();
        Eigen::VectorXd resid =
            (K + m.ridge_lambda * Eigen::MatrixXd::Identity(K.rows(), K.cols())) * m.dual_weights - m.targets;
        if (resid.norm() > 1e-6 * (m.targets.norm() + 1.0))
            throw DataError("kernel_ridge artifact: dual-weight residual check failed: " + path.string());
        return std::make_unique<KernelRidgeScorer>(id, std::move(m));
    }
    if (kind == "cnn3x32") {
        std::filesystem::path ckpt = path.parent_path() / j.at("hyperparameters").at("checkpoint").get<std::string>();
        return std::make_unique<CnnScorer>(id, nn::load_checkpoint(ckpt));
    }
    throw DataError("unknown model kind '" + kind + "' in " + path.string());
}

}  // namespace sgq
