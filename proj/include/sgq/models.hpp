#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgq/features.hpp"
#include "sgq/image.hpp"
#include "sgq/nn/model.hpp"

namespace sgq {

// Uniform no-reference scorer interface: higher q = predicted higher oracle
// score. Scorers never see the digital reference.
class QualityScorer {
  public:
    virtual ~QualityScorer() = default;
    const std::string& model_id() const { return model_id_; }
    virtual double score(const Image& frame, const std::string& frame_id) const = 0;

  protected:
    explicit QualityScorer(std::string id) : model_id_(std::move(id)) {}
    std::string model_id_;
};

// q = U(0,1) keyed by hash(seed, frame_id); reproducible, no information.
class RandomScorer final : public QualityScorer {
  public:
    RandomScorer(std::string id, std::uint64_t seed) : QualityScorer(std::move(id)), seed_(seed) {}
    double score(const Image& frame, const std::string& frame_id) const override;
    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

// Weighted average of gradient magnitudes above an Otsu threshold on the
// 256-bin gradient histogram.
class SharpnessScorer final : public QualityScorer {
  public:
    explicit SharpnessScorer(std::string id) : QualityScorer(std::move(id)) {}
    double score(const Image& frame, const std::string& frame_id) const override;
};

struct BlurBreakdown {
    std::size_t u = 0;  // gray pixels
    std::size_t t = 0;  // dark-to-light transitions
    int csp = 0;
    double q_blur = 0.0;  // u / (t * csp); larger = blurrier
};

// Effective edge width against the cell size: q = -q_blur so that sharper is
// higher. t == 0 maps to the lowest representable score.
class BlurScorer final : public QualityScorer {
  public:
    BlurScorer(std::string id, int csp, double band_scale = 0.25)
        : QualityScorer(std::move(id)), csp_(csp), band_scale_(band_scale) {}
    double score(const Image& frame, const std::string& frame_id) const override;
    BlurBreakdown breakdown(const Image& frame) const;
    int csp() const { return csp_; }
    double band_scale() const { return band_scale_; }

  private:
    int csp_;
    double band_scale_;  // gray band half-width as a fraction of the mode gap
};

// Reference model of pristine-sample features.
struct MVGModel {
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov_reg_inv;  // inverse of (Sigma + epsilon I)
    double epsilon = 0.0;         // ridge actually added to the diagonal
    FeatureKind feature_kind = FeatureKind::brisque36;
};

// Sample mean/covariance with relative ridge epsilon_scale * trace(Sigma)/d;
// positive-definiteness checked via Cholesky. Needs at least d+1 rows.
MVGModel fit_mvg(const std::vector<std::vector<double>>& features, FeatureKind kind, double epsilon_scale = 1e-6);

double mahalanobis_distance(const MVGModel& model, std::span<const double> f);

// q = -Mahalanobis distance to the pristine model.
class NiqeScorer final : public QualityScorer {
  public:
    NiqeScorer(std::string id, MVGModel model) : QualityScorer(std::move(id)), model_(std::move(model)) {}
    double score(const Image& frame, const std::string& frame_id) const override;
    const MVGModel& model() const { return model_; }

  private:
    MVGModel model_;
};

struct KernelRidgeModel {
    Eigen::MatrixXd support;  // standardized train features, n x d
    Eigen::VectorXd dual_weights;
    Eigen::VectorXd targets;  // training targets, kept for the load-time residual check
    double rbf_gamma = 1.0;
    double ridge_lambda = 1.0;
    Eigen::VectorXd feat_mean, feat_std;  // train standardization
    FeatureKind feature_kind = FeatureKind::brisque36;
};

struct KrrGridPoint {
    double lambda = 0.0, gamma = 0.0, val_mse = 0.0;
    bool skipped = false;
};

// Closed-form (K + lambda I) w = y solves over the (lambda, gamma) grid;
// the pair with the lowest validation MSE wins. Non-PD grid points are
// skipped with a warning.
KernelRidgeModel fit_kernel_ridge(const std::vector<std::vector<double>>& train_x, const std::vector<double>& train_y,
                                  const std::vector<std::vector<double>>& val_x, const std::vector<double>& val_y,
                                  FeatureKind kind, std::span<const double> lambda_grid = {},
                                  std::span<const double> gamma_grid = {}, std::vector<KrrGridPoint>* grid_report = nullptr);

double krr_predict(const KernelRidgeModel& model, std::span<const double> f);

class KernelRidgeScorer final : public QualityScorer {
  public:
    KernelRidgeScorer(std::string id, KernelRidgeModel model) : QualityScorer(std::move(id)), model_(std::move(model)) {}
    double score(const Image& frame, const std::string& frame_id) const override;
    const KernelRidgeModel& model() const { return model_; }

  private:
    KernelRidgeModel model_;
};

// End-to-end CNN scorer; frames are area-resampled to the model input and
// scaled to [0,1].
class CnnScorer final : public QualityScorer {
  public:
    CnnScorer(std::string id, nn::Cnn3x32 model) : QualityScorer(std::move(id)), model_(std::move(model)) {}
    double score(const Image& frame, const std::string& frame_id) const override;
    const nn::Cnn3x32& model() const { return model_; }

  private:
    nn::Cnn3x32 model_;
};

// --- artifact files: one JSON document per model -------------------------

void save_random_artifact(const std::filesystem::path& path, const std::string& id, std::uint64_t seed,
                          const std::string& config_hash);
void save_sharpness_artifact(const std::filesystem::path& path, const std::string& id, const std::string& config_hash);
void save_blur_artifact(const std::filesystem::path& path, const std::string& id, int csp, double band_scale,
                        const std::string& config_hash);
void save_mvg_artifact(const std::filesystem::path& path, const std::string& id, const MVGModel& model, double cutoff,
                       const std::string& config_hash);
void save_krr_artifact(const std::filesystem::path& path, const std::string& id, const KernelRidgeModel& model,
                       const std::string& config_hash);
// the CNN artifact references its SGNN checkpoint by relative path
void save_cnn_artifact(const std::filesystem::path& path, const std::string& id, const std::string& checkpoint_rel,
                       const std::string& config_hash);

// Reconstructs a scorer from its artifact; validates stored invariants
// (SPD inverse for MVG, dual-weight residual for kernel ridge).
std::unique_ptr<QualityScorer> load_scorer(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace sgq
