#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsaflow/ica.hpp"
#include "dsaflow/imageio.hpp"
#include "dsaflow/phantom.hpp"
#include "dsaflow/recompose.hpp"
#include "dsaflow/segment.hpp"

namespace dsaflow {

/// Pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message)
        : std::runtime_error(message.rfind(stage + ":", 0) == 0 ? message
                                                                : stage + ": " + message),
          stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Frame-domain preparation applied before analysis; recorded in the model
/// dump so a later recompose stage can replay it exactly.
struct PreprocessRecord {
    std::optional<std::pair<int, int>> trim;
    std::optional<RoiRect> roi;
    bool inverted = false;
};

enum class SegInput { MaxProjection, MeanFrame, PerFrameUnion };

SegInput seg_input_from_string(const std::string& s);
std::string to_string(SegInput s);

struct RunOptions {
    std::filesystem::path input;
    std::filesystem::path output;
    std::optional<std::filesystem::path> sidecar;
    std::optional<std::filesystem::path> external_mask;
    std::optional<std::filesystem::path> truth;  // truth.json for metrics

    IcaConfig ica;
    std::optional<std::pair<int, int>> trim;
    std::optional<RoiRect> roi;  // overrides any sidecar roi
    bool apply_sidecar_roi = true;

    std::vector<double> scales{1.0, 2.0, 4.0};
    BinarizeMethod threshold = BinarizeMethod::otsu();
    SegInput seg_input = SegInput::MaxProjection;
    VisMode mode = VisMode::Progressive;
    double tau = 0.2;
    double blend = 0.6;
};

/// Everything a full run produces, before anything is written to disk.
struct RunArtifacts {
    ImageSeries display;   // prepared series, original polarity
    ImageSeries analysis;  // signal-positive series used for the math
    UnmixingModel model;
    SourceSet sources;
    PreprocessRecord preprocess;
    IcaConfig ica_config;  // echoed into the model dump
    BinarizeResult vessel;  // series-level vessel mask
    MaskSource vessel_source = MaskSource::Vesselness;
    std::vector<BinarizeResult> source_masks;
    PhaseAssignment assignment;
    LabelImage labels;
    Visualization visualization;
    nlohmann::json report;
    std::vector<std::pair<std::string, double>> timings_ms;
    int exit_code = 0;
};

/// Full chain: load, prepare, whiten, unmix, segment, recompose, report.
/// Throws StageError; on success exit_code is 0, or 2 when the fixed-point
/// iteration did not converge (outputs still produced).
RunArtifacts run_pipeline(const RunOptions& options);

/// Writes frames/, per-phase masks, model.json, report.json, timings.json.
void write_run_outputs(const RunArtifacts& artifacts, const std::filesystem::path& out_dir);

/// Decompose-only entry: stops after the unmixing stage and reports.
RunArtifacts run_decompose(const RunOptions& options);
void write_decompose_outputs(const RunArtifacts& artifacts, const std::filesystem::path& out_dir);

/// Recompose from a stored model: replays the recorded preparation on the
/// input series, rebuilds the sources deterministically from W and K, then
/// runs segmentation + composition with the given options.
RunArtifacts run_recompose(const RunOptions& options, const std::filesystem::path& model_path);

/// Model dump round trip.
nlohmann::json model_to_json(const UnmixingModel& model, const SourceSet& sources,
                             const PreprocessRecord& preprocess, const IcaConfig& config,
                             int frame_rows, int frame_cols, double fps);
struct StoredModel {
    UnmixingModel model;
    PreprocessRecord preprocess;
    IcaConfig config;
    int frame_rows = 0;
    int frame_cols = 0;
    double fps = 3.0;
};
StoredModel model_from_json(const nlohmann::json& j);

/// Phantom output: series/ directory with sidecar, masks/, truth.json.
void write_phantom(const PhantomSpec& spec, const std::filesystem::path& out_dir);

struct EvalResult {
    double amari = 0.0;
    MaskMetrics mask;
    bool order_correct = false;
    nlohmann::json to_json() const;
};

/// Compares a run directory (report.json, model.json, vessel_mask.png)
/// against a phantom truth.json.
EvalResult evaluate_run(const std::filesystem::path& run_dir,
                        const std::filesystem::path& truth_json);

/// Metrics against in-memory truth; used by run_pipeline when truth is given.
EvalResult evaluate_against_truth(const Eigen::MatrixXd& est_mixing,
                                  const std::vector<Phase>& est_labels,
                                  const VesselMask& est_mask, const Eigen::MatrixXd& true_mixing,
                                  const std::vector<Phase>& true_labels,
                                  const VesselMask& true_mask);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace dsaflow
