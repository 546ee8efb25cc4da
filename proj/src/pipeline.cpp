#include "dsaflow/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "dsaflow/preprocess.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dsaflow {

SegInput seg_input_from_string(const std::string& s) {
    if (s == "maxproj") return SegInput::MaxProjection;
    if (s == "mean") return SegInput::MeanFrame;
    if (s == "per-frame") return SegInput::PerFrameUnion;
    throw std::invalid_argument("unknown seg input '" + s + "' (maxproj|mean|per-frame)");
}

std::string to_string(SegInput s) {
    switch (s) {
        case SegInput::MaxProjection: return "maxproj";
        case SegInput::MeanFrame: return "mean";
        case SegInput::PerFrameUnion: return "per-frame";
    }
    return "maxproj";
}

namespace {

Phase phase_from_string(const std::string& s) {
    if (s == "arterial") return Phase::Arterial;
    if (s == "nidal") return Phase::Nidal;
    if (s == "venous") return Phase::Venous;
    if (s == "unassigned") return Phase::Unassigned;
    throw std::invalid_argument("unknown phase '" + s + "'");
}

class StageClock {
public:
    explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

    template <typename F>
    auto run(const std::string& name, F&& fn) -> decltype(fn()) {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                record(name, start);
            } else {
                auto result = fn();
                record(name, start);
                return result;
            }
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double, std::milli> elapsed =
            std::chrono::steady_clock::now() - start;
        sink_.emplace_back(name, elapsed.count());
    }
    std::vector<std::pair<std::string, double>>& sink_;
};

json roi_to_json(const std::optional<RoiRect>& roi) {
    if (!roi) return nullptr;
    return json::array({roi->x0, roi->y0, roi->width, roi->height});
}

std::optional<RoiRect> roi_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return RoiRect{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

Image minmax_rescaled(const Image& img) {
    const double lo = *std::min_element(img.data.begin(), img.data.end());
    const double hi = *std::max_element(img.data.begin(), img.data.end());
    Image out(img.rows, img.cols);
    if (hi > lo)
        for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = (img.data[i] - lo) / (hi - lo);
    return out;
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j;
    in >> j;
    return j;
}

json config_to_json(const RunOptions& options) {
    json cfg;
    cfg["components"] = options.ica.components;
    cfg["contrast"] = to_string(options.ica.contrast);
    cfg["tol"] = options.ica.tol;
    cfg["max_iter"] = options.ica.max_iter;
    cfg["seed"] = options.ica.seed;
    cfg["scheme"] = options.ica.scheme == IcaScheme::Symmetric ? "symmetric" : "deflation";
    cfg["restarts"] = options.ica.restarts;
    cfg["scales"] = options.scales;
    cfg["threshold"] = to_string(options.threshold);
    cfg["seg_input"] = to_string(options.seg_input);
    cfg["mode"] = options.mode == VisMode::Static ? "static" : "progressive";
    cfg["tau"] = options.tau;
    cfg["blend"] = options.blend;
    cfg["trim"] = options.trim ? json::array({options.trim->first, options.trim->second})
                               : json(nullptr);
    cfg["roi"] = roi_to_json(options.roi);
    cfg["external_mask"] =
        options.external_mask ? json(options.external_mask->string()) : json(nullptr);
    return cfg;
}

// Stages shared by run and recompose: frame preparation, segmentation,
// phase composition, reporting.

struct Prepared {
    ImageSeries display;
    ImageSeries analysis;
    PreprocessRecord record;
};

Prepared prepare_series(const RunOptions& options, StageClock& clock) {
    Prepared prep;
    prep.display = clock.run("load", [&] {
        return load_series(options.input, options.sidecar);
    });
    if (options.trim) {
        prep.display = clock.run("trim", [&] {
            return trim(prep.display, options.trim->first, options.trim->second);
        });
        prep.record.trim = options.trim;
    }
    std::optional<RoiRect> roi = options.roi;
    if (!roi && options.apply_sidecar_roi) roi = prep.display.roi;
    if (roi) {
        prep.display = clock.run("crop", [&] { return crop_roi(prep.display, *roi); });
        prep.record.roi = roi;
    }
    prep.analysis = clock.run("polarity", [&] {
        if (prep.display.polarity == ContrastPolarity::DarkContrast) {
            prep.record.inverted = true;
            return invert_polarity(prep.display);
        }
        return prep.display;
    });
    return prep;
}

// Replays a recorded preparation (model-driven recompose path).
Prepared prepare_series(const RunOptions& options, const PreprocessRecord& record,
                        StageClock& clock) {
    Prepared prep;
    prep.record = record;
    prep.display = clock.run("load", [&] {
        return load_series(options.input, options.sidecar);
    });
    if (record.trim)
        prep.display = clock.run("trim", [&] {
            return trim(prep.display, record.trim->first, record.trim->second);
        });
    if (record.roi)
        prep.display = clock.run("crop", [&] { return crop_roi(prep.display, *record.roi); });
    prep.analysis = clock.run("polarity", [&] {
        return record.inverted ? invert_polarity(prep.display) : prep.display;
    });
    return prep;
}

void segment_stage(RunArtifacts& art, const RunOptions& options, StageClock& clock) {
    clock.run("segment", [&] {
        const ImageSeries& series = art.analysis;
        if (options.external_mask) {
            art.vessel.mask =
                load_external_mask(*options.external_mask, series.height(), series.width());
            art.vessel.threshold = 0.0;
            art.vessel_source = MaskSource::External;
            return;
        }
        art.vessel_source = MaskSource::Vesselness;
        if (options.seg_input == SegInput::PerFrameUnion) {
            std::vector<VesselMask> masks;
            masks.reserve(series.frames.size());
            for (const Image& f : series.frames)
                masks.push_back(binarize(vesselness(f, options.scales), options.threshold).mask);
            art.vessel.mask = temporal_union(masks);
            art.vessel.threshold = 0.0;
            return;
        }
        Image input(series.height(), series.width());
        if (options.seg_input == SegInput::MaxProjection) {
            for (const Image& f : series.frames)
                for (std::size_t i = 0; i < input.size(); ++i)
                    input.data[i] = std::max(input.data[i], f.data[i]);
        } else {
            for (const Image& f : series.frames)
                for (std::size_t i = 0; i < input.size(); ++i) input.data[i] += f.data[i];
            for (double& v : input.data) v /= static_cast<double>(series.frames.size());
        }
        art.vessel = binarize(vesselness(input, options.scales), options.threshold);
    });
}

void recompose_stage(RunArtifacts& art, const RunOptions& options, StageClock& clock) {
    clock.run("recompose", [&] {
        art.assignment = order_phases(art.sources, art.display.fps);
        art.source_masks = threshold_sources(art.sources, options.threshold);
        art.labels = assign_pixels(art.source_masks, art.sources, art.assignment, art.vessel.mask);
        art.visualization = compose_visualization(art.display, art.labels, options.mode,
                                                  options.tau, options.blend);
    });
}

void build_report(RunArtifacts& art, const RunOptions& options, StageClock& clock) {
    clock.run("report", [&] {
        json report;
        report["schema"] = 1;
        report["input"] = options.input.string();
        report["config"] = config_to_json(options);
        report["series"] = {{"frames", art.display.frame_count()},
                            {"height", art.display.height()},
                            {"width", art.display.width()},
                            {"fps", art.display.fps},
                            {"polarity", to_string(art.display.polarity)}};
        report["convergence"] = {{"converged", art.model.converged},
                                 {"iterations", art.model.iterations_run},
                                 {"final_delta", art.model.final_delta},
                                 {"selected_restart", art.model.selected_restart}};

        json components = json::array();
        for (std::size_t j = 0; j < art.sources.sources.size(); ++j) {
            const TimeDensityCurve tdc =
                component_tdc(art.sources.mixing.col(static_cast<int>(j)), art.display.fps);
            json c;
            c["index"] = j;
            c["phase"] = to_string(art.assignment.labels[j]);
            c["ttp_frames"] = tdc.ttp_frames;
            c["ttp_seconds"] = tdc.ttp_seconds;
            c["miv"] = tdc.miv;
            c["peak_value"] = art.sources.mixing.col(static_cast<int>(j)).maxCoeff();
            c["threshold"] = art.source_masks[j].threshold;
            c["mask_pixels"] = art.source_masks[j].mask.count();
            components.push_back(std::move(c));
        }
        report["components"] = std::move(components);

        report["segmentation"] = {
            {"source", art.vessel_source == MaskSource::External ? "external" : "vesselness"},
            {"threshold", art.vessel.threshold},
            {"degenerate", art.vessel.degenerate},
            {"mask_pixels", art.vessel.mask.count()}};

        art.report = std::move(report);
    });
}

void metrics_stage(RunArtifacts& art, const RunOptions& options, StageClock& clock) {
    if (!options.truth) return;
    clock.run("metrics", [&] {
        const json truth = read_json_file(*options.truth);
        const Eigen::MatrixXd true_mixing = matrix_from_json(truth.at("mixing"));
        std::vector<Phase> true_labels;
        for (const auto& s : truth.at("labels")) true_labels.push_back(phase_from_string(s));
        const fs::path mask_path = options.truth->parent_path() /
                                   truth.at("vessel_mask").get<std::string>();
        const VesselMask true_mask =
            load_external_mask(mask_path, art.vessel.mask.rows, art.vessel.mask.cols);
        const EvalResult eval =
            evaluate_against_truth(art.sources.mixing, art.assignment.labels, art.vessel.mask,
                                   true_mixing, true_labels, true_mask);
        art.report["metrics"] = eval.to_json();
    });
}

}  // namespace

RunArtifacts run_pipeline(const RunOptions& options) {
    RunArtifacts art;
    StageClock clock(art.timings_ms);

    Prepared prep = prepare_series(options, clock);
    art.display = std::move(prep.display);
    art.analysis = std::move(prep.analysis);
    art.preprocess = prep.record;
    art.ica_config = options.ica;

    DataMatrix data = clock.run("vectorize", [&] { return vectorize(art.analysis); });
    auto [centered, mean] = clock.run("center", [&] { return center(data.values); });
    auto [whitened, wt] = clock.run("whiten", [&] {
        return whiten(centered, mean, options.ica.components);
    });
    clock.run("ica", [&] {
        auto [model, sources] =
            fastica(whitened, wt, data.frame_rows, data.frame_cols, options.ica);
        art.model = std::move(model);
        art.sources = std::move(sources);
    });

    segment_stage(art, options, clock);
    recompose_stage(art, options, clock);
    build_report(art, options, clock);
    metrics_stage(art, options, clock);

    art.exit_code = art.model.converged ? 0 : 2;
    return art;
}

RunArtifacts run_decompose(const RunOptions& options) {
    RunArtifacts art;
    StageClock clock(art.timings_ms);

    Prepared prep = prepare_series(options, clock);
    art.display = std::move(prep.display);
    art.analysis = std::move(prep.analysis);
    art.preprocess = prep.record;
    art.ica_config = options.ica;

    DataMatrix data = clock.run("vectorize", [&] { return vectorize(art.analysis); });
    auto [centered, mean] = clock.run("center", [&] { return center(data.values); });
    auto [whitened, wt] = clock.run("whiten", [&] {
        return whiten(centered, mean, options.ica.components);
    });
    clock.run("ica", [&] {
        auto [model, sources] =
            fastica(whitened, wt, data.frame_rows, data.frame_cols, options.ica);
        art.model = std::move(model);
        art.sources = std::move(sources);
    });

    clock.run("report", [&] {
        json report;
        report["schema"] = 1;
        report["input"] = options.input.string();
        report["config"] = config_to_json(options);
        report["series"] = {{"frames", art.display.frame_count()},
                            {"height", art.display.height()},
                            {"width", art.display.width()},
                            {"fps", art.display.fps},
                            {"polarity", to_string(art.display.polarity)}};
        report["convergence"] = {{"converged", art.model.converged},
                                 {"iterations", art.model.iterations_run},
                                 {"final_delta", art.model.final_delta},
                                 {"selected_restart", art.model.selected_restart}};
        art.report = std::move(report);
    });

    art.exit_code = art.model.converged ? 0 : 2;
    return art;
}

RunArtifacts run_recompose(const RunOptions& options, const fs::path& model_path) {
    RunArtifacts art;
    StageClock clock(art.timings_ms);

    StoredModel stored = clock.run("model", [&] { return model_from_json(read_json_file(model_path)); });

    Prepared prep = prepare_series(options, stored.preprocess, clock);
    art.display = std::move(prep.display);
    art.analysis = std::move(prep.analysis);
    art.preprocess = stored.preprocess;

    DataMatrix data = clock.run("vectorize", [&] { return vectorize(art.analysis); });
    if (data.frame_rows != stored.frame_rows || data.frame_cols != stored.frame_cols)
        throw StageError("model", "stored model shape " + std::to_string(stored.frame_rows) +
                                      "x" + std::to_string(stored.frame_cols) +
                                      " does not match prepared series");
    if (data.values.rows() != stored.model.whitening.projection.cols())
        throw StageError("model", "stored model frame count does not match prepared series");

    auto [centered, mean] = clock.run("center", [&] { return center(data.values); });
    clock.run("sources", [&] {
        const Eigen::MatrixXd whitened = stored.model.whitening.projection * centered;
        art.model = stored.model;
        art.sources = build_source_set(stored.model.W, stored.model.whitening, whitened,
                                       data.frame_rows, data.frame_cols);
    });

    art.ica_config = stored.config;
    RunOptions effective = options;
    effective.ica = stored.config;
    segment_stage(art, effective, clock);
    recompose_stage(art, effective, clock);
    build_report(art, effective, clock);
    metrics_stage(art, effective, clock);

    art.exit_code = 0;
    return art;
}

nlohmann::json model_to_json(const UnmixingModel& model, const SourceSet& sources,
                             const PreprocessRecord& preprocess, const IcaConfig& config,
                             int frame_rows, int frame_cols, double fps) {
    json j;
    j["schema"] = 1;
    j["height"] = frame_rows;
    j["width"] = frame_cols;
    j["frames"] = model.whitening.projection.cols();
    j["fps"] = fps;
    j["preprocess"] = {{"trim", preprocess.trim
                                    ? json::array({preprocess.trim->first, preprocess.trim->second})
                                    : json(nullptr)},
                       {"roi", roi_to_json(preprocess.roi)},
                       {"inverted", preprocess.inverted}};
    j["ica"] = {{"components", config.components}, {"contrast", to_string(config.contrast)},
                {"tol", config.tol},               {"max_iter", config.max_iter},
                {"seed", config.seed},             {"restarts", config.restarts},
                {"scheme", config.scheme == IcaScheme::Symmetric ? "symmetric" : "deflation"}};
    j["convergence"] = {{"converged", model.converged},
                        {"iterations", model.iterations_run},
                        {"final_delta", model.final_delta},
                        {"selected_restart", model.selected_restart}};
    j["W"] = matrix_to_json(model.W);
    j["projection"] = matrix_to_json(model.whitening.projection);
    j["eigenvalues"] = vector_to_json(model.whitening.eigenvalues);
    j["mean"] = vector_to_json(model.whitening.mean);
    j["mixing"] = matrix_to_json(sources.mixing);
    return j;
}

StoredModel model_from_json(const nlohmann::json& j) {
    if (j.at("schema").get<int>() != 1)
        throw std::runtime_error("unsupported model schema " + j.at("schema").dump());
    StoredModel stored;
    stored.frame_rows = j.at("height").get<int>();
    stored.frame_cols = j.at("width").get<int>();
    stored.fps = j.at("fps").get<double>();

    const json& pre = j.at("preprocess");
    if (!pre.at("trim").is_null())
        stored.preprocess.trim = {pre.at("trim").at(0).get<int>(), pre.at("trim").at(1).get<int>()};
    stored.preprocess.roi = roi_from_json(pre.at("roi"));
    stored.preprocess.inverted = pre.at("inverted").get<bool>();

    const json& ica = j.at("ica");
    stored.config.components = ica.at("components").get<int>();
    stored.config.contrast = contrast_from_string(ica.at("contrast").get<std::string>());
    stored.config.tol = ica.at("tol").get<double>();
    stored.config.max_iter = ica.at("max_iter").get<int>();
    stored.config.seed = ica.at("seed").get<std::uint64_t>();
    stored.config.restarts = ica.at("restarts").get<int>();
    stored.config.scheme = ica.at("scheme").get<std::string>() == "deflation"
                               ? IcaScheme::Deflation
                               : IcaScheme::Symmetric;

    const json& conv = j.at("convergence");
    stored.model.converged = conv.at("converged").get<bool>();
    stored.model.iterations_run = conv.at("iterations").get<int>();
    stored.model.final_delta = conv.at("final_delta").get<double>();
    stored.model.selected_restart = conv.at("selected_restart").get<int>();

    stored.model.W = matrix_from_json(j.at("W"));
    stored.model.whitening.projection = matrix_from_json(j.at("projection"));
    stored.model.whitening.eigenvalues = vector_from_json(j.at("eigenvalues"));
    stored.model.whitening.mean = vector_from_json(j.at("mean"));
    stored.model.contrast = stored.config.contrast;
    return stored;
}

void write_run_outputs(const RunArtifacts& art, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    write_rgb_series(art.visualization.frames, out_dir / "frames");

    fs::create_directories(out_dir / "sources");
    for (std::size_t j = 0; j < art.sources.sources.size(); ++j)
        write_gray_image(minmax_rescaled(art.sources.sources[j]),
                         out_dir / "sources" / ("source_" + std::to_string(j) + ".png"));

    write_gray_image(art.vessel.mask.to_image(), out_dir / "vessel_mask.png");
    for (Phase phase : {Phase::Arterial, Phase::Nidal, Phase::Venous}) {
        Image m(art.labels.rows, art.labels.cols);
        for (std::size_t i = 0; i < art.labels.labels.size(); ++i)
            m.data[i] = art.labels.labels[i] == phase ? 1.0 : 0.0;
        write_gray_image(m, out_dir / ("mask_" + to_string(phase) + ".png"));
    }

    write_json_file(model_to_json(art.model, art.sources, art.preprocess, art.ica_config,
                                  art.display.height(), art.display.width(), art.display.fps),
                    out_dir / "model.json");
    write_json_file(art.report, out_dir / "report.json");

    json timings;
    for (const auto& [name, ms] : art.timings_ms) timings[name] = ms;
    write_json_file(timings, out_dir / "timings.json");
}

void write_decompose_outputs(const RunArtifacts& art, const fs::path& out_dir) {
    fs::create_directories(out_dir / "sources");
    for (std::size_t j = 0; j < art.sources.sources.size(); ++j)
        write_gray_image(minmax_rescaled(art.sources.sources[j]),
                         out_dir / "sources" / ("source_" + std::to_string(j) + ".png"));
    write_json_file(model_to_json(art.model, art.sources, art.preprocess, art.ica_config,
                                  art.display.height(), art.display.width(), art.display.fps),
                    out_dir / "model.json");
    write_json_file(art.report, out_dir / "report.json");
    json timings;
    for (const auto& [name, ms] : art.timings_ms) timings[name] = ms;
    write_json_file(timings, out_dir / "timings.json");
}

void write_phantom(const PhantomSpec& spec, const fs::path& out_dir) {
    auto [series, truth] = generate_phantom(spec);
    const int p = static_cast<int>(truth.sources.size());

    fs::create_directories(out_dir / "series");
    write_gray_series(series, out_dir / "series");
    json frame_list = json::array();
    for (int t = 0; t < series.frame_count(); ++t) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "frame_%04d.png", t);
        frame_list.push_back(std::string(buf));
    }
    write_json_file(json{{"fps", series.fps},
                         {"polarity", to_string(series.polarity)},
                         {"frames", frame_list}},
                    out_dir / "series" / "series.json");

    fs::create_directories(out_dir / "masks");
    write_gray_image(truth.vessel_mask.to_image(), out_dir / "masks" / "vessel.png");
    json source_masks = json::array();
    for (int j = 0; j < p; ++j) {
        const std::string name = "masks/source_" + std::to_string(j) + ".png";
        write_gray_image(truth.sources[j], out_dir / "masks" / ("source_" + std::to_string(j) + ".png"));
        source_masks.push_back(name);
    }

    json phases = json::array();
    json labels = json::array();
    for (int j = 0; j < p; ++j) {
        const PhantomPhase& ph = spec.phases[j];
        phases.push_back({{"geometry", to_string(ph.geometry)},
                          {"phase", to_string(truth.phase_order[j])},
                          {"t0", ph.bolus.t0},
                          {"alpha", ph.bolus.alpha},
                          {"beta", ph.bolus.beta},
                          {"amplitude", ph.bolus.amplitude}});
        labels.push_back(to_string(truth.phase_order[j]));
    }

    json t;
    t["schema"] = 1;
    t["height"] = spec.height;
    t["width"] = spec.width;
    t["frames"] = spec.frames;
    t["fps"] = spec.fps;
    t["seed"] = spec.seed;
    t["noise_sigma"] = spec.noise_sigma;
    t["phases"] = std::move(phases);
    t["labels"] = std::move(labels);
    t["mixing"] = matrix_to_json(truth.mixing);
    t["vessel_mask"] = "masks/vessel.png";
    t["source_masks"] = std::move(source_masks);
    write_json_file(t, out_dir / "truth.json");
}

EvalResult evaluate_against_truth(const Eigen::MatrixXd& est_mixing,
                                  const std::vector<Phase>& est_labels,
                                  const VesselMask& est_mask, const Eigen::MatrixXd& true_mixing,
                                  const std::vector<Phase>& true_labels,
                                  const VesselMask& true_mask) {
    EvalResult result;
    result.amari = amari_index(est_mixing, true_mixing);
    result.mask = mask_metrics(est_mask, true_mask);

    // Match estimated components to truth columns through the permutation
    // structure of pinv(A_est) * A_true, then compare phase labels.
    const int p = static_cast<int>(est_mixing.cols());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(est_mixing);
    const Eigen::MatrixXd perm = (cod.pseudoInverse() * true_mixing).cwiseAbs();
    std::vector<int> match(p);
    std::vector<bool> taken(p, false);
    bool valid = true;
    for (int i = 0; i < p; ++i) {
        Eigen::Index jmax = 0;
        perm.row(i).maxCoeff(&jmax);
        match[i] = static_cast<int>(jmax);
        if (taken[match[i]]) valid = false;
        taken[match[i]] = true;
    }
    result.order_correct = valid;
    if (valid)
        for (int i = 0; i < p; ++i)
            if (est_labels[i] != true_labels[match[i]]) result.order_correct = false;
    return result;
}

json EvalResult::to_json() const {
    return json{{"amari_index", amari},
                {"dice", mask.dice},
                {"recall", mask.recall},
                {"precision", mask.precision},
                {"order_correct", order_correct}};
}

EvalResult evaluate_run(const fs::path& run_dir, const fs::path& truth_json) {
    const json report = read_json_file(run_dir / "report.json");
    const json model = read_json_file(run_dir / "model.json");
    const json truth = read_json_file(truth_json);

    const Eigen::MatrixXd est_mixing = matrix_from_json(model.at("mixing"));
    std::vector<Phase> est_labels;
    for (const auto& c : report.at("components"))
        est_labels.push_back(phase_from_string(c.at("phase").get<std::string>()));

    const Eigen::MatrixXd true_mixing = matrix_from_json(truth.at("mixing"));
    std::vector<Phase> true_labels;
    for (const auto& s : truth.at("labels")) true_labels.push_back(phase_from_string(s));

    const int h = truth.at("height").get<int>();
    const int w = truth.at("width").get<int>();
    const VesselMask est_mask = load_external_mask(run_dir / "vessel_mask.png", h, w);
    const VesselMask true_mask = load_external_mask(
        truth_json.parent_path() / truth.at("vessel_mask").get<std::string>(), h, w);

    return evaluate_against_truth(est_mixing, est_labels, est_mask, true_mixing, true_labels,
                                  true_mask);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

}  // namespace dsaflow
