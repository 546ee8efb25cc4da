#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dsaflow/pipeline.hpp"

namespace {

using namespace dsaflow;

std::optional<RoiRect> parse_roi(const std::vector<int>& v) {
    if (v.empty()) return std::nullopt;
    if (v.size() != 4) throw CLI::ValidationError("--roi expects x0,y0,w,h");
    return RoiRect{v[0], v[1], v[2], v[3]};
}

std::optional<std::pair<int, int>> parse_trim(const std::vector<int>& v) {
    if (v.empty()) return std::nullopt;
    if (v.size() != 2) throw CLI::ValidationError("--trim expects start,end");
    return std::make_pair(v[0], v[1]);
}

struct CommonFlags {
    std::string input, output, sidecar, mask, truth, contrast = "logcosh";
    std::string threshold = "otsu", mode = "progressive", seg = "maxproj";
    std::string scheme = "symmetric";
    int components = 3, max_iter = 200, restarts = 6;
    double tol = 1e-4, tau = 0.2, blend = 0.6;
    std::uint64_t seed = 0;
    std::vector<int> roi, trim;
    std::vector<double> scales{1.0, 2.0, 4.0};
};

void add_ica_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--components", f.components, "Number of flow phases to recover (2 or 3)")
        ->capture_default_str();
    cmd->add_option("--contrast", f.contrast, "ICA contrast: logcosh|exp|cube")
        ->capture_default_str();
    cmd->add_option("--tol", f.tol, "Fixed-point convergence tolerance")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iter, "Iteration cap per restart")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Master seed for all randomness")->capture_default_str();
    cmd->add_option("--restarts", f.restarts, "Seeded restarts, best negentropy wins")
        ->capture_default_str();
    cmd->add_option("--scheme", f.scheme, "Update scheme: symmetric|deflation")
        ->capture_default_str();
}

void add_frame_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--sidecar", f.sidecar, "Explicit series.json path");
    cmd->add_option("--trim", f.trim, "Keep frames [start,end)")->delimiter(',');
    cmd->add_option("--roi", f.roi, "Crop to x0,y0,w,h before analysis")->delimiter(',');
}

void add_segment_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--scales", f.scales, "Vesselness scales in pixels")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--threshold", f.threshold, "Binarization: otsu|quantile:q")
        ->capture_default_str();
    cmd->add_option("--seg", f.seg, "Vesselness input: maxproj|mean|per-frame")
        ->capture_default_str();
    cmd->add_option("--mask", f.mask, "External vessel mask PNG/PGM instead of vesselness");
}

void add_vis_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--mode", f.mode, "Coloring: static|progressive")->capture_default_str();
    cmd->add_option("--tau", f.tau, "Progressive activation fraction of temporal max")
        ->capture_default_str();
    cmd->add_option("--blend", f.blend, "Color blend weight over grayscale")
        ->capture_default_str();
}

RunOptions to_options(const CommonFlags& f) {
    RunOptions o;
    o.input = f.input;
    o.output = f.output;
    if (!f.sidecar.empty()) o.sidecar = f.sidecar;
    if (!f.mask.empty()) o.external_mask = f.mask;
    if (!f.truth.empty()) o.truth = f.truth;
    o.ica.components = f.components;
    o.ica.contrast = contrast_from_string(f.contrast);
    o.ica.tol = f.tol;
    o.ica.max_iter = f.max_iter;
    o.ica.seed = f.seed;
    o.ica.restarts = f.restarts;
    o.ica.scheme = f.scheme == "deflation" ? IcaScheme::Deflation : IcaScheme::Symmetric;
    o.trim = parse_trim(f.trim);
    o.roi = parse_roi(f.roi);
    o.scales = f.scales;
    o.threshold = binarize_method_from_string(f.threshold);
    o.seg_input = seg_input_from_string(f.seg);
    o.mode = vis_mode_from_string(f.mode);
    o.tau = f.tau;
    o.blend = f.blend;
    return o;
}

void print_summary(const RunArtifacts& art) {
    const auto& conv = art.report.at("convergence");
    std::printf("converged=%s iterations=%d final_delta=%.3e\n",
                conv.at("converged").get<bool>() ? "true" : "false",
                conv.at("iterations").get<int>(), conv.at("final_delta").get<double>());
    for (const auto& c : art.report.at("components"))
        std::printf("component %d: %-8s ttp=%d frames (%.3f s) peak=%.4f\n",
                    c.at("index").get<int>(), c.at("phase").get<std::string>().c_str(),
                    c.at("ttp_frames").get<int>(), c.at("ttp_seconds").get<double>(),
                    c.at("peak_value").get<double>());
    if (art.report.contains("metrics")) {
        const auto& m = art.report.at("metrics");
        std::printf("metrics: amari=%.4f dice=%.4f recall=%.4f precision=%.4f order_correct=%s\n",
                    m.at("amari_index").get<double>(), m.at("dice").get<double>(),
                    m.at("recall").get<double>(), m.at("precision").get<double>(),
                    m.at("order_correct").get<bool>() ? "true" : "false");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DSA flow-phase decomposition: whitening + fixed-point ICA with "
                 "vessel-masked color recomposition"};
    app.require_subcommand(1);

    CommonFlags run_f, dec_f, rec_f, seg_f;
    std::string rec_model;

    CLI::App* cmd_run = app.add_subcommand("run", "Full pipeline: decompose, segment, recompose");
    cmd_run->add_option("--input", run_f.input, "Directory of .png/.pgm frames")->required();
    cmd_run->add_option("--out", run_f.output, "Output directory")->required();
    cmd_run->add_option("--truth", run_f.truth, "Phantom truth.json for metrics");
    add_frame_flags(cmd_run, run_f);
    add_ica_flags(cmd_run, run_f);
    add_segment_flags(cmd_run, run_f);
    add_vis_flags(cmd_run, run_f);

    CLI::App* cmd_dec = app.add_subcommand("decompose", "Whiten + unmix only; dump model.json");
    cmd_dec->add_option("--input", dec_f.input, "Directory of .png/.pgm frames")->required();
    cmd_dec->add_option("--out", dec_f.output, "Output directory")->required();
    add_frame_flags(cmd_dec, dec_f);
    add_ica_flags(cmd_dec, dec_f);

    CLI::App* cmd_rec = app.add_subcommand(
        "recompose", "Rebuild sources from a stored model and compose the visualization");
    cmd_rec->add_option("--input", rec_f.input, "Directory of .png/.pgm frames")->required();
    cmd_rec->add_option("--model", rec_model, "model.json from a decompose run")->required();
    cmd_rec->add_option("--out", rec_f.output, "Output directory")->required();
    cmd_rec->add_option("--truth", rec_f.truth, "Phantom truth.json for metrics");
    cmd_rec->add_option("--sidecar", rec_f.sidecar, "Explicit series.json path");
    add_segment_flags(cmd_rec, rec_f);
    add_vis_flags(cmd_rec, rec_f);

    CLI::App* cmd_seg = app.add_subcommand("segment", "Vessel probability map, mask, patches");
    cmd_seg->add_option("--input", seg_f.input, "Directory of .png/.pgm frames")->required();
    cmd_seg->add_option("--out", seg_f.output, "Output directory")->required();
    add_frame_flags(cmd_seg, seg_f);
    add_segment_flags(cmd_seg, seg_f);
    std::string seg_truth_mask;
    int patch_size = 0, patch_stride = 0;
    double min_entropy = 0.5;
    std::string patch_out;
    cmd_seg->add_option("--truth-mask", seg_truth_mask, "Reference mask for dice metrics");
    cmd_seg->add_option("--patch-size", patch_size, "Extract square patches of this size");
    cmd_seg->add_option("--patch-stride", patch_stride, "Patch stride (defaults to size)");
    cmd_seg->add_option("--min-entropy", min_entropy, "Range-entropy gate in bits")
        ->capture_default_str();
    cmd_seg->add_option("--patch-out", patch_out, "Directory for patch PNGs + patches.json");

    CLI::App* cmd_ph = app.add_subcommand("phantom", "Generate a synthetic bolus series + truth");
    std::string ph_out;
    std::uint64_t ph_seed = 42;
    int ph_h = 128, ph_w = 128, ph_d = 24, ph_phases = 3;
    double ph_fps = 3.0, ph_noise = 0.01, ph_alpha = 2.0, ph_beta = 1.5;
    std::vector<double> ph_onsets, ph_amplitudes;
    cmd_ph->add_option("--out", ph_out, "Output directory")->required();
    cmd_ph->add_option("--seed", ph_seed, "Phantom seed")->capture_default_str();
    cmd_ph->add_option("--height", ph_h, "Frame height in pixels")->capture_default_str();
    cmd_ph->add_option("--width", ph_w, "Frame width in pixels")->capture_default_str();
    cmd_ph->add_option("--frames", ph_d, "Series length")->capture_default_str();
    cmd_ph->add_option("--fps", ph_fps, "Frame rate")->capture_default_str();
    cmd_ph->add_option("--noise", ph_noise, "Additive Gaussian sigma")->capture_default_str();
    cmd_ph->add_option("--phases", ph_phases, "2 (artery+vein) or 3")->capture_default_str();
    cmd_ph->add_option("--onsets", ph_onsets, "Bolus onsets in frames")->delimiter(',');
    cmd_ph->add_option("--alpha", ph_alpha, "Gamma-variate shape")->capture_default_str();
    cmd_ph->add_option("--beta", ph_beta, "Gamma-variate scale in frames")->capture_default_str();
    cmd_ph->add_option("--amplitudes", ph_amplitudes, "Per-phase peak values")->delimiter(',');

    CLI::App* cmd_eval = app.add_subcommand("eval", "Score a run directory against truth.json");
    std::string eval_run, eval_truth;
    cmd_eval->add_option("--run", eval_run, "Run output directory")->required();
    cmd_eval->add_option("--truth", eval_truth, "Phantom truth.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_run)) {
            const RunOptions options = to_options(run_f);
            RunArtifacts art = run_pipeline(options);
            write_run_outputs(art, options.output);
            print_summary(art);
            if (art.exit_code == 2)
                std::cerr << "warning: fixed-point iteration did not converge within "
                          << options.ica.max_iter << " iterations\n";
            return art.exit_code;
        }
        if (app.got_subcommand(cmd_dec)) {
            const RunOptions options = to_options(dec_f);
            RunArtifacts art = run_decompose(options);
            write_decompose_outputs(art, options.output);
            if (art.exit_code == 2)
                std::cerr << "warning: fixed-point iteration did not converge within "
                          << options.ica.max_iter << " iterations\n";
            return art.exit_code;
        }
        if (app.got_subcommand(cmd_rec)) {
            const RunOptions options = to_options(rec_f);
            RunArtifacts art = run_recompose(options, rec_model);
            write_run_outputs(art, options.output);
            print_summary(art);
            return art.exit_code;
        }
        if (app.got_subcommand(cmd_seg)) {
            const RunOptions options = to_options(seg_f);
            ImageSeries series = load_series(options.input, options.sidecar);
            if (options.trim) series = trim(series, options.trim->first, options.trim->second);
            std::optional<RoiRect> roi = options.roi ? options.roi : series.roi;
            if (roi) series = crop_roi(series, *roi);
            if (series.polarity == ContrastPolarity::DarkContrast)
                series = invert_polarity(series);

            std::filesystem::create_directories(options.output);
            nlohmann::json report;
            report["schema"] = 1;
            report["input"] = options.input.string();

            BinarizeResult vessel;
            if (options.external_mask) {
                vessel.mask = load_external_mask(*options.external_mask, series.height(),
                                                 series.width());
                report["source"] = "external";
            } else if (options.seg_input == SegInput::PerFrameUnion) {
                std::vector<VesselMask> masks;
                nlohmann::json thresholds = nlohmann::json::array();
                for (int t = 0; t < series.frame_count(); ++t) {
                    ProbabilityMap map = vesselness(series.frames[t], options.scales);
                    BinarizeResult r = binarize(map, options.threshold);
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "probability_%04d.png", t);
                    write_gray_image(map, options.output / buf);
                    thresholds.push_back(r.threshold);
                    masks.push_back(std::move(r.mask));
                }
                vessel.mask = temporal_union(masks);
                report["source"] = "vesselness";
                report["thresholds"] = std::move(thresholds);
            } else {
                Image input(series.height(), series.width());
                if (options.seg_input == SegInput::MaxProjection) {
                    for (const Image& f : series.frames)
                        for (std::size_t i = 0; i < input.size(); ++i)
                            input.data[i] = std::max(input.data[i], f.data[i]);
                } else {
                    for (const Image& f : series.frames)
                        for (std::size_t i = 0; i < input.size(); ++i) input.data[i] += f.data[i];
                    for (double& v : input.data) v /= series.frame_count();
                }
                ProbabilityMap map = vesselness(input, options.scales);
                write_gray_image(map, options.output / "probability.png");
                vessel = binarize(map, options.threshold);
                report["source"] = "vesselness";
                report["threshold"] = vessel.threshold;
                report["degenerate"] = vessel.degenerate;
            }
            write_gray_image(vessel.mask.to_image(), options.output / "vessel_mask.png");
            report["mask_pixels"] = vessel.mask.count();

            if (!seg_truth_mask.empty()) {
                const VesselMask truth_mask =
                    load_external_mask(seg_truth_mask, vessel.mask.rows, vessel.mask.cols);
                const MaskMetrics m = mask_metrics(vessel.mask, truth_mask);
                report["metrics"] = {{"dice", m.dice}, {"recall", m.recall},
                                     {"precision", m.precision}};
                std::printf("dice=%.4f recall=%.4f precision=%.4f\n", m.dice, m.recall,
                            m.precision);
            }

            if (patch_size > 0) {
                const int stride = patch_stride > 0 ? patch_stride : patch_size;
                const std::vector<Patch> patches =
                    extract_patches(series, patch_size, stride, min_entropy);
                const std::filesystem::path pdir =
                    patch_out.empty() ? options.output / "patches" : std::filesystem::path(patch_out);
                std::filesystem::create_directories(pdir);
                nlohmann::json plist = nlohmann::json::array();
                for (std::size_t i = 0; i < patches.size(); ++i) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "patch_%04zu.png", i);
                    write_gray_image(patches[i].pixels, pdir / buf);
                    plist.push_back({{"file", buf},
                                     {"frame", patches[i].frame},
                                     {"row", patches[i].row},
                                     {"col", patches[i].col},
                                     {"entropy", patches[i].entropy}});
                }
                std::ofstream out(pdir / "patches.json");
                out << nlohmann::json{{"patches", plist}}.dump(2) << '\n';
                report["patches"] = plist.size();
            }

            std::ofstream out(options.output / "segment_report.json");
            out << report.dump(2) << '\n';
            return 0;
        }
        if (app.got_subcommand(cmd_ph)) {
            PhantomSpec spec = PhantomSpec::defaults(ph_seed);
            spec.height = ph_h;
            spec.width = ph_w;
            spec.frames = ph_d;
            spec.fps = ph_fps;
            spec.noise_sigma = ph_noise;
            if (ph_phases == 2)
                spec.phases = {{PhaseGeometry::CurveArtery, {2.0, ph_alpha, ph_beta, 0.65}},
                               {PhaseGeometry::CurveVein, {8.0, ph_alpha, ph_beta, 0.65}}};
            for (std::size_t j = 0; j < spec.phases.size(); ++j) {
                spec.phases[j].bolus.alpha = ph_alpha;
                spec.phases[j].bolus.beta = ph_beta;
                if (j < ph_onsets.size()) spec.phases[j].bolus.t0 = ph_onsets[j];
                if (j < ph_amplitudes.size()) spec.phases[j].bolus.amplitude = ph_amplitudes[j];
            }
            write_phantom(spec, ph_out);
            std::printf("phantom written to %s (seed %llu)\n", ph_out.c_str(),
                        static_cast<unsigned long long>(ph_seed));
            return 0;
        }
        if (app.got_subcommand(cmd_eval)) {
            const EvalResult r = evaluate_run(eval_run, eval_truth);
            std::printf("amari=%.6f dice=%.4f recall=%.4f precision=%.4f order_correct=%s\n",
                        r.amari, r.mask.dice, r.mask.recall, r.mask.precision,
                        r.order_correct ? "true" : "false");
            std::ofstream out(std::filesystem::path(eval_run) / "eval.json");
            out << r.to_json().dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
