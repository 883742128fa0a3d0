#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ps3d/cli/commands.hpp"

namespace {

/// The flags every subcommand shares. Values bind to this struct during the
/// parse; only flags the user actually passed are copied onto the RunConfig,
/// so a --config file fills the gaps and explicit flags win.
struct CommonFlags {
    std::string config, dataset, model, out, split, variant, prune;
    std::vector<std::string> features;
    std::uint64_t seed = 0;
    int threads = 0;

    CLI::Option* o_config = nullptr;
    CLI::Option* o_dataset = nullptr;
    CLI::Option* o_model = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_split = nullptr;
    CLI::Option* o_variant = nullptr;
    CLI::Option* o_features = nullptr;
    CLI::Option* o_prune = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_threads = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    f.o_config = cmd->add_option("--config", f.config,
                                 "JSON config file; explicit flags override its values");
    f.o_dataset = cmd->add_option("--dataset", f.dataset,
                                  "dataset directory holding manifest.json");
    f.o_model = cmd->add_option("--model", f.model, "model file");
    f.o_out = cmd->add_option("--out", f.out, "output directory");
    f.o_split = cmd->add_option("--split", f.split,
                                "dataset split to read (train|test); each command has a default");
    f.o_variant = cmd->add_option("--variant", f.variant,
                                  "deformation variant: psi2d|psi3d1|psi3d2|psi3d3|psi3d4");
    f.o_features = cmd->add_option("--features", f.features,
                                   "descriptor set from ihog,dhog,honv,hdd (comma separated)")
                       ->delimiter(',');
    f.o_prune = cmd->add_option("--prune", f.prune,
                                "neighborhood pruning: paper|conservative|off");
    f.o_seed = cmd->add_option("--seed", f.seed, "RNG seed");
    f.o_threads = cmd->add_option("--threads", f.threads,
                                  "worker threads; PS3D_THREADS is the fallback");
}

void apply_common(const CommonFlags& f, ps3d::RunConfig& cfg) {
    if (f.o_config->count()) ps3d::apply_config_file(cfg, f.config);
    if (f.o_dataset->count()) cfg.dataset_dir = f.dataset;
    if (f.o_model->count()) cfg.model_path = f.model;
    if (f.o_out->count()) cfg.out_dir = f.out;
    if (f.o_split->count()) cfg.split = f.split;
    if (f.o_variant->count()) cfg.variant = ps3d::psi_from_name(f.variant);
    if (f.o_features->count())
        cfg.descriptors = ps3d::descriptors_from_names(f.features, cfg.descriptors);
    if (f.o_prune->count()) cfg.prune = ps3d::neighborhood_mode_from_name(f.prune);
    if (f.o_seed->count()) cfg.seed = f.seed;
    if (f.o_threads->count()) cfg.threads = f.threads;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D pictorial structures for human pose estimation on RGB-D images"};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen-data", "render a synthetic RGB-D dataset");
    CommonFlags gf;
    add_common(gen, gf);
    int gen_frames = 0;
    double gen_fraction = 0.8;
    CLI::Option* o_gen_frames = gen->add_option("--frames", gen_frames, "number of frames");
    CLI::Option* o_gen_fraction =
        gen->add_option("--train-fraction", gen_fraction, "fraction of frames tagged train");

    CLI::App* train = app.add_subcommand("train", "train a model on the train split");
    CommonFlags tf;
    add_common(train, tf);
    int train_epochs = 0;
    CLI::Option* o_train_epochs = train->add_option("--epochs", train_epochs, "gradient epochs");

    CLI::App* infer = app.add_subcommand("infer", "detect poses and write a detections file");
    CommonFlags inf;
    add_common(infer, inf);
    bool overlays = false;
    double infer_threshold = 0.0;
    CLI::Option* o_overlays = infer->add_flag("--overlays", overlays,
                                              "write skeleton overlay PNGs");
    CLI::Option* o_infer_threshold = infer->add_option(
        "--threshold", infer_threshold, "override the model's calibrated detection threshold");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a model on the test split");
    CommonFlags ef;
    add_common(eval, ef);
    double eval_alpha = 0.2, eval_iou = 0.5, eval_threshold = 0.0;
    CLI::Option* o_eval_alpha =
        eval->add_option("--alpha", eval_alpha, "keypoint tolerance as a fraction of box size");
    CLI::Option* o_eval_iou = eval->add_option("--iou", eval_iou, "box match IoU threshold");
    CLI::Option* o_eval_threshold = eval->add_option(
        "--threshold", eval_threshold, "override the model's calibrated detection threshold");

    CLI::App* bench = app.add_subcommand("bench", "time pruned against exhaustive inference");
    CommonFlags bf;
    add_common(bench, bf);
    int bench_frames = 0;
    CLI::Option* o_bench_frames =
        bench->add_option("--frames", bench_frames, "benchmark at most this many frames");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? int(ps3d::kExitOk) : int(ps3d::kExitUsage);
    }

    try {
        ps3d::RunConfig cfg;
        if (gen->parsed()) {
            apply_common(gf, cfg);
            if (o_gen_frames->count()) cfg.n_frames = gen_frames;
            if (o_gen_fraction->count()) cfg.train_fraction = gen_fraction;
            const ps3d::GenDataResult r = ps3d::cmd_gen_data(cfg);
            std::printf("generated %d frames (%d train, %d test) in %s\n",
                        int(r.records.size()), r.train_count, r.test_count, r.out_dir.c_str());
        } else if (train->parsed()) {
            apply_common(tf, cfg);
            if (o_train_epochs->count()) cfg.train.epochs = train_epochs;
            const ps3d::TrainResult r = ps3d::cmd_train(cfg);
            for (const std::string& w : r.log.warnings)
                std::fprintf(stderr, "warning: %s\n", w.c_str());
            const double last_pck =
                r.log.epochs.empty() ? -1.0 : r.log.epochs.back().train_pck;
            std::printf("trained on %d annotated frames (%d person-free): objective %.6f -> "
                        "%.6f, train pck %.3f, threshold %.4f\n",
                        r.positive_frames, r.negative_frames, r.log.initial_objective,
                        r.log.final_objective, last_pck, r.log.calibrated_threshold);
            std::printf("model: %s\nlog: %s\n", r.model_path.c_str(), r.log_path.c_str());
        } else if (infer->parsed()) {
            apply_common(inf, cfg);
            if (o_overlays->count()) cfg.overlays = overlays;
            if (o_infer_threshold->count()) cfg.detect_threshold = infer_threshold;
            const ps3d::InferResult r = ps3d::cmd_infer(cfg);
            std::size_t total = 0;
            for (const ps3d::FrameDetections& f : r.frames) total += f.detections.size();
            std::printf("%zu detections on %zu frames -> %s\n", total, r.frames.size(),
                        r.detections_path.c_str());
            if (!r.overlay_paths.empty())
                std::printf("%zu overlays under %s\n", r.overlay_paths.size(),
                            std::filesystem::path(r.overlay_paths.front())
                                .parent_path().string().c_str());
        } else if (eval->parsed()) {
            apply_common(ef, cfg);
            if (o_eval_alpha->count()) cfg.pck_alpha = eval_alpha;
            if (o_eval_iou->count()) cfg.ap_iou = eval_iou;
            if (o_eval_threshold->count()) cfg.detect_threshold = eval_threshold;
            const ps3d::EvalResult r = ps3d::cmd_eval(cfg);
            std::printf("%s\n%s\n", r.pck_table.c_str(), r.ap_table.c_str());
            std::printf("written: %s, %s, %s, %s\n", r.pck_path.c_str(), r.ap_path.c_str(),
                        r.curve_path.c_str(), r.summary_path.c_str());
        } else if (bench->parsed()) {
            apply_common(bf, cfg);
            if (o_bench_frames->count()) cfg.bench_frames = bench_frames;
            const ps3d::BenchResult r = ps3d::cmd_bench(cfg);
            std::printf("%s", r.table.c_str());
            std::printf("report: %s\n", r.report_path.c_str());
        }
        return int(ps3d::kExitOk);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ps3d::exit_code_for(e);
    }
}
