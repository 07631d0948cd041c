// trackwatch: extract feature tracks, train a scene model, score tracks, and
// serve the model over HTTP.

#include "trackwatch/error.hpp"
#include "trackwatch/feature_tracker.hpp"
#include "trackwatch/pipeline.hpp"
#include "trackwatch/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>

namespace tw = trackwatch;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_io = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tw::IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_extract(const std::string& frames_dir, const std::string& out_path, const std::string& config_path) {
    tw::TrackerConfig cfg;
    if (!config_path.empty()) cfg = tw::tracker_config_from_json(slurp(config_path));
    const auto files = tw::list_frame_files(frames_dir);
    if (files.size() < 2) throw tw::ValidationError("need at least 2 frame_%06d.pgm files in '" + frames_dir + "'");
    std::vector<tw::Frame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) frames.push_back(tw::read_pgm(f));
    const auto tracks = tw::run_tracker(frames, cfg);
    tw::save_tracks_file(out_path, tracks);
    std::cerr << "extracted " << tracks.size() << " tracks from " << frames.size() << " frames\n";
    return 0;
}

int run_train(const std::string& tracks_path, const std::string& out_path, const tw::TrainConfig& cfg) {
    const auto tracks = tw::load_tracks_file(tracks_path);
    const auto model = tw::train(tracks, cfg);
    tw::save_model_file(out_path, model);
    std::cerr << "trained on " << model.meta.filtered_tracks << " of " << model.meta.input_tracks
              << " tracks; thresholds r1=" << model.ensemble.threshold_r1 << " r2=" << model.pursuit.threshold_r2
              << '\n';
    return 0;
}

int run_score(const std::string& model_path, const std::string& tracks_path, const std::string& out_path) {
    const auto model = tw::load_model_file(model_path);
    const auto tracks = tw::load_tracks_file(tracks_path);
    const auto records = tw::score_tracks(model, tracks);
    std::ofstream out(out_path);
    if (!out) throw tw::IoError("cannot open '" + out_path + "' for writing");
    tw::write_scores_csv(out, records);
    if (!out) throw tw::IoError("write failure on '" + out_path + "'");
    return 0;
}

int run_serve(const std::string& model_path, const std::string& bind, const std::string& scene_path) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw tw::ValidationError("--bind expects host:port");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw tw::ValidationError("--bind has an invalid port");
    }
    if (port <= 0 || port > 65535) throw tw::ValidationError("--bind has an invalid port");
    std::optional<tw::Frame> scene;
    if (!scene_path.empty()) scene = tw::read_pgm(scene_path);
    const tw::ScoringService service(tw::load_model_file(model_path), std::move(scene));
    std::cerr << "serving on " << host << ':' << port << '\n';
    if (!tw::serve(service, host, port)) throw tw::IoError("cannot bind " + bind);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-specific trajectory novelty detection"};
    app.require_subcommand(1);

    std::string frames_dir, out_path, config_path, tracks_path, model_path, bind, scene_path;
    tw::TrainConfig train_cfg;

    auto* extract = app.add_subcommand("extract", "Track features through a directory of PGM frames");
    extract->add_option("--frames", frames_dir, "Directory of frame_%06d.pgm files")->required();
    extract->add_option("--out", out_path, "Output track JSONL")->required();
    extract->add_option("--config", config_path, "Tracker configuration JSON");

    auto* train = app.add_subcommand("train", "Train a scene model from tracks");
    train->add_option("--tracks", tracks_path, "Training track JSONL")->required();
    train->add_option("--out", out_path, "Output model file")->required();
    train->add_option("--scales", train_cfg.scales, "Characteristic scales, ascending")->delimiter(',');
    train->add_option("--dq", train_cfg.delta_q, "Spatial cluster radius (px)");
    train->add_option("--dtheta", train_cfg.delta_theta, "Directional cluster radius (rad)");
    train->add_option("--quantile", train_cfg.threshold.quantile, "Training fraction below the novelty thresholds");

    auto* score = app.add_subcommand("score", "Score tracks against a trained model");
    score->add_option("--model", model_path, "Model file")->required();
    score->add_option("--tracks", tracks_path, "Track JSONL to score")->required();
    score->add_option("--out", out_path, "Output scores CSV")->required();

    auto* serve = app.add_subcommand("serve", "Serve a trained model over HTTP");
    serve->add_option("--model", model_path, "Model file")->required();
    serve->add_option("--bind", bind, "host:port")->default_val("127.0.0.1:8080");
    serve->add_option("--scene", scene_path, "Scene image (PGM) for GET /scene");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }

    try {
        if (*extract) return run_extract(frames_dir, out_path, config_path);
        if (*train) return run_train(tracks_path, out_path, train_cfg);
        if (*score) return run_score(model_path, tracks_path, out_path);
        if (*serve) return run_serve(model_path, bind, scene_path);
    } catch (const tw::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const tw::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    }
    return 0;
}
