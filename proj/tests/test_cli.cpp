#include "corridor.hpp"
#include "texture.hpp"
#include "trackwatch/pipeline.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace trackwatch;
namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* p = std::getenv("TRACKWATCH_BIN");
    REQUIRE_MESSAGE(p != nullptr, "TRACKWATCH_BIN is not set");
    return p;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("trackwatch_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("extract tracks a translating scene") {
    TempDir dir;
    fs::create_directories(dir.path / "frames");
    const texture::Waves tex(3);
    for (int f = 0; f < 10; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06d.pgm", f);
        write_pgm((dir.path / "frames" / name).string(), texture::render(tex, 96, 80, {1.0 * f, 0.5 * f}));
    }
    REQUIRE(run("extract --frames " + dir / "frames" + " --out " + dir / "tracks.jsonl") == 0);
    const auto tracks = load_tracks_file(dir / "tracks.jsonl");
    REQUIRE(tracks.size() > 5);
    std::size_t long_tracks = 0;
    for (const auto& t : tracks) {
        if (t.points.size() < 10) continue;
        ++long_tracks;
        const auto& a = t.points.front();
        const auto& b = t.points.back();
        CHECK((b.x - a.x) / (b.frame - a.frame) == doctest::Approx(1.0).epsilon(0.05));
        CHECK((b.y - a.y) / (b.frame - a.frame) == doctest::Approx(0.5).epsilon(0.1));
    }
    CHECK(long_tracks > 5);

    std::ofstream(dir / "tracker.json") << "{\"window_radius\": 0}";
    CHECK(run("extract --frames " + dir / "frames" + " --out " + dir / "x.jsonl --config " + dir / "tracker.json") == 2);
    CHECK(run("extract --frames " + dir / "nowhere" + " --out " + dir / "x.jsonl") != 0);
}

TEST_CASE("train then score") {
    TempDir dir;
    save_tracks_file(dir / "train.jsonl", corridor::normal_corpus(5, 600));
    std::mt19937_64 rng(6);
    std::vector<Track> probes{corridor::normal_track(rng, "normal"), corridor::sharp_turn_track(rng, "turn")};
    save_tracks_file(dir / "probe.jsonl", probes);

    REQUIRE(run("train --tracks " + dir / "train.jsonl" + " --out " + dir / "model.json"
                + " --scales 50,75,110 --dq 25 --dtheta 0.19635 --quantile 0.001")
            == 0);
    const auto model = load_model_file(dir / "model.json");
    CHECK(model.ensemble.chains.size() == 3);
    CHECK(model.meta.config.threshold.quantile == 0.001);
    CHECK(model.meta.config.delta_theta == 0.19635);

    REQUIRE(run("train --tracks " + dir / "train.jsonl" + " --out " + dir / "model2.json"
                + " --scales 50,75,110 --dq 25 --dtheta 0.19635 --quantile 0.001")
            == 0);
    CHECK(read_file(dir / "model.json") == read_file(dir / "model2.json"));

    REQUIRE(run("score --model " + dir / "model.json" + " --tracks " + dir / "probe.jsonl" + " --out " + dir / "scores.csv") == 0);
    std::ostringstream want;
    const auto recs = score_tracks(model, probes);
    write_scores_csv(want, recs);
    CHECK(read_file(dir / "scores.csv") == want.str());
    CHECK(recs[1].novel2);
}

TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(run("") == 2);
    CHECK(run("bogus") == 2);
    CHECK(run("train --out " + dir / "m.json") == 2);
    CHECK(run("train --tracks " + dir / "missing.jsonl" + " --out " + dir / "m.json") == 3);
    CHECK(run("score --model " + dir / "missing.json" + " --tracks x --out y") == 3);

    save_tracks_file(dir / "t.jsonl", corridor::normal_corpus(1, 50));
    CHECK(run("train --tracks " + dir / "t.jsonl" + " --out " + dir / "m.json --quantile 1.5") == 2);
    CHECK(run("train --tracks " + dir / "t.jsonl" + " --out " + dir / "m.json --scales 75,50") == 2);
    std::ofstream(dir / "bad.jsonl") << "{\"id\": \"a\", \"points\": [[0, 1.0]]}\n";
    CHECK(run("train --tracks " + dir / "bad.jsonl" + " --out " + dir / "m.json") == 2);
    REQUIRE(run("train --tracks " + dir / "t.jsonl" + " --out " + dir / "m.json") == 0);

    const std::string bytes = read_file(dir / "m.json");
    std::ofstream(dir / "trunc.json", std::ios::binary) << bytes.substr(0, bytes.size() / 3);
    CHECK(run("score --model " + dir / "trunc.json" + " --tracks " + dir / "t.jsonl" + " --out " + dir / "s.csv") == 2);
    CHECK(run("score --model " + dir / "m.json" + " --tracks " + dir / "t.jsonl" + " --out " + dir / "no/such/dir/s.csv") == 3);
    CHECK(run("serve --model " + dir / "m.json" + " --bind nonsense") == 2);
    CHECK(run("--help") == 0);
}
