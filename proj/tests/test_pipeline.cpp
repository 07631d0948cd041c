#include "corridor.hpp"
#include "trackwatch/error.hpp"
#include "trackwatch/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace trackwatch;

namespace {

const std::vector<Track>& corpus() {
    static const auto tracks = corridor::normal_corpus(7, 2000);
    return tracks;
}

const SceneModel& corridor_model() {
    static const SceneModel m = train(corpus());
    return m;
}

std::size_t count_below(const std::vector<double>& v, double t) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [t](double x) { return x < t; }));
}

std::string model_bytes() {
    static const std::string s = save_model(corridor_model());
    return s;
}

} // namespace

TEST_CASE("select_threshold order statistics") {
    CHECK(select_threshold({3.0, 1.0, 2.0}, 0.0005) == 1.0);
    CHECK(select_threshold({5.0}, 0.5) == 5.0);
    CHECK(select_threshold({4.0, 3.0, 2.0, 1.0}, 0.5) == 3.0);
    CHECK_THROWS_AS(select_threshold({}, 0.1), ValidationError);

    std::vector<double> v(10000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(1.0 + i * 0.37) * 1000.0;
    CHECK(count_below(v, select_threshold(v, 0.0005)) == 5);
}

TEST_CASE("threshold property on random score lists") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 3000;
        const double q = std::uniform_real_distribution<double>(0.0001, 0.2)(rng);
        std::vector<double> v(n);
        // Coarse values so ties are common.
        for (auto& x : v) x = static_cast<double>(rng() % 200);
        const double t = select_threshold(v, q);
        const double below = static_cast<double>(count_below(v, t)) / n;
        const double at_or_below = static_cast<double>(std::count_if(v.begin(), v.end(), [t](double x) { return x <= t; })) / n;
        CHECK(below <= q);
        CHECK(at_or_below > q - 1e-12);
    }
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.threshold.quantile = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.threshold.quantile = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.scales = {};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.scales = {75.0, 50.0};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("train on the corridor world") {
    const auto& m = corridor_model();
    const auto& voc = m.finest_vocab();
    CHECK(m.meta.input_tracks == 2000);
    CHECK(m.meta.filtered_tracks == 2000);
    CHECK(m.meta.scales.size() == 4);
    CHECK(m.ensemble.chains.size() == 4);
    CHECK(voc.size() > 10);
    CHECK(m.pursuit.vocab.primitives.size() == voc.primitives.size());

    const auto a = corridor::path_a(), b = corridor::path_b();
    for (const auto& p : voc.primitives) {
        const Point2 c{p.X, p.Y};
        CHECK(std::min(corridor::distance_to_path(a, c), corridor::distance_to_path(b, c)) <= voc.scale.delta_q);
    }
    CHECK(m.meta.scored_rho1 + m.meta.unscorable == m.meta.filtered_tracks);
}

TEST_CASE("pursuit and ensemble share the scale-1 vocabulary") {
    const auto& m = corridor_model();
    const auto& a = m.finest_vocab().primitives;
    const auto& b = m.pursuit.vocab.primitives;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].X == b[i].X);
        CHECK(a[i].Y == b[i].Y);
        CHECK(a[i].Theta == b[i].Theta);
    }
}

TEST_CASE("training replay stays under the quantile") {
    const auto& m = corridor_model();
    const auto recs = score_tracks(m, corpus());
    REQUIRE(recs.size() == corpus().size());
    std::size_t n1 = 0, n2 = 0, s1 = 0, s2 = 0;
    std::vector<double> r1s, r2s;
    for (const auto& r : recs) {
        if (r.rho1) {
            ++s1;
            n1 += r.novel1;
            r1s.push_back(r.rho1->rho1);
        }
        if (r.rho2) {
            ++s2;
            n2 += r.novel2;
            r2s.push_back(r.rho2->rho2);
        }
    }
    CHECK(s1 == m.meta.scored_rho1);
    CHECK(s2 == m.meta.scored_rho2);
    CHECK(n1 <= s1 / 1000);
    CHECK(n2 <= s2 / 1000);
    CHECK(n1 == count_below(r1s, m.ensemble.threshold_r1));
    CHECK(m.ensemble.threshold_r1 == select_threshold(r1s, 0.0005));
    CHECK(m.pursuit.threshold_r2 == select_threshold(r2s, 0.0005));
}

TEST_CASE("sharp turns are flagged by rho2") {
    const auto& m = corridor_model();
    std::mt19937_64 rng(99);
    int flagged = 0;
    for (int i = 0; i < 50; ++i) {
        const auto r = score_track(m, corridor::sharp_turn_track(rng, "t" + std::to_string(i)));
        REQUIRE(r.rho2);
        flagged += r.novel2;
    }
    CHECK(flagged >= 48);
}

TEST_CASE("score_tracks edge cases") {
    const auto& m = corridor_model();
    CHECK(score_tracks(m, {}).empty());

    Track tiny;
    tiny.id = "tiny";
    for (int f = 0; f < 20; ++f) tiny.points.push_back({f, 100.0 + f, corridor::a_y});
    const auto r = score_track(m, tiny);
    CHECK(r.status == ScoreStatus::unscorable);
    CHECK_FALSE(r.rho1);
    CHECK_FALSE(r.rho2);
    CHECK_FALSE(r.novel1);
}

TEST_CASE("single-track corpus") {
    std::mt19937_64 rng(3);
    const Track t = corridor::walk(rng, corridor::path_a(), 10, 390, "only");
    const auto m = train({t});
    const auto r = score_track(m, t);
    REQUIRE(r.rho1);
    REQUIRE(r.rho2);
    CHECK(m.ensemble.threshold_r1 == r.rho1->rho1);
    CHECK(m.pursuit.threshold_r2 == r.rho2->rho2);
    CHECK_FALSE(r.novel1);
    CHECK_FALSE(r.novel2);
}

TEST_CASE("train errors") {
    Track still;
    still.id = "still";
    for (int f = 0; f < 50; ++f) still.points.push_back({f, 100.0, 100.0});
    CHECK_THROWS_AS(train({still}), ValidationError);
    CHECK_THROWS_AS(train({}), ValidationError);

    std::mt19937_64 rng(4);
    const Track shortish = corridor::walk(rng, corridor::path_a(), 10, 200, "s");
    TrainConfig cfg;
    cfg.scales = {50.0, 1000.0};
    try {
        train({shortish}, cfg);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("scale 2") != std::string::npos);
    }
}

TEST_CASE("save and load round trip") {
    const auto& m = corridor_model();
    const std::string bytes = model_bytes();
    const auto loaded = load_model(bytes);
    CHECK(save_model(loaded) == bytes);

    std::mt19937_64 rng(8);
    std::vector<Track> probes;
    for (int i = 0; i < 30; ++i) probes.push_back(corridor::normal_track(rng, "p" + std::to_string(i)));
    for (int i = 0; i < 10; ++i) probes.push_back(corridor::sharp_turn_track(rng, "s" + std::to_string(i)));
    const auto a = score_tracks(m, probes), b = score_tracks(loaded, probes);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].rho1.has_value() == b[i].rho1.has_value());
        REQUIRE(a[i].rho2.has_value() == b[i].rho2.has_value());
        if (a[i].rho1) CHECK(a[i].rho1->rho1 == b[i].rho1->rho1);
        if (a[i].rho2) CHECK(a[i].rho2->rho2 == b[i].rho2->rho2);
        CHECK(a[i].novel1 == b[i].novel1);
        CHECK(a[i].novel2 == b[i].novel2);
    }
}

TEST_CASE("load errors") {
    const std::string bytes = model_bytes();
    CHECK_THROWS_AS(load_model(bytes.substr(0, bytes.size() / 2)), LoadError);
    try {
        load_model(bytes.substr(0, 1000));
        FAIL("expected a load error");
    } catch (const LoadError& e) {
        CHECK(e.offset() > 0);
    }
    CHECK_THROWS_AS(load_model(""), LoadError);
    CHECK_THROWS_AS(load_model("[]"), LoadError);

    std::string other = bytes;
    const std::string key = "\"format_version\":1";
    const auto at = other.find(key);
    REQUIRE(at != std::string::npos);
    other.replace(at, key.size(), "\"format_version\":2");
    try {
        load_model(other);
        FAIL("expected a version error");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("version 2") != std::string::npos);
    }
}

TEST_CASE("training is deterministic") {
    const auto again = train(corpus());
    CHECK(save_model(again) == model_bytes());
}

TEST_CASE("scores csv") {
    const auto& m = corridor_model();
    std::mt19937_64 rng(2);
    Track tiny;
    tiny.id = "has,comma";
    for (int f = 0; f < 10; ++f) tiny.points.push_back({f, 100.0 + f, corridor::a_y});
    std::vector<Track> tracks{corridor::normal_track(rng, "n0"), tiny};
    const auto recs = score_tracks(m, tracks);
    std::ostringstream out;
    write_scores_csv(out, recs);
    std::istringstream in(out.str());
    std::string header, line1, line2, extra;
    std::getline(in, header);
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(header == "track_id,rho1,rho2,novel1,novel2,worst_i,worst_j");
    CHECK(line1.rfind("n0,", 0) == 0);
    CHECK(std::count(line1.begin(), line1.end(), ',') == 6);
    CHECK(line2 == "\"has,comma\",,,unscorable,unscorable,,");
    CHECK_FALSE(std::getline(in, extra));

    // Printed values parse back to the same doubles.
    std::istringstream fields(line1);
    std::string id, r1, r2;
    std::getline(fields, id, ',');
    std::getline(fields, r1, ',');
    std::getline(fields, r2, ',');
    CHECK(std::stod(r1) == recs[0].rho1->rho1);
    CHECK(std::stod(r2) == recs[0].rho2->rho2);
}
