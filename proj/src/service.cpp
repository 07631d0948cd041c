#include "trackwatch/service.hpp"

#include "trackwatch/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>

namespace trackwatch {

using nlohmann::json;

Track densify_polyline(std::span<const Point2> points, const std::string& id) {
    Track track;
    track.id = id;
    if (points.empty()) return track;
    std::int64_t frame = 0;
    track.points.push_back({frame++, points[0].x, points[0].y});
    double carried = 0.0;  // arc length walked since the last emitted sample
    for (std::size_t i = 1; i < points.size(); ++i) {
        const Point2 a = points[i - 1], b = points[i];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len == 0.0) continue;
        double s = 1.0 - carried;
        while (s <= len + 1e-12) {
            const double f = s / len;
            track.points.push_back({frame++, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
            s += 1.0;
        }
        carried = len - (s - 1.0);
    }
    const auto& last = track.points.back();
    const Point2 end = points.back();
    if (std::hypot(end.x - last.x, end.y - last.y) > 1e-9) track.points.push_back({frame, end.x, end.y});
    return track;
}

namespace {

HttpReply json_reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpReply error_reply(int status, const std::string& message) {
    return json_reply(status, {{"error", message}});
}

json primitive_json(const Primitive& p) {
    return {{"X", p.X}, {"Y", p.Y}, {"Theta", p.Theta}, {"member_count", p.member_count}};
}

} // namespace

ScoringService::ScoringService(SceneModel model, std::optional<Frame> scene)
    : model_(std::move(model)), scene_(std::move(scene)) {}

HttpReply ScoringService::score(const std::string& request_body) const {
    json req;
    try {
        req = json::parse(request_body);
    } catch (const json::exception& e) {
        return error_reply(400, std::string("request body is not valid JSON: ") + e.what());
    }
    if (!req.is_object() || !req.contains("points") || !req["points"].is_array()) {
        return error_reply(400, "request needs a 'points' array of [x, y] pairs");
    }
    std::vector<Point2> pts;
    for (const auto& p : req["points"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            return error_reply(400, "each point must be an [x, y] pair of numbers");
        }
        const Point2 q{p[0].get<double>(), p[1].get<double>()};
        if (!std::isfinite(q.x) || !std::isfinite(q.y)) return error_reply(400, "points must be finite");
        pts.push_back(q);
    }
    if (pts.size() < 2) return error_reply(400, "at least 2 points are required");

    const Track track = densify_polyline(pts);
    const ScoreRecord rec = score_track(model_, track);
    if (!rec.rho1) {
        return json_reply(422, {{"error", "unscorable"},
                                {"reason", "track too short for the smallest scale (needs at least one tracklet)"}});
    }

    json per_scale = json::array();
    for (const auto& s : rec.rho1->per_scale) {
        per_scale.push_back({{"scale", s.delta_d}, {"R", s.r}, {"R_hat", s.r_hat}});
    }
    json resp = {{"rho1", rec.rho1->rho1},
                 {"per_scale", per_scale},
                 {"novel1", rec.novel1},
                 {"novel2", rec.novel2},
                 {"canonized", rec.rho1->finest_sequence},
                 {"rho2", nullptr}};
    if (rec.rho2) {
        const auto& w = rec.rho2->worst;
        const auto& vocab = model_.finest_vocab();
        json pa = primitive_json(vocab.primitives[w.from]);
        json pb = primitive_json(vocab.primitives[w.to]);
        pa["index"] = w.from;
        pb["index"] = w.to;
        resp["rho2"] = rec.rho2->rho2;
        resp["worst_pair"] = {{"pos_a", w.pos_a}, {"pos_b", w.pos_b}, {"prim_a", pa}, {"prim_b", pb}};
    }
    return json_reply(200, resp);
}

HttpReply ScoringService::meta() const {
    const auto& m = model_.meta;
    json scales = json::array();
    json counts = json::array();
    for (const auto& ch : model_.ensemble.chains) {
        scales.push_back(ch.vocab.scale.delta_d);
        counts.push_back(ch.vocab.size());
    }
    return json_reply(200, {{"format_version", m.format_version},
                            {"input_tracks", m.input_tracks},
                            {"filtered_tracks", m.filtered_tracks},
                            {"scored_rho1", m.scored_rho1},
                            {"scored_rho2", m.scored_rho2},
                            {"unscorable", m.unscorable},
                            {"scales", scales},
                            {"primitive_counts", counts},
                            {"quantile", m.config.threshold.quantile},
                            {"threshold_r1", model_.ensemble.threshold_r1},
                            {"threshold_r2", model_.pursuit.threshold_r2}});
}

HttpReply ScoringService::primitives(const std::optional<std::string>& scale) const {
    std::size_t k = 1;
    if (scale) {
        try {
            std::size_t used = 0;
            const long v = std::stol(*scale, &used);
            if (used != scale->size() || v < 1) return error_reply(404, "unknown scale '" + *scale + "'");
            k = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            return error_reply(404, "unknown scale '" + *scale + "'");
        }
    }
    if (k > model_.ensemble.chains.size()) return error_reply(404, "unknown scale " + std::to_string(k));
    json arr = json::array();
    for (const auto& p : model_.ensemble.chains[k - 1].vocab.primitives) arr.push_back(primitive_json(p));
    return json_reply(200, arr);
}

HttpReply ScoringService::scene() const {
    if (!scene_) return error_reply(404, "no scene image configured");
    return {200, "image/png", encode_png(*scene_)};
}

HttpReply ScoringService::health() const { return {200, "text/plain", "ok"}; }

void ScoringService::install(httplib::Server& server) const {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Post("/score", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, score(req.body));
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    server.Get("/model/meta", [this, send](const httplib::Request&, httplib::Response& res) { send(res, meta()); });
    server.Get("/model/primitives", [this, send](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> k;
        if (req.has_param("scale")) k = req.get_param_value("scale");
        send(res, primitives(k));
    });
    server.Get("/scene", [this, send](const httplib::Request&, httplib::Response& res) { send(res, scene()); });
    server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
}

bool serve(const ScoringService& service, const std::string& host, int port) {
    httplib::Server server;
    service.install(server);
    return server.listen(host, port);
}

} // namespace trackwatch
