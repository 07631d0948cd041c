#pragma once

#include "trackwatch/image.hpp"
#include "trackwatch/pipeline.hpp"

#include <optional>
#include <span>
#include <string>

namespace httplib {
class Server;
}

namespace trackwatch {

// Resamples a polyline at unit arc-length steps (plus the final vertex), with
// frame indices 0, 1, 2, ...
Track densify_polyline(std::span<const Point2> points, const std::string& id = "probe");

struct HttpReply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Request handlers over an immutable model. Each handler is a pure function of
// its input, so the same request always produces the same reply.
class ScoringService {
public:
    explicit ScoringService(SceneModel model, std::optional<Frame> scene = std::nullopt);

    HttpReply score(const std::string& request_body) const;
    HttpReply meta() const;
    // 1-based scale index; nullopt selects the smallest scale.
    HttpReply primitives(const std::optional<std::string>& scale) const;
    HttpReply scene() const;
    HttpReply health() const;

    // Registers every endpoint (plus CORS preflight) on `server`.
    void install(httplib::Server& server) const;

    const SceneModel& model() const noexcept { return model_; }

private:
    SceneModel model_;
    std::optional<Frame> scene_;
};

// Blocking; returns false if the address cannot be bound.
bool serve(const ScoringService& service, const std::string& host, int port);

} // namespace trackwatch
