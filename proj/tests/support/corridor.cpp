#include "corridor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corridor {

std::vector<Point2> path_a() { return {{20.0, a_y}, {380.0, a_y}}; }

std::vector<Point2> path_b() { return {{b_x, 20.0}, {b_x, b_corner_y}, {20.0, b_corner_y}}; }

double polyline_length(const std::vector<Point2>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        len += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
    return len;
}

Point2 point_at(const std::vector<Point2>& path, double s) {
    s = std::max(0.0, s);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double seg = std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
        if (s <= seg || i + 1 == path.size()) {
            const double t = seg > 0.0 ? std::min(s / seg, 1.0) : 0.0;
            return {path[i - 1].x + t * (path[i].x - path[i - 1].x), path[i - 1].y + t * (path[i].y - path[i - 1].y)};
        }
        s -= seg;
    }
    return path.back();
}

double distance_to_path(const std::vector<Point2>& path, Point2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double vx = path[i].x - path[i - 1].x, vy = path[i].y - path[i - 1].y;
        const double wx = p.x - path[i - 1].x, wy = p.y - path[i - 1].y;
        const double t = std::clamp((vx * wx + vy * wy) / (vx * vx + vy * vy), 0.0, 1.0);
        best = std::min(best, std::hypot(wx - t * vx, wy - t * vy));
    }
    return best;
}

namespace {

// Unit left normal of the path segment containing arc position s.
Point2 normal_at(const std::vector<Point2>& path, double s) {
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double dx = path[i].x - path[i - 1].x, dy = path[i].y - path[i - 1].y;
        const double seg = std::hypot(dx, dy);
        if (s <= seg || i + 1 == path.size()) return {-dy / seg, dx / seg};
        s -= seg;
    }
    return {0.0, 1.0};
}

} // namespace

Track walk(std::mt19937_64& rng, const std::vector<Point2>& path, double s0, double s1, const std::string& id,
           const WalkNoise& noise) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double offset = noise.lateral_sd * gauss(rng);
    const double dir = s1 >= s0 ? 1.0 : -1.0;
    const double total = std::abs(s1 - s0);
    const auto steps = static_cast<std::size_t>(std::floor(total / noise.step));
    Track t;
    t.id = id;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double s = s0 + dir * std::min(total, static_cast<double>(i) * noise.step);
        const Point2 c = point_at(path, s);
        const Point2 n = normal_at(path, s);
        t.points.push_back({static_cast<std::int64_t>(i), c.x + offset * n.x + noise.jitter_sd * gauss(rng),
                            c.y + offset * n.y + noise.jitter_sd * gauss(rng)});
    }
    return t;
}

Track walk_route(std::mt19937_64& rng, const std::vector<Point2>& route, const std::string& id,
                 const WalkNoise& noise) {
    return walk(rng, route, 0.0, polyline_length(route), id, noise);
}

Track normal_track(std::mt19937_64& rng, const std::string& id, double min_length) {
    std::bernoulli_distribution coin(0.5);
    const auto path = coin(rng) ? path_a() : path_b();
    const double len = polyline_length(path);
    std::uniform_real_distribution<double> span(min_length, len);
    const double l = span(rng);
    std::uniform_real_distribution<double> start(0.0, len - l);
    const double s0 = start(rng);
    return coin(rng) ? walk(rng, path, s0, s0 + l, id) : walk(rng, path, s0 + l, s0, id);
}

std::vector<Track> normal_corpus(std::uint64_t seed, std::size_t n, const std::string& prefix) {
    std::mt19937_64 rng(seed);
    std::vector<Track> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(normal_track(rng, prefix + trackwatch::make_track_id(i)));
    return out;
}

Track sharp_turn_track(std::mt19937_64& rng, const std::string& id) {
    std::bernoulli_distribution coin(0.5);
    // Turn points on A well clear of the crossing at x = b_x.
    std::uniform_real_distribution<double> west(100.0, 190.0);
    std::uniform_real_distribution<double> east(310.0, 330.0);
    const double xt = coin(rng) ? west(rng) : east(rng);
    const bool eastbound = coin(rng);
    const double x0 = eastbound ? std::max(20.0, xt - 120.0) : std::min(380.0, xt + 120.0);
    const double yt = coin(rng) ? a_y - 110.0 : a_y + 110.0;
    return walk_route(rng, {{x0, a_y}, {xt, a_y}, {xt, yt}}, id);
}

Track corner_track(std::mt19937_64& rng, const std::string& id) {
    const auto path = path_b();
    const double corner = b_corner_y - 20.0;
    std::uniform_real_distribution<double> before(60.0, 180.0), after(60.0, 180.0);
    const double s0 = corner - before(rng), s1 = corner + after(rng);
    std::bernoulli_distribution coin(0.5);
    return coin(rng) ? walk(rng, path, s0, s1, id) : walk(rng, path, s1, s0, id);
}

Track detour_track(std::mt19937_64& rng, const std::string& id) {
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> jitter(-10.0, 10.0);
    // Out to the far end, back most of the way, then out again.
    const double near = 40.0 + jitter(rng), far = 340.0 + jitter(rng), back = 100.0 + jitter(rng);
    std::vector<Point2> route{{near, a_y}, {far, a_y}, {back, a_y}, {far + 30.0, a_y}};
    if (coin(rng))
        for (auto& p : route) p.x = corridor::scene_size - p.x;
    return walk_route(rng, route, id);
}

} // namespace corridor
