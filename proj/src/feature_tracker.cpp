#include "trackwatch/feature_tracker.hpp"

#include "trackwatch/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace trackwatch {

void TrackerConfig::validate() const {
    if (window_radius < 1) throw ValidationError("window_radius must be >= 1");
    if (max_features < 1) throw ValidationError("max_features must be >= 1");
    if (pyramid_levels < 1) throw ValidationError("pyramid_levels must be >= 1");
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (!(min_eigenvalue > 0.0) || !(convergence_eps > 0.0) || !(max_residual > 0.0)) {
        throw ValidationError("tracker thresholds must be > 0");
    }
}

TrackerConfig tracker_config_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("tracker config: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("tracker config must be a JSON object");
    TrackerConfig cfg;
    try {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const auto& k = it.key();
            if (k == "window_radius") cfg.window_radius = it->get<int>();
            else if (k == "max_features") cfg.max_features = it->get<int>();
            else if (k == "min_eigenvalue") cfg.min_eigenvalue = it->get<double>();
            else if (k == "pyramid_levels") cfg.pyramid_levels = it->get<int>();
            else if (k == "max_iterations") cfg.max_iterations = it->get<int>();
            else if (k == "convergence_eps") cfg.convergence_eps = it->get<double>();
            else if (k == "max_residual") cfg.max_residual = it->get<double>();
            else throw ValidationError("tracker config: unknown key '" + k + "'");
        }
    } catch (const nlohmann::json::type_error& e) {
        throw ValidationError(std::string("tracker config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

double min_eig(double a, double b, double c) {
    // [[a, b], [b, c]]
    const double half_tr = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    return half_tr - std::sqrt(half_diff * half_diff + b * b);
}

std::vector<double> window_weights(int r) {
    const double sigma = std::max(0.5 * r, 0.5);
    std::vector<double> w(2 * r + 1);
    for (int u = -r; u <= r; ++u) w[u + r] = std::exp(-0.5 * u * u / (sigma * sigma));
    return w;
}

void check_frame_fits(const Frame& frame, int r) {
    if (frame.width() < 2 * r + 3 || frame.height() < 2 * r + 3) {
        throw DegenerateInput("frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height())
                              + " is too small for window radius " + std::to_string(r));
    }
}

} // namespace

Frame min_eigenvalue_map(const Frame& frame, int r) {
    check_frame_fits(frame, r);
    const int w = frame.width(), h = frame.height();
    Frame gxx(w, h), gyy(w, h), gxy(w, h);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double gx = 0.5 * (frame.at(x + 1, y) - frame.at(x - 1, y));
            const double gy = 0.5 * (frame.at(x, y + 1) - frame.at(x, y - 1));
            gxx.at(x, y) = gx * gx;
            gyy.at(x, y) = gy * gy;
            gxy.at(x, y) = gx * gy;
        }
    }
    const auto wt = window_weights(r);
    // Horizontal pass over rows that can contribute, then vertical pass over
    // valid centres.
    Frame hxx(w, h), hyy(w, h), hxy(w, h);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = r + 1; x < w - r - 1; ++x) {
            double axx = 0, ayy = 0, axy = 0;
            for (int u = -r; u <= r; ++u) {
                axx += wt[u + r] * gxx.at(x + u, y);
                ayy += wt[u + r] * gyy.at(x + u, y);
                axy += wt[u + r] * gxy.at(x + u, y);
            }
            hxx.at(x, y) = axx;
            hyy.at(x, y) = ayy;
            hxy.at(x, y) = axy;
        }
    }
    Frame score(w, h, 0.0);
    for (int y = r + 1; y < h - r - 1; ++y) {
        for (int x = r + 1; x < w - r - 1; ++x) {
            double a = 0, b = 0, c = 0;
            for (int v = -r; v <= r; ++v) {
                a += wt[v + r] * hxx.at(x, y + v);
                c += wt[v + r] * hyy.at(x, y + v);
                b += wt[v + r] * hxy.at(x, y + v);
            }
            score.at(x, y) = std::max(0.0, min_eig(a, b, c));
        }
    }
    return score;
}

namespace {

// Buckets accepted points on a grid of cell size r for the separation test.
class SpacingGrid {
public:
    explicit SpacingGrid(int r) : r_(r), r2_(static_cast<double>(r) * r) {}

    bool clear_of(Point2 p) const {
        const auto [cx, cy] = cell(p);
        for (int j = cy - 1; j <= cy + 1; ++j) {
            for (int i = cx - 1; i <= cx + 1; ++i) {
                auto it = cells_.find(key(i, j));
                if (it == cells_.end()) continue;
                for (const auto& q : it->second) {
                    const double dx = p.x - q.x, dy = p.y - q.y;
                    if (dx * dx + dy * dy < r2_) return false;
                }
            }
        }
        return true;
    }

    void add(Point2 p) {
        const auto [cx, cy] = cell(p);
        cells_[key(cx, cy)].push_back(p);
    }

private:
    std::pair<int, int> cell(Point2 p) const {
        return {static_cast<int>(std::floor(p.x / r_)), static_cast<int>(std::floor(p.y / r_))};
    }
    static long long key(int i, int j) { return (static_cast<long long>(i) << 32) ^ static_cast<unsigned>(j); }

    int r_;
    double r2_;
    std::unordered_map<long long, std::vector<Point2>> cells_;
};

} // namespace

std::vector<Feature> select_features(const Frame& frame, const TrackerConfig& cfg, std::span<const Point2> exclude) {
    cfg.validate();
    const int r = cfg.window_radius;
    const Frame score = min_eigenvalue_map(frame, r);
    const int w = frame.width(), h = frame.height();

    std::vector<Feature> candidates;
    for (int y = r + 1; y < h - r - 1; ++y) {
        for (int x = r + 1; x < w - r - 1; ++x) {
            const double s = score.at(x, y);
            if (s < cfg.min_eigenvalue) continue;
            bool is_max = true;
            for (int j = -1; j <= 1 && is_max; ++j) {
                for (int i = -1; i <= 1; ++i) {
                    if ((i || j) && score.at(x + i, y + j) > s) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({{static_cast<double>(x), static_cast<double>(y)}, s});
        }
    }
    // Row-major scan order already breaks ties; stable sort keeps it.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Feature& a, const Feature& b) { return a.score > b.score; });

    SpacingGrid grid(r);
    for (const auto& p : exclude) grid.add(p);
    std::vector<Feature> selected;
    for (const auto& c : candidates) {
        if (static_cast<int>(selected.size()) >= cfg.max_features) break;
        if (!grid.clear_of(c.position)) continue;
        grid.add(c.position);
        selected.push_back(c);
    }
    return selected;
}

SymmetricSsd symmetric_ssd(const Frame& prev, const Frame& next, Point2 center, Point2 d, int radius) {
    SymmetricSsd out;
    for (int v = -radius; v <= radius; ++v) {
        for (int u = -radius; u <= radius; ++u) {
            const Sample a = sample_bilinear(next, center.x + u + 0.5 * d.x, center.y + v + 0.5 * d.y);
            const Sample b = sample_bilinear(prev, center.x + u - 0.5 * d.x, center.y + v - 0.5 * d.y);
            const double e = a.value - b.value;
            out.value += e * e;
            out.gradient.x += e * (a.dx + b.dx);  // 2 e * (a.dx + b.dx) / 2
            out.gradient.y += e * (a.dy + b.dy);
        }
    }
    return out;
}

namespace {

struct LevelOutcome {
    bool converged = false;
    Point2 d;
};

LevelOutcome gauss_newton(const Frame& prev, const Frame& next, Point2 c, Point2 d, const TrackerConfig& cfg) {
    const int r = cfg.window_radius;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double hxx = 0, hxy = 0, hyy = 0, bx = 0, by = 0;
        for (int v = -r; v <= r; ++v) {
            for (int u = -r; u <= r; ++u) {
                const Sample a = sample_bilinear(next, c.x + u + 0.5 * d.x, c.y + v + 0.5 * d.y);
                const Sample b = sample_bilinear(prev, c.x + u - 0.5 * d.x, c.y + v - 0.5 * d.y);
                const double e = a.value - b.value;
                const double gx = 0.5 * (a.dx + b.dx);
                const double gy = 0.5 * (a.dy + b.dy);
                hxx += gx * gx;
                hxy += gx * gy;
                hyy += gy * gy;
                bx += e * gx;
                by += e * gy;
            }
        }
        if (min_eig(hxx, hxy, hyy) <= 1e-10) return {false, d};
        const double det = hxx * hyy - hxy * hxy;
        const double sx = -(hyy * bx - hxy * by) / det;
        const double sy = -(-hxy * bx + hxx * by) / det;
        d.x += sx;
        d.y += sy;
        if (!std::isfinite(d.x) || !std::isfinite(d.y)) return {false, d};
        if (std::hypot(sx, sy) < cfg.convergence_eps) return {true, d};
    }
    return {false, d};
}

double box_min_eigenvalue(const Frame& f, Point2 c, int r) {
    double a = 0, b = 0, cc = 0;
    for (int v = -r; v <= r; ++v) {
        for (int u = -r; u <= r; ++u) {
            const Sample s = sample_bilinear(f, c.x + u, c.y + v);
            a += s.dx * s.dx;
            b += s.dx * s.dy;
            cc += s.dy * s.dy;
        }
    }
    return min_eig(a, b, cc);
}

} // namespace

StepResult track_step(const std::vector<Frame>& prev_pyr, const std::vector<Frame>& next_pyr, Point2 pos,
                      const TrackerConfig& cfg) {
    const int levels = static_cast<int>(std::min({prev_pyr.size(), next_pyr.size(),
                                                  static_cast<std::size_t>(cfg.pyramid_levels)}));
    if (levels < 1) throw ValidationError("empty pyramid");
    const int r = cfg.window_radius;
    StepResult result;
    Point2 d{0.0, 0.0};
    Point2 c;
    for (int l = levels - 1; l >= 0; --l) {
        const double scale = std::ldexp(1.0, -l);
        if (l != levels - 1) {
            d.x *= 2.0;
            d.y *= 2.0;
        }
        // The window sits on the pixel nearest the midpoint of the two
        // observations. Both frames then share one interpolation phase at
        // +-d/2, and swapping the frames reuses the same window.
        const Point2 p{pos.x * scale, pos.y * scale};
        auto midpoint = [&] { return Point2{std::round(p.x + 0.5 * d.x), std::round(p.y + 0.5 * d.y)}; };
        c = midpoint();
        for (int pass = 0; pass < 4; ++pass) {
            const auto outcome = gauss_newton(prev_pyr[l], next_pyr[l], c, d, cfg);
            d = outcome.d;
            if (!outcome.converged) {
                result.displacement = d;
                return result;
            }
            const Point2 m = midpoint();
            if (m.x == c.x && m.y == c.y) break;
            c = m;
        }
    }
    result.displacement = d;

    // Every sample of the finest window must lie on the image, and the new
    // position must keep a full window inside the frame.
    const Frame& next = next_pyr[0];
    const Frame& prev = prev_pyr[0];
    const double w = next.width() - 1.0, h = next.height() - 1.0;
    const double ext_x = r + 0.5 * std::abs(d.x), ext_y = r + 0.5 * std::abs(d.y);
    const Point2 moved{pos.x + d.x, pos.y + d.y};
    if (c.x - ext_x < 0 || c.x + ext_x > w || c.y - ext_y < 0 || c.y + ext_y > h || moved.x < r
        || moved.x > w - r || moved.y < r || moved.y > h - r) {
        return result;
    }
    if (box_min_eigenvalue(next, moved, r) < cfg.min_eigenvalue) return result;

    const auto ssd = symmetric_ssd(prev, next, c, d, r);
    const double n = static_cast<double>((2 * r + 1) * (2 * r + 1));
    result.residual = ssd.value / n;
    result.status = StepStatus::converged;
    return result;
}

StepResult track_step(const Frame& prev, const Frame& next, Point2 pos, const TrackerConfig& cfg) {
    cfg.validate();
    if (prev.width() != next.width() || prev.height() != next.height()) {
        throw ValidationError("track_step frames differ in size");
    }
    check_frame_fits(prev, cfg.window_radius);
    return track_step(build_pyramid(prev, cfg.pyramid_levels), build_pyramid(next, cfg.pyramid_levels), pos, cfg);
}

std::vector<Track> run_tracker(const std::vector<Frame>& frames, const TrackerConfig& cfg) {
    cfg.validate();
    if (frames.size() < 2) throw ValidationError("run_tracker needs at least 2 frames");
    for (const auto& f : frames) {
        if (f.width() != frames.front().width() || f.height() != frames.front().height()) {
            throw ValidationError("inconsistent frame dimensions in sequence");
        }
    }
    check_frame_fits(frames.front(), cfg.window_radius);

    struct Live {
        std::size_t birth;
        Point2 pos;
        Track track;
    };
    std::vector<Live> live;
    std::map<std::size_t, Track> finished;
    std::size_t counter = 0;

    auto spawn = [&](const Frame& frame, std::int64_t frame_idx) {
        const int room = cfg.max_features - static_cast<int>(live.size());
        if (room <= 0) return;
        std::vector<Point2> occupied;
        occupied.reserve(live.size());
        for (const auto& f : live) occupied.push_back(f.pos);
        TrackerConfig sel = cfg;
        sel.max_features = room;
        for (const auto& feat : select_features(frame, sel, occupied)) {
            Live f{counter, feat.position, Track{make_track_id(counter), {}}};
            f.track.points.push_back({frame_idx, feat.position.x, feat.position.y});
            live.push_back(std::move(f));
            ++counter;
        }
    };

    auto prev_pyr = build_pyramid(frames[0], cfg.pyramid_levels);
    spawn(frames[0], 0);
    for (std::size_t i = 1; i < frames.size(); ++i) {
        auto next_pyr = build_pyramid(frames[i], cfg.pyramid_levels);
        std::vector<Live> survivors;
        survivors.reserve(live.size());
        for (auto& f : live) {
            const auto step = track_step(prev_pyr, next_pyr, f.pos, cfg);
            if (!step.ok() || step.residual > cfg.max_residual) {
                finished.emplace(f.birth, std::move(f.track));
                continue;
            }
            f.pos = {f.pos.x + step.displacement.x, f.pos.y + step.displacement.y};
            f.track.points.push_back({static_cast<std::int64_t>(i), f.pos.x, f.pos.y});
            survivors.push_back(std::move(f));
        }
        live = std::move(survivors);
        spawn(frames[i], static_cast<std::int64_t>(i));
        prev_pyr = std::move(next_pyr);
    }
    for (auto& f : live) finished.emplace(f.birth, std::move(f.track));

    std::vector<Track> out;
    out.reserve(finished.size());
    for (auto& [birth, t] : finished) out.push_back(std::move(t));
    return out;
}

} // namespace trackwatch
