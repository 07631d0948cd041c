#include "trackwatch/tracklet.hpp"

#include "trackwatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace trackwatch {

void ScaleConfig::validate() const {
    if (!(delta_d > 0.0)) throw ValidationError("delta_d must be > 0");
    if (!(delta_q > 0.0)) throw ValidationError("delta_q must be > 0");
    if (!(delta_theta > 0.0 && delta_theta < pi / 4)) {
        throw ValidationError("delta_theta must lie in (0, pi/4)");
    }
}

namespace {

std::size_t nearest_sample(const std::vector<double>& arc, double target) {
    auto it = std::lower_bound(arc.begin(), arc.end(), target);
    if (it == arc.end()) return arc.size() - 1;
    auto idx = static_cast<std::size_t>(it - arc.begin());
    if (idx > 0 && target - arc[idx - 1] <= arc[idx] - target) --idx;
    return idx;
}

} // namespace

std::vector<Tracklet> extract_tracklets(const Track& track, const ScaleConfig& scale) {
    std::vector<Tracklet> out;
    const auto& pts = track.points;
    if (pts.size() < 2) return out;

    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        arc[i] = arc[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    }
    const double total = arc.back();
    const double step = 0.5 * scale.delta_d;
    const double slack = 1e-9 * std::max(1.0, total);

    for (std::size_t i = 0;; ++i) {
        const double start = static_cast<double>(i) * step;
        if (start + scale.delta_d > total + slack) break;
        const std::size_t s = nearest_sample(arc, start);
        const std::size_t e = nearest_sample(arc, start + scale.delta_d);
        if (e <= s) continue;
        const double cx = pts[e].x - pts[s].x;
        const double cy = pts[e].y - pts[s].y;
        if (cx == 0.0 && cy == 0.0) continue;
        double sx = 0.0, sy = 0.0;
        for (std::size_t j = s; j <= e; ++j) {
            sx += pts[j].x;
            sy += pts[j].y;
        }
        const double n = static_cast<double>(e - s + 1);
        out.push_back({sx / n, sy / n, mod_pi(std::atan2(cy, cx)), track.id, i});
    }
    return out;
}

namespace {

struct Centre {
    double x, y, theta;
};

bool within(const Centre& c, const Tracklet& t, const ScaleConfig& scale) {
    const double dx = t.x_hat - c.x, dy = t.y_hat - c.y;
    return dx * dx + dy * dy <= scale.delta_q * scale.delta_q && angular_distance(t.theta, c.theta) <= scale.delta_theta;
}

Centre centre_of(std::span<const Tracklet> all, const std::vector<std::size_t>& members, double theta_c) {
    double sx = 0.0, sy = 0.0;
    std::vector<double> thetas;
    thetas.reserve(members.size());
    for (auto k : members) {
        sx += all[k].x_hat;
        sy += all[k].y_hat;
        thetas.push_back(all[k].theta);
    }
    const double n = static_cast<double>(members.size());
    return {sx / n, sy / n, circular_mean_update(theta_c, thetas)};
}

class CellIndex {
public:
    // `order` lists tracklet indices in canonical order; cells keep it, so
    // member sums do not depend on how the input was arranged.
    CellIndex(std::span<const Tracklet> ts, const std::vector<std::size_t>& order, double cell) : cell_(cell) {
        rank_.resize(ts.size());
        for (std::size_t r = 0; r < order.size(); ++r) {
            rank_[order[r]] = r;
            cells_[key(ts[order[r]].x_hat, ts[order[r]].y_hat)].push_back(order[r]);
        }
    }

    // Indices in cells overlapping the delta_q disc around (x, y), in
    // canonical order.
    std::vector<std::size_t> near(double x, double y) const {
        std::vector<std::size_t> out;
        const auto cx = static_cast<long long>(std::floor(x / cell_));
        const auto cy = static_cast<long long>(std::floor(y / cell_));
        for (long long j = cy - 1; j <= cy + 1; ++j) {
            for (long long i = cx - 1; i <= cx + 1; ++i) {
                auto it = cells_.find(pack(i, j));
                if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
        std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return rank_[a] < rank_[b]; });
        return out;
    }

private:
    static long long pack(long long i, long long j) { return (i << 32) ^ (j & 0xffffffffLL); }
    long long key(double x, double y) const {
        return pack(static_cast<long long>(std::floor(x / cell_)), static_cast<long long>(std::floor(y / cell_)));
    }

    double cell_;
    std::vector<std::size_t> rank_;
    std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

constexpr int max_inner_iterations = 100;

} // namespace

Clustering cluster_tracklets_with_labels(std::span<const Tracklet> tracklets, const ScaleConfig& scale) {
    scale.validate();
    if (tracklets.empty()) throw ValidationError("cannot cluster an empty tracklet set");
    for (const auto& t : tracklets) {
        if (!(t.theta >= 0.0 && t.theta < pi) || !std::isfinite(t.x_hat) || !std::isfinite(t.y_hat)) {
            throw ValidationError("tracklet outside its domain (theta must be in [0, pi))");
        }
    }

    std::vector<std::size_t> order(tracklets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = tracklets[a];
        const auto& tb = tracklets[b];
        if (ta.source_track != tb.source_track) return ta.source_track < tb.source_track;
        return ta.segment_index < tb.segment_index;
    });

    const CellIndex index(tracklets, order, scale.delta_q);
    constexpr auto unlabelled = std::numeric_limits<std::size_t>::max();
    Clustering result;
    result.vocab.scale = scale;
    result.labels.assign(tracklets.size(), unlabelled);

    for (std::size_t seed_idx : order) {
        if (result.labels[seed_idx] != unlabelled) continue;
        const Tracklet& seed = tracklets[seed_idx];
        const Centre seed_c{seed.x_hat, seed.y_hat, seed.theta};
        const auto pool = index.near(seed.x_hat, seed.y_hat);

        Centre centre = seed_c;
        std::vector<std::size_t> members;
        bool converged = false;
        for (int it = 0; it < max_inner_iterations; ++it) {
            std::vector<std::size_t> admitted;
            for (auto k : pool) {
                if (result.labels[k] != unlabelled) continue;
                if (k == seed_idx || (within(seed_c, tracklets[k], scale) && within(centre, tracklets[k], scale))) {
                    admitted.push_back(k);
                }
            }
            if (admitted == members) {
                converged = true;
                break;
            }
            members = std::move(admitted);
            centre = centre_of(tracklets, members, centre.theta);
        }
        if (!converged) {
            // Shed members outside the final centre until the radius holds.
            for (;;) {
                std::vector<std::size_t> kept;
                for (auto k : members) {
                    if (k == seed_idx || within(centre, tracklets[k], scale)) kept.push_back(k);
                }
                if (kept.size() == members.size()) break;
                members = std::move(kept);
                centre = members.size() == 1 ? seed_c : centre_of(tracklets, members, centre.theta);
            }
        }

        const std::size_t label = result.vocab.primitives.size();
        for (auto k : members) result.labels[k] = label;
        result.vocab.primitives.push_back({centre.x, centre.y, centre.theta, members.size()});
    }
    return result;
}

PrimitiveVocabulary cluster_tracklets(std::span<const Tracklet> tracklets, const ScaleConfig& scale) {
    return cluster_tracklets_with_labels(tracklets, scale).vocab;
}

double assignment_cost(const Primitive& p, const Tracklet& t, const ScaleConfig& scale) {
    const double dev = angular_distance(t.theta, p.Theta);
    if (dev >= pi / 2 - 1e-12) return std::numeric_limits<double>::infinity();
    const double dx = p.X - t.x_hat, dy = p.Y - t.y_hat;
    const double ang = scale.delta_q / std::tan(scale.delta_theta) * std::tan(dev);
    return dx * dx + dy * dy + ang * ang;
}

std::optional<std::size_t> assign_tracklet(const Tracklet& t, const PrimitiveVocabulary& vocab) {
    if (vocab.primitives.empty()) throw ValidationError("cannot assign against an empty vocabulary");
    std::optional<std::size_t> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < vocab.primitives.size(); ++j) {
        const double c = assignment_cost(vocab.primitives[j], t, vocab.scale);
        if (c < best_cost) {
            best_cost = c;
            best = j;
        }
    }
    return best;
}

Canonization canonize_track(const Track& track, const PrimitiveVocabulary& vocab) {
    Canonization out;
    out.tracklets = extract_tracklets(track, vocab.scale);
    if (out.tracklets.empty()) {
        out.status = CanonizeStatus::too_short;
        return out;
    }
    out.sequence.reserve(out.tracklets.size());
    for (const auto& t : out.tracklets) {
        const auto j = assign_tracklet(t, vocab);
        if (!j) {
            out.status = CanonizeStatus::unassignable;
            out.sequence.clear();
            return out;
        }
        out.sequence.push_back(*j);
    }
    out.status = CanonizeStatus::ok;
    return out;
}

} // namespace trackwatch
