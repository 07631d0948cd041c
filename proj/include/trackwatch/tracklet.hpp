#pragma once

#include "trackwatch/angles.hpp"
#include "trackwatch/track.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trackwatch {

// Local linear approximation of a track segment of fixed arc length.
struct Tracklet {
    double x_hat = 0.0;
    double y_hat = 0.0;
    double theta = 0.0;  // undirected, [0, pi)
    std::string source_track;
    std::size_t segment_index = 0;
};

struct Primitive {
    double X = 0.0;
    double Y = 0.0;
    double Theta = 0.0;  // [0, pi)
    std::size_t member_count = 1;
};

struct ScaleConfig {
    double delta_d = 50.0;           // segment arc length, px
    double delta_q = 25.0;           // spatial cluster radius, px
    double delta_theta = pi / 16.0;  // directional cluster radius, rad

    void validate() const;
};

struct PrimitiveVocabulary {
    ScaleConfig scale;
    std::vector<Primitive> primitives;

    std::size_t size() const noexcept { return primitives.size(); }
};

// Splits the polyline into segments of arc length delta_d whose starts are
// delta_d/2 apart, snapping boundaries to the nearest sample. A trailing
// remainder shorter than delta_d/2 is dropped, as are segments whose end
// points coincide. Empty when the track is shorter than delta_d.
std::vector<Tracklet> extract_tracklets(const Track& track, const ScaleConfig& scale);

struct Clustering {
    PrimitiveVocabulary vocab;
    std::vector<std::size_t> labels;  // primitive index per input tracklet
};

// Seeded clustering: seeds are taken in (source_track, segment_index) order;
// each cluster admits unclustered tracklets within delta_q and delta_theta of
// both the seed and the running centre until the membership stops changing.
Clustering cluster_tracklets_with_labels(std::span<const Tracklet> tracklets, const ScaleConfig& scale);
PrimitiveVocabulary cluster_tracklets(std::span<const Tracklet> tracklets, const ScaleConfig& scale);

// (X - x)^2 + (Y - y)^2 + [dq / tan(dtheta) * tan(dev)]^2; +inf when the
// directions are orthogonal.
double assignment_cost(const Primitive& p, const Tracklet& t, const ScaleConfig& scale);

// Index of the cheapest primitive (lowest index on ties); nullopt when every
// primitive is orthogonal to the tracklet.
std::optional<std::size_t> assign_tracklet(const Tracklet& t, const PrimitiveVocabulary& vocab);

enum class CanonizeStatus { ok, too_short, unassignable };

struct Canonization {
    CanonizeStatus status = CanonizeStatus::too_short;
    std::vector<std::size_t> sequence;
    std::vector<Tracklet> tracklets;

    bool ok() const noexcept { return status == CanonizeStatus::ok; }
};

// Consecutive repeats are kept.
Canonization canonize_track(const Track& track, const PrimitiveVocabulary& vocab);

} // namespace trackwatch
