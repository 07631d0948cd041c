#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trackwatch {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct TrackPoint {
    std::int64_t frame = 0;
    double x = 0.0;
    double y = 0.0;
};

// A time-ordered image-plane trajectory. Frames are strictly increasing and
// the point list is never empty once validated.
struct Track {
    std::string id;
    std::vector<TrackPoint> points;

    std::size_t size() const noexcept { return points.size(); }
};

// Throws ValidationError naming the track if the invariants above do not
// hold (empty, non-finite coordinate, negative or non-increasing frame).
void validate_track(const Track& track);

// Minimum track length (frames) and spatial spread for a track to count as
// informative. The default frame count corresponds to 1.2 s at 25 fps.
struct FilterConfig {
    std::size_t min_length = 30;
    double min_variance = 4.0;  // px^2

    void validate() const;
};

// JSONL track files: {"id": "...", "points": [[frame, x, y], ...]} per line.
// Blank lines are skipped. Throws ParseError (with 1-based line) on bad
// JSON/shape and ValidationError on invariant violations.
std::vector<Track> load_tracks(std::istream& in);
std::vector<Track> load_tracks_file(const std::string& path);

void save_tracks(std::ostream& out, const std::vector<Track>& tracks);
void save_tracks_file(const std::string& path, const std::vector<Track>& tracks);

// (1/(N-1)) * sum((x_i - mean_x)^2 + (y_i - mean_y)^2). Throws DegenerateInput
// for N < 2.
double track_variance(const Track& track);

std::vector<Track> filter_tracks(const std::vector<Track>& tracks, const FilterConfig& cfg);

// Zero-padded decimal identifier used for generated tracks ("000042").
std::string make_track_id(std::size_t counter);

} // namespace trackwatch
