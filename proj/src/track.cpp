#include "trackwatch/track.hpp"

#include "trackwatch/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace trackwatch {

using nlohmann::json;

void validate_track(const Track& track) {
    if (track.points.empty()) {
        throw ValidationError("track '" + track.id + "' has no points");
    }
    std::int64_t prev = -1;
    for (const auto& p : track.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw ValidationError("track '" + track.id + "' has a non-finite coordinate");
        }
        if (p.frame < 0) {
            throw ValidationError("track '" + track.id + "' has a negative frame index");
        }
        if (p.frame <= prev) {
            throw ValidationError("track '" + track.id + "' frame indices are not strictly increasing");
        }
        prev = p.frame;
    }
}

void FilterConfig::validate() const {
    if (min_length < 2) throw ValidationError("min_length must be >= 2");
    if (!(min_variance > 0.0)) throw ValidationError("min_variance must be > 0");
}

namespace {

Track parse_track_line(const std::string& line, std::size_t line_no) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("line " + std::to_string(line_no) + ": " + why, line_no);
    };
    if (!doc.is_object()) throw fail("expected a JSON object");
    auto id = doc.find("id");
    auto pts = doc.find("points");
    if (id == doc.end() || !id->is_string()) throw fail("missing string field 'id'");
    if (pts == doc.end() || !pts->is_array()) throw fail("missing array field 'points'");

    Track track;
    track.id = id->get<std::string>();
    track.points.reserve(pts->size());
    for (const auto& p : *pts) {
        if (!p.is_array() || p.size() != 3 || !p[0].is_number_integer() || !p[1].is_number()
            || !p[2].is_number()) {
            throw fail("each point must be [frame:int, x:number, y:number]");
        }
        track.points.push_back({p[0].get<std::int64_t>(), p[1].get<double>(), p[2].get<double>()});
    }
    return track;
}

} // namespace

std::vector<Track> load_tracks(std::istream& in) {
    std::vector<Track> tracks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        tracks.push_back(parse_track_line(line, line_no));
        validate_track(tracks.back());
    }
    if (in.bad()) throw IoError("read failure while loading tracks");
    return tracks;
}

std::vector<Track> load_tracks_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open track file '" + path + "'");
    return load_tracks(in);
}

void save_tracks(std::ostream& out, const std::vector<Track>& tracks) {
    char buf[64];
    for (const auto& t : tracks) {
        out << "{\"id\":" << json(t.id).dump() << ",\"points\":[";
        for (std::size_t i = 0; i < t.points.size(); ++i) {
            const auto& p = t.points[i];
            std::snprintf(buf, sizeof buf, "[%lld,%.17g,%.17g]", static_cast<long long>(p.frame), p.x, p.y);
            if (i) out << ',';
            out << buf;
        }
        out << "]}\n";
    }
}

void save_tracks_file(const std::string& path, const std::vector<Track>& tracks) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    save_tracks(out, tracks);
    if (!out) throw IoError("write failure on '" + path + "'");
}

double track_variance(const Track& track) {
    const std::size_t n = track.points.size();
    if (n < 2) {
        throw DegenerateInput("track '" + track.id + "' needs at least 2 points for a variance");
    }
    // Shifted accumulation keeps the result translation invariant in floating point.
    const double ox = track.points.front().x;
    const double oy = track.points.front().y;
    double sx = 0.0, sy = 0.0;
    for (const auto& p : track.points) {
        sx += p.x - ox;
        sy += p.y - oy;
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : track.points) {
        const double dx = (p.x - ox) - mx;
        const double dy = (p.y - oy) - my;
        ss += dx * dx + dy * dy;
    }
    return ss / static_cast<double>(n - 1);
}

std::vector<Track> filter_tracks(const std::vector<Track>& tracks, const FilterConfig& cfg) {
    std::vector<Track> kept;
    for (const auto& t : tracks) {
        if (t.points.size() < cfg.min_length || t.points.size() < 2) continue;
        if (track_variance(t) >= cfg.min_variance) kept.push_back(t);
    }
    return kept;
}

std::string make_track_id(std::size_t counter) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", counter);
    return buf;
}

} // namespace trackwatch
