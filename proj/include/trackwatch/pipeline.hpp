#pragma once

#include "trackwatch/markov.hpp"
#include "trackwatch/pursuit.hpp"
#include "trackwatch/track.hpp"
#include "trackwatch/tracklet.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trackwatch {

inline constexpr int model_format_version = 1;

struct ThresholdConfig {
    double quantile = 0.0005;

    void validate() const;
};

struct TrainConfig {
    std::vector<double> scales{50.0, 75.0, 110.0, 150.0};
    double delta_q = 25.0;
    double delta_theta = pi / 16.0;
    double alpha = 0.5;
    FilterConfig filter;
    ThresholdConfig threshold;
    PursuitConfig pursuit;

    void validate() const;
};

struct ScaleMeta {
    double delta_d = 0.0;
    std::size_t tracklets = 0;
    std::size_t primitives = 0;
    std::size_t sequences = 0;
};

struct TrainingMeta {
    int format_version = model_format_version;
    std::size_t input_tracks = 0;
    std::size_t filtered_tracks = 0;
    std::size_t scored_rho1 = 0;
    std::size_t scored_rho2 = 0;
    std::size_t unscorable = 0;  // too short at the smallest scale
    std::vector<ScaleMeta> scales;
    TrainConfig config;
};

// The ensemble's smallest-scale vocabulary is the pursuit model's vocabulary.
struct SceneModel {
    EnsembleModel ensemble;
    PursuitModel pursuit;
    TrainingMeta meta;

    const PrimitiveVocabulary& finest_vocab() const { return ensemble.chains.front().vocab; }
};

// (floor(n q) + 1)-th smallest score, so that at most floor(n q) scores lie
// strictly below it. Throws ValidationError on an empty list.
double select_threshold(std::vector<double> scores, double quantile);

SceneModel train(const std::vector<Track>& tracks, const TrainConfig& cfg = {});

enum class ScoreStatus { ok, rho2_unscorable, unscorable };

struct ScoreRecord {
    std::string track_id;
    ScoreStatus status = ScoreStatus::unscorable;
    std::optional<Rho1Result> rho1;
    std::optional<Rho2Result> rho2;
    bool novel1 = false;
    bool novel2 = false;
};

ScoreRecord score_track(const SceneModel& model, const Track& track);
std::vector<ScoreRecord> score_tracks(const SceneModel& model, const std::vector<Track>& tracks);

// CSV: track_id,rho1,rho2,novel1,novel2,worst_i,worst_j. worst_i/worst_j are
// the sequence positions of the worst pair. Missing scores are left empty and
// the matching verdict column reads "unscorable".
void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> records);

// Canonical JSON: sorted keys, doubles printed with 17 significant digits.
std::string save_model(const SceneModel& model);
void save_model_file(const std::string& path, const SceneModel& model);
// Throws LoadError (with byte offset where known) on malformed, truncated or
// wrong-version input.
SceneModel load_model(const std::string& bytes);
SceneModel load_model_file(const std::string& path);

} // namespace trackwatch
