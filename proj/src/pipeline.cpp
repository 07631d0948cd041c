#include "trackwatch/pipeline.hpp"

#include "trackwatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace trackwatch {

void ThresholdConfig::validate() const {
    if (!(quantile > 0.0 && quantile < 1.0)) throw ValidationError("quantile must lie in (0, 1)");
}

void TrainConfig::validate() const {
    if (scales.empty()) throw ValidationError("at least one scale is required");
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (!(scales[k] > 0.0)) throw ValidationError("scales must be > 0");
        if (k > 0 && !(scales[k] > scales[k - 1])) throw ValidationError("scales must be strictly increasing");
    }
    ScaleConfig{scales.front(), delta_q, delta_theta}.validate();
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be > 0");
    if (!(pursuit.alpha > 0.0)) throw ValidationError("pursuit alpha must be > 0");
    filter.validate();
    threshold.validate();
}

double select_threshold(std::vector<double> scores, double quantile) {
    if (scores.empty()) throw ValidationError("cannot select a threshold from no scores");
    std::sort(scores.begin(), scores.end());
    // Guard against n*q landing a hair under an integer.
    const double nq = static_cast<double>(scores.size()) * quantile;
    auto idx = static_cast<std::size_t>(std::floor(nq + 1e-9));
    idx = std::min(idx, scores.size() - 1);
    return scores[idx];
}

SceneModel train(const std::vector<Track>& tracks, const TrainConfig& cfg) {
    cfg.validate();
    const auto filtered = filter_tracks(tracks, cfg.filter);
    if (filtered.empty()) throw ValidationError("no tracks survive filtering");

    SceneModel model;
    model.meta.config = cfg;
    model.meta.input_tracks = tracks.size();
    model.meta.filtered_tracks = filtered.size();

    const std::size_t n = filtered.size();
    std::vector<std::vector<Sequence>> seqs(cfg.scales.size(), std::vector<Sequence>(n));
    std::vector<ChainModel> chains;
    std::vector<EmpiricalCdf> cdfs;

    for (std::size_t k = 0; k < cfg.scales.size(); ++k) {
        const ScaleConfig scale{cfg.scales[k], cfg.delta_q, cfg.delta_theta};
        std::vector<Tracklet> tracklets;
        for (const auto& t : filtered) {
            auto ts = extract_tracklets(t, scale);
            tracklets.insert(tracklets.end(), std::make_move_iterator(ts.begin()), std::make_move_iterator(ts.end()));
        }
        if (tracklets.empty()) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "scale %zu (delta_d = %g) produced no tracklets", k + 1, scale.delta_d);
            throw ValidationError(buf);
        }
        PrimitiveVocabulary vocab = cluster_tracklets(tracklets, scale);

        std::vector<Sequence> nonempty;
        for (std::size_t i = 0; i < n; ++i) {
            auto c = canonize_track(filtered[i], vocab);
            if (c.ok()) {
                seqs[k][i] = std::move(c.sequence);
                nonempty.push_back(seqs[k][i]);
            }
        }
        ChainModel chain = fit_chain(nonempty, vocab.size(), cfg.alpha);
        chain.vocab = vocab;
        std::vector<double> r;
        r.reserve(nonempty.size());
        for (const auto& s : nonempty) r.push_back(*average_loglik(chain, s));

        model.meta.scales.push_back({scale.delta_d, tracklets.size(), vocab.size(), nonempty.size()});
        chains.push_back(std::move(chain));
        cdfs.emplace_back(std::move(r));
    }
    model.ensemble = make_ensemble(std::move(chains), std::move(cdfs));
    model.pursuit = fit_pursuit(seqs[0], model.finest_vocab(), cfg.pursuit);

    std::vector<double> rho1s, rho2s;
    std::vector<Sequence> per_scale(cfg.scales.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (seqs[0][i].empty()) {
            ++model.meta.unscorable;
            continue;
        }
        for (std::size_t k = 0; k < cfg.scales.size(); ++k) per_scale[k] = seqs[k][i];
        rho1s.push_back(conformance_rho1_from_sequences(model.ensemble, per_scale).rho1);
        if (seqs[0][i].size() >= 2) rho2s.push_back(conformance_rho2_from_sequence(model.pursuit, seqs[0][i]).rho2);
    }
    model.meta.scored_rho1 = rho1s.size();
    model.meta.scored_rho2 = rho2s.size();
    model.ensemble.threshold_r1 = select_threshold(std::move(rho1s), cfg.threshold.quantile);
    model.pursuit.threshold_r2 = select_threshold(std::move(rho2s), cfg.threshold.quantile);
    return model;
}

ScoreRecord score_track(const SceneModel& model, const Track& track) {
    ScoreRecord rec;
    rec.track_id = track.id;
    auto r1 = conformance_rho1(model.ensemble, track);
    if (!r1.scorable) return rec;
    rec.novel1 = r1.rho1 < model.ensemble.threshold_r1;
    auto r2 = conformance_rho2_from_sequence(model.pursuit, r1.finest_sequence);
    rec.rho1 = std::move(r1);
    if (r2.scorable) {
        rec.novel2 = r2.rho2 < model.pursuit.threshold_r2;
        rec.rho2 = std::move(r2);
        rec.status = ScoreStatus::ok;
    } else {
        rec.status = ScoreStatus::rho2_unscorable;
    }
    return rec;
}

std::vector<ScoreRecord> score_tracks(const SceneModel& model, const std::vector<Track>& tracks) {
    std::vector<ScoreRecord> out;
    out.reserve(tracks.size());
    for (const auto& t : tracks) out.push_back(score_track(model, t));
    return out;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> records) {
    out << "track_id,rho1,rho2,novel1,novel2,worst_i,worst_j\n";
    for (const auto& r : records) {
        out << csv_field(r.track_id) << ',';
        out << (r.rho1 ? fmt_double(r.rho1->rho1) : "") << ',';
        out << (r.rho2 ? fmt_double(r.rho2->rho2) : "") << ',';
        out << (r.rho1 ? (r.novel1 ? "true" : "false") : "unscorable") << ',';
        out << (r.rho2 ? (r.novel2 ? "true" : "false") : "unscorable") << ',';
        if (r.rho2) out << r.rho2->worst.pos_a << ',' << r.rho2->worst.pos_b;
        else out << ',';
        out << '\n';
    }
}

} // namespace trackwatch
