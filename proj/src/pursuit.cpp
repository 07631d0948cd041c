#include "trackwatch/pursuit.hpp"

#include "trackwatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace trackwatch {

std::vector<Triplet> pair_decompose(std::span<const std::size_t> sequence, double delta_d1) {
    std::vector<Triplet> out;
    const std::size_t m = sequence.size();
    if (m < 2) return out;
    out.reserve(m * (m - 1) / 2);
    const double half = 0.5 * delta_d1;
    for (std::size_t a = 0; a + 1 < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            out.push_back({a, b, sequence[a], sequence[b], static_cast<double>(b - a) * half});
        }
    }
    return out;
}

namespace {

double log_normal_pdf(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

struct PairAccumulator {
    std::size_t count = 0;
    double sum = 0.0;
    std::vector<double> lengths;
};

} // namespace

PursuitModel fit_pursuit(std::span<const Sequence> sequences, const PrimitiveVocabulary& vocab,
                         const PursuitConfig& cfg) {
    const std::size_t v = vocab.size();
    if (v == 0) throw ValidationError("fit_pursuit: empty vocabulary");
    if (!(cfg.alpha >= 0.0)) throw ValidationError("fit_pursuit: alpha must be >= 0");
    const double delta_d1 = vocab.scale.delta_d;

    PursuitModel model;
    model.vocab = vocab;
    model.alpha = cfg.alpha;
    model.sigma_floor = cfg.sigma_floor > 0.0 ? cfg.sigma_floor : 0.25 * delta_d1;

    std::vector<double> head_count(v, 0.0);
    std::map<PairKey, PairAccumulator> acc;
    double total = 0.0;
    bool any = false;
    for (const auto& seq : sequences) {
        if (seq.size() < 2) continue;
        any = true;
        for (auto s : seq) {
            if (s >= v) throw ValidationError("fit_pursuit: primitive index out of range");
        }
        for (const auto& t : pair_decompose(seq, delta_d1)) {
            head_count[t.from] += 1.0;
            total += 1.0;
            auto& a = acc[{t.from, t.to}];
            ++a.count;
            a.sum += t.length;
            a.lengths.push_back(t.length);
        }
    }
    if (!any) throw ValidationError("fit_pursuit: need at least one sequence of length >= 2");

    const double av = cfg.alpha * static_cast<double>(v);
    for (const auto& [key, a] : acc) {
        PairStats s;
        s.from_idx = key.first;
        s.to_idx = key.second;
        s.observation_count = a.count;
        const double prior = (head_count[key.first] + cfg.alpha) / (total + av);
        const double cond = (static_cast<double>(a.count) + cfg.alpha) / (head_count[key.first] + av);
        s.pair_log_prob = std::log(prior) + std::log(cond);
        s.mean_length = a.sum / static_cast<double>(a.count);
        double sd = 0.0;
        if (a.count > 1) {
            double ss = 0.0;
            for (double l : a.lengths) ss += (l - s.mean_length) * (l - s.mean_length);
            sd = std::sqrt(ss / static_cast<double>(a.count - 1));
        }
        s.sigma = std::max(sd, model.sigma_floor);
        model.stats.emplace(key, s);
    }

    double worst = std::numeric_limits<double>::infinity();
    for (const auto& seq : sequences) {
        if (seq.size() < 2) continue;
        for (const auto& t : pair_decompose(seq, delta_d1)) {
            const auto& s = model.stats.at({t.from, t.to});
            worst = std::min(worst, s.pair_log_prob + log_normal_pdf(t.length, s.mean_length, s.sigma));
        }
    }
    model.unseen_pair_log_prob = worst - cfg.unseen_margin;
    return model;
}

double triplet_log_prob(const PursuitModel& model, std::size_t from, std::size_t to, double length) {
    const std::size_t v = model.vocab.size();
    if (from >= v || to >= v) throw ValidationError("triplet_log_prob: primitive index out of range");
    auto it = model.stats.find({from, to});
    if (it == model.stats.end()) return model.unseen_pair_log_prob;
    const auto& s = it->second;
    return s.pair_log_prob + log_normal_pdf(length, s.mean_length, s.sigma);
}

Rho2Result conformance_rho2_from_sequence(const PursuitModel& model, std::span<const std::size_t> sequence) {
    Rho2Result out;
    out.sequence.assign(sequence.begin(), sequence.end());
    if (sequence.size() < 2) return out;
    const double delta_d1 = model.vocab.scale.delta_d;
    double best = std::numeric_limits<double>::infinity();
    // Positions are visited in (a, b) order, so strict < keeps the first minimum.
    for (const auto& t : pair_decompose(sequence, delta_d1)) {
        const double lp = triplet_log_prob(model, t.from, t.to, t.length);
        if (lp < best) {
            best = lp;
            out.worst = t;
        }
    }
    out.scorable = true;
    out.rho2 = best;
    return out;
}

Rho2Result conformance_rho2(const PursuitModel& model, const Track& track) {
    auto c = canonize_track(track, model.vocab);
    if (!c.ok()) return {};
    return conformance_rho2_from_sequence(model, c.sequence);
}

} // namespace trackwatch
