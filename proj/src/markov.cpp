#include "trackwatch/markov.hpp"

#include "trackwatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trackwatch {

ChainModel fit_chain(std::span<const Sequence> sequences, std::size_t vocab_size, double alpha) {
    if (vocab_size == 0) throw ValidationError("fit_chain: vocab_size must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("fit_chain: alpha must be >= 0");
    const std::size_t v = vocab_size;
    std::vector<double> first(v, 0.0), heads(v, 0.0), bigram(v * v, 0.0);
    double starts = 0.0;
    for (const auto& seq : sequences) {
        if (seq.empty()) continue;
        for (auto s : seq) {
            if (s >= v) throw ValidationError("fit_chain: primitive index out of range");
        }
        first[seq.front()] += 1.0;
        starts += 1.0;
        for (std::size_t i = 1; i < seq.size(); ++i) {
            heads[seq[i - 1]] += 1.0;
            bigram[seq[i - 1] * v + seq[i]] += 1.0;
        }
    }
    if (starts == 0.0) throw ValidationError("fit_chain: need at least one non-empty sequence");

    const double av = alpha * static_cast<double>(v);
    ChainModel chain;
    chain.smoothing_alpha = alpha;
    chain.log_prior.resize(v);
    for (std::size_t i = 0; i < v; ++i) chain.log_prior[i] = std::log((first[i] + alpha) / (starts + av));
    chain.log_transition.resize(v * v);
    for (std::size_t i = 0; i < v; ++i) {
        const double denom = heads[i] + av;
        for (std::size_t j = 0; j < v; ++j) {
            chain.log_transition[i * v + j] = denom > 0.0 ? std::log((bigram[i * v + j] + alpha) / denom)
                                                          : -std::log(static_cast<double>(v));
        }
    }
    return chain;
}

std::optional<double> average_loglik(const ChainModel& chain, std::span<const std::size_t> sequence) {
    if (sequence.empty()) return std::nullopt;
    const std::size_t v = chain.states();
    for (auto s : sequence) {
        if (s >= v) throw ValidationError("average_loglik: primitive index out of range");
    }
    double sum = chain.log_prior[sequence[0]];
    for (std::size_t i = 1; i < sequence.size(); ++i) sum += chain.log_trans(sequence[i - 1], sequence[i]);
    return sum / static_cast<double>(sequence.size());
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw ValidationError("empirical CDF needs at least one sample");
    for (double s : samples_) {
        if (!std::isfinite(s)) throw ValidationError("empirical CDF samples must be finite");
    }
    std::sort(samples_.begin(), samples_.end());
}

double EmpiricalCdf::value(double r) const {
    const std::size_t n = samples_.size();
    const double denom = static_cast<double>(n + 1);
    if (r < samples_.front()) return 1.0 / denom;
    // Largest rank i (1-based) with x_(i) <= r.
    const auto i = static_cast<std::size_t>(std::upper_bound(samples_.begin(), samples_.end(), r) - samples_.begin());
    if (i >= n) return static_cast<double>(n) / denom;
    const double lo = samples_[i - 1], hi = samples_[i];
    const double frac = (r - lo) / (hi - lo);
    return (static_cast<double>(i) + frac) / denom;
}

double EmpiricalCdf::inverse(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw ValidationError("cdf_inverse: u must lie in (0, 1)");
    const std::size_t n = samples_.size();
    const double pos = u * static_cast<double>(n + 1);  // fractional 1-based rank
    if (pos <= 1.0) return samples_.front();
    if (pos >= static_cast<double>(n)) return samples_.back();
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return samples_[i - 1] + frac * (samples_[i] - samples_[i - 1]);
}

double cdf_value(const EmpiricalCdf& cdf, double r) { return cdf.value(r); }
double cdf_inverse(const EmpiricalCdf& cdf, double u) { return cdf.inverse(u); }

void EnsembleModel::validate() const {
    if (chains.empty()) throw ValidationError("ensemble needs at least one chain");
    if (chains.size() != cdfs.size()) throw ValidationError("ensemble chains and cdfs are misaligned");
    for (std::size_t k = 0; k < chains.size(); ++k) {
        if (chains[k].states() != chains[k].vocab.size()) {
            throw ValidationError("chain state count does not match its vocabulary");
        }
        if (cdfs[k].size() == 0) throw ValidationError("ensemble cdf is empty");
        if (k > 0 && !(chains[k].vocab.scale.delta_d > chains[k - 1].vocab.scale.delta_d)) {
            throw ValidationError("ensemble scales must be strictly increasing");
        }
    }
}

EnsembleModel make_ensemble(std::vector<ChainModel> chains, std::vector<EmpiricalCdf> cdfs, double threshold_r1) {
    if (chains.size() != cdfs.size()) throw ValidationError("ensemble chains and cdfs are misaligned");
    std::vector<std::size_t> order(chains.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return chains[a].vocab.scale.delta_d < chains[b].vocab.scale.delta_d;
    });
    EnsembleModel m;
    m.threshold_r1 = threshold_r1;
    for (auto k : order) {
        m.chains.push_back(std::move(chains[k]));
        m.cdfs.push_back(std::move(cdfs[k]));
    }
    m.validate();
    return m;
}

Rho1Result conformance_rho1_from_sequences(const EnsembleModel& model, std::span<const Sequence> per_scale) {
    if (per_scale.size() != model.chains.size()) {
        throw ValidationError("one sequence per ensemble scale is required");
    }
    Rho1Result out;
    if (per_scale[0].empty()) return out;
    out.finest_sequence = per_scale[0];
    double rho = 0.0;
    for (std::size_t k = 0; k < model.chains.size(); ++k) {
        const auto r = average_loglik(model.chains[k], per_scale[k]);
        if (!r) continue;
        const double r_hat = k == 0 ? *r : model.cdfs[0].inverse(model.cdfs[k].value(*r));
        out.per_scale.push_back({k, model.chains[k].vocab.scale.delta_d, *r, r_hat});
        rho = out.per_scale.size() == 1 ? r_hat : std::min(rho, r_hat);
    }
    out.scorable = true;
    out.rho1 = rho;
    return out;
}

Rho1Result conformance_rho1(const EnsembleModel& model, const Track& track) {
    std::vector<Sequence> seqs;
    seqs.reserve(model.chains.size());
    for (const auto& chain : model.chains) {
        auto c = canonize_track(track, chain.vocab);
        seqs.push_back(c.ok() ? std::move(c.sequence) : Sequence{});
    }
    return conformance_rho1_from_sequences(model, seqs);
}

} // namespace trackwatch
