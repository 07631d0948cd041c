#pragma once

#include "trackwatch/tracklet.hpp"

#include <optional>
#include <span>
#include <vector>

namespace trackwatch {

using Sequence = std::vector<std::size_t>;

// First-order chain over one scale's primitive vocabulary. Probabilities are
// stored as logs; the transition matrix is dense and row-major.
struct ChainModel {
    PrimitiveVocabulary vocab;
    std::vector<double> log_prior;
    std::vector<double> log_transition;
    double smoothing_alpha = 0.5;

    std::size_t states() const noexcept { return log_prior.size(); }
    double log_trans(std::size_t from, std::size_t to) const { return log_transition[from * states() + to]; }
};

// Additive smoothing: prior from sequence-initial states, transitions from
// bigrams. A transition row with no data and alpha = 0 falls back to uniform.
// Empty sequences contribute nothing.
ChainModel fit_chain(std::span<const Sequence> sequences, std::size_t vocab_size, double alpha);

// (1/M) [log P(s_1) + sum log P(s_i | s_{i-1})]; nullopt for an empty sequence.
std::optional<double> average_loglik(const ChainModel& chain, std::span<const std::size_t> sequence);

// Empirical CDF with plotting positions rank/(n+1), linear between adjacent
// order statistics and clamped to [1/(n+1), n/(n+1)] outside the sample range.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;
    explicit EmpiricalCdf(std::vector<double> samples);

    double value(double r) const;
    double inverse(double u) const;

    const std::vector<double>& sorted_samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<double> samples_;
};

double cdf_value(const EmpiricalCdf& cdf, double r);
double cdf_inverse(const EmpiricalCdf& cdf, double u);

struct EnsembleModel {
    std::vector<ChainModel> chains;  // ascending delta_d
    std::vector<EmpiricalCdf> cdfs;
    double threshold_r1 = 0.0;

    void validate() const;
};

// Orders chains (and their cdfs) by ascending delta_d and validates.
EnsembleModel make_ensemble(std::vector<ChainModel> chains, std::vector<EmpiricalCdf> cdfs, double threshold_r1 = 0.0);

struct ScaleScore {
    std::size_t scale_index = 0;
    double delta_d = 0.0;
    double r = 0.0;      // average log-likelihood
    double r_hat = 0.0;  // mapped onto the smallest scale's distribution
};

struct Rho1Result {
    bool scorable = false;
    double rho1 = 0.0;
    std::vector<ScaleScore> per_scale;
    Sequence finest_sequence;
};

// R_hat_k = C_1^-1(C_k(R_k)); rho1 = min_k R_hat_k. On the smallest scale the
// map is the identity, which is what C_1^-1 o C_1 is inside the sample range.
Rho1Result conformance_rho1_from_sequences(const EnsembleModel& model, std::span<const Sequence> per_scale);
Rho1Result conformance_rho1(const EnsembleModel& model, const Track& track);

} // namespace trackwatch
