#pragma once

#include "trackwatch/markov.hpp"
#include "trackwatch/tracklet.hpp"

#include <map>
#include <span>
#include <utility>
#include <vector>

namespace trackwatch {

// One (head, tail, path length) observation taken from a canonized sequence.
struct Triplet {
    std::size_t pos_a = 0;  // sequence positions, pos_a < pos_b
    std::size_t pos_b = 0;
    std::size_t from = 0;   // primitive indices
    std::size_t to = 0;
    double length = 0.0;    // (pos_b - pos_a) * delta_d / 2
};

// All M(M-1)/2 ordered position pairs; empty for M < 2.
std::vector<Triplet> pair_decompose(std::span<const std::size_t> sequence, double delta_d1);

struct PairStats {
    std::size_t from_idx = 0;
    std::size_t to_idx = 0;
    double pair_log_prob = 0.0;  // log P(from) + log P(to | from)
    double mean_length = 0.0;
    double sigma = 0.0;
    std::size_t observation_count = 0;
};

struct PursuitConfig {
    double alpha = 0.5;
    double sigma_floor = 0.0;   // <= 0 selects delta_d / 4
    double unseen_margin = 10.0; // nats below the worst training triplet
};

using PairKey = std::pair<std::size_t, std::size_t>;

struct PursuitModel {
    PrimitiveVocabulary vocab;  // smallest scale only
    std::map<PairKey, PairStats> stats;
    double unseen_pair_log_prob = 0.0;
    double threshold_r2 = 0.0;
    double sigma_floor = 12.5;
    double alpha = 0.5;
};

// Head prior and head->tail conditional are counted over all triplets and
// additively smoothed; per observed pair the path lengths get a Gaussian with
// sample (n-1) deviation, floored at sigma_floor. Throws ValidationError when
// no sequence has two or more elements.
PursuitModel fit_pursuit(std::span<const Sequence> sequences, const PrimitiveVocabulary& vocab,
                         const PursuitConfig& cfg = {});

// pair_log_prob + log N(L | mean, sigma) for observed pairs, the unseen floor
// otherwise.
double triplet_log_prob(const PursuitModel& model, std::size_t from, std::size_t to, double length);

struct Rho2Result {
    bool scorable = false;
    double rho2 = 0.0;
    Triplet worst;
    Sequence sequence;
};

// Minimum triplet log-probability; ties go to the smallest pos_a, then pos_b.
Rho2Result conformance_rho2_from_sequence(const PursuitModel& model, std::span<const std::size_t> sequence);
Rho2Result conformance_rho2(const PursuitModel& model, const Track& track);

} // namespace trackwatch
