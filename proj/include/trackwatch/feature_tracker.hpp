#pragma once

#include "trackwatch/image.hpp"
#include "trackwatch/track.hpp"

#include <span>
#include <string>
#include <vector>

namespace trackwatch {

struct TrackerConfig {
    int window_radius = 7;        // window is (2r+1)^2
    int max_features = 400;
    double min_eigenvalue = 0.01; // smaller eigenvalue of the gradient matrix
    int pyramid_levels = 3;
    int max_iterations = 20;      // Gauss-Newton cap per pyramid level
    double convergence_eps = 0.01;
    double max_residual = 0.02;   // mean squared intensity error

    void validate() const;
};

TrackerConfig tracker_config_from_json(const std::string& json_text);

struct Feature {
    Point2 position;
    double score = 0.0;  // smaller eigenvalue of the windowed gradient matrix
};

// Smaller eigenvalue of the Gaussian-weighted (sigma = r/2) sum of grad*grad^T
// over the (2r+1)^2 window centred on every pixel. Gradients are central
// differences. Pixels whose window or stencil leaves the frame score 0.
Frame min_eigenvalue_map(const Frame& frame, int window_radius);

// Shi-Tomasi selection: local maxima of the score map above min_eigenvalue,
// ranked by descending score, greedily thinned so selected features (and any
// `exclude` position) are at least window_radius apart. Throws DegenerateInput
// if the frame is not larger than the window plus the gradient stencil.
std::vector<Feature> select_features(const Frame& frame, const TrackerConfig& cfg,
                                     std::span<const Point2> exclude = {});

enum class StepStatus { converged, lost };

struct StepResult {
    StepStatus status = StepStatus::lost;
    Point2 displacement;
    double residual = 0.0;  // mean squared error over the window at the solution

    bool ok() const noexcept { return status == StepStatus::converged; }
};

// Value and gradient (w.r.t. d) of the time-symmetric window error
//   sum_w [next(c + w + d/2) - prev(c + w - d/2)]^2
// with bilinear sampling. Exposed for the finite-difference check.
struct SymmetricSsd {
    double value = 0.0;
    Point2 gradient;
};
SymmetricSsd symmetric_ssd(const Frame& prev, const Frame& next, Point2 center, Point2 d, int radius);

// Coarse-to-fine Gauss-Newton on the symmetric window error. At each level the
// window is centred on the pixel nearest pos + d/2 (re-centred after
// convergence if that pixel changes); the feature's new location is
// pos + displacement.
StepResult track_step(const Frame& prev, const Frame& next, Point2 pos, const TrackerConfig& cfg);
StepResult track_step(const std::vector<Frame>& prev_pyramid, const std::vector<Frame>& next_pyramid,
                      Point2 pos, const TrackerConfig& cfg);

// Runs the tracker over a frame sequence. Frame indices in the emitted tracks
// are positions in `frames`. Tracks are ordered by birth and carry
// zero-padded counter ids.
std::vector<Track> run_tracker(const std::vector<Frame>& frames, const TrackerConfig& cfg);

} // namespace trackwatch
