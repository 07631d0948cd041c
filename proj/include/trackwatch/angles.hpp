#pragma once

#include <numbers>
#include <span>

namespace trackwatch {

inline constexpr double pi = std::numbers::pi;

// Reduce to [0, pi).
double mod_pi(double theta);

// theta - reference folded into (-pi/2, pi/2].
double wrapped_deviation(double theta, double reference);

// Undirected angular distance in [0, pi/2].
double angular_distance(double a, double b);

// Cluster-centre direction update for undirected angles: every member's
// deviation from theta_c is folded into (-pi/2, pi/2], the deviations are
// averaged and added to theta_c, and the result is reduced into [0, pi).
// Throws PreconditionError if a member lies more than pi/4 from theta_c, in
// which case the mean direction is not uniquely defined.
double circular_mean_update(double theta_c, std::span<const double> members);

} // namespace trackwatch
