#include "trackwatch/angles.hpp"

#include "trackwatch/error.hpp"

#include <cmath>

namespace trackwatch {

double mod_pi(double theta) {
    double r = std::fmod(theta, pi);
    if (r < 0.0) r += pi;
    if (r >= pi) r -= pi;  // fmod(-tiny) + pi rounds to pi
    return r;
}

double wrapped_deviation(double theta, double reference) {
    double d = std::fmod(theta - reference, pi);
    if (d > pi / 2) d -= pi;
    if (d <= -pi / 2) d += pi;
    return d;
}

double angular_distance(double a, double b) { return std::abs(wrapped_deviation(a, b)); }

double circular_mean_update(double theta_c, std::span<const double> members) {
    if (members.empty()) return mod_pi(theta_c);
    double sum = 0.0;
    for (double theta : members) {
        const double dev = wrapped_deviation(theta, theta_c);
        if (std::abs(dev) > pi / 4) {
            throw PreconditionError("cluster member direction is more than pi/4 from the centre");
        }
        sum += dev;
    }
    return mod_pi(theta_c + sum / static_cast<double>(members.size()));
}

} // namespace trackwatch
