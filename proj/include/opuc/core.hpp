#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace opuc {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr cplx I{0.0, 1.0};

// argument out of the documented range
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// a division by zero forced by the input (gamma = 1, singular I - A, ...)
struct singular_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// iteration or solver failure, input was fine
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double wrap_angle(double t) {
    double r = std::fmod(t, two_pi);
    if (r < 0) r += two_pi;
    return r;
}

inline cplx unit(double theta) { return std::polar(1.0, theta); }

inline double sq(double x) { return x * x; }

}  // namespace opuc
