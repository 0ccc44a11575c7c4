#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "ghostfit/domain.hpp"
#include "ghostfit/oracle.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
    return std::string(GHOSTFIT_SOURCE_DIR) + "/tests/data/" + name;
}

inline ghostfit::ExperimentGeometry reference_geometry() {
    ghostfit::ExperimentGeometry g;
    g.f = 400.0;
    g.f_a = 13.5;
    g.f_b = 25.4;
    g.lambda = 7.95e-4;
    g.w0 = 1.6;
    g.wb = 1.23;
    return g;
}

constexpr double kSigmaPlusRef = 1.489;   // from dp_plus = 1.053 hbar/mm
constexpr double kSigmaMinusRef = 51.63;  // from dx_minus = 0.0137 mm

inline double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

// deterministic uniforms for property tests (same core as the synth RNG)
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    double uniform(double lo, double hi) {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        const double u = (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

  private:
    std::uint64_t state_;
};

}  // namespace testsupport
