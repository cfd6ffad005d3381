// SPDX-License-Identifier: Apache-2.0
//
// crossfield - beam training and estimation for THz ultra-massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef crossfield_common_H
#define crossfield_common_H

#include <armadillo>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace crossfield
{
    inline constexpr double speed_of_light = 299792458.0; // [m/s]

    using cx = std::complex<double>;

    struct invalid_geometry : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };
    struct invalid_input : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };
    struct invalid_config : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };
    struct degenerate_subspace : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };
    struct no_peak : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // 64-bit mix (SplitMix64 finalizer). Used to derive independent seeds from
    // a master seed and stream indices.
    inline std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0)
    {
        return mix64(mix64(master ^ mix64(a)) ^ mix64(b + 0x5851F42D4C957F2DULL));
    }

    // Deterministic random stream. The engine is std::mt19937_64; the mapping
    // from raw bits to doubles is explicit so that sequences are identical
    // across standard library implementations.
    class Rng
    {
      public:
        explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

        std::uint64_t bits() { return eng_(); }

        // Uniform on (0, 1), 53-bit resolution, never exactly 0 or 1
        double uniform()
        {
            return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
        }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        // Standard normal via Box-Muller (consumes two uniforms)
        double gauss()
        {
            double u1 = uniform(), u2 = uniform();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * arma::datum::pi * u2);
        }

        // Circularly-symmetric complex normal, unit variance (E|z|^2 = 1)
        cx cgauss()
        {
            double u1 = uniform(), u2 = uniform();
            double r = std::sqrt(-std::log(u1));
            return cx(r * std::cos(2.0 * arma::datum::pi * u2), r * std::sin(2.0 * arma::datum::pi * u2));
        }

      private:
        std::mt19937_64 eng_;
    };

    inline double db10(double x) { return 10.0 * std::log10(x); }
    inline double from_db10(double x) { return std::pow(10.0, x / 10.0); }
    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

    inline double deg2rad(double d) { return d * arma::datum::pi / 180.0; }
    inline double rad2deg(double r) { return r * 180.0 / arma::datum::pi; }

} // namespace crossfield

#endif
