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

#ifndef crossfield_channel_H
#define crossfield_channel_H

#include "crossfield/arraygeom.hpp"

#include <vector>

namespace crossfield
{
    struct Waveform
    {
        double carrier_freq = 0.3e12;      // f_c [Hz]
        double subcarrier_spacing = 3.84e6; // delta_f [Hz]
        arma::uword n_subcarriers = 64;    // M
        double light_speed = speed_of_light;

        double wavelength() const { return light_speed / carrier_freq; }
        double unambiguous_range() const { return light_speed / subcarrier_spacing; }
    };

    // One propagation path. Angles are radians; the per-subarray vectors have
    // K_b entries. Phase shifts are stored relative to subarray 1, so
    // phase_shift(0) == 0 always; the absolute common phase is absorbed in the
    // random phase of the complex coefficient.
    struct Path
    {
        bool los = false;
        double ref_distance = 0.0;     // D_p: reference-to-reference distance [m]
        double scatter_distance = 0.0; // distance used in the geometric relations [m]
        double total_distance = 0.0;   // r_p, sets the delay [m]
        double delay = 0.0;            // tau_p = r_p / c [s]
        cx coeff = cx(0.0, 0.0);       // h_p
        double az_bs = 0.0, el_bs = 0.0, az_ue = 0.0, el_ue = 0.0; // reference angles
        arma::vec az_bs_k, el_bs_k, az_ue_k, el_ue_k;              // per subarray
        arma::vec phase_shift_k;                                   // Delta Phi_kp [rad]
    };

    struct PathSet
    {
        std::vector<Path> paths;
        arma::uword n_subarrays = 1;
        std::uint64_t seed = 0;

        const Path &los() const { return paths.front(); }
    };

    struct ChannelConfig
    {
        arma::uword n_paths = 8;
        double d_min = 5.0, d_max = 30.0;            // LoS distance range [m]
        double az_lo = -deg2rad(45), az_hi = deg2rad(45); // sector, azimuth
        double el_lo = -deg2rad(30), el_hi = deg2rad(30); // sector, elevation
        double excess_loss_lo_db = 5.0, excess_loss_hi_db = 15.0;
    };

    enum class ChannelModel
    {
        SWM,
        HSPM,
        PWM
    };

    // H[m] slices for m = 1..M
    using ChannelTensor = std::vector<arma::cx_mat>;

    inline double spatial_angle_x(double az, double el) { return std::sin(az) * std::cos(el); }
    inline double spatial_angle_z(double /*az*/, double el) { return std::sin(el); }

    // Distance from subarray center to the far reference, exact square-root form
    double subarray_distance(double distance, double g_x, double g_z, double w_x, double w_z);

    // Azimuth/elevation seen from a subarray with offset (g_x, g_z), given the
    // reference angles and reference distance. Sign-correct for all quadrants.
    void subarray_angles(double ref_az, double ref_el, double distance,
                         double g_x, double g_z, double &az_k, double &el_k);

    // Exact spherical phase shift (2*pi/lambda)*(D_k - D); no Taylor expansion
    double spherical_phase_shift(double distance, double g_x, double g_z,
                                 double w_x, double w_z, double wavelength);

    // First-order (planar-wave) phase shift (2*pi/lambda)*(G_kz*w_z - G_kx*w_x)
    double pwm_phase_shift(double g_x, double g_z, double w_x, double w_z, double wavelength);

    // Complex path gain alpha_p[m] = h_p * exp(-j*2*pi*m*delta_f*tau_p), m = 1..M
    cx path_gain(cx h_p, arma::uword m, double delta_f, double tau_p);

    // Recompute per-subarray angles and phase shifts of a path from its
    // reference parameters (az_bs, el_bs, scatter_distance, los flag). The
    // stored phase shifts are referenced to subarray 1 and carry the steering
    // recentering term that aligns corner-referenced steering vectors with the
    // center-to-center spherical shifts.
    void fill_subarray_parameters(Path &p, const ArrayGeometry &geom);

    // Seeded multipath generator. Path 1 is LoS with free-space amplitude
    // lambda/(4*pi*D) and uniform phase; NLoS paths carry 5..15 dB excess loss
    // and scatterer-referenced per-subarray parameters. LoS dominance
    // |h_1|^2 > sum |h_p|^2 is enforced by redrawing the excess losses.
    PathSet generate_paths(const ChannelConfig &cfg, const ArrayGeometry &geom,
                           const Waveform &wf, std::uint64_t seed);

    // Single-subcarrier channel slices (N_b x N_u), m is 1-based
    arma::cx_mat hspm_channel(const PathSet &paths, const ArrayGeometry &geom,
                              const Waveform &wf, arma::uword m);
    arma::cx_mat swm_channel(const PathSet &paths, const ArrayGeometry &geom,
                             const Waveform &wf, arma::uword m);
    arma::cx_mat pwm_channel(const PathSet &paths, const ArrayGeometry &geom,
                             const Waveform &wf, arma::uword m);

    ChannelTensor channel_tensor(const PathSet &paths, const ArrayGeometry &geom,
                                 const Waveform &wf, ChannelModel model);

    // Thermal noise power for the given bandwidth: -174 dBm/Hz + 10*log10(B)
    double thermal_noise_variance(double bandwidth_hz);

} // namespace crossfield

#endif
