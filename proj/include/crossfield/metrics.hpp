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

#ifndef crossfield_metrics_H
#define crossfield_metrics_H

#include "crossfield/estimation.hpp"

namespace crossfield
{
    struct Beamformers
    {
        arma::cx_mat W_rf; // N_b x K_b block-diagonal analog combiner
        arma::cx_vec w_bb; // K_b
        arma::cx_mat F_rf; // N_u x K_b analog beamformer
        arma::cx_vec f_bb; // K_b

        arma::cx_vec w() const { return W_rf * w_bb; }
        arma::cx_vec f() const { return F_rf * f_bb; }
    };

    struct AlignmentReport
    {
        double aligned_snr_db = 0.0;
        double upper_bound_snr_db = 0.0;    // alignment from the true channel parameters
        double normalized_snr_db = 0.0;     // aligned - upper bound (estimation loss)
        double channel_bound_snr_db = 0.0;  // principal singular pair of the channel
        double normalized_vs_channel_db = 0.0; // aligned - channel bound, <= 0 always
        double gain_bs = 0.0;               // |w^H a_b|^2 against the LoS signature
        double gain_ue = 0.0;               // |a_u^H f|^2
    };

    struct RmseReport
    {
        double rmse_angle_deg = 0.0;
        double rmse_distance_m = 0.0;
        arma::uword trials = 0;
        double power_dbm = 0.0;
    };

    // One trial's angle estimates against the per-subarray LoS truth. UE-side
    // estimates are the negated BS-side ones (LoS reciprocity).
    struct AngleSample
    {
        arma::vec az_bs_est, el_bs_est;
        arma::vec az_bs_true, el_bs_true;
        arma::vec az_ue_true, el_ue_true;
    };

    // Closed-form beamformers aligned to the LoS path's per-subarray angles
    // and phase shifts; satisfies the constant-modulus and unit-power
    // constraints (the UE digital weight is scaled so that ||F_RF f_BB|| = 1).
    Beamformers optimal_beamformers(const PathSet &paths, const ArrayGeometry &geom);

    // Beamformers rebuilt from (az^1, el^1, D_hat): the reference-position
    // angles are recovered by a fixed-point inversion of the subarray-angle
    // relation, then the per-subarray parameters are recomputed. Infinite
    // distance produces the planar-wave (angle-only) beamformer.
    Beamformers estimates_to_beamformers(const EstimationResult &result, const ArrayGeometry &geom);
    Beamformers beamformers_from_reference(double az, double el, double distance,
                                           const ArrayGeometry &geom);

    // SNR = |s * w^H H f|^2 / sigma^2 at one subcarrier slice
    double aligned_snr_db(const arma::cx_mat &H, const arma::cx_vec &w, const arma::cx_vec &f,
                          const PilotConfig &pilot);

    // Upper bound: SNR of the principal singular pair of the channel matrix
    double upper_bound_snr_db(const arma::cx_mat &H, const PilotConfig &pilot);

    AlignmentReport alignment_report(const arma::cx_mat &H_truth, const PathSet &paths,
                                     const ArrayGeometry &geom, const Beamformers &bf,
                                     const PilotConfig &pilot);

    // RMSE of angles in degrees: half the sum of the BS-side and UE-side
    // root-mean-square errors over subarrays and trials, scaled by 1/K_b
    double rmse_angle_deg(const std::vector<AngleSample> &samples);

    double rmse_distance_m(const arma::vec &estimates, const arma::vec &truths);

    struct OverheadTable
    {
        arma::uword near_exhaustive = 0;
        arma::uword far_exhaustive = 0;
        arma::uword subarray_exhaustive = 0;
        arma::uword sch_nominal = 0;    // 4 N_u K_b log4(N_ab), C = 0
        arma::uword sch_measured = 0;   // pilot slots actually spent
        arma::uword sch_savings_beams = 0; // measured C in beam units
    };

    OverheadTable overhead_table(const ArrayGeometry &geom, arma::uword c_d,
                                 const std::vector<TrainingOutcome> &sch_outcomes = {});

} // namespace crossfield

#endif
