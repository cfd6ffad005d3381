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

#ifndef crossfield_training_H
#define crossfield_training_H

#include "crossfield/channel.hpp"
#include "crossfield/codebook.hpp"

#include <string>
#include <vector>

namespace crossfield
{
    struct PilotConfig
    {
        double transmit_power = 1.0; // total transmit power P [W]
        double noise_variance = 0.0; // sigma^2 [W]
        double pilot_symbol = 1.0;   // s, per-subcarrier amplitude
    };

    // Total power is split evenly across subcarriers so that configurations
    // with different M are compared at equal total transmit power.
    PilotConfig make_pilot(double power_dbm, double noise_variance, arma::uword n_subcarriers,
                           bool split_across_subcarriers = true);

    struct BeamRef
    {
        arma::uword subarray = 0; // 1-based; 0 = full-array codeword
        arma::uword layer = 0;
        arma::uword bx = 1, bz = 1;
        int dist_index = -1;
        double focus_distance = arma::datum::inf;
        double steer_x = 0.0, steer_z = 0.0;
    };

    struct Observation
    {
        std::vector<arma::cx_mat> y; // per subcarrier m: B x N_u (empty when powers_only)
        std::vector<BeamRef> ledger; // one entry per row, fixed across m
        arma::uvec block_sizes;      // rows per subarray block, in ledger order
        arma::vec row_power;         // sum_m sum_u |y|^2 per row
        arma::uword n_ue = 0, n_subcarriers = 0;
        CodebookKind bs_kind = CodebookKind::subarray_dft;
        bool powers_only = false;

        arma::uword n_rows() const { return ledger.size(); }
    };

    struct TrainingOutcome
    {
        Observation obs;
        std::string scheme;
        std::vector<BeamRef> selected; // per subarray (SCH/subarray schemes) or one entry
        arma::mat bounds;              // K_b x 4: lo_x hi_x lo_z hi_z search bounds
        arma::uword pilot_slots = 0;   // one slot = one (BS beam, UE beam) pair, all M subcarriers
        arma::uword beams_swept = 0;
        arma::uword savings_beams = 0; // C, in beam units
    };

    // Single-subcarrier reception y = w^H H f s + w^H n with n ~ CN(0, sigma^2 I)
    cx receive(const arma::cx_mat &H_m, const arma::cx_vec &w, const arma::cx_vec &f,
               const PilotConfig &pilot, Rng &rng);

    // One BS beam swept against the full UE codebook; returns M x N_u, consumes
    // N_u pilot slots. w spans the full array; the subarray overload touches
    // only row-block k of the channel.
    arma::cx_mat sweep_ue(const ChannelTensor &H, const arma::cx_vec &w_full,
                          const arma::cx_mat &ue_matrix, const PilotConfig &pilot, Rng &rng);
    arma::cx_mat sweep_ue_subarray(const ChannelTensor &H, arma::uword k, const arma::cx_vec &w_sub,
                                   const arma::cx_mat &ue_matrix, const PilotConfig &pilot, Rng &rng);

    // UE DFT codebook as an N_u x N_u matrix of unit-norm columns
    arma::cx_mat ue_codebook_matrix(arma::uword n_ue);

    // Exhaustive sweeps; cb.kind selects full-array or subarray-wise search
    TrainingOutcome exhaustive_training(const ChannelTensor &H, const ArrayGeometry &geom,
                                        const Codebook &cb, const PilotConfig &pilot, Rng &rng);

    // Angle grid x focal-distance grid baseline; observation keeps per-row
    // powers only. Distances are log-spaced in [D_Fa, D_F] unless a grid is
    // given explicitly.
    TrainingOutcome near_field_exhaustive_training(const ChannelTensor &H, const ArrayGeometry &geom,
                                                   const PilotConfig &pilot, arma::uword distance_grid_count,
                                                   Rng &rng, const arma::vec &distance_grid = arma::vec());

    // Spatial-angle rectangle subarray k can see, given the final coverage of
    // the reference subarray, the offset of k relative to the reference, and
    // the smallest admissible reference distance. Corner evaluation at
    // D1 in {d_min, inf} using the first-order subarray-distance expansion.
    void potential_range(double lo_x, double hi_x, double lo_z, double hi_z,
                         double g_rel_x, double g_rel_z, double d_min,
                         double &out_lo_x, double &out_hi_x, double &out_lo_z, double &out_hi_z);

    // Subarray-coordinated hierarchical training (4-ary descent per subarray,
    // later subarrays start at the narrowest beam covering their potential
    // range). The start layer is capped at L-1 so every subarray contributes
    // at least one leaf-level sweep to the observation.
    TrainingOutcome sch_training(const ChannelTensor &H, const ArrayGeometry &geom,
                                 const Codebook &hierarchical, const PilotConfig &pilot,
                                 double d_min, Rng &rng);

    // Vertical stacking of per-subarray observations in subarray order
    Observation assemble_observation(const std::vector<Observation> &parts);

} // namespace crossfield

#endif
