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

#ifndef crossfield_codebook_H
#define crossfield_codebook_H

#include "crossfield/arraygeom.hpp"

#include <vector>

namespace crossfield
{
    enum class CodebookKind
    {
        exhaustive,   // full-array DFT grid with planar inter-subarray phases
        subarray_dft, // per-subarray DFT grid
        hierarchical, // 4-ary tree of widening beams per subarray
        ue_dft,       // UE-side DFT grid
        near_field    // angle grid x focal distance grid
    };

    struct Codeword
    {
        arma::cx_vec v;            // analog weights, unit Euclidean norm
        arma::uword layer = 0;     // tree layer (hierarchical) or 0
        arma::uword bx = 1, bz = 1; // beam index per axis, 1-based
        arma::uword subarray = 0;  // 1-based owner, 0 = spans the full array
        double lo_x = -1.0, hi_x = 1.0, lo_z = -1.0, hi_z = 1.0; // coverage
        int dist_index = -1;       // distance grid index (near-field), -1 = none
        double focus_distance = arma::datum::inf;
        double steer_x = 0.0, steer_z = 0.0; // spatial angles of the steering grid point
    };

    // Virtual-subarray accounting of one hierarchical layer: Q virtual
    // subarrays (Q_a per axis) of N_va elements per axis, N_A of them
    // effective for the layer's beamwidth
    struct LayerMeta
    {
        arma::uword q = 1, q_a = 1, n_va = 1, n_a = 1;
    };

    struct Codebook
    {
        CodebookKind kind = CodebookKind::subarray_dft;
        arma::uword n_antennas = 1; // length of each codeword vector
        arma::uword n_layers = 0;   // hierarchical only (L = log4 N_ab)
        std::vector<Codeword> words;
        std::vector<LayerMeta> layer_meta; // hierarchical only, per layer

        // hierarchical lookup: layer l has 2^l x 2^l beams
        const Codeword &at(arma::uword layer, arma::uword bx, arma::uword bz) const;
    };

    // DFT codebook on the grid psi(n) = 2(n-1)/sqrt(N) - 1; columns are
    // mutually orthogonal and have unit norm.
    Codebook dft_codebook(arma::uword n);

    // Full-array exhaustive codebook: N_b block-stacked codewords steering all
    // subarrays at one grid angle with planar-wave phase offsets.
    Codebook hspm_exhaustive_codebook(const ArrayGeometry &geom);

    // Per-subarray hierarchical codebook with L = log4(N_ab) layers. Layer l
    // tiles [-1,1]^2 with 2^l x 2^l cells of width 2^(1-l); every codeword is
    // synthesized for its cell (leaves steer at cell centers, wider layers use
    // phase-only flat sector beams), so the power argmax over the four
    // children of a cell identifies the child whose cell contains the source.
    Codebook hierarchical_codebook(arma::uword n_subarray_antennas);

    // Process-wide cache: the flat-beam synthesis makes construction a few
    // milliseconds, which adds up inside Monte-Carlo loops
    const Codebook &hierarchical_codebook_cached(arma::uword n_subarray_antennas);

    // Coverage cell of beam (bx, bz) at the given layer
    void beam_coverage(arma::uword layer, arma::uword bx, arma::uword bz,
                       arma::uword n_subarray_antennas,
                       double &lo_x, double &hi_x, double &lo_z, double &hi_z);

    // |a(psi)^H w|^2 on a grid of spatial angles; a matched full-size codeword
    // attains its element count. Full-array codewords use planar inter-subarray
    // phases for the probe response.
    arma::mat beam_pattern(const Codeword &w, const ArrayGeometry &geom,
                           const arma::vec &grid_x, const arma::vec &grid_z);

    // Response vector used by beam_pattern (exposed for reuse)
    arma::cx_vec pattern_probe(arma::uword n_elements, const ArrayGeometry &geom,
                               arma::uword subarray, double psi_x, double psi_z);

} // namespace crossfield

#endif
