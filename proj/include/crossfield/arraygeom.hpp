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

#ifndef crossfield_arraygeom_H
#define crossfield_arraygeom_H

#include "crossfield/common.hpp"

namespace crossfield
{
    // Widely-spaced multiple-subarray layout at the BS (square grid of square
    // subarrays in the xz-plane) plus a single uniform planar array at the UE.
    //
    // Spatial angles are psi_x = sin(az)cos(el), psi_z = sin(el), both in
    // [-1, 1]. Steering phases follow -(2*pi/lambda)*d*(p*psi_x + q*psi_z) for
    // the element with in-axis indices (p, q). A subarray whose stored offset
    // is (G_kx, G_kz) sits at physical center (-G_kx, +G_kz); with this pairing
    // the inter-subarray distance obeys
    //   D_k = D * sqrt(1 + 2*(G_kz*psi_z - G_kx*psi_x)/D + (G_kx^2+G_kz^2)/D^2)
    // which keeps angles, spherical phase shifts, the planar-wave limit and the
    // codebook phase offsets mutually consistent.
    struct ArrayGeometry
    {
        arma::uword n_bs_antennas = 1;       // N_b
        arma::uword n_subarrays = 1;         // K_b (perfect square)
        arma::uword n_subarray_antennas = 1; // N_ab = N_b / K_b (perfect square)
        arma::uword n_ue_antennas = 1;       // N_u (perfect square)
        double wavelength = 1e-3;            // lambda [m]
        double element_spacing = 0.5e-3;     // d = lambda/2 [m]
        double subarray_gap = 0.0;           // edge-to-edge gap between subarrays [m]
        arma::mat subarray_offsets;          // K_b x 2, (G_kx, G_kz) [m]
    };

    struct FieldBoundaries
    {
        double d_fraunhofer_subarray = 0.0; // D_Fa [m]
        double d_bjornson = 0.0;            // D_B [m]
        double d_fraunhofer_array = 0.0;    // D_F [m]
        double aperture_subarray = 0.0;     // S_ab [m]
        double aperture_ue = 0.0;           // S_u [m]
        double aperture_bs = 0.0;           // S_b [m]
    };

    struct ElementPositions
    {
        arma::mat bs; // N_b x 2 (x, z), row index = (k-1)*N_ab + p*sqrt(N_ab) + q
        arma::mat ue; // N_u x 2
    };

    bool is_perfect_square(arma::uword n);

    // Build a geometry; gap is given in wavelengths (e.g. 128). Throws
    // invalid_geometry when the counts do not factor into square grids.
    ArrayGeometry make_geometry(arma::uword n_bs, arma::uword n_subarrays, arma::uword n_ue,
                                double wavelength, double gap_wavelengths);

    void validate_geometry(const ArrayGeometry &g);

    // Steering vector of an n-element square planar array: Kronecker product of
    // the x-axis factor and the z-axis factor, element (p,q) carries phase
    // -(2*pi/lambda)*spacing*(p*psi_x + q*psi_z).
    arma::cx_vec array_response(arma::uword n, double psi_x, double psi_z,
                                double wavelength, double spacing);

    ElementPositions element_positions(const ArrayGeometry &g);

    FieldBoundaries field_boundaries(const ArrayGeometry &g);

} // namespace crossfield

#endif
