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

#include "crossfield/arraygeom.hpp"

namespace crossfield
{

bool is_perfect_square(arma::uword n)
{
    arma::uword r = static_cast<arma::uword>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n;
}

ArrayGeometry make_geometry(arma::uword n_bs, arma::uword n_subarrays, arma::uword n_ue,
                            double wavelength, double gap_wavelengths)
{
    ArrayGeometry g;
    g.n_bs_antennas = n_bs;
    g.n_subarrays = n_subarrays;
    if (n_subarrays == 0 || n_bs % n_subarrays != 0)
        throw invalid_geometry("n_bs_antennas must be a multiple of n_subarrays");
    g.n_subarray_antennas = n_bs / n_subarrays;
    g.n_ue_antennas = n_ue;
    g.wavelength = wavelength;
    g.element_spacing = wavelength / 2.0;
    g.subarray_gap = gap_wavelengths * wavelength;

    validate_geometry(g);

    // Subarray centers form a sqrt(K_b) x sqrt(K_b) grid. The center-to-center
    // pitch is the occupied subarray span plus the edge-to-edge gap.
    arma::uword kb_side = static_cast<arma::uword>(std::llround(std::sqrt(double(n_subarrays))));
    arma::uword na_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_subarray_antennas))));
    double span = double(na_side - 1) * g.element_spacing;
    double pitch = span + g.subarray_gap;

    g.subarray_offsets.set_size(n_subarrays, 2);
    for (arma::uword i = 0; i < kb_side; ++i)
        for (arma::uword j = 0; j < kb_side; ++j)
        {
            double cx_ = (double(i) - 0.5 * double(kb_side - 1)) * pitch;
            double cz_ = (double(j) - 0.5 * double(kb_side - 1)) * pitch;
            arma::uword k = i * kb_side + j;
            // stored offset is (G_kx, G_kz) = (-center_x, +center_z)
            g.subarray_offsets(k, 0) = -cx_;
            g.subarray_offsets(k, 1) = cz_;
        }
    return g;
}

void validate_geometry(const ArrayGeometry &g)
{
    if (g.n_subarrays == 0 || g.n_bs_antennas != g.n_subarrays * g.n_subarray_antennas)
        throw invalid_geometry("N_b must equal K_b * N_ab");
    if (!is_perfect_square(g.n_subarray_antennas))
        throw invalid_geometry("N_ab must be a perfect square");
    if (!is_perfect_square(g.n_ue_antennas))
        throw invalid_geometry("N_u must be a perfect square");
    if (!is_perfect_square(g.n_subarrays))
        throw invalid_geometry("K_b must be a perfect square");
    if (g.wavelength <= 0.0 || g.element_spacing <= 0.0)
        throw invalid_geometry("wavelength and spacing must be positive");
    if (!g.subarray_offsets.is_empty() && g.subarray_offsets.n_rows != g.n_subarrays)
        throw invalid_geometry("subarray_offsets must have K_b rows");
}

arma::cx_vec array_response(arma::uword n, double psi_x, double psi_z,
                            double wavelength, double spacing)
{
    if (!is_perfect_square(n))
        throw invalid_geometry("array_response: n must be a perfect square");
    if (spacing <= 0.0 || wavelength <= 0.0)
        throw invalid_geometry("array_response: spacing and wavelength must be positive");

    arma::uword side = static_cast<arma::uword>(std::llround(std::sqrt(double(n))));
    double c = -2.0 * arma::datum::pi / wavelength * spacing;

    arma::cx_vec ax(side), az(side);
    for (arma::uword p = 0; p < side; ++p)
    {
        ax(p) = std::polar(1.0, c * double(p) * psi_x);
        az(p) = std::polar(1.0, c * double(p) * psi_z);
    }
    return arma::kron(ax, az);
}

ElementPositions element_positions(const ArrayGeometry &g)
{
    validate_geometry(g);
    arma::uword na_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_subarray_antennas))));
    arma::uword nu_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_ue_antennas))));
    double d = g.element_spacing;

    ElementPositions pos;
    pos.bs.set_size(g.n_bs_antennas, 2);
    double c0 = 0.5 * double(na_side - 1);
    for (arma::uword k = 0; k < g.n_subarrays; ++k)
    {
        // physical center of subarray k from its stored offset
        double cx_ = -g.subarray_offsets(k, 0);
        double cz_ = g.subarray_offsets(k, 1);
        for (arma::uword p = 0; p < na_side; ++p)
            for (arma::uword q = 0; q < na_side; ++q)
            {
                arma::uword row = k * g.n_subarray_antennas + p * na_side + q;
                pos.bs(row, 0) = cx_ + (double(p) - c0) * d;
                pos.bs(row, 1) = cz_ + (double(q) - c0) * d;
            }
    }

    pos.ue.set_size(g.n_ue_antennas, 2);
    double cu = 0.5 * double(nu_side - 1);
    for (arma::uword p = 0; p < nu_side; ++p)
        for (arma::uword q = 0; q < nu_side; ++q)
        {
            arma::uword row = p * nu_side + q;
            pos.ue(row, 0) = (double(p) - cu) * d;
            pos.ue(row, 1) = (double(q) - cu) * d;
        }
    return pos;
}

FieldBoundaries field_boundaries(const ArrayGeometry &g)
{
    validate_geometry(g);
    arma::uword na_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_subarray_antennas))));
    arma::uword nu_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_ue_antennas))));
    arma::uword kb_side = static_cast<arma::uword>(std::llround(std::sqrt(double(g.n_subarrays))));
    double d = g.element_spacing;

    FieldBoundaries fb;
    // apertures are the diagonals of the occupied spans
    fb.aperture_subarray = std::sqrt(2.0) * double(na_side - 1) * d;
    fb.aperture_ue = std::sqrt(2.0) * double(nu_side - 1) * d;
    double bs_width = double(kb_side) * double(na_side - 1) * d + double(kb_side - 1) * g.subarray_gap;
    fb.aperture_bs = std::sqrt(2.0) * bs_width;

    double lam = g.wavelength;
    fb.d_fraunhofer_subarray = 2.0 * std::pow(fb.aperture_subarray + fb.aperture_ue, 2) / lam;
    fb.d_fraunhofer_array = 2.0 * std::pow(fb.aperture_bs + fb.aperture_ue, 2) / lam;
    fb.d_bjornson = 2.0 * std::sqrt(fb.aperture_bs * fb.aperture_bs + fb.aperture_ue * fb.aperture_ue);
    return fb;
}

} // namespace crossfield
