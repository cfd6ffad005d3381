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

#include "crossfield/codebook.hpp"
#include "crossfield/channel.hpp"

#include <map>
#include <mutex>

namespace crossfield
{

static arma::uword isqrt_u(arma::uword n)
{
    return static_cast<arma::uword>(std::llround(std::sqrt(double(n))));
}

// steering with the project phase convention; wavelength cancels for d = lambda/2
static arma::cx_vec steer(arma::uword n, double psi_x, double psi_z)
{
    return array_response(n, psi_x, psi_z, 1.0, 0.5);
}

const Codeword &Codebook::at(arma::uword layer, arma::uword bx, arma::uword bz) const
{
    if (kind != CodebookKind::hierarchical)
        throw invalid_input("Codebook::at is only defined for hierarchical codebooks");
    if (layer < 1 || layer > n_layers)
        throw invalid_input("Codebook::at: layer out of range");
    arma::uword side = arma::uword(1) << layer;
    if (bx < 1 || bx > side || bz < 1 || bz > side)
        throw invalid_input("Codebook::at: beam index out of range");
    arma::uword base = 0;
    for (arma::uword l = 1; l < layer; ++l)
        base += (arma::uword(1) << l) * (arma::uword(1) << l);
    return words[base + (bx - 1) * side + (bz - 1)];
}

Codebook dft_codebook(arma::uword n)
{
    if (!is_perfect_square(n))
        throw invalid_input("dft_codebook: n must be a perfect square");
    arma::uword side = isqrt_u(n);

    Codebook cb;
    cb.kind = CodebookKind::subarray_dft;
    cb.n_antennas = n;
    cb.words.reserve(n);
    for (arma::uword nx = 1; nx <= side; ++nx)
        for (arma::uword nz = 1; nz <= side; ++nz)
        {
            Codeword w;
            w.steer_x = 2.0 * double(nx - 1) / double(side) - 1.0;
            w.steer_z = 2.0 * double(nz - 1) / double(side) - 1.0;
            w.v = steer(n, w.steer_x, w.steer_z) / std::sqrt(double(n));
            w.bx = nx;
            w.bz = nz;
            // quantization cell of the grid point
            double half = 1.0 / double(side);
            w.lo_x = w.steer_x - half;
            w.hi_x = w.steer_x + half;
            w.lo_z = w.steer_z - half;
            w.hi_z = w.steer_z + half;
            cb.words.push_back(std::move(w));
        }
    return cb;
}

Codebook hspm_exhaustive_codebook(const ArrayGeometry &geom)
{
    validate_geometry(geom);
    arma::uword nb = geom.n_bs_antennas, nab = geom.n_subarray_antennas, kb = geom.n_subarrays;
    arma::uword side = isqrt_u(nb);
    double lam = geom.wavelength;

    Codebook cb;
    cb.kind = CodebookKind::exhaustive;
    cb.n_antennas = nb;
    cb.words.reserve(nb);
    double scale = 1.0 / std::sqrt(double(kb) * double(nab));
    for (arma::uword nx = 1; nx <= side; ++nx)
        for (arma::uword nz = 1; nz <= side; ++nz)
        {
            Codeword w;
            w.steer_x = 2.0 * double(nx - 1) / double(side) - 1.0;
            w.steer_z = 2.0 * double(nz - 1) / double(side) - 1.0;
            w.bx = nx;
            w.bz = nz;
            arma::cx_vec block = steer(nab, w.steer_x, w.steer_z);
            w.v.set_size(nb);
            for (arma::uword k = 0; k < kb; ++k)
            {
                double ph = pwm_phase_shift(geom.subarray_offsets(k, 0), geom.subarray_offsets(k, 1),
                                            w.steer_x, w.steer_z, lam);
                w.v.subvec(k * nab, (k + 1) * nab - 1) = block * std::polar(scale, -ph);
            }
            double half = 1.0 / double(side);
            w.lo_x = w.steer_x - half;
            w.hi_x = w.steer_x + half;
            w.lo_z = w.steer_z - half;
            w.hi_z = w.steer_z + half;
            cb.words.push_back(std::move(w));
        }
    return cb;
}

// Constant-modulus chirp sweeping the steering angle across [-sweep/2, sweep/2]
static arma::cx_vec chirp_weights(arma::uword side, double sweep)
{
    arma::cx_vec w(side);
    double start = -0.5 * sweep;
    double slope = side > 1 ? sweep / double(side - 1) : 0.0;
    for (arma::uword p = 0; p < side; ++p)
    {
        double phase = -arma::datum::pi * (start * double(p) + 0.5 * slope * double(p) * double(p));
        w(p) = std::polar(1.0, phase);
    }
    return w;
}

// Phase-only flat sector beam for [-width/2, width/2], one axis. Alternating
// projections between the constant-modulus weight set and a flat-topped
// target response, initialized with a chirp. A small chirp alone has several
// dB of in-band ripple; the dips are what lose the 4-way power comparisons in
// heavy multipath, so the ripple is worth the synthesis effort.
static arma::cx_vec flat_sector_prototype(arma::uword side, double width)
{
    if (side == 1)
        return arma::cx_vec{cx(1.0, 0.0)};
    const arma::uword grid = 512;
    arma::vec psi = arma::linspace(-1.0, 1.0 - 2.0 / double(grid), grid);
    double half = 0.5 * width;
    double trans = 1.0 / double(side); // half a natural beamwidth
    // flat across the whole cell, rolloff beyond the edge: the corners of a
    // cell must stay illuminated, otherwise a source there drops below the
    // multipath floor of the sibling cells
    arma::vec target(grid);
    for (arma::uword i = 0; i < grid; ++i)
    {
        double d = std::abs(psi(i)) - half;
        if (d <= 0.0)
            target(i) = 1.0;
        else if (d >= 2.0 * trans)
            target(i) = 0.0;
        else
            target(i) = 0.5 * (1.0 + std::cos(arma::datum::pi * d / (2.0 * trans)));
    }

    arma::cx_mat steer_grid(grid, side);
    for (arma::uword i = 0; i < grid; ++i)
        for (arma::uword p = 0; p < side; ++p)
            steer_grid(i, p) = std::polar(1.0, -arma::datum::pi * double(p) * psi(i));

    arma::cx_vec w = chirp_weights(side, std::max(width - 2.0 / double(side), 0.0));
    for (int iter = 0; iter < 200; ++iter)
    {
        arma::cx_vec a = steer_grid * w;          // response on the grid
        for (arma::uword i = 0; i < grid; ++i)    // project onto the target magnitude
            a(i) = std::abs(a(i)) > 0 ? target(i) * a(i) / std::abs(a(i)) : cx(target(i), 0.0);
        arma::cx_vec wt = steer_grid.t() * a;     // back to weight space
        for (arma::uword p = 0; p < side; ++p)    // project onto constant modulus
            w(p) = std::abs(wt(p)) > 0 ? wt(p) / std::abs(wt(p)) : cx(1.0, 0.0);
    }
    return w;
}

// Per-axis codeword: leaves steer every element at the cell center, wider
// layers modulate the flat sector prototype of the cell width to the center.
static arma::cx_vec axis_codeword(const arma::cx_vec &prototype, arma::uword side,
                                  double lo, double width, bool leaf)
{
    double center = lo + 0.5 * width;
    arma::cx_vec w(side);
    for (arma::uword p = 0; p < side; ++p)
    {
        cx base = leaf ? cx(1.0, 0.0) : prototype(p);
        w(p) = base * std::polar(1.0, -arma::datum::pi * double(p) * center);
    }
    return w;
}

Codebook hierarchical_codebook(arma::uword n_subarray_antennas)
{
    arma::uword n = n_subarray_antennas;
    arma::uword side = isqrt_u(n);
    if (!is_perfect_square(n) || (side & (side - 1)) != 0)
        throw invalid_input("hierarchical_codebook: N_ab must be a power of 4");
    arma::uword L = 0;
    for (arma::uword s = side; s > 1; s >>= 1)
        ++L;

    Codebook cb;
    cb.kind = CodebookKind::hierarchical;
    cb.n_antennas = n;
    cb.n_layers = L;

    cb.layer_meta.resize(L);
    for (arma::uword l = 1; l <= L; ++l)
    {
        arma::uword beams = arma::uword(1) << l;
        double width = std::pow(2.0, 1.0 - double(l));
        bool leaf = l == L;

        // virtual-subarray accounting of the layer (metadata)
        arma::uword lt = L - l;
        LayerMeta &meta = cb.layer_meta[l - 1];
        if (lt > 0)
        {
            meta.q_a = arma::uword(1) << ((lt + 1) / 2);
            meta.q = meta.q_a * meta.q_a;
            meta.n_va = side / meta.q_a;
            meta.n_a = (lt % 2 == 1) ? meta.q_a : meta.q_a / 2;
        }
        else
        {
            meta.q_a = side;
            meta.q = n;
            meta.n_va = 1;
            meta.n_a = side;
        }

        arma::cx_vec proto;
        if (!leaf)
            proto = flat_sector_prototype(side, width);

        for (arma::uword bx = 1; bx <= beams; ++bx)
            for (arma::uword bz = 1; bz <= beams; ++bz)
            {
                Codeword w;
                w.layer = l;
                w.bx = bx;
                w.bz = bz;
                beam_coverage(l, bx, bz, n, w.lo_x, w.hi_x, w.lo_z, w.hi_z);
                w.steer_x = 0.5 * (w.lo_x + w.hi_x);
                w.steer_z = 0.5 * (w.lo_z + w.hi_z);
                arma::cx_vec wx = axis_codeword(proto, side, w.lo_x, width, leaf);
                arma::cx_vec wz = axis_codeword(proto, side, w.lo_z, width, leaf);
                w.v = arma::kron(wx, wz);
                w.v /= arma::norm(w.v);
                cb.words.push_back(std::move(w));
            }
    }
    return cb;
}

const Codebook &hierarchical_codebook_cached(arma::uword n_subarray_antennas)
{
    static std::mutex mtx;
    static std::map<arma::uword, Codebook> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n_subarray_antennas);
    if (it == cache.end())
        it = cache.emplace(n_subarray_antennas, hierarchical_codebook(n_subarray_antennas)).first;
    return it->second;
}

void beam_coverage(arma::uword layer, arma::uword bx, arma::uword bz,
                   arma::uword n_subarray_antennas,
                   double &lo_x, double &hi_x, double &lo_z, double &hi_z)
{
    arma::uword side = isqrt_u(n_subarray_antennas);
    if (!is_perfect_square(n_subarray_antennas) || (side & (side - 1)) != 0)
        throw invalid_input("beam_coverage: N_ab must be a power of 4");
    arma::uword L = 0;
    for (arma::uword s = side; s > 1; s >>= 1)
        ++L;
    if (layer < 1 || layer > L)
        throw invalid_input("beam_coverage: layer out of range");
    arma::uword beams = arma::uword(1) << layer;
    if (bx < 1 || bx > beams || bz < 1 || bz > beams)
        throw invalid_input("beam_coverage: beam index out of range");
    double width = std::pow(2.0, 1.0 - double(layer));
    lo_x = -1.0 + double(bx - 1) * width;
    hi_x = lo_x + width;
    lo_z = -1.0 + double(bz - 1) * width;
    hi_z = lo_z + width;
}

arma::cx_vec pattern_probe(arma::uword n_elements, const ArrayGeometry &geom,
                           arma::uword subarray, double psi_x, double psi_z)
{
    if (subarray == 0 && n_elements == geom.n_bs_antennas && geom.n_subarrays > 1)
    {
        arma::uword nab = geom.n_subarray_antennas;
        arma::cx_vec a(n_elements);
        arma::cx_vec block = steer(nab, psi_x, psi_z);
        for (arma::uword k = 0; k < geom.n_subarrays; ++k)
        {
            double ph = pwm_phase_shift(geom.subarray_offsets(k, 0), geom.subarray_offsets(k, 1),
                                        psi_x, psi_z, geom.wavelength);
            a.subvec(k * nab, (k + 1) * nab - 1) = block * std::polar(1.0, -ph);
        }
        return a;
    }
    return steer(n_elements, psi_x, psi_z);
}

arma::mat beam_pattern(const Codeword &w, const ArrayGeometry &geom,
                       const arma::vec &grid_x, const arma::vec &grid_z)
{
    arma::mat gain(grid_x.n_elem, grid_z.n_elem);
    for (arma::uword i = 0; i < grid_x.n_elem; ++i)
        for (arma::uword j = 0; j < grid_z.n_elem; ++j)
        {
            arma::cx_vec a = pattern_probe(w.v.n_elem, geom, w.subarray, grid_x(i), grid_z(j));
            gain(i, j) = std::norm(arma::cdot(a, w.v));
        }
    return gain;
}

} // namespace crossfield
