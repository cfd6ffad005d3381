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

#include "crossfield/training.hpp"
#include "crossfield/estimation.hpp"

namespace crossfield
{

// Matched-filter argmax of the rows swept so far for one subarray over a
// coarse grid covering the current parent cell. Per-cell power sums cannot
// separate a boundary source from aggregated multipath, but the matched
// filter compares the paths one by one, so the dominant path keeps its
// per-path margin everywhere inside the parent cell.
static void descent_argmax(const Observation &part, const arma::cx_mat &W_sofar,
                           const arma::cx_mat &F, const ArrayGeometry &geom,
                           double lo_x, double hi_x, double lo_z, double hi_z,
                           double step, double &best_x, double &best_z)
{
    arma::uword bk = part.n_rows(), nu = part.n_ue, M = part.n_subcarriers;
    arma::cx_mat ycheck(bk * nu, M);
    for (arma::uword m = 0; m < M; ++m)
        ycheck.col(m) = vec_rowmajor(part.y[m]);
    MeasurementMap map{W_sofar.cols(0, bk - 1), F};

    arma::uword nx = std::max<arma::uword>(arma::uword(std::round((hi_x - lo_x) / step)) + 1, 3);
    arma::uword nz = std::max<arma::uword>(arma::uword(std::round((hi_z - lo_z) / step)) + 1, 3);
    arma::vec gx = arma::linspace(lo_x, hi_x, nx);
    arma::vec gz = arma::linspace(lo_z, hi_z, nz);
    double best = -1.0;
    for (arma::uword i = 0; i < nx; ++i)
        for (arma::uword j = 0; j < nz; ++j)
        {
            double v = mle_spectrum(ycheck, map, gx(i), gz(j), geom);
            if (v > best)
            {
                best = v;
                best_x = gx(i);
                best_z = gz(j);
            }
        }
}

PilotConfig make_pilot(double power_dbm, double noise_variance, arma::uword n_subcarriers,
                       bool split_across_subcarriers)
{
    PilotConfig p;
    p.transmit_power = dbm_to_watt(power_dbm);
    p.noise_variance = noise_variance;
    double per_sc = split_across_subcarriers ? p.transmit_power / double(n_subcarriers) : p.transmit_power;
    p.pilot_symbol = std::sqrt(per_sc);
    return p;
}

cx receive(const arma::cx_mat &H_m, const arma::cx_vec &w, const arma::cx_vec &f,
           const PilotConfig &pilot, Rng &rng)
{
    if (w.n_elem != H_m.n_rows || f.n_elem != H_m.n_cols)
        throw invalid_input("receive: dimension mismatch");
    cx y = arma::cdot(w, H_m * f) * pilot.pilot_symbol;
    y += std::sqrt(pilot.noise_variance) * arma::norm(w) * rng.cgauss();
    return y;
}

arma::cx_mat ue_codebook_matrix(arma::uword n_ue)
{
    Codebook cb = dft_codebook(n_ue);
    arma::cx_mat F(n_ue, n_ue);
    for (arma::uword j = 0; j < n_ue; ++j)
        F.col(j) = cb.words[j].v;
    return F;
}

// shared core: noiseless row per subcarrier is g[m] * F, noise drawn slot-major
static arma::cx_mat sweep_core(const std::vector<arma::cx_rowvec> &g, const arma::cx_mat &F,
                               double w_norm, const PilotConfig &pilot, Rng &rng)
{
    arma::uword M = g.size(), nu = F.n_cols;
    arma::cx_mat y(M, nu);
    for (arma::uword m = 0; m < M; ++m)
        y.row(m) = pilot.pilot_symbol * (g[m] * F);
    double sd = std::sqrt(pilot.noise_variance) * w_norm;
    for (arma::uword u = 0; u < nu; ++u)
        for (arma::uword m = 0; m < M; ++m)
            y(m, u) += sd * rng.cgauss();
    return y;
}

arma::cx_mat sweep_ue(const ChannelTensor &H, const arma::cx_vec &w_full,
                      const arma::cx_mat &ue_matrix, const PilotConfig &pilot, Rng &rng)
{
    arma::uword M = H.size();
    std::vector<arma::cx_rowvec> g(M);
    for (arma::uword m = 0; m < M; ++m)
        g[m] = w_full.t() * H[m];
    return sweep_core(g, ue_matrix, arma::norm(w_full), pilot, rng);
}

arma::cx_mat sweep_ue_subarray(const ChannelTensor &H, arma::uword k, const arma::cx_vec &w_sub,
                               const arma::cx_mat &ue_matrix, const PilotConfig &pilot, Rng &rng)
{
    arma::uword M = H.size();
    arma::uword nab = w_sub.n_elem;
    std::vector<arma::cx_rowvec> g(M);
    for (arma::uword m = 0; m < M; ++m)
        g[m] = w_sub.t() * H[m].rows((k - 1) * nab, k * nab - 1);
    return sweep_core(g, ue_matrix, arma::norm(w_sub), pilot, rng);
}

static double row_energy(const arma::cx_mat &y)
{
    return std::pow(arma::norm(y, "fro"), 2);
}

static void push_rows(Observation &obs, const arma::cx_mat &y_m_by_u, const BeamRef &ref)
{
    arma::uword M = y_m_by_u.n_rows;
    if (obs.y.empty())
        obs.y.resize(M);
    for (arma::uword m = 0; m < M; ++m)
        obs.y[m] = arma::join_cols(obs.y[m], y_m_by_u.row(m));
    obs.ledger.push_back(ref);
    obs.row_power.resize(obs.ledger.size());
    obs.row_power(obs.ledger.size() - 1) = row_energy(y_m_by_u);
}

TrainingOutcome exhaustive_training(const ChannelTensor &H, const ArrayGeometry &geom,
                                    const Codebook &cb, const PilotConfig &pilot, Rng &rng)
{
    validate_geometry(geom);
    arma::uword nu = geom.n_ue_antennas, kb = geom.n_subarrays;
    arma::cx_mat F = ue_codebook_matrix(nu);

    TrainingOutcome out;
    out.obs.n_ue = nu;
    out.obs.n_subcarriers = H.size();
    out.obs.bs_kind = cb.kind;
    out.bounds.set_size(kb, 4);
    for (arma::uword k = 0; k < kb; ++k)
        out.bounds.row(k) = arma::rowvec{-1.0, 1.0, -1.0, 1.0};

    if (cb.kind == CodebookKind::exhaustive)
    {
        if (cb.n_antennas != geom.n_bs_antennas)
            throw invalid_geometry("exhaustive_training: codebook size mismatch");
        for (const Codeword &w : cb.words)
        {
            BeamRef ref{0, 0, w.bx, w.bz, -1, arma::datum::inf, w.steer_x, w.steer_z};
            arma::cx_mat y = sweep_ue(H, w.v, F, pilot, rng);
            push_rows(out.obs, y, ref);
            out.pilot_slots += nu;
            out.beams_swept += 1;
        }
        out.obs.block_sizes = arma::uvec{out.obs.n_rows()};
        arma::uword best = out.obs.row_power.index_max();
        out.selected.push_back(out.obs.ledger[best]);
    }
    else if (cb.kind == CodebookKind::subarray_dft)
    {
        if (cb.n_antennas != geom.n_subarray_antennas)
            throw invalid_geometry("exhaustive_training: codebook size mismatch");
        std::vector<Observation> parts(kb);
        for (arma::uword k = 1; k <= kb; ++k)
        {
            Observation &part = parts[k - 1];
            part.n_ue = nu;
            part.n_subcarriers = H.size();
            part.bs_kind = cb.kind;
            for (const Codeword &w : cb.words)
            {
                BeamRef ref{k, 0, w.bx, w.bz, -1, arma::datum::inf, w.steer_x, w.steer_z};
                arma::cx_mat y = sweep_ue_subarray(H, k, w.v, F, pilot, rng);
                push_rows(part, y, ref);
                out.pilot_slots += nu;
                out.beams_swept += 1;
            }
            part.block_sizes = arma::uvec{part.n_rows()};
            arma::uword best = part.row_power.index_max();
            out.selected.push_back(part.ledger[best]);
        }
        out.obs = assemble_observation(parts);
    }
    else
        throw invalid_input("exhaustive_training: unsupported codebook kind");

    out.scheme = cb.kind == CodebookKind::exhaustive ? "far-exhaustive" : "subarray-exhaustive";
    return out;
}

TrainingOutcome near_field_exhaustive_training(const ChannelTensor &H, const ArrayGeometry &geom,
                                               const PilotConfig &pilot, arma::uword distance_grid_count,
                                               Rng &rng, const arma::vec &distance_grid)
{
    validate_geometry(geom);
    if (distance_grid_count < 1)
        throw invalid_input("near_field_exhaustive_training: C_d must be >= 1");
    arma::uword nu = geom.n_ue_antennas, kb = geom.n_subarrays, nab = geom.n_subarray_antennas;
    arma::uword nb = geom.n_bs_antennas;
    arma::uword side = static_cast<arma::uword>(std::llround(std::sqrt(double(nb))));
    arma::uword M = H.size();
    double lam = geom.wavelength;

    arma::vec dist = distance_grid;
    if (dist.is_empty())
    {
        FieldBoundaries fb = field_boundaries(geom);
        dist = arma::logspace(std::log10(fb.d_fraunhofer_subarray), std::log10(fb.d_fraunhofer_array),
                              distance_grid_count);
    }
    if (dist.n_elem != distance_grid_count)
        throw invalid_input("near_field_exhaustive_training: distance grid size mismatch");

    arma::cx_mat F = ue_codebook_matrix(nu);

    TrainingOutcome out;
    out.scheme = "near-exhaustive";
    out.obs.n_ue = nu;
    out.obs.n_subcarriers = M;
    out.obs.bs_kind = CodebookKind::near_field;
    out.obs.powers_only = true;
    out.bounds.set_size(kb, 4);
    for (arma::uword k = 0; k < kb; ++k)
        out.bounds.row(k) = arma::rowvec{-1.0, 1.0, -1.0, 1.0};

    double scale = 1.0 / std::sqrt(double(kb) * double(nab));
    arma::uword n_rows = nb * distance_grid_count;
    out.obs.row_power.set_size(n_rows);
    out.obs.ledger.reserve(n_rows);

    arma::uword row = 0;
    for (arma::uword nx = 1; nx <= side; ++nx)
        for (arma::uword nz = 1; nz <= side; ++nz)
        {
            double px = 2.0 * double(nx - 1) / double(side) - 1.0;
            double pz = 2.0 * double(nz - 1) / double(side) - 1.0;
            arma::cx_vec block = array_response(nab, px, pz, lam, geom.element_spacing);
            // per-subarray noiseless sweep rows, reused for every focal distance
            std::vector<arma::cx_mat> t(kb); // each M x N_u
            for (arma::uword k = 0; k < kb; ++k)
            {
                t[k].set_size(M, nu);
                for (arma::uword m = 0; m < M; ++m)
                    t[k].row(m) = (block.t() * H[m].rows(k * nab, (k + 1) * nab - 1)) * F;
            }
            for (arma::uword c = 0; c < distance_grid_count; ++c)
            {
                arma::cx_mat y(M, nu, arma::fill::zeros);
                for (arma::uword k = 0; k < kb; ++k)
                {
                    double ph = spherical_phase_shift(dist(c), geom.subarray_offsets(k, 0),
                                                      geom.subarray_offsets(k, 1), px, pz, lam);
                    y += std::polar(scale, ph) * t[k]; // conj of the codeword phase
                }
                y *= pilot.pilot_symbol;
                double sd = std::sqrt(pilot.noise_variance); // codeword has unit norm
                for (arma::uword u = 0; u < nu; ++u)
                    for (arma::uword m = 0; m < M; ++m)
                        y(m, u) += sd * rng.cgauss();
                BeamRef ref{0, 0, nx, nz, int(c), dist(c), px, pz};
                out.obs.ledger.push_back(ref);
                out.obs.row_power(row++) = row_energy(y);
                out.pilot_slots += nu;
                out.beams_swept += 1;
            }
        }
    out.obs.block_sizes = arma::uvec{n_rows};
    arma::uword best = out.obs.row_power.index_max();
    out.selected.push_back(out.obs.ledger[best]);
    return out;
}

void potential_range(double lo_x, double hi_x, double lo_z, double hi_z,
                     double g_rel_x, double g_rel_z, double d_min,
                     double &out_lo_x, double &out_hi_x, double &out_lo_z, double &out_hi_z)
{
    if (d_min <= 0.0)
        throw invalid_input("potential_range: d_min must be positive");
    out_lo_x = arma::datum::inf;
    out_hi_x = -arma::datum::inf;
    out_lo_z = arma::datum::inf;
    out_hi_z = -arma::datum::inf;
    const double corners_x[2] = {lo_x, hi_x};
    const double corners_z[2] = {lo_z, hi_z};
    const double dists[2] = {d_min, 1e12};
    for (double wx : corners_x)
        for (double wz : corners_z)
            for (double d1 : dists)
            {
                double dk = d1 + (g_rel_z * wz - g_rel_x * wx); // first-order expansion
                double wkx = (d1 * wx - g_rel_x) / dk;
                double wkz = (d1 * wz + g_rel_z) / dk;
                out_lo_x = std::min(out_lo_x, wkx);
                out_hi_x = std::max(out_hi_x, wkx);
                out_lo_z = std::min(out_lo_z, wkz);
                out_hi_z = std::max(out_hi_z, wkz);
            }
    out_lo_x = std::clamp(out_lo_x, -1.0, 1.0);
    out_hi_x = std::clamp(out_hi_x, -1.0, 1.0);
    out_lo_z = std::clamp(out_lo_z, -1.0, 1.0);
    out_hi_z = std::clamp(out_hi_z, -1.0, 1.0);
}

// deepest layer (narrowest beam) whose single cell contains the rectangle;
// 0 means no layer does and the descent starts at the root
static arma::uword deepest_covering_layer(double lo_x, double hi_x, double lo_z, double hi_z,
                                          arma::uword n_ab, arma::uword max_layer,
                                          arma::uword &bx, arma::uword &bz)
{
    arma::uword found = 0;
    bx = bz = 1;
    for (arma::uword l = max_layer;; --l)
    {
        if (l == 0)
            break;
        double width = std::pow(2.0, 1.0 - double(l));
        arma::uword beams = arma::uword(1) << l;
        auto cell = [&](double v) {
            double idx = std::floor((v + 1.0) / width);
            return arma::uword(std::clamp(idx, 0.0, double(beams - 1)));
        };
        arma::uword cx_lo = cell(lo_x), cz_lo = cell(lo_z);
        double eps = 1e-12;
        bool fits_x = hi_x <= -1.0 + double(cx_lo + 1) * width + eps;
        bool fits_z = hi_z <= -1.0 + double(cz_lo + 1) * width + eps;
        if (fits_x && fits_z)
        {
            found = l;
            bx = cx_lo + 1;
            bz = cz_lo + 1;
            break;
        }
    }
    (void)n_ab;
    return found;
}

TrainingOutcome sch_training(const ChannelTensor &H, const ArrayGeometry &geom,
                             const Codebook &hier, const PilotConfig &pilot,
                             double d_min, Rng &rng)
{
    validate_geometry(geom);
    if (hier.kind != CodebookKind::hierarchical || hier.n_antennas != geom.n_subarray_antennas)
        throw invalid_input("sch_training: hierarchical codebook does not match the geometry");
    arma::uword nu = geom.n_ue_antennas, kb = geom.n_subarrays;
    arma::uword L = hier.n_layers;
    arma::cx_mat F = ue_codebook_matrix(nu);

    TrainingOutcome out;
    out.scheme = "sch";
    out.bounds.set_size(kb, 4);
    std::vector<Observation> parts(kb);

    for (arma::uword k = 1; k <= kb; ++k)
    {
        Observation &part = parts[k - 1];
        part.n_ue = nu;
        part.n_subcarriers = H.size();
        part.bs_kind = CodebookKind::hierarchical;

        arma::uword start_layer = 0, cur_bx = 1, cur_bz = 1;
        if (k > 1)
        {
            // guard band of half a leaf width: a reference-subarray descent
            // that ended one boundary off (a near-edge source tipped by
            // multipath) must not push the remaining subarrays onto a start
            // beam that excludes the true angle
            double guard = 1.0 / std::sqrt(double(geom.n_subarray_antennas));
            double lx = std::max(out.bounds(0, 0) - guard, -1.0);
            double hx = std::min(out.bounds(0, 1) + guard, 1.0);
            double lz = std::max(out.bounds(0, 2) - guard, -1.0);
            double hz = std::min(out.bounds(0, 3) + guard, 1.0);
            double plx, phx, plz, phz;
            potential_range(lx, hx, lz, hz,
                            geom.subarray_offsets(k - 1, 0) - geom.subarray_offsets(0, 0),
                            geom.subarray_offsets(k - 1, 1) - geom.subarray_offsets(0, 1),
                            d_min, plx, phx, plz, phz);
            start_layer = deepest_covering_layer(plx, phx, plz, phz, geom.n_subarray_antennas,
                                                 L - 1, cur_bx, cur_bz);
            out.savings_beams += 4 * start_layer;
        }

        arma::cx_mat W_sofar(geom.n_subarray_antennas, 4 * (L - start_layer));
        double leaf_width = std::pow(2.0, 1.0 - double(L));
        for (arma::uword l = start_layer + 1; l <= L; ++l)
        {
            // children of the current beam; the root (1,1) at layer 0 has the
            // four layer-1 beams as children under the same indexing
            arma::uword cbx = 2 * cur_bx - 1;
            arma::uword cbz = 2 * cur_bz - 1;
            for (arma::uword ix = 0; ix < 2; ++ix)
                for (arma::uword iz = 0; iz < 2; ++iz)
                {
                    arma::uword bx = cbx + ix, bz = cbz + iz;
                    const Codeword &w = hier.at(l, bx, bz);
                    BeamRef ref{k, l, bx, bz, -1, arma::datum::inf, w.steer_x, w.steer_z};
                    arma::cx_mat y = sweep_ue_subarray(H, k, w.v, F, pilot, rng);
                    W_sofar.col(part.n_rows()) = w.v;
                    push_rows(part, y, ref);
                    out.pilot_slots += nu;
                    out.beams_swept += 1;
                }
            // parent cell = union of the four children just swept
            double width = std::pow(2.0, 1.0 - double(l));
            double plo_x, phi_x, plo_z, phi_z;
            beam_coverage(l, cbx, cbz, geom.n_subarray_antennas, plo_x, phi_x, plo_z, phi_z);
            phi_x = plo_x + 2.0 * width;
            phi_z = plo_z + 2.0 * width;
            double bx_hat = 0.0, bz_hat = 0.0;
            descent_argmax(part, W_sofar, F, geom, plo_x, phi_x, plo_z, phi_z,
                           0.5 * leaf_width, bx_hat, bz_hat);
            arma::uword side = arma::uword(1) << l;
            auto cell = [&](double v) {
                double idx = std::floor((v + 1.0) / width);
                return arma::uword(std::clamp(idx, 0.0, double(side - 1))) + 1;
            };
            cur_bx = std::clamp<arma::uword>(cell(bx_hat), cbx, cbx + 1);
            cur_bz = std::clamp<arma::uword>(cell(bz_hat), cbz, cbz + 1);
        }

        part.block_sizes = arma::uvec{part.n_rows()};
        const Codeword &leaf = hier.at(L, cur_bx, cur_bz);
        out.selected.push_back(BeamRef{k, L, cur_bx, cur_bz, -1, arma::datum::inf, leaf.steer_x, leaf.steer_z});
        out.bounds(k - 1, 0) = leaf.lo_x;
        out.bounds(k - 1, 1) = leaf.hi_x;
        out.bounds(k - 1, 2) = leaf.lo_z;
        out.bounds(k - 1, 3) = leaf.hi_z;
    }
    // search bounds carry the same half-leaf guard band: when the descent ends
    // one boundary off, the true angle stays inside the estimator's rectangle
    double guard = 1.0 / std::sqrt(double(geom.n_subarray_antennas));
    for (arma::uword k = 0; k < kb; ++k)
    {
        out.bounds(k, 0) = std::max(out.bounds(k, 0) - guard, -1.0);
        out.bounds(k, 1) = std::min(out.bounds(k, 1) + guard, 1.0);
        out.bounds(k, 2) = std::max(out.bounds(k, 2) - guard, -1.0);
        out.bounds(k, 3) = std::min(out.bounds(k, 3) + guard, 1.0);
    }
    out.obs = assemble_observation(parts);
    return out;
}

Observation assemble_observation(const std::vector<Observation> &parts)
{
    if (parts.empty())
        throw invalid_input("assemble_observation: no parts");
    Observation out;
    out.n_ue = parts[0].n_ue;
    out.n_subcarriers = parts[0].n_subcarriers;
    out.bs_kind = parts[0].bs_kind;
    out.block_sizes.set_size(parts.size());
    arma::uword total_rows = 0;
    for (arma::uword i = 0; i < parts.size(); ++i)
    {
        if (parts[i].n_ue != out.n_ue)
            throw invalid_input("assemble_observation: mismatched N_u across blocks");
        if (parts[i].n_subcarriers != out.n_subcarriers)
            throw invalid_input("assemble_observation: mismatched subcarrier count");
        out.block_sizes(i) = parts[i].n_rows();
        total_rows += parts[i].n_rows();
    }
    out.row_power.set_size(total_rows);
    out.y.resize(out.n_subcarriers);
    for (arma::uword m = 0; m < out.n_subcarriers; ++m)
    {
        out.y[m].set_size(total_rows, out.n_ue);
        arma::uword r = 0;
        for (const Observation &p : parts)
        {
            if (p.n_rows() > 0)
                out.y[m].rows(r, r + p.n_rows() - 1) = p.y[m];
            r += p.n_rows();
        }
    }
    arma::uword r = 0;
    for (const Observation &p : parts)
    {
        for (arma::uword i = 0; i < p.n_rows(); ++i)
        {
            out.ledger.push_back(p.ledger[i]);
            out.row_power(r++) = p.row_power(i);
        }
    }
    return out;
}

} // namespace crossfield
