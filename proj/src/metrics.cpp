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

#include "crossfield/metrics.hpp"

namespace crossfield
{

static Beamformers beamformers_from_path(const Path &p, const ArrayGeometry &geom)
{
    arma::uword kb = geom.n_subarrays, nab = geom.n_subarray_antennas, nu = geom.n_ue_antennas;
    double lam = geom.wavelength, d = geom.element_spacing;

    Beamformers bf;
    bf.W_rf.zeros(geom.n_bs_antennas, kb);
    bf.F_rf.set_size(nu, kb);
    for (arma::uword k = 0; k < kb; ++k)
    {
        arma::cx_vec ab = array_response(nab, spatial_angle_x(p.az_bs_k(k), p.el_bs_k(k)),
                                         spatial_angle_z(p.az_bs_k(k), p.el_bs_k(k)), lam, d);
        bf.W_rf.submat(k * nab, k, (k + 1) * nab - 1, k) =
            ab * std::polar(1.0 / std::sqrt(double(nab)), -p.phase_shift_k(k));
        arma::cx_vec au = array_response(nu, spatial_angle_x(p.az_ue_k(k), p.el_ue_k(k)),
                                         spatial_angle_z(p.az_ue_k(k), p.el_ue_k(k)), lam, d);
        bf.F_rf.col(k) = au / std::sqrt(double(nu));
    }
    bf.w_bb = arma::cx_vec(kb);
    bf.w_bb.fill(cx(1.0 / std::sqrt(double(kb)), 0.0));
    // the UE analog columns are near-parallel; scale the digital weight so the
    // combined beamformer meets the unit power constraint exactly
    bf.f_bb = arma::cx_vec(kb);
    bf.f_bb.fill(cx(1.0, 0.0));
    double nrm = arma::norm(bf.F_rf * bf.f_bb);
    bf.f_bb /= nrm;
    return bf;
}

Beamformers optimal_beamformers(const PathSet &paths, const ArrayGeometry &geom)
{
    return beamformers_from_path(paths.los(), geom);
}

Beamformers beamformers_from_reference(double az, double el, double distance,
                                       const ArrayGeometry &geom)
{
    Path p;
    p.los = true;
    p.az_bs = az;
    p.el_bs = el;
    p.az_ue = -az;
    p.el_ue = -el;
    p.scatter_distance = std::isfinite(distance) ? distance : 1e12;
    p.ref_distance = p.scatter_distance;
    p.total_distance = p.scatter_distance;
    p.coeff = cx(1.0, 0.0);
    fill_subarray_parameters(p, geom);
    return beamformers_from_path(p, geom);
}

Beamformers estimates_to_beamformers(const EstimationResult &result, const ArrayGeometry &geom)
{
    if (result.az_bs.is_empty())
        throw invalid_input("estimates_to_beamformers: no angle estimates");
    double psix = spatial_angle_x(result.az_bs(0), result.el_bs(0));
    double psiz = spatial_angle_z(result.az_bs(0), result.el_bs(0));
    double D = result.distance_valid ? result.distance : arma::datum::inf;

    double wx = psix, wz = psiz;
    if (std::isfinite(D) && D > 0.0)
    {
        // invert the subarray-1 angle relation: psi^1 = f(w, D) -> w(psi^1, D)
        double g1x = geom.subarray_offsets(0, 0), g1z = geom.subarray_offsets(0, 1);
        for (int it = 0; it < 64; ++it)
        {
            double d1 = subarray_distance(D, g1x, g1z, wx, wz);
            double nx = (psix * d1 + g1x) / D;
            double nz = (psiz * d1 - g1z) / D;
            double delta = std::abs(nx - wx) + std::abs(nz - wz);
            wx = nx;
            wz = nz;
            if (delta < 1e-15)
                break;
        }
    }
    else
        D = arma::datum::inf;

    wz = std::clamp(wz, -1.0, 1.0);
    double el = std::asin(wz);
    double ce = std::cos(el);
    double az = std::asin(ce > 1e-300 ? std::clamp(wx / ce, -1.0, 1.0) : 0.0);
    return beamformers_from_reference(az, el, D, geom);
}

double aligned_snr_db(const arma::cx_mat &H, const arma::cx_vec &w, const arma::cx_vec &f,
                      const PilotConfig &pilot)
{
    double sig = std::norm(arma::cdot(w, H * f)) * pilot.pilot_symbol * pilot.pilot_symbol;
    return db10(sig / pilot.noise_variance);
}

double upper_bound_snr_db(const arma::cx_mat &H, const PilotConfig &pilot)
{
    arma::vec s = arma::svd(H);
    double sig = s(0) * s(0) * pilot.pilot_symbol * pilot.pilot_symbol;
    return db10(sig / pilot.noise_variance);
}

AlignmentReport alignment_report(const arma::cx_mat &H_truth, const PathSet &paths,
                                 const ArrayGeometry &geom, const Beamformers &bf,
                                 const PilotConfig &pilot)
{
    AlignmentReport rep;
    arma::cx_vec w = bf.w(), f = bf.f();
    double g = std::norm(arma::cdot(w, H_truth * f));

    Beamformers opt = optimal_beamformers(paths, geom);
    double g_opt = std::norm(arma::cdot(opt.w(), H_truth * opt.f()));
    arma::vec s = arma::svd(H_truth);
    double g_chan = s(0) * s(0);

    rep.normalized_snr_db = db10(g / g_opt);
    rep.normalized_vs_channel_db = db10(g / g_chan);
    if (pilot.noise_variance > 0.0)
    {
        double scale = pilot.pilot_symbol * pilot.pilot_symbol / pilot.noise_variance;
        rep.aligned_snr_db = db10(g * scale);
        rep.upper_bound_snr_db = db10(g_opt * scale);
        rep.channel_bound_snr_db = db10(g_chan * scale);
    }
    else
    {
        rep.aligned_snr_db = arma::datum::inf;
        rep.upper_bound_snr_db = arma::datum::inf;
        rep.channel_bound_snr_db = arma::datum::inf;
    }

    // beamforming gains against the LoS signatures
    const Path &p = paths.los();
    arma::uword nab = geom.n_subarray_antennas, nu = geom.n_ue_antennas;
    arma::cx_vec sig_b(geom.n_bs_antennas), sig_u(nu, arma::fill::zeros);
    for (arma::uword k = 0; k < geom.n_subarrays; ++k)
    {
        arma::cx_vec ab = array_response(nab, spatial_angle_x(p.az_bs_k(k), p.el_bs_k(k)),
                                         spatial_angle_z(p.az_bs_k(k), p.el_bs_k(k)),
                                         geom.wavelength, geom.element_spacing);
        sig_b.subvec(k * nab, (k + 1) * nab - 1) = ab * std::polar(1.0, -p.phase_shift_k(k));
    }
    arma::cx_vec au = array_response(nu, spatial_angle_x(p.az_ue_k(0), p.el_ue_k(0)),
                                     spatial_angle_z(p.az_ue_k(0), p.el_ue_k(0)),
                                     geom.wavelength, geom.element_spacing);
    sig_u = au;
    rep.gain_bs = std::norm(arma::cdot(w, sig_b));
    rep.gain_ue = std::norm(arma::cdot(sig_u, f));
    return rep;
}

double rmse_angle_deg(const std::vector<AngleSample> &samples)
{
    if (samples.empty())
        throw invalid_input("rmse_angle_deg: no samples");
    arma::uword kb = samples[0].az_bs_est.n_elem;
    double acc_bs = 0.0, acc_ue = 0.0;
    for (const AngleSample &s : samples)
    {
        if (s.az_bs_est.n_elem != kb || s.az_bs_true.n_elem != kb)
            throw invalid_input("rmse_angle_deg: mismatched subarray count");
        for (arma::uword k = 0; k < kb; ++k)
        {
            double dtb = rad2deg(s.az_bs_est(k) - s.az_bs_true(k));
            double dpb = rad2deg(s.el_bs_est(k) - s.el_bs_true(k));
            acc_bs += dtb * dtb + dpb * dpb;
            double dtu = rad2deg(-s.az_bs_est(k) - s.az_ue_true(k));
            double dpu = rad2deg(-s.el_bs_est(k) - s.el_ue_true(k));
            acc_ue += dtu * dtu + dpu * dpu;
        }
    }
    double n = double(samples.size());
    return (std::sqrt(acc_bs / n) + std::sqrt(acc_ue / n)) / (2.0 * double(kb));
}

double rmse_distance_m(const arma::vec &estimates, const arma::vec &truths)
{
    if (estimates.n_elem != truths.n_elem)
        throw invalid_input("rmse_distance_m: length mismatch");
    if (estimates.is_empty())
        return 0.0;
    arma::vec d = estimates - truths;
    return std::sqrt(arma::mean(arma::square(d)));
}

OverheadTable overhead_table(const ArrayGeometry &geom, arma::uword c_d,
                             const std::vector<TrainingOutcome> &sch_outcomes)
{
    OverheadTable t;
    arma::uword nb = geom.n_bs_antennas, nu = geom.n_ue_antennas, kb = geom.n_subarrays;
    arma::uword nab = geom.n_subarray_antennas;
    arma::uword L = 0;
    for (arma::uword s = static_cast<arma::uword>(std::llround(std::sqrt(double(nab)))); s > 1; s >>= 1)
        ++L;
    t.near_exhaustive = nu * nb * c_d;
    t.far_exhaustive = nu * nb;
    t.subarray_exhaustive = nu * nb;
    t.sch_nominal = 4 * nu * kb * L;
    if (!sch_outcomes.empty())
    {
        arma::uword slots = 0, savings = 0;
        for (const TrainingOutcome &o : sch_outcomes)
        {
            slots += o.pilot_slots;
            savings += o.savings_beams;
        }
        t.sch_measured = slots / sch_outcomes.size();
        t.sch_savings_beams = savings / sch_outcomes.size();
    }
    else
        t.sch_measured = t.sch_nominal;
    return t;
}

} // namespace crossfield
