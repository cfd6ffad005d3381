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

#include "crossfield/channel.hpp"

namespace crossfield
{

double subarray_distance(double distance, double g_x, double g_z, double w_x, double w_z)
{
    if (distance <= 0.0)
        throw invalid_input("subarray_distance: distance must be positive");
    double r = 1.0 + 2.0 * (g_z * w_z - g_x * w_x) / distance +
               (g_x * g_x + g_z * g_z) / (distance * distance);
    return distance * std::sqrt(std::max(r, 0.0));
}

void subarray_angles(double ref_az, double ref_el, double distance,
                     double g_x, double g_z, double &az_k, double &el_k)
{
    if (distance <= 0.0)
        throw invalid_input("subarray_angles: distance must be positive");
    double wx = spatial_angle_x(ref_az, ref_el);
    double wz = spatial_angle_z(ref_az, ref_el);
    double dk = subarray_distance(distance, g_x, g_z, wx, wz);

    double psix = (distance * wx - g_x) / dk;
    double psiz = (distance * wz + g_z) / dk;
    psiz = std::clamp(psiz, -1.0, 1.0);
    el_k = std::asin(psiz);
    double ce = std::cos(el_k);
    double sx = ce > 1e-300 ? std::clamp(psix / ce, -1.0, 1.0) : 0.0;
    az_k = std::asin(sx);
}

double spherical_phase_shift(double distance, double g_x, double g_z,
                             double w_x, double w_z, double wavelength)
{
    if (distance <= 0.0)
        throw invalid_input("spherical_phase_shift: distance must be positive");
    // D*(sqrt(1+x)-1) written as D*x/(sqrt(1+x)+1) to stay accurate when the
    // radicand is close to one (far distances)
    double x = 2.0 * (g_z * w_z - g_x * w_x) / distance +
               (g_x * g_x + g_z * g_z) / (distance * distance);
    double diff = distance * x / (std::sqrt(std::max(1.0 + x, 0.0)) + 1.0);
    return 2.0 * arma::datum::pi / wavelength * diff;
}

double pwm_phase_shift(double g_x, double g_z, double w_x, double w_z, double wavelength)
{
    return 2.0 * arma::datum::pi / wavelength * (g_z * w_z - g_x * w_x);
}

cx path_gain(cx h_p, arma::uword m, double delta_f, double tau_p)
{
    double phase = -2.0 * arma::datum::pi * double(m) * delta_f * tau_p;
    return h_p * std::polar(1.0, phase);
}

// Fill per-subarray angles and phase shifts for one path. Phase shifts are
// referenced to subarray 1 and include the steering recentering term: the
// spherical shift is a center-to-center quantity while steering vectors are
// referenced to their first element, so the model phase per subarray is
//   Delta Phi_k = k0*(D_k - D_1) - k0*d*cb*[sum(psi_b^k) - sum(psi_b^1)]
//                               + k0*d*cu*[sum(psi_u^k) - sum(psi_u^1)]
// with cb, cu the half-span element index offsets. Without this term the
// block phases would be off by O(aperture * (psi^k - psi^1) / lambda), which
// is far above the pi/8 budget in the near field.
void fill_subarray_parameters(Path &p, const ArrayGeometry &geom)
{
    arma::uword kb = geom.n_subarrays;
    p.az_bs_k.set_size(kb);
    p.el_bs_k.set_size(kb);
    p.az_ue_k.set_size(kb);
    p.el_ue_k.set_size(kb);
    p.phase_shift_k.set_size(kb);

    double wx = spatial_angle_x(p.az_bs, p.el_bs);
    double wz = spatial_angle_z(p.az_bs, p.el_bs);
    double lam = geom.wavelength;
    double k0 = 2.0 * arma::datum::pi / lam;
    double d = geom.element_spacing;
    arma::uword na_side = static_cast<arma::uword>(std::llround(std::sqrt(double(geom.n_subarray_antennas))));
    arma::uword nu_side = static_cast<arma::uword>(std::llround(std::sqrt(double(geom.n_ue_antennas))));
    double cb = 0.5 * double(na_side - 1);
    double cu = 0.5 * double(nu_side - 1);

    double ph1 = 0.0;
    for (arma::uword k = 0; k < kb; ++k)
    {
        double gx = geom.subarray_offsets(k, 0);
        double gz = geom.subarray_offsets(k, 1);
        subarray_angles(p.az_bs, p.el_bs, p.scatter_distance, gx, gz, p.az_bs_k(k), p.el_bs_k(k));
        if (p.los)
        {
            p.az_ue_k(k) = -p.az_bs_k(k);
            p.el_ue_k(k) = -p.el_bs_k(k);
        }
        else
        {
            // single-bounce geometry: the departure angle at the UE does not
            // depend on which BS subarray receives the path
            p.az_ue_k(k) = p.az_ue;
            p.el_ue_k(k) = p.el_ue;
        }
        double sph = spherical_phase_shift(p.scatter_distance, gx, gz, wx, wz, lam);
        double sb = spatial_angle_x(p.az_bs_k(k), p.el_bs_k(k)) + spatial_angle_z(p.az_bs_k(k), p.el_bs_k(k));
        double su = spatial_angle_x(p.az_ue_k(k), p.el_ue_k(k)) + spatial_angle_z(p.az_ue_k(k), p.el_ue_k(k));
        double ph = sph - k0 * d * cb * sb + k0 * d * cu * su;
        if (k == 0)
            ph1 = ph;
        p.phase_shift_k(k) = ph - ph1;
    }
}

PathSet generate_paths(const ChannelConfig &cfg, const ArrayGeometry &geom,
                       const Waveform &wf, std::uint64_t seed)
{
    if (cfg.n_paths < 1)
        throw invalid_config("generate_paths: n_paths must be >= 1");
    if (cfg.d_max < cfg.d_min || cfg.d_min <= 0.0)
        throw invalid_config("generate_paths: invalid distance range");

    Rng rng(seed);
    PathSet ps;
    ps.n_subarrays = geom.n_subarrays;
    ps.seed = seed;
    ps.paths.resize(cfg.n_paths);

    double lam = geom.wavelength;

    Path &los = ps.paths[0];
    los.los = true;
    los.ref_distance = rng.uniform(cfg.d_min, cfg.d_max);
    los.scatter_distance = los.ref_distance;
    los.total_distance = los.ref_distance;
    los.delay = los.total_distance / wf.light_speed;
    los.az_bs = rng.uniform(cfg.az_lo, cfg.az_hi);
    los.el_bs = rng.uniform(cfg.el_lo, cfg.el_hi);
    los.az_ue = -los.az_bs;
    los.el_ue = -los.el_bs;
    double amp = lam / (4.0 * arma::datum::pi * los.ref_distance);
    los.coeff = std::polar(amp, rng.uniform(0.0, 2.0 * arma::datum::pi));
    fill_subarray_parameters(los, geom);

    arma::uword n_nlos = cfg.n_paths - 1;
    if (n_nlos > 0)
    {
        arma::vec loss_db(n_nlos);
        for (arma::uword p = 0; p < n_nlos; ++p)
        {
            Path &np = ps.paths[p + 1];
            np.los = false;
            np.az_bs = rng.uniform(cfg.az_lo, cfg.az_hi);
            np.el_bs = rng.uniform(cfg.el_lo, cfg.el_hi);
            np.az_ue = rng.uniform(cfg.az_lo, cfg.az_hi);
            np.el_ue = rng.uniform(cfg.el_lo, cfg.el_hi);
            np.scatter_distance = rng.uniform(los.ref_distance, std::max(cfg.d_max, los.ref_distance));
            np.ref_distance = np.scatter_distance;
            np.total_distance = np.scatter_distance + rng.uniform(0.0, cfg.d_max);
            np.delay = np.total_distance / wf.light_speed;
        }
        // redraw the excess losses as a block until the LoS path strictly
        // dominates the summed NLoS power; scale down as a last resort
        double sum_rel = 0.0;
        for (int attempt = 0; attempt < 64; ++attempt)
        {
            sum_rel = 0.0;
            for (arma::uword p = 0; p < n_nlos; ++p)
            {
                loss_db(p) = rng.uniform(cfg.excess_loss_lo_db, cfg.excess_loss_hi_db);
                sum_rel += from_db10(-loss_db(p));
            }
            if (sum_rel < 1.0)
                break;
        }
        double scale = sum_rel < 1.0 ? 1.0 : std::sqrt(0.99 / sum_rel);
        for (arma::uword p = 0; p < n_nlos; ++p)
        {
            Path &np = ps.paths[p + 1];
            double a = amp * std::pow(10.0, -loss_db(p) / 20.0) * scale;
            np.coeff = std::polar(a, rng.uniform(0.0, 2.0 * arma::datum::pi));
            fill_subarray_parameters(np, geom);
        }
    }
    return ps;
}

arma::cx_mat hspm_channel(const PathSet &paths, const ArrayGeometry &geom,
                          const Waveform &wf, arma::uword m)
{
    validate_geometry(geom);
    if (paths.n_subarrays != geom.n_subarrays)
        throw invalid_geometry("hspm_channel: path set and geometry disagree on K_b");

    arma::uword nb = geom.n_bs_antennas, nu = geom.n_ue_antennas, nab = geom.n_subarray_antennas;
    double lam = geom.wavelength, d = geom.element_spacing;
    arma::cx_mat H(nb, nu, arma::fill::zeros);

    for (const Path &p : paths.paths)
    {
        cx alpha = path_gain(p.coeff, m, wf.subcarrier_spacing, p.delay);
        for (arma::uword k = 0; k < geom.n_subarrays; ++k)
        {
            arma::cx_vec ab = array_response(nab, spatial_angle_x(p.az_bs_k(k), p.el_bs_k(k)),
                                             spatial_angle_z(p.az_bs_k(k), p.el_bs_k(k)), lam, d);
            arma::cx_vec au = array_response(nu, spatial_angle_x(p.az_ue_k(k), p.el_ue_k(k)),
                                             spatial_angle_z(p.az_ue_k(k), p.el_ue_k(k)), lam, d);
            cx f = alpha * std::polar(1.0, -p.phase_shift_k(k));
            H.rows(k * nab, (k + 1) * nab - 1) += f * ab * au.t();
        }
    }
    return H;
}

arma::cx_mat pwm_channel(const PathSet &paths, const ArrayGeometry &geom,
                         const Waveform &wf, arma::uword m)
{
    validate_geometry(geom);
    arma::uword nb = geom.n_bs_antennas, nu = geom.n_ue_antennas, nab = geom.n_subarray_antennas;
    double lam = geom.wavelength, d = geom.element_spacing;
    arma::cx_mat H(nb, nu, arma::fill::zeros);

    for (const Path &p : paths.paths)
    {
        cx alpha = path_gain(p.coeff, m, wf.subcarrier_spacing, p.delay);
        double wx = spatial_angle_x(p.az_bs, p.el_bs);
        double wz = spatial_angle_z(p.az_bs, p.el_bs);
        double ux = spatial_angle_x(p.az_ue, p.el_ue);
        double uz = spatial_angle_z(p.az_ue, p.el_ue);
        arma::cx_vec ab = array_response(nab, wx, wz, lam, d);
        arma::cx_vec au = array_response(nu, ux, uz, lam, d);
        double ph_ref = pwm_phase_shift(geom.subarray_offsets(0, 0), geom.subarray_offsets(0, 1), wx, wz, lam);
        for (arma::uword k = 0; k < geom.n_subarrays; ++k)
        {
            double ph = pwm_phase_shift(geom.subarray_offsets(k, 0), geom.subarray_offsets(k, 1), wx, wz, lam) - ph_ref;
            cx f = alpha * std::polar(1.0, -ph);
            H.rows(k * nab, (k + 1) * nab - 1) += f * ab * au.t();
        }
    }
    return H;
}

// direction of a source at spatial angles (wx, wz); x/z components are negated
// so that corner-referenced steering phases match growing path lengths
static arma::vec3 unit_direction(double wx, double wz)
{
    double b2 = std::max(0.0, 1.0 - wx * wx - wz * wz);
    return {-wx, std::sqrt(b2), -wz};
}

arma::cx_mat swm_channel(const PathSet &paths, const ArrayGeometry &geom,
                         const Waveform &wf, arma::uword m)
{
    validate_geometry(geom);
    arma::uword nb = geom.n_bs_antennas, nu = geom.n_ue_antennas;
    double lam = geom.wavelength;
    double k0 = 2.0 * arma::datum::pi / lam;
    ElementPositions pos = element_positions(geom);

    // phase reference pair: first element of subarray 1 and first UE element,
    // the pair that carries zero phase in the parametric models
    double r1x = pos.bs(0, 0), r1z = pos.bs(0, 1);

    arma::cx_mat H(nb, nu, arma::fill::zeros);
    for (const Path &p : paths.paths)
    {
        cx alpha = path_gain(p.coeff, m, wf.subcarrier_spacing, p.delay);
        double wx = spatial_angle_x(p.az_bs, p.el_bs);
        double wz = spatial_angle_z(p.az_bs, p.el_bs);
        arma::vec3 u = unit_direction(wx, wz);
        // BS-side anchor: the UE reference (LoS) or the last scatterer (NLoS)
        arma::vec3 S = {u(0) * p.scatter_distance, u(1) * p.scatter_distance, u(2) * p.scatter_distance};

        if (p.los)
        {
            // exact two-point distances; the UE grid lies in a plane parallel
            // to the BS array and faces it, so its axes are reversed in the
            // global frame
            arma::mat ue_xyz(nu, 3);
            for (arma::uword l = 0; l < nu; ++l)
            {
                ue_xyz(l, 0) = S(0) - pos.ue(l, 0);
                ue_xyz(l, 1) = S(1);
                ue_xyz(l, 2) = S(2) - pos.ue(l, 1);
            }
            double d_ref = std::sqrt(std::pow(ue_xyz(0, 0) - r1x, 2) + std::pow(ue_xyz(0, 1), 2) +
                                     std::pow(ue_xyz(0, 2) - r1z, 2));
            for (arma::uword i = 0; i < nb; ++i)
                for (arma::uword l = 0; l < nu; ++l)
                {
                    double dx = ue_xyz(l, 0) - pos.bs(i, 0);
                    double dy = ue_xyz(l, 1);
                    double dz = ue_xyz(l, 2) - pos.bs(i, 1);
                    double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
                    H(i, l) += alpha * std::polar(1.0, -k0 * (dist - d_ref));
                }
        }
        else
        {
            // exact spherical wavefront on the BS side of the bounce, planar on
            // the UE side (fixed departure direction for a single bounce)
            double ux = spatial_angle_x(p.az_ue, p.el_ue);
            double uz = spatial_angle_z(p.az_ue, p.el_ue);
            arma::cx_vec au = array_response(nu, ux, uz, lam, geom.element_spacing);
            double d_ref = std::sqrt(std::pow(S(0) - r1x, 2) + std::pow(S(1), 2) + std::pow(S(2) - r1z, 2));
            for (arma::uword i = 0; i < nb; ++i)
            {
                double dx = S(0) - pos.bs(i, 0);
                double dy = S(1);
                double dz = S(2) - pos.bs(i, 1);
                double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
                cx f = alpha * std::polar(1.0, -k0 * (dist - d_ref));
                for (arma::uword l = 0; l < nu; ++l)
                    H(i, l) += f * std::conj(au(l));
            }
        }
    }
    return H;
}

ChannelTensor channel_tensor(const PathSet &paths, const ArrayGeometry &geom,
                             const Waveform &wf, ChannelModel model)
{
    ChannelTensor H(wf.n_subcarriers);
    for (arma::uword m = 1; m <= wf.n_subcarriers; ++m)
    {
        switch (model)
        {
        case ChannelModel::SWM:
            H[m - 1] = swm_channel(paths, geom, wf, m);
            break;
        case ChannelModel::HSPM:
            H[m - 1] = hspm_channel(paths, geom, wf, m);
            break;
        case ChannelModel::PWM:
            H[m - 1] = pwm_channel(paths, geom, wf, m);
            break;
        }
    }
    return H;
}

double thermal_noise_variance(double bandwidth_hz)
{
    return dbm_to_watt(-174.0 + 10.0 * std::log10(bandwidth_hz));
}

} // namespace crossfield
