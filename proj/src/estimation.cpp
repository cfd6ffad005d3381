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

#include "crossfield/estimation.hpp"

namespace crossfield
{

arma::cx_vec vec_rowmajor(const arma::cx_mat &y)
{
    return arma::vectorise(y.st());
}

// rebuild the subarray-local codeword of a ledger entry
static arma::cx_vec ledger_codeword(const BeamRef &ref, const ArrayGeometry &geom,
                                    const Codebook *hier)
{
    arma::uword nab = geom.n_subarray_antennas;
    if (ref.layer > 0)
    {
        if (hier == nullptr)
            throw invalid_input("ledger_codeword: hierarchical codebook required");
        return hier->at(ref.layer, ref.bx, ref.bz).v;
    }
    return array_response(nab, ref.steer_x, ref.steer_z, 1.0, 0.5) / std::sqrt(double(nab));
}

StackedObservation stack_observation(const Observation &obs, arma::uword k,
                                     const ArrayGeometry &geom)
{
    if (obs.powers_only)
        throw invalid_input("stack_observation: observation holds powers only");
    if (k < 1 || k > obs.block_sizes.n_elem)
        throw invalid_input("stack_observation: subarray index out of range");

    arma::uword row0 = 0;
    for (arma::uword i = 0; i + 1 < k; ++i)
        row0 += obs.block_sizes(i);
    arma::uword bk = obs.block_sizes(k - 1);
    arma::uword nu = obs.n_ue, M = obs.n_subcarriers;

    StackedObservation st;
    st.subarray = k;
    st.map.F = ue_codebook_matrix(nu);
    st.map.W.set_size(geom.n_subarray_antennas, bk);
    for (arma::uword b = 0; b < bk; ++b)
    {
        const BeamRef &ref = obs.ledger[row0 + b];
        const Codebook *hier =
            ref.layer > 0 ? &hierarchical_codebook_cached(geom.n_subarray_antennas) : nullptr;
        st.map.W.col(b) = ledger_codeword(ref, geom, hier);
    }

    st.ycheck.set_size(bk * nu, M);
    for (arma::uword m = 0; m < M; ++m)
        st.ycheck.col(m) = vec_rowmajor(obs.y[m].rows(row0, row0 + bk - 1));
    return st;
}

arma::cx_mat stack_all(const Observation &obs, const ArrayGeometry &geom,
                       std::vector<MeasurementMap> &maps)
{
    arma::uword kb = obs.block_sizes.n_elem;
    maps.clear();
    arma::cx_mat full;
    for (arma::uword k = 1; k <= kb; ++k)
    {
        StackedObservation st = stack_observation(obs, k, geom);
        maps.push_back(st.map);
        full = full.is_empty() ? st.ycheck : arma::join_cols(full, st.ycheck);
    }
    return full;
}

void search_vector_parts(double psi_x, double psi_z, const ArrayGeometry &geom,
                         arma::cx_vec &a_bs, arma::cx_vec &b_ue)
{
    a_bs = array_response(geom.n_subarray_antennas, psi_x, psi_z, 1.0, 0.5);
    // conj(a_Nu(-psi)) equals a_Nu(psi) for the unit-modulus steering form
    b_ue = array_response(geom.n_ue_antennas, psi_x, psi_z, 1.0, 0.5);
}

arma::cx_vec search_vector(double theta, double phi, const ArrayGeometry &geom)
{
    double px = spatial_angle_x(theta, phi), pz = spatial_angle_z(theta, phi);
    arma::cx_vec a, b;
    search_vector_parts(px, pz, geom, a, b);
    return arma::kron(a, b);
}

double mle_spectrum(const arma::cx_mat &ycheck, const MeasurementMap &map,
                    double psi_x, double psi_z, const ArrayGeometry &geom)
{
    arma::cx_vec a, b;
    search_vector_parts(psi_x, psi_z, geom, a, b);
    arma::cx_vec g = map.apply_H(a, b);
    double den = std::pow(arma::norm(g), 2);
    if (den < 1e-300)
        return 0.0;
    arma::cx_rowvec corr = g.t() * ycheck;
    return std::pow(arma::norm(corr), 2) / den;
}

SubspaceDecomposition subspace(const arma::cx_mat &ycheck, arma::uword n_paths_hint,
                               double eps_rel)
{
    arma::uword n = ycheck.n_rows;
    SubspaceDecomposition dec;
    dec.covariance = ycheck * ycheck.t();

    arma::cx_mat U;
    arma::vec s;
    arma::cx_mat V;
    if (!arma::svd(U, s, V, ycheck, "std"))
        throw degenerate_subspace("subspace: SVD failed");

    arma::vec lam(n, arma::fill::zeros);
    for (arma::uword i = 0; i < s.n_elem && i < n; ++i)
        lam(i) = s(i) * s(i);

    arma::uword np = n_paths_hint;
    if (np == 0)
    {
        double thresh = eps_rel * lam(0);
        for (arma::uword i = 0; i < n; ++i)
            if (lam(i) >= thresh && lam(i) > 0.0)
                np = i + 1;
    }
    if (np == 0)
        np = 1;
    if (np >= n)
        throw degenerate_subspace("subspace: B_k*N_u must exceed the path count");

    dec.n_paths = np;
    dec.signal = U.cols(0, np - 1);
    dec.noise = U.cols(np, n - 1);
    dec.eig_signal = lam.subvec(0, np - 1);
    dec.eig_noise = lam.subvec(np, n - 1);
    dec.complement_exact = true;
    return dec;
}

double music_spectrum(const SubspaceDecomposition &dec, const MeasurementMap &map,
                      double psi_x, double psi_z, const ArrayGeometry &geom, bool *capped)
{
    arma::cx_vec a, b;
    search_vector_parts(psi_x, psi_z, geom, a, b);
    arma::cx_vec e = map.apply_H(a, b);
    double nrm = arma::norm(e);
    if (nrm < 1e-300)
    {
        if (capped)
            *capped = true;
        return 0.0;
    }
    e /= nrm;
    double den;
    if (dec.complement_exact)
    {
        // exact complement: e^H U_n U_n^H e = 1 - |U_s^H e|^2
        den = 1.0 - std::pow(arma::norm(dec.signal.t() * e), 2);
        den = std::max(den, 0.0);
    }
    else
        den = std::pow(arma::norm(dec.noise.t() * e), 2);
    if (den < 1e-15)
    {
        if (capped)
            *capped = true;
        return music_cap;
    }
    if (capped)
        *capped = false;
    return 1.0 / den;
}

void gss1d(const std::function<double(double)> &f, double lo, double hi, double tol,
           double &x, double &fx, arma::uword *evals)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    if (b - a <= tol)
    {
        x = 0.5 * (a + b);
        fx = f(x);
        if (evals)
            ++*evals;
        return;
    }
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    arma::uword n = 2;
    while (b - a > tol)
    {
        if (fc > fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++n;
    }
    x = 0.5 * (a + b);
    fx = std::max(fc, fd);
    if (evals)
        *evals += n;
}

void gss2d(const std::function<double(double, double)> &f,
           double lo_x, double hi_x, double lo_z, double hi_z, double tol,
           double &x, double &z, arma::uword *evals)
{
    x = 0.5 * (lo_x + hi_x);
    z = 0.5 * (lo_z + hi_z);
    const arma::uword max_rounds = 6;
    for (arma::uword round = 0; round < max_rounds; ++round)
    {
        double px = x, pz = z, fx;
        double zc = z;
        gss1d([&](double t) { return f(t, zc); }, lo_x, hi_x, tol, x, fx, evals);
        double xc = x;
        gss1d([&](double t) { return f(xc, t); }, lo_z, hi_z, tol, z, fx, evals);
        if (std::abs(x - px) < tol && std::abs(z - pz) < tol && round > 0)
            break;
    }
}

double mle_flops_model(arma::uword b_k, arma::uword n_ab, arma::uword n_u, arma::uword m)
{
    return double(b_k) * double(n_ab) * double(n_u) * double(n_u) * double(m);
}

double music_flops_model(arma::uword b_k, arma::uword n_u, arma::uword n_paths)
{
    double bn = double(b_k) * double(n_u);
    return bn * (bn - double(n_paths));
}

EstimationResult estimate_angles(const Observation &obs, EstimatorKind method,
                                 const ArrayGeometry &geom, const arma::mat &bounds,
                                 const EstimationOptions &opt)
{
    arma::uword kb = obs.block_sizes.n_elem;
    if (bounds.n_rows != kb || bounds.n_cols != 4)
        throw invalid_input("estimate_angles: bounds must be K_b x 4");

    EstimationResult res;
    res.method = method == EstimatorKind::MLE ? "mle" : "music";
    res.az_bs.set_size(kb);
    res.el_bs.set_size(kb);
    res.peak.set_size(kb);
    res.at_bound.set_size(kb);
    res.spectrum_evals.zeros(kb);
    res.model_flops_per_eval.set_size(kb);

    for (arma::uword k = 1; k <= kb; ++k)
    {
        StackedObservation st = stack_observation(obs, k, geom);
        SubspaceDecomposition dec;
        if (method == EstimatorKind::MUSIC)
            dec = subspace(st.ycheck, opt.n_paths_hint, opt.eps_rel);

        arma::uword evals = 0;
        // coarse localization always uses the matched-filter spectrum: it is
        // smooth on the beamwidth scale and ranks directions by power, so the
        // dominant path's cell wins even when the pseudo-spectrum has higher
        // but narrower peaks elsewhere
        auto coarse_spec = [&](double px, double pz) {
            ++evals;
            return mle_spectrum(st.ycheck, st.map, px, pz, geom);
        };
        // refinement objective: the matched-filter energy for MLE, the
        // negated noise-projection for MUSIC (same argmax as the
        // pseudo-spectrum but smooth instead of spiked)
        std::function<double(double, double)> refine;
        if (method == EstimatorKind::MLE)
            refine = coarse_spec;
        else
            refine = [&](double px, double pz) {
                ++evals;
                arma::cx_vec a, b;
                search_vector_parts(px, pz, geom, a, b);
                arma::cx_vec e = st.map.apply_H(a, b);
                double nrm = arma::norm(e);
                if (nrm < 1e-300)
                    return -1.0;
                e /= nrm;
                double den = dec.complement_exact
                                 ? std::max(1.0 - std::pow(arma::norm(dec.signal.t() * e), 2), 0.0)
                                 : std::pow(arma::norm(dec.noise.t() * e), 2);
                return -den;
            };

        double lx = bounds(k - 1, 0), hx = bounds(k - 1, 1);
        double lz = bounds(k - 1, 2), hz = bounds(k - 1, 3);

        // coarse bracket at half-beamwidth resolution, then golden-section
        // refinement around the best cell; keeps the search global over wide
        // bounds where the spectrum has sidelobes
        double bw = 2.0 / std::sqrt(double(geom.n_subarray_antennas));
        auto coarse_n = [&](double w) {
            return std::max<arma::uword>(5, 2 * arma::uword(std::ceil(w / bw)) + 1);
        };
        arma::uword nx = coarse_n(hx - lx), nz = coarse_n(hz - lz);
        arma::vec gx = arma::linspace(lx, hx, nx), gz = arma::linspace(lz, hz, nz);
        double best = -1.0;
        arma::uword bi = 0, bj = 0;
        for (arma::uword i = 0; i < nx; ++i)
            for (arma::uword j = 0; j < nz; ++j)
            {
                double v = coarse_spec(gx(i), gz(j));
                if (v > best)
                {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        double rlx = gx(bi == 0 ? 0 : bi - 1), rhx = gx(std::min(bi + 1, nx - 1));
        double rlz = gz(bj == 0 ? 0 : bj - 1), rhz = gz(std::min(bj + 1, nz - 1));

        double px, pz;
        gss2d(refine, rlx, rhx, rlz, rhz, opt.tol_psi, px, pz, &evals);

        res.at_bound(k - 1) = (std::abs(px - lx) < 2 * opt.tol_psi || std::abs(px - hx) < 2 * opt.tol_psi ||
                               std::abs(pz - lz) < 2 * opt.tol_psi || std::abs(pz - hz) < 2 * opt.tol_psi)
                                  ? 1
                                  : 0;
        res.peak(k - 1) = method == EstimatorKind::MLE
                              ? mle_spectrum(st.ycheck, st.map, px, pz, geom)
                              : music_spectrum(dec, st.map, px, pz, geom);
        res.spectrum_evals(k - 1) = evals;
        arma::uword bk = obs.block_sizes(k - 1);
        res.model_flops_per_eval(k - 1) =
            method == EstimatorKind::MLE
                ? mle_flops_model(bk, geom.n_subarray_antennas, geom.n_ue_antennas, obs.n_subcarriers)
                : music_flops_model(bk, geom.n_ue_antennas, method == EstimatorKind::MUSIC ? dec.n_paths : 0);

        pz = std::clamp(pz, -1.0, 1.0);
        double el = std::asin(pz);
        double ce = std::cos(el);
        double az = std::asin(ce > 1e-300 ? std::clamp(px / ce, -1.0, 1.0) : 0.0);
        res.az_bs(k - 1) = az;
        res.el_bs(k - 1) = el;
    }
    return res;
}

arma::cx_vec synthesize_expected(const std::vector<MeasurementMap> &maps,
                                 const arma::vec &az, const arma::vec &el,
                                 const ArrayGeometry &geom)
{
    if (maps.size() != az.n_elem || maps.size() != el.n_elem)
        throw invalid_input("synthesize_expected: angles missing for some subarrays");
    arma::cx_vec yhat;
    for (arma::uword k = 0; k < maps.size(); ++k)
    {
        double px = spatial_angle_x(az(k), el(k));
        double pz = spatial_angle_z(az(k), el(k));
        arma::cx_vec a, b;
        search_vector_parts(px, pz, geom, a, b);
        arma::cx_vec yk = maps[k].apply_H(a, b);
        yhat = yhat.is_empty() ? yk : arma::join_cols(yhat, yk);
    }
    return yhat;
}

void estimate_distance(const arma::cx_mat &ycheck_full, const arma::cx_vec &yhat,
                       const Waveform &wf, double tol_tau, double &tau, double &dist,
                       const arma::uvec &block_rows)
{
    arma::uword M = wf.n_subcarriers;
    if (M < 2)
        throw invalid_input("estimate_distance: at least two subcarriers required");
    if (ycheck_full.n_cols != M || ycheck_full.n_rows != yhat.n_elem)
        throw invalid_input("estimate_distance: dimension mismatch");

    // per-block correlations Z(:,k) = Ycheck_k^H yhat_k; each column carries
    // the tone conj(alpha_1[m]) scaled by an unknown per-subarray phase
    arma::uvec blocks = block_rows;
    if (blocks.is_empty())
        blocks = arma::uvec{ycheck_full.n_rows};
    arma::cx_mat Z(M, blocks.n_elem);
    arma::uword r0 = 0;
    for (arma::uword k = 0; k < blocks.n_elem; ++k)
    {
        arma::uword rk = blocks(k);
        if (rk == 0)
            throw invalid_input("estimate_distance: empty block");
        Z.col(k) = ycheck_full.rows(r0, r0 + rk - 1).t() * yhat.subvec(r0, r0 + rk - 1);
        r0 += rk;
    }
    if (r0 != ycheck_full.n_rows)
        throw invalid_input("estimate_distance: block partition mismatch");
    if (arma::norm(Z, "fro") < 1e-300)
        throw no_peak("estimate_distance: observation is orthogonal to the expected signal");

    double df = wf.subcarrier_spacing;
    if (tol_tau <= 0.0)
        tol_tau = 1.0 / (40.0 * double(M) * df);

    // objective sum_k |b(tau)^H Z(:,k)| with b(tau)[i] = exp(j*2*pi*i*df*tau);
    // the columns carry exp(+j*2*pi*m*df*tau_1), m = 1..M
    auto objective = [&](double t) {
        double w0 = 2.0 * arma::datum::pi * df * t;
        cx rot = std::polar(1.0, -w0);
        double total = 0.0;
        for (arma::uword k = 0; k < Z.n_cols; ++k)
        {
            cx acc(0.0, 0.0);
            cx ph(1.0, 0.0);
            for (arma::uword i = 0; i < M; ++i)
            {
                acc += ph * Z(i, k);
                ph *= rot;
            }
            total += std::abs(acc);
        }
        return total;
    };

    double range = 1.0 / df;
    arma::uword n_grid = 4 * M;
    double best = -1.0, tbest = 0.0;
    for (arma::uword i = 0; i < n_grid; ++i)
    {
        double t = double(i) * range / double(n_grid);
        double v = objective(t);
        if (v > best)
        {
            best = v;
            tbest = t;
        }
    }
    double step = range / double(n_grid);
    double lo = tbest - step, hi = tbest + step;
    double fx;
    gss1d(objective, lo, hi, tol_tau, tau, fx);
    if (tau < 0.0)
        tau += range;
    if (tau >= range)
        tau -= range;
    dist = wf.light_speed * tau;
}

EstimationResult tpbe_estimate(const TrainingOutcome &outcome, EstimatorKind method,
                               const ArrayGeometry &geom, const Waveform &wf,
                               const EstimationOptions &opt)
{
    EstimationResult res = estimate_angles(outcome.obs, method, geom, outcome.bounds, opt);
    if (wf.n_subcarriers >= 2)
    {
        std::vector<MeasurementMap> maps;
        arma::cx_mat full = stack_all(outcome.obs, geom, maps);
        arma::cx_vec yhat = synthesize_expected(maps, res.az_bs, res.el_bs, geom);
        arma::uvec block_rows(maps.size());
        for (arma::uword k = 0; k < maps.size(); ++k)
            block_rows(k) = maps[k].cols();
        estimate_distance(full, yhat, wf, opt.tol_tau, res.delay, res.distance, block_rows);
        res.distance_valid = true;
    }
    return res;
}

EstimationResult power_based_estimate(const TrainingOutcome &outcome, const ArrayGeometry &geom)
{
    const Observation &obs = outcome.obs;
    if (obs.ledger.empty())
        throw invalid_input("power_based_estimate: empty observation");

    // argmax with ties toward the lowest ledger index
    arma::uword best = 0;
    double bp = obs.row_power(0);
    for (arma::uword i = 1; i < obs.n_rows(); ++i)
        if (obs.row_power(i) > bp)
        {
            bp = obs.row_power(i);
            best = i;
        }
    const BeamRef &ref = obs.ledger[best];

    EstimationResult res;
    res.method = "power";
    arma::uword kb = geom.n_subarrays;
    res.az_bs.set_size(kb);
    res.el_bs.set_size(kb);
    res.peak = arma::vec{bp};
    res.at_bound.zeros(kb);
    double pz = std::clamp(ref.steer_z, -1.0, 1.0);
    double el = std::asin(pz);
    double ce = std::cos(el);
    double az = std::asin(ce > 1e-300 ? std::clamp(ref.steer_x / ce, -1.0, 1.0) : 0.0);
    res.az_bs.fill(az);
    res.el_bs.fill(el);
    if (ref.dist_index >= 0)
    {
        res.distance = ref.focus_distance;
        res.delay = ref.focus_distance / speed_of_light;
        res.distance_valid = true;
    }
    return res;
}

} // namespace crossfield
