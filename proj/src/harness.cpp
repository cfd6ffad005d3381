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

#include "crossfield/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace crossfield
{

ArrayGeometry SimConfig::geometry() const
{
    return make_geometry(n_bs, n_subarrays, n_ue, waveform.wavelength(), gap_wavelengths);
}

double SimConfig::sigma2() const
{
    return noise_variance > 0.0 ? noise_variance : thermal_noise_variance(waveform.subcarrier_spacing);
}

SimConfig sim_config_from_kv(const KeyValueConfig &kv)
{
    SimConfig c;
    c.n_bs = kv.get_uint("geometry.n_bs", c.n_bs);
    c.n_subarrays = kv.get_uint("geometry.n_subarrays", c.n_subarrays);
    c.n_ue = kv.get_uint("geometry.n_ue", c.n_ue);
    c.gap_wavelengths = kv.get_num("geometry.gap_wavelengths", c.gap_wavelengths);

    c.waveform.carrier_freq = kv.get_num("waveform.carrier_freq_hz", c.waveform.carrier_freq);
    c.waveform.subcarrier_spacing = kv.get_num("waveform.subcarrier_spacing_hz", c.waveform.subcarrier_spacing);
    c.waveform.n_subcarriers = kv.get_uint("waveform.n_subcarriers", c.waveform.n_subcarriers);

    c.channel.n_paths = kv.get_uint("channel.n_paths", c.channel.n_paths);
    c.channel.d_min = kv.get_num("channel.d_min_m", c.channel.d_min);
    c.channel.d_max = kv.get_num("channel.d_max_m", c.channel.d_max);
    double az_half = kv.get_num("channel.az_sector_deg", rad2deg(c.channel.az_hi));
    double el_half = kv.get_num("channel.el_sector_deg", rad2deg(c.channel.el_hi));
    c.channel.az_lo = -deg2rad(az_half);
    c.channel.az_hi = deg2rad(az_half);
    c.channel.el_lo = -deg2rad(el_half);
    c.channel.el_hi = deg2rad(el_half);

    if (kv.has("noise.variance_dbm"))
        c.noise_variance = dbm_to_watt(kv.get_num("noise.variance_dbm", 0.0));

    c.schemes = kv.get_str_list("run.schemes", c.schemes);
    c.methods = kv.get_str_list("run.methods", c.methods);
    c.power_dbm = kv.get_list("run.power_dbm", c.power_dbm);
    c.trials = kv.get_uint("run.trials", c.trials);
    c.master_seed = kv.get_uint("run.master_seed", arma::uword(c.master_seed));
    c.d_min_potential = kv.get_num("run.d_min_potential_m", c.d_min_potential);
    c.near_c_d = kv.get_uint("near.c_d", c.near_c_d);

    c.tol_psi = kv.get_num("tol.psi", c.tol_psi);
    c.tol_tau = kv.get_num("tol.tau_s", c.tol_tau);

    c.compare_psi_x = kv.get_num("compare.psi_x", c.compare_psi_x);
    c.compare_psi_z = kv.get_num("compare.psi_z", c.compare_psi_z);
    c.compare_d_lo = kv.get_num("compare.d_lo_m", c.compare_d_lo);
    c.compare_d_hi = kv.get_num("compare.d_hi_m", c.compare_d_hi);
    c.compare_points = kv.get_uint("compare.points", c.compare_points);
    c.compare_distance = kv.get_num("compare.distance_m", c.compare_distance);

    c.out_dir = kv.get_str("out.dir", c.out_dir);
    return c;
}

SimConfig sim_config_from_file(const std::string &path)
{
    return sim_config_from_kv(KeyValueConfig::from_file(path));
}

void apply_paper_scale(SimConfig &cfg)
{
    cfg.n_bs = 256;
    cfg.n_subarrays = 4;
    cfg.n_ue = 64;
    cfg.waveform.n_subcarriers = 128;
    cfg.trials = 5000;
}

TrainingOutcome run_training(const SimConfig &cfg, const std::string &scheme,
                             const PathSet &paths, double power_dbm, std::uint64_t noise_seed)
{
    ArrayGeometry geom = cfg.geometry();
    PilotConfig pilot = make_pilot(power_dbm, cfg.sigma2(), cfg.waveform.n_subcarriers);
    ChannelTensor H = channel_tensor(paths, geom, cfg.waveform, ChannelModel::HSPM);
    Rng rng(noise_seed);

    if (scheme == "sch")
    {
        const Codebook &hier = hierarchical_codebook_cached(geom.n_subarray_antennas);
        return sch_training(H, geom, hier, pilot, cfg.d_min_potential, rng);
    }
    if (scheme == "subarray-exhaustive")
    {
        Codebook cb = dft_codebook(geom.n_subarray_antennas);
        return exhaustive_training(H, geom, cb, pilot, rng);
    }
    if (scheme == "far-exhaustive")
    {
        Codebook cb = hspm_exhaustive_codebook(geom);
        return exhaustive_training(H, geom, cb, pilot, rng);
    }
    if (scheme == "near-exhaustive")
        return near_field_exhaustive_training(H, geom, pilot, cfg.near_c_d, rng);
    throw invalid_config("unknown scheme: " + scheme);
}

static bool scheme_uses_tpbe(const std::string &scheme)
{
    return scheme == "sch" || scheme == "subarray-exhaustive";
}

std::string summary_csv_header()
{
    return "scheme,method,p_dbm,trials,failures,rmse_angle_deg,rmse_dist_m,norm_snr_db,norm_snr_db_avg,norm_snr_chan_db,overhead_slots";
}

std::string records_csv_header(arma::uword n_subarrays)
{
    std::ostringstream os;
    os << "trial,p_dbm,scheme,method,seed";
    for (arma::uword k = 1; k <= n_subarrays; ++k)
        os << ",az_est_deg_" << k << ",el_est_deg_" << k;
    for (arma::uword k = 1; k <= n_subarrays; ++k)
        os << ",az_true_deg_" << k << ",el_true_deg_" << k;
    os << ",dist_est_m,dist_true_m,norm_snr_db,norm_snr_chan_db,overhead_slots,failed";
    return os.str();
}

static std::string csv_num(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string summary_csv_row(const SummaryRow &r)
{
    std::ostringstream os;
    os << r.scheme << "," << r.method << "," << csv_num(r.power_dbm) << "," << r.trials << ","
       << r.failures << "," << csv_num(r.rmse_angle_deg) << "," << csv_num(r.rmse_dist_m) << ","
       << csv_num(r.norm_snr_db) << "," << csv_num(r.norm_snr_db_avg) << ","
       << csv_num(r.norm_snr_chan_db) << "," << csv_num(r.overhead_slots);
    return os.str();
}

std::string records_csv_row(const TrialRecord &r)
{
    std::ostringstream os;
    os << r.trial << "," << csv_num(r.power_dbm) << "," << r.scheme << "," << r.method << ","
       << r.seed;
    for (arma::uword k = 0; k < r.az_est_deg.n_elem; ++k)
        os << "," << csv_num(r.az_est_deg(k)) << "," << csv_num(r.el_est_deg(k));
    for (arma::uword k = 0; k < r.az_true_deg.n_elem; ++k)
        os << "," << csv_num(r.az_true_deg(k)) << "," << csv_num(r.el_true_deg(k));
    os << "," << csv_num(r.dist_est) << "," << csv_num(r.dist_true) << ","
       << csv_num(r.norm_snr_db) << "," << csv_num(r.norm_snr_chan_db) << "," << r.overhead_slots
       << "," << (r.failed ? 1 : 0);
    return os.str();
}

namespace
{
    struct TrialTask
    {
        arma::uword trial, power_index;
        double power_dbm;
    };

    arma::uword worker_count()
    {
        if (const char *env = std::getenv("CROSSFIELD_WORKERS"))
        {
            long v = std::atol(env);
            if (v >= 1)
                return arma::uword(v);
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : hc;
    }
} // namespace

MonteCarloResult run_monte_carlo(const SimConfig &cfg, bool write_csv)
{
    ArrayGeometry geom = cfg.geometry();
    arma::uword kb = geom.n_subarrays;
    arma::uword mc = (cfg.waveform.n_subcarriers + 1) / 2; // center subcarrier (1-based)

    std::vector<TrialTask> tasks;
    for (arma::uword pi = 0; pi < cfg.power_dbm.size(); ++pi)
        for (arma::uword t = 0; t < cfg.trials; ++t)
            tasks.push_back({t, pi, cfg.power_dbm[pi]});

    // records indexed [task][scheme x method] for deterministic ordering
    std::vector<std::vector<TrialRecord>> slots(tasks.size());

    std::atomic<size_t> next{0};
    auto work = [&]() {
        while (true)
        {
            size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                break;
            const TrialTask &task = tasks[i];
            std::uint64_t seed = derive_seed(cfg.master_seed, task.trial, task.power_index);
            std::vector<TrialRecord> recs;

            PathSet paths;
            arma::cx_mat H_truth;
            try
            {
                paths = generate_paths(cfg.channel, geom, cfg.waveform, seed);
                H_truth = swm_channel(paths, geom, cfg.waveform, mc);
            }
            catch (const std::exception &e)
            {
                TrialRecord rec;
                rec.trial = task.trial;
                rec.power_dbm = task.power_dbm;
                rec.seed = seed;
                rec.failed = true;
                rec.error = e.what();
                rec.az_est_deg.set_size(kb);
                rec.az_est_deg.fill(arma::datum::nan);
                rec.el_est_deg = rec.az_est_deg;
                rec.az_true_deg = rec.az_est_deg;
                rec.el_true_deg = rec.az_est_deg;
                slots[i] = {rec};
                continue;
            }

            const Path &los = paths.los();
            PilotConfig pilot = make_pilot(task.power_dbm, cfg.sigma2(), cfg.waveform.n_subcarriers);

            for (arma::uword si = 0; si < cfg.schemes.size(); ++si)
            {
                const std::string &scheme = cfg.schemes[si];
                std::vector<std::string> methods;
                if (scheme_uses_tpbe(scheme))
                {
                    for (const std::string &m : cfg.methods)
                        if (m == "mle" || m == "music")
                            methods.push_back(m);
                }
                else
                    methods.push_back("power");

                TrainingOutcome outcome;
                bool trained = false;
                std::string train_error;
                try
                {
                    outcome = run_training(cfg, scheme, paths, task.power_dbm,
                                           derive_seed(seed, si + 1, 0xC0FFEE));
                    trained = true;
                }
                catch (const std::exception &e)
                {
                    train_error = e.what();
                }

                for (const std::string &method : methods)
                {
                    TrialRecord rec;
                    rec.trial = task.trial;
                    rec.power_dbm = task.power_dbm;
                    rec.scheme = scheme;
                    rec.method = method;
                    rec.seed = seed;
                    rec.az_est_deg.set_size(kb);
                    rec.az_est_deg.fill(arma::datum::nan);
                    rec.el_est_deg = rec.az_est_deg;
                    rec.az_true_deg.set_size(kb);
                    rec.el_true_deg.set_size(kb);
                    for (arma::uword k = 0; k < kb; ++k)
                    {
                        rec.az_true_deg(k) = rad2deg(los.az_bs_k(k));
                        rec.el_true_deg(k) = rad2deg(los.el_bs_k(k));
                    }
                    rec.dist_true = los.ref_distance;
                    if (!trained)
                    {
                        rec.failed = true;
                        rec.error = train_error;
                        recs.push_back(rec);
                        continue;
                    }
                    rec.overhead_slots = outcome.pilot_slots;
                    try
                    {
                        EstimationResult est;
                        if (method == "power")
                            est = power_based_estimate(outcome, geom);
                        else
                        {
                            EstimationOptions opt;
                            opt.tol_psi = cfg.tol_psi;
                            opt.tol_tau = cfg.tol_tau;
                            est = tpbe_estimate(outcome,
                                                method == "mle" ? EstimatorKind::MLE : EstimatorKind::MUSIC,
                                                geom, cfg.waveform, opt);
                        }
                        rec.az_est_deg.set_size(kb);
                        rec.el_est_deg.set_size(kb);
                        for (arma::uword k = 0; k < kb; ++k)
                        {
                            rec.az_est_deg(k) = rad2deg(est.az_bs(k));
                            rec.el_est_deg(k) = rad2deg(est.el_bs(k));
                        }
                        if (est.distance_valid)
                            rec.dist_est = est.distance;
                        Beamformers bf = estimates_to_beamformers(est, geom);
                        AlignmentReport rep = alignment_report(H_truth, paths, geom, bf, pilot);
                        rec.norm_snr_db = rep.normalized_snr_db;
                        rec.norm_snr_chan_db = rep.normalized_vs_channel_db;
                    }
                    catch (const std::exception &e)
                    {
                        rec.failed = true;
                        rec.error = e.what();
                    }
                    recs.push_back(rec);
                }
            }
            slots[i] = std::move(recs);
        }
    };

    arma::uword n_workers = std::min<arma::uword>(worker_count(), tasks.size() ? tasks.size() : 1);
    std::vector<std::thread> pool;
    for (arma::uword w = 1; w < n_workers; ++w)
        pool.emplace_back(work);
    work();
    for (std::thread &th : pool)
        th.join();

    MonteCarloResult result;
    for (auto &v : slots)
        for (TrialRecord &r : v)
            result.records.push_back(std::move(r));

    // aggregate per (power, scheme, method)
    for (double p : cfg.power_dbm)
        for (const std::string &scheme : cfg.schemes)
        {
            std::vector<std::string> methods;
            if (scheme_uses_tpbe(scheme))
            {
                for (const std::string &m : cfg.methods)
                    if (m == "mle" || m == "music")
                        methods.push_back(m);
            }
            else
                methods.push_back("power");
            for (const std::string &method : methods)
            {
                SummaryRow row;
                row.scheme = scheme;
                row.method = method;
                row.power_dbm = p;
                std::vector<AngleSample> angles;
                std::vector<double> dists_est, dists_true, snr_lin, snr_db, snr_chan_lin;
                double slot_sum = 0.0;
                for (const TrialRecord &r : result.records)
                {
                    if (r.scheme != scheme || r.method != method || r.power_dbm != p)
                        continue;
                    ++row.trials;
                    if (r.failed)
                    {
                        ++row.failures;
                        continue;
                    }
                    AngleSample s;
                    s.az_bs_est = deg2rad(1.0) * r.az_est_deg;
                    s.el_bs_est = deg2rad(1.0) * r.el_est_deg;
                    s.az_bs_true = deg2rad(1.0) * r.az_true_deg;
                    s.el_bs_true = deg2rad(1.0) * r.el_true_deg;
                    s.az_ue_true = -s.az_bs_true;
                    s.el_ue_true = -s.el_bs_true;
                    angles.push_back(std::move(s));
                    if (!std::isnan(r.dist_est))
                    {
                        dists_est.push_back(r.dist_est);
                        dists_true.push_back(r.dist_true);
                    }
                    if (!std::isnan(r.norm_snr_db))
                    {
                        snr_lin.push_back(from_db10(r.norm_snr_db));
                        snr_db.push_back(r.norm_snr_db);
                    }
                    if (!std::isnan(r.norm_snr_chan_db))
                        snr_chan_lin.push_back(from_db10(r.norm_snr_chan_db));
                    slot_sum += double(r.overhead_slots);
                }
                if (!angles.empty())
                    row.rmse_angle_deg = rmse_angle_deg(angles);
                if (!dists_est.empty())
                    row.rmse_dist_m = rmse_distance_m(arma::vec(dists_est), arma::vec(dists_true));
                if (!snr_lin.empty())
                {
                    row.norm_snr_db = db10(arma::mean(arma::vec(snr_lin)));
                    row.norm_snr_db_avg = arma::mean(arma::vec(snr_db));
                }
                if (!snr_chan_lin.empty())
                    row.norm_snr_chan_db = db10(arma::mean(arma::vec(snr_chan_lin)));
                if (row.trials > row.failures)
                    row.overhead_slots = slot_sum / double(row.trials - row.failures);
                result.summary.push_back(std::move(row));
            }
        }

    if (write_csv)
    {
        std::filesystem::create_directories(cfg.out_dir);
        {
            std::ofstream f(cfg.out_dir + "/summary.csv");
            f << summary_csv_header() << "\n";
            for (const SummaryRow &r : result.summary)
                f << summary_csv_row(r) << "\n";
        }
        {
            std::ofstream f(cfg.out_dir + "/records.csv");
            f << records_csv_header(kb) << "\n";
            for (const TrialRecord &r : result.records)
                f << records_csv_row(r) << "\n";
        }
    }
    return result;
}

std::vector<CompareRow> compare_fields(const SimConfig &cfg, const arma::vec &distances)
{
    ArrayGeometry geom = cfg.geometry();
    Waveform wf = cfg.waveform;
    arma::uword mc = (wf.n_subcarriers + 1) / 2;
    PilotConfig pilot = make_pilot(cfg.power_dbm.empty() ? 20.0 : cfg.power_dbm[0], cfg.sigma2(),
                                   wf.n_subcarriers);

    double pz = std::clamp(cfg.compare_psi_z, -1.0, 1.0);
    double el = std::asin(pz);
    double ce = std::cos(el);
    double az = std::asin(ce > 1e-300 ? std::clamp(cfg.compare_psi_x / ce, -1.0, 1.0) : 0.0);

    std::vector<CompareRow> rows;
    for (double D : distances)
    {
        ChannelConfig cc;
        cc.n_paths = 1;
        cc.d_min = cc.d_max = D;
        PathSet paths;
        paths.n_subarrays = geom.n_subarrays;
        Path p;
        p.los = true;
        p.ref_distance = p.scatter_distance = p.total_distance = D;
        p.delay = D / wf.light_speed;
        p.az_bs = az;
        p.el_bs = el;
        p.az_ue = -az;
        p.el_ue = -el;
        p.coeff = cx(geom.wavelength / (4.0 * arma::datum::pi * D), 0.0);
        fill_subarray_parameters(p, geom);
        paths.paths.push_back(p);

        arma::cx_mat H = swm_channel(paths, geom, wf, mc);
        Beamformers near_bf = beamformers_from_reference(az, el, D, geom);
        Beamformers far_bf = beamformers_from_reference(az, el, arma::datum::inf, geom);

        double a2 = std::norm(path_gain(p.coeff, mc, wf.subcarrier_spacing, p.delay));
        CompareRow row;
        row.distance = D;
        row.gain_near_db = db10(std::norm(arma::cdot(near_bf.w(), H * near_bf.f())) / a2);
        row.gain_far_db = db10(std::norm(arma::cdot(far_bf.w(), H * far_bf.f())) / a2);
        row.snr_near_db = aligned_snr_db(H, near_bf.w(), near_bf.f(), pilot);
        row.snr_far_db = aligned_snr_db(H, far_bf.w(), far_bf.f(), pilot);
        rows.push_back(row);
    }
    return rows;
}

void write_compare_csv(const std::vector<CompareRow> &rows, const std::string &path)
{
    std::ofstream f(path);
    if (!f)
        throw invalid_input("cannot write " + path);
    f << "distance_m,gain_far_db,gain_near_db,snr_far_db,snr_near_db\n";
    for (const CompareRow &r : rows)
        f << csv_num(r.distance) << "," << csv_num(r.gain_far_db) << "," << csv_num(r.gain_near_db)
          << "," << csv_num(r.snr_far_db) << "," << csv_num(r.snr_near_db) << "\n";
}

} // namespace crossfield
