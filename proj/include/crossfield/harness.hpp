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

#ifndef crossfield_harness_H
#define crossfield_harness_H

#include "crossfield/io.hpp"
#include "crossfield/metrics.hpp"

namespace crossfield
{
    struct SimConfig
    {
        // geometry
        arma::uword n_bs = 256, n_subarrays = 4, n_ue = 16;
        double gap_wavelengths = 128.0;
        // waveform
        Waveform waveform;
        // channel
        ChannelConfig channel;
        // pilot / noise
        double noise_variance = 0.0; // 0 = thermal at the subcarrier spacing
        // run grid
        std::vector<std::string> schemes = {"sch"};
        std::vector<std::string> methods = {"mle", "music"};
        std::vector<double> power_dbm = {40.0};
        arma::uword trials = 200;
        std::uint64_t master_seed = 1;
        double d_min_potential = 1.0; // SCH potential-range lower distance
        arma::uword near_c_d = 100;
        // estimator tolerances
        double tol_psi = 1e-5;
        double tol_tau = 0.0; // 0 = 1/(40 M df)
        // compare sweep
        double compare_psi_x = 0.555, compare_psi_z = 0.555;
        double compare_d_lo = 1.0, compare_d_hi = 2000.0;
        arma::uword compare_points = 40;
        double compare_distance = 10.0;
        // output
        std::string out_dir = ".";

        ArrayGeometry geometry() const;
        double sigma2() const;
    };

    SimConfig sim_config_from_file(const std::string &path);
    SimConfig sim_config_from_kv(const KeyValueConfig &kv);
    void apply_paper_scale(SimConfig &cfg);

    struct TrialRecord
    {
        arma::uword trial = 0;
        double power_dbm = 0.0;
        std::string scheme, method;
        std::uint64_t seed = 0;
        arma::vec az_est_deg, el_est_deg;
        arma::vec az_true_deg, el_true_deg;
        double dist_est = arma::datum::nan, dist_true = arma::datum::nan;
        double norm_snr_db = arma::datum::nan;      // vs true-parameter alignment
        double norm_snr_chan_db = arma::datum::nan; // vs channel principal pair
        arma::uword overhead_slots = 0;
        bool failed = false;
        std::string error;
    };

    struct SummaryRow
    {
        std::string scheme, method;
        double power_dbm = 0.0;
        arma::uword trials = 0, failures = 0;
        double rmse_angle_deg = arma::datum::nan;
        double rmse_dist_m = arma::datum::nan;
        double norm_snr_db = arma::datum::nan;      // linear-domain average, vs true parameters
        double norm_snr_db_avg = arma::datum::nan;  // dB-domain average
        double norm_snr_chan_db = arma::datum::nan; // linear-domain average, vs channel bound
        double overhead_slots = 0.0;               // mean per trial
    };

    struct MonteCarloResult
    {
        std::vector<SummaryRow> summary;
        std::vector<TrialRecord> records;
    };

    // Seeded Monte-Carlo grid over power x scheme x method; writes
    // summary.csv and records.csv under cfg.out_dir when write_csv is set.
    // Deterministic for a fixed config and master seed; trials run on a small
    // worker pool (CROSSFIELD_WORKERS overrides the size).
    MonteCarloResult run_monte_carlo(const SimConfig &cfg, bool write_csv = true);

    std::string summary_csv_header();
    std::string records_csv_header(arma::uword n_subarrays);
    std::string summary_csv_row(const SummaryRow &row);
    std::string records_csv_row(const TrialRecord &rec);

    struct CompareRow
    {
        double distance = 0.0;
        double gain_far_db = 0.0, gain_near_db = 0.0;
        double snr_far_db = 0.0, snr_near_db = 0.0;
    };

    // Far-field (angle-only) versus near-field (angle+distance) beamformer
    // gains and SNRs on the exact channel across a distance sweep
    std::vector<CompareRow> compare_fields(const SimConfig &cfg, const arma::vec &distances);
    void write_compare_csv(const std::vector<CompareRow> &rows, const std::string &path);

    // One training run + TPBE replay used by the CLI
    TrainingOutcome run_training(const SimConfig &cfg, const std::string &scheme,
                                 const PathSet &paths, double power_dbm, std::uint64_t noise_seed);

} // namespace crossfield

#endif
