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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace crossfield;

namespace
{

struct CommonArgs
{
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = ".";
};

void add_common(CLI::App *cmd, CommonArgs &args)
{
    cmd->add_option("--config", args.config, "configuration file (key = value)");
    cmd->add_option("--seed", args.seed, "master seed override")->each([&](const std::string &) {
        args.seed_set = true;
    });
    cmd->add_option("--out", args.out, "output directory");
}

SimConfig load_cfg(const CommonArgs &args)
{
    SimConfig cfg = args.config.empty() ? SimConfig{} : sim_config_from_file(args.config);
    if (args.seed_set)
        cfg.master_seed = args.seed;
    if (args.out != ".")
        cfg.out_dir = args.out;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

int cmd_boundaries(const CommonArgs &args)
{
    SimConfig cfg = load_cfg(args);
    FieldBoundaries fb = field_boundaries(cfg.geometry());
    std::printf("S_ab = %.6g m\nS_u  = %.6g m\nS_b  = %.6g m\n", fb.aperture_subarray,
                fb.aperture_ue, fb.aperture_bs);
    std::printf("D_Fa = %.4f m\nD_B  = %.4f m\nD_F  = %.4f m\n", fb.d_fraunhofer_subarray,
                fb.d_bjornson, fb.d_fraunhofer_array);
    return 0;
}

int cmd_overhead(const CommonArgs &args)
{
    SimConfig cfg = load_cfg(args);
    ArrayGeometry geom = cfg.geometry();

    // a few seeded SCH runs to measure the data-dependent savings C
    std::vector<TrainingOutcome> outcomes;
    for (arma::uword t = 0; t < 5; ++t)
    {
        std::uint64_t seed = derive_seed(cfg.master_seed, t, 0);
        PathSet paths = generate_paths(cfg.channel, geom, cfg.waveform, seed);
        outcomes.push_back(run_training(cfg, "sch", paths, cfg.power_dbm.empty() ? 20.0 : cfg.power_dbm[0],
                                        derive_seed(seed, 1, 0xC0FFEE)));
    }
    OverheadTable t = overhead_table(geom, cfg.near_c_d, outcomes);
    std::printf("near-exhaustive      %10llu\n", (unsigned long long)t.near_exhaustive);
    std::printf("far-exhaustive       %10llu\n", (unsigned long long)t.far_exhaustive);
    std::printf("subarray-exhaustive  %10llu\n", (unsigned long long)t.subarray_exhaustive);
    std::printf("sch nominal          %10llu\n", (unsigned long long)t.sch_nominal);
    std::printf("sch measured         %10llu  (C = %llu beams)\n",
                (unsigned long long)t.sch_measured, (unsigned long long)t.sch_savings_beams);
    std::printf("sch/near ratio       %10.4f %%\n",
                100.0 * double(t.sch_nominal) / double(t.near_exhaustive));
    return 0;
}

int cmd_pattern(const CommonArgs &args, arma::uword layer, arma::uword bx, arma::uword bz,
                arma::uword grid_n)
{
    SimConfig cfg = load_cfg(args);
    ArrayGeometry geom = cfg.geometry();
    Codebook hier = hierarchical_codebook(geom.n_subarray_antennas);
    const Codeword &w = hier.at(layer, bx, bz);
    arma::vec grid = arma::linspace(-1.0, 1.0, grid_n);
    std::string path = cfg.out_dir + "/pattern.csv";
    export_pattern_csv(w, geom, grid, grid, path);
    export_codeword(w, cfg.out_dir + "/codeword.txt");
    std::printf("wrote %s and codeword.txt\n", path.c_str());
    return 0;
}

int cmd_train(const CommonArgs &args, const std::string &scheme)
{
    SimConfig cfg = load_cfg(args);
    ArrayGeometry geom = cfg.geometry();
    std::uint64_t seed = derive_seed(cfg.master_seed, 0, 0);
    PathSet paths = generate_paths(cfg.channel, geom, cfg.waveform, seed);
    TrainingOutcome out = run_training(cfg, scheme, paths,
                                       cfg.power_dbm.empty() ? 20.0 : cfg.power_dbm[0],
                                       derive_seed(seed, 1, 0xC0FFEE));
    save_pathset(paths, cfg.out_dir + "/pathset.txt");
    save_outcome(out, cfg.out_dir + "/outcome.txt");
    std::printf("scheme=%s beams=%llu slots=%llu savings=%llu\n", out.scheme.c_str(),
                (unsigned long long)out.beams_swept, (unsigned long long)out.pilot_slots,
                (unsigned long long)out.savings_beams);
    return 0;
}

int cmd_estimate(const CommonArgs &args, const std::string &method, const std::string &in_dir)
{
    SimConfig cfg = load_cfg(args);
    ArrayGeometry geom = cfg.geometry();
    std::string dir = in_dir.empty() ? cfg.out_dir : in_dir;
    PathSet paths = load_pathset(dir + "/pathset.txt");
    TrainingOutcome out = load_outcome(dir + "/outcome.txt");

    EstimationResult est;
    if (method == "power")
        est = power_based_estimate(out, geom);
    else
    {
        EstimationOptions opt;
        opt.tol_psi = cfg.tol_psi;
        opt.tol_tau = cfg.tol_tau;
        est = tpbe_estimate(out, method == "mle" ? EstimatorKind::MLE : EstimatorKind::MUSIC, geom,
                            cfg.waveform, opt);
    }

    const Path &los = paths.los();
    std::string path = cfg.out_dir + "/estimate.csv";
    std::ofstream f(path);
    f << "trial,scheme,method";
    for (arma::uword k = 1; k <= geom.n_subarrays; ++k)
        f << ",az_deg_" << k << ",el_deg_" << k;
    f << ",dist_m,at_bound\n";
    f << "0," << out.scheme << "," << est.method;
    for (arma::uword k = 0; k < geom.n_subarrays; ++k)
        f << "," << format_num(rad2deg(est.az_bs(k))) << "," << format_num(rad2deg(est.el_bs(k)));
    f << "," << (est.distance_valid ? format_num(est.distance) : "nan") << ","
      << (est.at_bound.n_elem && arma::any(est.at_bound) ? 1 : 0) << "\n";

    double err = 0.0;
    for (arma::uword k = 0; k < geom.n_subarrays; ++k)
        err = std::max(err, std::abs(rad2deg(est.az_bs(k) - los.az_bs_k(k))));
    std::printf("method=%s max|az err|=%.4g deg dist=%.4g m (true %.4g m)\n", est.method.c_str(),
                err, est.distance_valid ? est.distance : arma::datum::nan, los.ref_distance);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_montecarlo(const CommonArgs &args, bool paper_scale)
{
    SimConfig cfg = load_cfg(args);
    if (paper_scale)
        apply_paper_scale(cfg);
    MonteCarloResult res = run_monte_carlo(cfg, true);
    for (const SummaryRow &r : res.summary)
        std::printf("%-20s %-6s P=%6.1f dBm rmse_angle=%9.4g deg rmse_dist=%9.4g m norm_snr=%8.3f dB\n",
                    r.scheme.c_str(), r.method.c_str(), r.power_dbm, r.rmse_angle_deg, r.rmse_dist_m,
                    r.norm_snr_db);
    std::printf("wrote %s/summary.csv and records.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_compare(const CommonArgs &args)
{
    SimConfig cfg = load_cfg(args);
    arma::vec d = arma::logspace(std::log10(cfg.compare_d_lo), std::log10(cfg.compare_d_hi),
                                 cfg.compare_points);
    std::vector<CompareRow> rows = compare_fields(cfg, d);
    std::string path = cfg.out_dir + "/compare.csv";
    write_compare_csv(rows, path);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cross-field beam training and estimation toolkit"};
    app.require_subcommand(1);

    CommonArgs boundaries_args, overhead_args, pattern_args, train_args, estimate_args,
        montecarlo_args, compare_args;

    CLI::App *boundaries = app.add_subcommand("boundaries", "print field-boundary distances");
    add_common(boundaries, boundaries_args);

    CLI::App *overhead = app.add_subcommand("overhead", "print the training-overhead table");
    add_common(overhead, overhead_args);

    CLI::App *pattern = app.add_subcommand("pattern", "export a beam pattern and its codeword");
    add_common(pattern, pattern_args);
    arma::uword layer = 1, bx = 1, bz = 1, grid_n = 101;
    pattern->add_option("--layer", layer, "codebook layer");
    pattern->add_option("--bx", bx, "x beam index");
    pattern->add_option("--bz", bz, "z beam index");
    pattern->add_option("--grid", grid_n, "pattern grid points per axis");

    CLI::App *train = app.add_subcommand("train", "run one training and dump the outcome");
    add_common(train, train_args);
    std::string scheme = "sch";
    train->add_option("--scheme", scheme, "far-exhaustive | subarray-exhaustive | sch | near-exhaustive")
        ->check(CLI::IsMember({"far-exhaustive", "subarray-exhaustive", "sch", "near-exhaustive"}));

    CLI::App *estimate = app.add_subcommand("estimate", "replay a dumped outcome through TPBE");
    add_common(estimate, estimate_args);
    std::string method = "music", in_dir;
    estimate->add_option("--method", method, "mle | music | power")
        ->check(CLI::IsMember({"mle", "music", "power"}));
    estimate->add_option("--in", in_dir, "directory with pathset.txt and outcome.txt");

    CLI::App *montecarlo = app.add_subcommand("montecarlo", "run the Monte-Carlo grid");
    add_common(montecarlo, montecarlo_args);
    bool paper_scale = false;
    montecarlo->add_flag("--paper-scale", paper_scale, "restore the full-scale parameter set");

    CLI::App *compare = app.add_subcommand("compare", "far vs near beamformer gain/SNR sweep");
    add_common(compare, compare_args);

    if (argc <= 1)
    {
        std::cerr << app.help() << std::endl;
        return 2;
    }

    try
    {
        app.parse(argc, argv);
        if (boundaries->parsed())
            return cmd_boundaries(boundaries_args);
        if (overhead->parsed())
            return cmd_overhead(overhead_args);
        if (pattern->parsed())
            return cmd_pattern(pattern_args, layer, bx, bz, grid_n);
        if (train->parsed())
            return cmd_train(train_args, scheme);
        if (estimate->parsed())
            return cmd_estimate(estimate_args, method, in_dir);
        if (montecarlo->parsed())
            return cmd_montecarlo(montecarlo_args, paper_scale);
        if (compare->parsed())
            return cmd_compare(compare_args);
    }
    catch (const CLI::ParseError &e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}
