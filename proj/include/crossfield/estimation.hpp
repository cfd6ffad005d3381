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

#ifndef crossfield_estimation_H
#define crossfield_estimation_H

#include "crossfield/training.hpp"

#include <functional>

namespace crossfield
{
    // Measurement map Psi_k = W_k (x) conj(F) in factored form. Products with
    // Kronecker-structured vectors a (x) b use (W^H a) (x) (F^T b).
    struct MeasurementMap
    {
        arma::cx_mat W; // N_ab x B_k, BS codewords used for subarray k
        arma::cx_mat F; // N_u x N_u UE codebook

        arma::uword rows() const { return W.n_rows * F.n_rows; }
        arma::uword cols() const { return W.n_cols * F.n_cols; }
        arma::cx_vec apply_H(const arma::cx_vec &a, const arma::cx_vec &b) const
        {
            return arma::kron(arma::cx_mat(W.t() * a), arma::cx_mat(F.st() * b));
        }
        arma::cx_mat to_matrix() const { return arma::kron(W, arma::conj(F)); }
    };

    struct StackedObservation
    {
        arma::cx_mat ycheck; // (B_k * N_u) x M, column m = row-major vec of Y_k[m]
        MeasurementMap map;
        arma::uword subarray = 0;
    };

    struct SubspaceDecomposition
    {
        arma::cx_mat covariance; // R = ycheck * ycheck^H
        arma::cx_mat signal;     // U_s
        arma::cx_mat noise;      // U_n
        arma::vec eig_signal;    // leading eigenvalues, descending
        arma::vec eig_noise;
        arma::uword n_paths = 0; // detected or hinted
        // true when `noise` is the exact orthogonal complement of `signal`,
        // allowing the projector identity |U_n^H e|^2 = |e|^2 - |U_s^H e|^2
        bool complement_exact = false;
    };

    enum class EstimatorKind
    {
        MLE,
        MUSIC
    };

    struct EstimationResult
    {
        arma::vec az_bs, el_bs;   // per-subarray estimates [rad]
        double distance = arma::datum::nan; // D_hat [m]
        double delay = arma::datum::nan;    // tau_hat [s]
        std::string method;
        arma::vec peak;           // spectrum peak value per subarray
        arma::uvec at_bound;      // 1 when the search clamped at a bound
        arma::uvec spectrum_evals; // spectrum evaluations per subarray
        arma::vec model_flops_per_eval; // documented per-evaluation cost model
        bool distance_valid = false;
    };

    // vec of Y_k[m] in row-major order (UE index fastest), consistent with
    // Psi_k = W_k (x) conj(F)
    arma::cx_vec vec_rowmajor(const arma::cx_mat &y);

    // Stack one subarray block (k is 1-based) of the observation
    StackedObservation stack_observation(const Observation &obs, arma::uword k,
                                         const ArrayGeometry &geom);
    // Full stack in subarray order plus the per-subarray maps
    arma::cx_mat stack_all(const Observation &obs, const ArrayGeometry &geom,
                           std::vector<MeasurementMap> &maps);

    // e(theta, phi) = a_Nab(psi) (x) conj(a_Nu(-psi)); psi-domain variants take
    // the spatial angles directly.
    arma::cx_vec search_vector(double theta, double phi, const ArrayGeometry &geom);
    void search_vector_parts(double psi_x, double psi_z, const ArrayGeometry &geom,
                             arma::cx_vec &a_bs, arma::cx_vec &b_ue);

    // Normalized matched-filter energy |(Psi^H e)^H Ycheck|^2 / |Psi^H e|^2
    double mle_spectrum(const arma::cx_mat &ycheck, const MeasurementMap &map,
                        double psi_x, double psi_z, const ArrayGeometry &geom);

    // Eigendecomposition of R = Ycheck Ycheck^H (computed through the SVD of
    // Ycheck). n_paths_hint = 0 derives the path count from the eigenvalues
    // with the relative threshold.
    SubspaceDecomposition subspace(const arma::cx_mat &ycheck, arma::uword n_paths_hint = 0,
                                   double eps_rel = 1e-2);

    // MUSIC pseudo-spectrum [e^H U_n U_n^H e]^-1 with e projected through the
    // measurement map and unit-normalized; diverging values are capped.
    double music_spectrum(const SubspaceDecomposition &dec, const MeasurementMap &map,
                          double psi_x, double psi_z, const ArrayGeometry &geom,
                          bool *capped = nullptr);

    inline constexpr double music_cap = 1e18;

    // 1-D golden-section maximization on [lo, hi]; deterministic, terminates
    // when the interval is below tol. Returns the midpoint of the final
    // interval and its value.
    void gss1d(const std::function<double(double)> &f, double lo, double hi, double tol,
               double &x, double &fx, arma::uword *evals = nullptr);

    // Alternating per-axis golden-section maximization until the iterate moves
    // less than tol on both axes (at most a fixed number of rounds).
    void gss2d(const std::function<double(double, double)> &f,
               double lo_x, double hi_x, double lo_z, double hi_z, double tol,
               double &x, double &z, arma::uword *evals = nullptr);

    struct EstimationOptions
    {
        double tol_psi = 1e-5;         // GSS tolerance in spatial angle
        double tol_tau = 0.0;          // 0 = default 1/(40 M df)
        arma::uword n_paths_hint = 0;  // 0 = detect
        double eps_rel = 1e-2;         // eigenvalue detection threshold
    };

    // TPBE angle phase: per-subarray spectrum search inside the given bounds
    // (spatial-angle rectangles, one row per subarray)
    EstimationResult estimate_angles(const Observation &obs, EstimatorKind method,
                                     const ArrayGeometry &geom, const arma::mat &bounds,
                                     const EstimationOptions &opt = {});

    // yhat_k = Psi_k^H e(theta_k, phi_k), stacked over subarrays
    arma::cx_vec synthesize_expected(const std::vector<MeasurementMap> &maps,
                                     const arma::vec &az, const arma::vec &el,
                                     const ArrayGeometry &geom);

    // TPBE distance phase: maximize the delay-steering correlation of the
    // stacked observation with the expected signal over the unambiguous range;
    // coarse grid of 4M points plus GSS refinement. block_rows partitions the
    // stack by subarray; per-block correlations are combined by magnitude so
    // that the unknown inter-subarray phases cannot cancel each other.
    void estimate_distance(const arma::cx_mat &ycheck_full, const arma::cx_vec &yhat,
                           const Waveform &wf, double tol_tau, double &tau, double &dist,
                           const arma::uvec &block_rows = arma::uvec());

    // Runs both TPBE phases on a training outcome
    EstimationResult tpbe_estimate(const TrainingOutcome &outcome, EstimatorKind method,
                                   const ArrayGeometry &geom, const Waveform &wf,
                                   const EstimationOptions &opt = {});

    // Power-based baseline: angle (and distance for the near-field scheme) of
    // the strongest codeword; ties break toward the lowest ledger index.
    EstimationResult power_based_estimate(const TrainingOutcome &outcome, const ArrayGeometry &geom);

    // Documented per-evaluation cost models
    double mle_flops_model(arma::uword b_k, arma::uword n_ab, arma::uword n_u, arma::uword m);
    double music_flops_model(arma::uword b_k, arma::uword n_u, arma::uword n_paths);

} // namespace crossfield

#endif
