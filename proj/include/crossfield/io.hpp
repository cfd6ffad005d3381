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

#ifndef crossfield_io_H
#define crossfield_io_H

#include "crossfield/training.hpp"

#include <map>
#include <string>

namespace crossfield
{
    // Flat "key = value" configuration text with dotted section names and '#'
    // comments. Unknown keys are rejected by typed accessors only when read.
    class KeyValueConfig
    {
      public:
        KeyValueConfig() = default;
        static KeyValueConfig from_file(const std::string &path);
        static KeyValueConfig from_string(const std::string &text);

        bool has(const std::string &key) const;
        std::string get_str(const std::string &key, const std::string &fallback) const;
        double get_num(const std::string &key, double fallback) const;
        arma::uword get_uint(const std::string &key, arma::uword fallback) const;
        std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback) const;
        std::vector<std::string> get_str_list(const std::string &key,
                                              const std::vector<std::string> &fallback) const;
        void set(const std::string &key, const std::string &value);

        const std::map<std::string, std::string> &entries() const { return kv_; }

      private:
        std::map<std::string, std::string> kv_;
    };

    // Human-readable structured text round-trips
    void save_pathset(const PathSet &ps, const std::string &path);
    PathSet load_pathset(const std::string &path);

    void save_outcome(const TrainingOutcome &out, const std::string &path);
    TrainingOutcome load_outcome(const std::string &path);

    // One complex entry per line (re, im with 12 significant digits) after a
    // short metadata header
    void export_codeword(const Codeword &w, const std::string &path);

    // Beam pattern CSV with columns psi_x, psi_z, gain_db
    void export_pattern_csv(const Codeword &w, const ArrayGeometry &geom,
                            const arma::vec &grid_x, const arma::vec &grid_z,
                            const std::string &path);

    std::string format_num(double v);

} // namespace crossfield

#endif
