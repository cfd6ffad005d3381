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

#include "crossfield/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace crossfield
{

std::string format_num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

static std::string trim(const std::string &s)
{
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

KeyValueConfig KeyValueConfig::from_string(const std::string &text)
{
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_config("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw invalid_config("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[key] = val;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::string &path)
{
    std::ifstream f(path);
    if (!f)
        throw invalid_config("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

bool KeyValueConfig::has(const std::string &key) const { return kv_.count(key) > 0; }

std::string KeyValueConfig::get_str(const std::string &key, const std::string &fallback) const
{
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double KeyValueConfig::get_num(const std::string &key, double fallback) const
{
    auto it = kv_.find(key);
    if (it == kv_.end())
        return fallback;
    try
    {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (trim(it->second.substr(pos)) != "")
            throw std::invalid_argument("trailing text");
        return v;
    }
    catch (const std::exception &)
    {
        throw invalid_config("config key '" + key + "': not a number: " + it->second);
    }
}

arma::uword KeyValueConfig::get_uint(const std::string &key, arma::uword fallback) const
{
    double v = get_num(key, double(fallback));
    if (v < 0 || v != std::floor(v))
        throw invalid_config("config key '" + key + "': not a nonnegative integer");
    return arma::uword(v);
}

std::vector<double> KeyValueConfig::get_list(const std::string &key,
                                             const std::vector<double> &fallback) const
{
    auto it = kv_.find(key);
    if (it == kv_.end())
        return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
    {
        tok = trim(tok);
        if (tok.empty())
            continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty())
        throw invalid_config("config key '" + key + "': empty list");
    return out;
}

std::vector<std::string> KeyValueConfig::get_str_list(const std::string &key,
                                                      const std::vector<std::string> &fallback) const
{
    auto it = kv_.find(key);
    if (it == kv_.end())
        return fallback;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
    {
        tok = trim(tok);
        if (!tok.empty())
            out.push_back(tok);
    }
    if (out.empty())
        throw invalid_config("config key '" + key + "': empty list");
    return out;
}

void KeyValueConfig::set(const std::string &key, const std::string &value) { kv_[key] = value; }

// ---------------------------------------------------------------------------

static void write_vec(std::ostream &os, const std::string &name, const arma::vec &v)
{
    os << name << " =";
    for (arma::uword i = 0; i < v.n_elem; ++i)
        os << " " << format_num(v(i));
    os << "\n";
}

static arma::vec parse_vec(const std::string &line)
{
    std::stringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v)
        vals.push_back(v);
    return arma::vec(vals);
}

static std::map<std::string, std::string> read_kv_block(std::istream &in, const std::string &until)
{
    std::map<std::string, std::string> kv;
    std::string line;
    while (true)
    {
        std::streampos pos = in.tellg();
        if (!std::getline(in, line))
            break;
        std::string t = trim(line);
        if (t.empty())
            continue;
        if (t.rfind(until, 0) == 0)
        {
            in.seekg(pos);
            break;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw invalid_input("serialized file: malformed line: " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

void save_pathset(const PathSet &ps, const std::string &path)
{
    std::ofstream f(path);
    if (!f)
        throw invalid_input("cannot write " + path);
    f << "# crossfield path set\n";
    f << "n_subarrays = " << ps.n_subarrays << "\n";
    f << "seed = " << ps.seed << "\n";
    f << "n_paths = " << ps.paths.size() << "\n";
    for (size_t i = 0; i < ps.paths.size(); ++i)
    {
        const Path &p = ps.paths[i];
        f << "[path]\n";
        f << "los = " << (p.los ? 1 : 0) << "\n";
        f << "ref_distance = " << format_num(p.ref_distance) << "\n";
        f << "scatter_distance = " << format_num(p.scatter_distance) << "\n";
        f << "total_distance = " << format_num(p.total_distance) << "\n";
        f << "delay = " << format_num(p.delay) << "\n";
        f << "coeff = " << format_num(p.coeff.real()) << " " << format_num(p.coeff.imag()) << "\n";
        f << "az_bs = " << format_num(p.az_bs) << "\n";
        f << "el_bs = " << format_num(p.el_bs) << "\n";
        f << "az_ue = " << format_num(p.az_ue) << "\n";
        f << "el_ue = " << format_num(p.el_ue) << "\n";
        write_vec(f, "az_bs_k", p.az_bs_k);
        write_vec(f, "el_bs_k", p.el_bs_k);
        write_vec(f, "az_ue_k", p.az_ue_k);
        write_vec(f, "el_ue_k", p.el_ue_k);
        write_vec(f, "phase_shift_k", p.phase_shift_k);
    }
}

PathSet load_pathset(const std::string &path)
{
    std::ifstream f(path);
    if (!f)
        throw invalid_input("cannot read " + path);
    PathSet ps;
    std::string line;
    std::getline(f, line); // comment header
    auto head = read_kv_block(f, "[path]");
    ps.n_subarrays = arma::uword(std::stoull(head.at("n_subarrays")));
    ps.seed = std::stoull(head.at("seed"));
    size_t n = std::stoull(head.at("n_paths"));
    for (size_t i = 0; i < n; ++i)
    {
        if (!std::getline(f, line) || trim(line) != "[path]")
            throw invalid_input("path set file: expected [path] block");
        auto kv = read_kv_block(f, "[path]");
        Path p;
        p.los = kv.at("los") == "1";
        p.ref_distance = std::stod(kv.at("ref_distance"));
        p.scatter_distance = std::stod(kv.at("scatter_distance"));
        p.total_distance = std::stod(kv.at("total_distance"));
        p.delay = std::stod(kv.at("delay"));
        arma::vec c = parse_vec(kv.at("coeff"));
        p.coeff = cx(c(0), c(1));
        p.az_bs = std::stod(kv.at("az_bs"));
        p.el_bs = std::stod(kv.at("el_bs"));
        p.az_ue = std::stod(kv.at("az_ue"));
        p.el_ue = std::stod(kv.at("el_ue"));
        p.az_bs_k = parse_vec(kv.at("az_bs_k"));
        p.el_bs_k = parse_vec(kv.at("el_bs_k"));
        p.az_ue_k = parse_vec(kv.at("az_ue_k"));
        p.el_ue_k = parse_vec(kv.at("el_ue_k"));
        p.phase_shift_k = parse_vec(kv.at("phase_shift_k"));
        ps.paths.push_back(std::move(p));
    }
    return ps;
}

static const char *kind_name(CodebookKind k)
{
    switch (k)
    {
    case CodebookKind::exhaustive:
        return "exhaustive";
    case CodebookKind::subarray_dft:
        return "subarray_dft";
    case CodebookKind::hierarchical:
        return "hierarchical";
    case CodebookKind::ue_dft:
        return "ue_dft";
    case CodebookKind::near_field:
        return "near_field";
    }
    return "unknown";
}

static CodebookKind kind_from_name(const std::string &s)
{
    if (s == "exhaustive")
        return CodebookKind::exhaustive;
    if (s == "subarray_dft")
        return CodebookKind::subarray_dft;
    if (s == "hierarchical")
        return CodebookKind::hierarchical;
    if (s == "ue_dft")
        return CodebookKind::ue_dft;
    if (s == "near_field")
        return CodebookKind::near_field;
    throw invalid_input("unknown codebook kind: " + s);
}

void save_outcome(const TrainingOutcome &out, const std::string &path)
{
    std::ofstream f(path);
    if (!f)
        throw invalid_input("cannot write " + path);
    const Observation &o = out.obs;
    f << "# crossfield training outcome\n";
    f << "scheme = " << out.scheme << "\n";
    f << "bs_kind = " << kind_name(o.bs_kind) << "\n";
    f << "n_ue = " << o.n_ue << "\n";
    f << "n_subcarriers = " << o.n_subcarriers << "\n";
    f << "powers_only = " << (o.powers_only ? 1 : 0) << "\n";
    f << "pilot_slots = " << out.pilot_slots << "\n";
    f << "beams_swept = " << out.beams_swept << "\n";
    f << "savings_beams = " << out.savings_beams << "\n";
    f << "n_rows = " << o.n_rows() << "\n";
    f << "block_sizes =";
    for (arma::uword i = 0; i < o.block_sizes.n_elem; ++i)
        f << " " << o.block_sizes(i);
    f << "\n";
    f << "n_bounds = " << out.bounds.n_rows << "\n";
    for (arma::uword k = 0; k < out.bounds.n_rows; ++k)
        f << "bounds = " << format_num(out.bounds(k, 0)) << " " << format_num(out.bounds(k, 1)) << " "
          << format_num(out.bounds(k, 2)) << " " << format_num(out.bounds(k, 3)) << "\n";
    f << "n_selected = " << out.selected.size() << "\n";
    for (const BeamRef &r : out.selected)
        f << "selected = " << r.subarray << " " << r.layer << " " << r.bx << " " << r.bz << " "
          << r.dist_index << " " << format_num(r.focus_distance) << " " << format_num(r.steer_x)
          << " " << format_num(r.steer_z) << "\n";
    for (arma::uword i = 0; i < o.n_rows(); ++i)
    {
        const BeamRef &r = o.ledger[i];
        f << "row = " << r.subarray << " " << r.layer << " " << r.bx << " " << r.bz << " "
          << r.dist_index << " " << format_num(r.focus_distance) << " " << format_num(r.steer_x)
          << " " << format_num(r.steer_z) << " " << format_num(o.row_power(i)) << "\n";
    }
    if (!o.powers_only)
        for (arma::uword m = 0; m < o.n_subcarriers; ++m)
        {
            f << "[y " << m + 1 << "]\n";
            for (arma::uword r = 0; r < o.y[m].n_rows; ++r)
            {
                for (arma::uword c = 0; c < o.y[m].n_cols; ++c)
                {
                    if (c)
                        f << " ";
                    f << format_num(o.y[m](r, c).real()) << " " << format_num(o.y[m](r, c).imag());
                }
                f << "\n";
            }
        }
}

TrainingOutcome load_outcome(const std::string &path)
{
    std::ifstream f(path);
    if (!f)
        throw invalid_input("cannot read " + path);
    std::string line;
    std::getline(f, line);

    TrainingOutcome out;
    Observation &o = out.obs;
    arma::uword n_rows = 0, n_bounds = 0, n_selected = 0;

    auto parse_ref = [](std::istringstream &ss, BeamRef &r, double *power) {
        ss >> r.subarray >> r.layer >> r.bx >> r.bz >> r.dist_index >> r.focus_distance >>
            r.steer_x >> r.steer_z;
        if (power)
            ss >> *power;
    };

    std::vector<double> powers;
    while (std::getline(f, line))
    {
        std::string t = trim(line);
        if (t.empty())
            continue;
        if (t[0] == '[')
        {
            // observation blocks: "[y m]" followed by n_rows data lines
            o.y.resize(o.n_subcarriers);
            while (true)
            {
                arma::uword m = 0;
                std::istringstream hs(t.substr(3));
                hs >> m;
                if (m < 1 || m > o.n_subcarriers)
                    throw invalid_input("outcome file: bad subcarrier header");
                o.y[m - 1].set_size(n_rows, o.n_ue);
                for (arma::uword r = 0; r < n_rows; ++r)
                {
                    if (!std::getline(f, line))
                        throw invalid_input("outcome file: truncated observation block");
                    std::istringstream rs(line);
                    for (arma::uword c = 0; c < o.n_ue; ++c)
                    {
                        double re, im;
                        rs >> re >> im;
                        o.y[m - 1](r, c) = cx(re, im);
                    }
                }
                if (!std::getline(f, line))
                    break;
                t = trim(line);
                if (t.empty() || t[0] != '[')
                    break;
            }
            break;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw invalid_input("outcome file: malformed line: " + t);
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        std::istringstream ss(val);
        if (key == "scheme")
            out.scheme = val;
        else if (key == "bs_kind")
            o.bs_kind = kind_from_name(val);
        else if (key == "n_ue")
            o.n_ue = std::stoull(val);
        else if (key == "n_subcarriers")
            o.n_subcarriers = std::stoull(val);
        else if (key == "powers_only")
            o.powers_only = val == "1";
        else if (key == "pilot_slots")
            out.pilot_slots = std::stoull(val);
        else if (key == "beams_swept")
            out.beams_swept = std::stoull(val);
        else if (key == "savings_beams")
            out.savings_beams = std::stoull(val);
        else if (key == "n_rows")
            n_rows = std::stoull(val);
        else if (key == "block_sizes")
        {
            arma::vec v = parse_vec(val);
            o.block_sizes.set_size(v.n_elem);
            for (arma::uword i = 0; i < v.n_elem; ++i)
                o.block_sizes(i) = arma::uword(v(i));
        }
        else if (key == "n_bounds")
        {
            n_bounds = std::stoull(val);
            out.bounds.set_size(n_bounds, 4);
            n_bounds = 0;
        }
        else if (key == "bounds")
        {
            arma::vec v = parse_vec(val);
            out.bounds.row(n_bounds++) = v.t();
        }
        else if (key == "n_selected")
            n_selected = std::stoull(val), (void)n_selected;
        else if (key == "selected")
        {
            BeamRef r;
            parse_ref(ss, r, nullptr);
            out.selected.push_back(r);
        }
        else if (key == "row")
        {
            BeamRef r;
            double p = 0;
            parse_ref(ss, r, &p);
            o.ledger.push_back(r);
            powers.push_back(p);
        }
        else
            throw invalid_input("outcome file: unknown key: " + key);
    }
    o.row_power = arma::vec(powers);
    if (o.ledger.size() != n_rows)
        throw invalid_input("outcome file: row count mismatch");
    return out;
}

void export_codeword(const Codeword &w, const std::string &path)
{
    std::ofstream f(path);
    if (!f)
        throw invalid_input("cannot write " + path);
    f << "# codeword layer=" << w.layer << " bx=" << w.bx << " bz=" << w.bz
      << " subarray=" << w.subarray << " coverage=[" << w.lo_x << "," << w.hi_x << "]x[" << w.lo_z
      << "," << w.hi_z << "]\n";
    char buf[80];
    for (arma::uword i = 0; i < w.v.n_elem; ++i)
    {
        std::snprintf(buf, sizeof(buf), "%.12g %.12g\n", w.v(i).real(), w.v(i).imag());
        f << buf;
    }
}

void export_pattern_csv(const Codeword &w, const ArrayGeometry &geom,
                        const arma::vec &grid_x, const arma::vec &grid_z,
                        const std::string &path)
{
    arma::mat g = beam_pattern(w, geom, grid_x, grid_z);
    std::ofstream f(path);
    if (!f)
        throw invalid_input("cannot write " + path);
    f << "psi_x,psi_z,gain_db\n";
    for (arma::uword i = 0; i < grid_x.n_elem; ++i)
        for (arma::uword j = 0; j < grid_z.n_elem; ++j)
            f << format_num(grid_x(i)) << "," << format_num(grid_z(j)) << ","
              << format_num(db10(std::max(g(i, j), 1e-300))) << "\n";
}

} // namespace crossfield
