#include "gapcurve/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gapcurve/error.hpp"

namespace gapcurve {

using nlohmann::json;

namespace {

json cplx_to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        fail(ErrorKind::Parse, "expected [re, im] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::string format17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string potential_to_json(const Potential& q) {
    json j;
    j["n"] = q.n();
    j["T"] = q.T();
    j["theta"] = q.theta();
    json samples = json::array();
    for (const cplx& s : q.samples()) samples.push_back(cplx_to_json(s));
    j["samples"] = std::move(samples);
    return j.dump();
}

Potential potential_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("potential JSON: ") + e.what());
    }
    try {
        if (!j.contains("n") || !j.contains("T") || !j.contains("theta") ||
            !j.contains("samples")) {
            fail(ErrorKind::Parse, "potential JSON: missing field (need n, T, theta, samples)");
        }
        int n = j["n"].get<int>();
        double T = j["T"].get<double>();
        double theta = j["theta"].get<double>();
        std::vector<cplx> samples;
        for (const auto& s : j["samples"]) samples.push_back(cplx_from_json(s));
        if (static_cast<int>(samples.size()) != n) {
            fail(ErrorKind::Parse, "potential JSON: n does not match the sample count");
        }
        return Potential(std::move(samples), T, theta);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("potential JSON: ") + e.what());
    }
}

std::string spectrum_to_json(const SpectralData& sd) {
    json j;
    j["T"] = sd.T;
    j["theta"] = sd.theta;
    j["K_central"] = sd.K_central;
    json entries = json::array();
    for (const auto& e : sd.entries) {
        json je;
        je["k"] = e.k;
        je["lambda"] = cplx_to_json(e.lambda);
        je["mult"] = e.mult;
        je["z"] = cplx_to_json(e.z);
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j.dump();
}

SolverConfig solver_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("solver config JSON: ") + e.what());
    }
    SolverConfig cfg;
    try {
        if (j.contains("N")) cfg.N = j["N"].get<int>();
        if (j.contains("n_trunc")) cfg.n_trunc = j["n_trunc"].get<int>();
        if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
        if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
        if (j.contains("exact_jacobian_every")) {
            cfg.exact_jacobian_every = j["exact_jacobian_every"].get<int>();
        }
        if (j.contains("damping_max")) cfg.damping_max = j["damping_max"].get<int>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("solver config JSON: ") + e.what());
    }
    return cfg;
}

std::string curve_to_csv(const CurveSamples& c) {
    std::ostringstream out;
    if (c.space == Space::R3) {
        out << "t,x,y,z\n";
        for (int j = 0; j < c.n(); ++j) {
            const Su2Vector& p = c.points_r3[static_cast<size_t>(j)];
            out << format17(c.times[static_cast<size_t>(j)]) << ',' << format17(p.x1) << ','
                << format17(p.x2) << ',' << format17(p.x3) << '\n';
        }
    } else {
        out << "t,q0,q1,q2,q3\n";
        for (int j = 0; j < c.n(); ++j) {
            const Quat& p = c.points_s3[static_cast<size_t>(j)];
            out << format17(c.times[static_cast<size_t>(j)]) << ',' << format17(p[0]) << ','
                << format17(p[1]) << ',' << format17(p[2]) << ',' << format17(p[3]) << '\n';
        }
    }
    return out.str();
}

CurveSamples curve_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header = line;
        break;
    }
    while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();

    CurveSamples c;
    int fields;
    if (header == "t,x,y,z") {
        c.space = Space::R3;
        fields = 4;
    } else if (header == "t,q0,q1,q2,q3") {
        c.space = Space::S3;
        fields = 5;
    } else {
        fail(ErrorKind::Parse,
             "curve CSV: unknown header at line " + std::to_string(lineno) +
                 " (expected t,x,y,z or t,q0,q1,q2,q3)");
    }

    std::vector<std::array<double, 5>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::array<double, 5> row{};
        std::istringstream ls(line);
        std::string cell;
        int got = 0;
        while (std::getline(ls, cell, ',')) {
            if (got >= fields) {
                fail(ErrorKind::Parse, "curve CSV: too many fields at line " + std::to_string(lineno));
            }
            try {
                size_t used = 0;
                row[static_cast<size_t>(got)] = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
                    ++used;
                }
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                fail(ErrorKind::Parse, "curve CSV: bad number '" + cell + "' at line " +
                                           std::to_string(lineno));
            }
            ++got;
        }
        if (got != fields) {
            fail(ErrorKind::Parse, "curve CSV: expected " + std::to_string(fields) +
                                       " fields at line " + std::to_string(lineno));
        }
        rows.push_back(row);
    }
    if (rows.size() < 8) fail(ErrorKind::Parse, "curve CSV: need at least 8 samples");

    const int n = static_cast<int>(rows.size());
    c.times.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) c.times[static_cast<size_t>(j)] = rows[static_cast<size_t>(j)][0];
    // T from the (uniform) sampling step
    double h = (n > 1) ? (c.times.back() - c.times.front()) / (n - 1) : 0.0;
    c.T = h * n;
    for (int j = 1; j < n; ++j) {
        double step = c.times[static_cast<size_t>(j)] - c.times[static_cast<size_t>(j - 1)];
        if (std::abs(step - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            fail(ErrorKind::Parse, "curve CSV: sample times are not uniform");
        }
    }
    if (c.space == Space::R3) {
        c.points_r3.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            c.points_r3[static_cast<size_t>(j)] = {rows[static_cast<size_t>(j)][1],
                                                   rows[static_cast<size_t>(j)][2],
                                                   rows[static_cast<size_t>(j)][3]};
        }
    } else {
        c.points_s3.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            Quat p{rows[static_cast<size_t>(j)][1], rows[static_cast<size_t>(j)][2],
                   rows[static_cast<size_t>(j)][3], rows[static_cast<size_t>(j)][4]};
            double nrm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]);
            if (std::abs(nrm - 1.0) > 1e-9) {
                fail(ErrorKind::Domain, "curve CSV: S3 point is not a unit quaternion at line " +
                                            std::to_string(j + 2));
            }
            c.points_s3[static_cast<size_t>(j)] = p;
        }
    }
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Parse, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Domain, "cannot write " + tmp);
        out << content;
        if (!out.good()) fail(ErrorKind::Domain, "write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        fail(ErrorKind::Domain, "rename failed for " + path);
    }
}

}  // namespace gapcurve
