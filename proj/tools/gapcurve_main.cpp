// gapcurve: spectral data, finite-gap approximation and curve
// reconstruction for closed curves in R^3 and S^3.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "gapcurve/error.hpp"
#include "gapcurve/geometry.hpp"
#include "gapcurve/inverse.hpp"
#include "gapcurve/io.hpp"
#include "gapcurve/potential.hpp"
#include "gapcurve/spectral.hpp"

using namespace gapcurve;
using nlohmann::json;

namespace {

Space parse_space(const std::string& s) {
    if (s == "r3") return Space::R3;
    if (s == "s3") return Space::S3;
    fail(ErrorKind::Parse, "unknown space '" + s + "' (expected r3 or s3)");
}

Potential load_potential(const std::string& path) {
    return potential_from_json(read_file(path));
}

Potential resample(const Potential& q, int n) {
    if (n == q.n()) return q;
    if (n < q.n()) {
        fail(ErrorKind::Domain, "resample: refusing to downsample the potential");
    }
    return inverse_fourier(fourier(q, q.n() / 2 - 1), n, q.T(), q.theta());
}

std::string spectrum_csv(const SpectralData& sd, const DiagnosticsReport& rep,
                         const FiniteGapVerdict& verdict) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof(buf), "# finite_gap: %s (tol %.17g, K0 %d)\n",
                  verdict.finite_gap ? "true" : "false", verdict.tol, verdict.K0);
    out += buf;
    out += "k,lambda_re,lambda_im,mult,z_re,z_im,z_abs,lambda0,d_k,partial_l2\n";
    for (const auto& e : sd.entries) {
        double l0 = lattice_point(sd.T, e.k);
        double dk = rep.d[static_cast<size_t>(e.k + rep.K)];
        double pl = rep.partial_l2[static_cast<size_t>(std::abs(e.k))];
        std::snprintf(buf, sizeof(buf),
                      "%d,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.k,
                      e.lambda.real(), e.lambda.imag(), e.mult, e.z.real(), e.z.imag(),
                      std::abs(e.z), l0, dk, pl);
        out += buf;
    }
    return out;
}

int cmd_ingest(const std::string& input, const std::string& output, int grid) {
    CurveSamples curve = curve_from_csv(read_file(input));
    Potential q = ingest(curve);
    if (grid > 0) q = resample(q, grid);
    write_file_atomic(output, potential_to_json(q));
    std::cerr << "ingested " << curve.n() << " samples, theta = " << q.theta() << "\n";
    return 0;
}

int cmd_spectrum(const std::string& input, const std::string& output,
                 const std::string& diagnostics, int K, double tol) {
    Potential q = load_potential(input);
    int Kc = default_K_central(q);
    int Kuse = std::max(K, Kc);
    SpectralData sd = perturbed_fourier(q, Kuse);
    FiniteGapVerdict verdict = is_finite_gap(sd, tol > 0 ? tol : 1e-6);
    write_file_atomic(output, spectrum_to_json(sd));
    if (!diagnostics.empty()) {
        DiagnosticsReport rep = asymptotic_diagnostics(q, Kuse);
        write_file_atomic(diagnostics, spectrum_csv(sd, rep, verdict));
    }
    std::cerr << "K_central = " << sd.K_central << ", finite_gap = "
              << (verdict.finite_gap ? "true" : "false") << ", tail indices above tol: "
              << verdict.gap_indices.size() << "\n";
    return 0;
}

int cmd_diagnose(const std::string& input, const std::string& output, int K) {
    Potential q = load_potential(input);
    DiagnosticsReport rep = asymptotic_diagnostics(q, K);
    std::string out = "k,lambda0,d_k,partial_l2\n";
    char buf[256];
    for (int k = -rep.K; k <= rep.K; ++k) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, lattice_point(q.T(), k),
                      rep.d[static_cast<size_t>(k + rep.K)],
                      rep.partial_l2[static_cast<size_t>(std::abs(k))]);
        out += buf;
    }
    out += "# ratio |M - M0| / |M0| on a lambda grid\n";
    out += "lambda_re,lambda_im,ratio\n";
    for (size_t i = 0; i < rep.ratio_lambda.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", rep.ratio_lambda[i].real(),
                      rep.ratio_lambda[i].imag(), rep.ratio[i]);
        out += buf;
    }
    write_file_atomic(output, out);
    return 0;
}

int cmd_reconstruct(const std::string& input, const std::string& output,
                    const std::string& space) {
    Potential q = load_potential(input);
    CurveSamples c = reconstruct(q, parse_space(space));
    write_file_atomic(output, curve_to_csv(c));
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& output,
                bool align) {
    CurveSamples c1 = curve_from_csv(read_file(a));
    CurveSamples c2 = curve_from_csv(read_file(b));
    json j;
    j["align"] = align;
    j["W0"] = sobolev_distance(c1, c2, 0, align);
    j["W1"] = sobolev_distance(c1, c2, 1, align);
    j["W2"] = sobolev_distance(c1, c2, 2, align);
    write_file_atomic(output, j.dump());
    return 0;
}

int cmd_approximate(const std::string& input, const std::string& output,
                    const std::string& report_path, const std::string& space_str,
                    const std::string& config_path, int n_trunc, double tol, int N_opt,
                    std::uint64_t seed) {
    Potential q = load_potential(input);
    SolverConfig cfg;
    if (!config_path.empty()) cfg = solver_config_from_json(read_file(config_path));
    if (n_trunc > 0) cfg.n_trunc = n_trunc;
    if (tol > 0) cfg.tol = tol;
    if (N_opt >= 0) cfg.N = N_opt;
    cfg.seed = seed;

    Space space = parse_space(space_str);
    ClosingReport closing = check_closing(q, space, 1e-5);
    bool single_mode = false;
    try {
        choose_closing_directions(q, space, seed, cfg.N);
    } catch (const Error&) {
        single_mode = true;
    }
    bool use_psi = closing.closed && !single_mode;

    int K_work = cfg.n_trunc + cfg.K_margin;
    SpectralData sd = perturbed_fourier(q, K_work);
    Target target = truncation_target(sd, cfg.N, cfg.n_trunc, K_work);

    SliceSpec slice;
    slice.N = cfg.N;
    SolveReport rep(q);
    if (use_psi) {
        auto dirs = choose_closing_directions(q, space, seed, cfg.N);
        slice.f1 = dirs.first;
        slice.f2 = dirs.second;
        rep = solve_Psi(q, slice, target, space, cfg);
    } else {
        rep = solve_Phi(q, slice, target, cfg);
    }

    write_file_atomic(output, potential_to_json(rep.q));

    json jr;
    jr["method"] = use_psi ? "psi" : "phi";
    jr["closing_skipped"] = !use_psi;
    jr["iterations"] = rep.iterations;
    jr["residual"] = rep.residual;
    jr["residual_history"] = rep.residual_history;
    jr["l2_distance"] = l2_distance(q, rep.q);
    jr["theta"] = rep.q.theta();
    jr["n_trunc"] = cfg.n_trunc;
    jr["N"] = cfg.N;
    if (use_psi) {
        jr["eta"] = rep.eta;
        jr["closing_residual"] = rep.closing_residual;
        ClosingReport after = check_closing(rep.q, space, 1e-5);
        jr["mu_residual"] = after.mu_residual;
        jr["matrix_residual"] = after.matrix_residual;
        jr["endpoint_gap"] = after.endpoint_gap;
    }
    if (!report_path.empty()) write_file_atomic(report_path, jr.dump());
    std::cerr << "approximate: " << (use_psi ? "solve_Psi" : "solve_Phi") << " converged in "
              << rep.iterations << " iterations, residual " << rep.residual << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral data and closed finite-gap approximation of space curves"};
    app.require_subcommand(1);

    std::string input, input2, output, report_path, diagnostics, space = "r3", config_path;
    int grid = 0, modes = 16, n_trunc = 0, N_opt = -1;
    double tol = 0.0;
    std::uint64_t seed = 12345;
    bool align = false;

    auto* ing = app.add_subcommand("ingest", "curve.csv -> potential.json");
    ing->add_option("--input", input)->required();
    ing->add_option("--output", output)->required();
    ing->add_option("--grid", grid, "resample the potential to this grid size");

    auto* spec = app.add_subcommand("spectrum", "potential.json -> spectrum.json (+ diagnostics.csv)");
    spec->add_option("--input", input)->required();
    spec->add_option("--output", output)->required();
    spec->add_option("--diagnostics", diagnostics, "per-index diagnostics CSV");
    spec->add_option("--modes", modes, "index band half-width K");
    spec->add_option("--tol", tol, "finite-gap relative tolerance");

    auto* diag = app.add_subcommand("diagnose", "potential.json -> distance-to-vacuum CSV");
    diag->add_option("--input", input)->required();
    diag->add_option("--output", output)->required();
    diag->add_option("--modes", modes);

    auto* rec = app.add_subcommand("reconstruct", "potential.json -> curve.csv");
    rec->add_option("--input", input)->required();
    rec->add_option("--output", output)->required();
    rec->add_option("--space", space, "r3 or s3");

    auto* cmp = app.add_subcommand("compare", "two curve.csv -> distances.json");
    cmp->add_option("curve1", input)->required();
    cmp->add_option("curve2", input2)->required();
    cmp->add_option("--output", output)->required();
    cmp->add_flag("--align", align, "rigid-motion alignment at the t=0 frame first");

    auto* approx = app.add_subcommand("approximate", "potential.json -> finite-gap potential + report");
    approx->add_option("--input", input)->required();
    approx->add_option("--output", output)->required();
    approx->add_option("--report", report_path);
    approx->add_option("--space", space, "r3 or s3");
    approx->add_option("--config", config_path, "solver config JSON");
    approx->add_option("--trunc", n_trunc, "truncation index n");
    approx->add_option("--tol", tol, "solver tolerance");
    approx->add_option("-N,--slice", N_opt, "frozen band half-width N");
    approx->add_option("--seed", seed, "seed for the closing-direction search");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ing) return cmd_ingest(input, output, grid);
        if (*spec) return cmd_spectrum(input, output, diagnostics, modes, tol);
        if (*diag) return cmd_diagnose(input, output, modes);
        if (*rec) return cmd_reconstruct(input, output, space);
        if (*cmp) return cmd_compare(input, input2, output, align);
        if (*approx) {
            return cmd_approximate(input, output, report_path, space, config_path, n_trunc, tol,
                                   N_opt, seed);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
