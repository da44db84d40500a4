#include "volcorr/kernel.hpp"
#include "volcorr/moments.hpp"
#include "volcorr/montecarlo.hpp"
#include "volcorr/quadrature.hpp"
#include "volcorr/specialfun.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

using nlohmann::json;

namespace {

constexpr const char* kVersion = "volcorr 1.0.0";

int default_workers() {
    if (const char* env = std::getenv("VC_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

json make_manifest(const std::string& command, const json& config, const std::string& out) {
    return json{{"command", command},
                {"config", config},
                {"version", kVersion},
                {"outputs", json::array({out.empty() ? "stdout" : out})}};
}

void write_csv(std::ostream& os, const json& manifest, const json& results) {
    os << "# manifest: " << manifest.dump() << "\n";
    auto scalar = [&](const std::string& key, const json& v) {
        os << "scalar," << key << ",";
        if (v.is_number_float())
            os << fmt_double(v.get<double>());
        else
            os << v.dump();
        os << "\n";
    };
    if (results.contains("moments")) {
        os << "moment,order,estimate,std_error\n";
        for (const auto& row : results["moments"])
            os << "moment," << row["order"].get<int>() << ","
               << fmt_double(row["estimate"].get<double>()) << ","
               << fmt_double(row["std_error"].get<double>()) << "\n";
    }
    if (results.contains("histogram")) {
        const auto& h = results["histogram"];
        const auto& edges = h["edges"];
        const auto& counts = h["counts"];
        os << "histogram,bin_lo,bin_hi,count\n";
        for (std::size_t i = 0; i < counts.size(); ++i)
            os << "histogram," << fmt_double(edges[i].get<double>()) << ","
               << fmt_double(edges[i + 1].get<double>()) << "," << counts[i].get<long>()
               << "\n";
    }
    for (const auto& [key, v] : results.items()) {
        if (key == "moments" || key == "histogram") continue;
        if (v.is_object()) {
            for (const auto& [k2, v2] : v.items()) scalar(key + "." + k2, v2);
        } else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i)
                scalar(key + "[" + std::to_string(i) + "]", v[i]);
        } else {
            scalar(key, v);
        }
    }
}

void emit(const std::string& out, const std::string& format, const json& manifest,
          const json& results) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
        file.open(out, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open output file: " + out);
        os = &file;
    }
    if (format == "csv") {
        write_csv(*os, manifest, results);
    } else {
        json doc{{"manifest", manifest}, {"results", results}};
        *os << doc.dump(2) << "\n";
    }
    os->flush();
}

json moments_json(const volcorr::MomentTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"order", r.order}, {"estimate", r.estimate}, {"std_error", r.std_error}});
    return rows;
}

struct SimulateOpts {
    volcorr::SimConfig cfg;
    int bins = 40;
    std::string step_dist = "gaussian";
};

int run_simulate(const SimulateOpts& opt, const std::string& out, const std::string& format) {
    volcorr::SimConfig cfg = opt.cfg;
    cfg.step_dist = opt.step_dist == "rademacher" ? volcorr::StepDist::rademacher
                                                  : volcorr::StepDist::gaussian;
    long resampled = 0;
    std::vector<double> thetas = volcorr::sample_thetas(cfg, &resampled);
    volcorr::MomentTable table = volcorr::moments_from_samples(thetas, cfg.max_moment, resampled);
    volcorr::Histogram hist = volcorr::histogram_from_samples(thetas, opt.bins);

    json results;
    results["moments"] = moments_json(table);
    results["histogram"] = {{"edges", hist.bin_edges}, {"counts", hist.counts}};
    results["paths"] = table.paths;
    results["resampled"] = resampled;
    if (cfg.paths >= 100) {
        auto [lo, hi] = volcorr::quantile_interval(thetas, 0.95);
        results["middle95"] = {{"mass", 0.95}, {"lo", lo}, {"hi", hi}};
    }
    json config{{"n", cfg.n},           {"paths", cfg.paths},
                {"seed", cfg.seed},     {"workers", cfg.workers},
                {"step_dist", opt.step_dist}, {"max_moment", cfg.max_moment},
                {"bins", opt.bins}};
    emit(out, format, make_manifest("simulate", config, out), results);
    if (resampled * 100 > cfg.paths) {
        std::cerr << "simulate: " << resampled << " of " << cfg.paths
                  << " replications were degenerate and redrawn (over 1%)\n";
        return 1;
    }
    return 0;
}

json integral_json(const volcorr::IntegralResult& r) {
    return json{{"value", r.value},
                {"error_estimate", r.error_estimate},
                {"evaluations", r.evaluations},
                {"truncation_tail", r.truncation_tail}};
}

int run_second_moment(const volcorr::QuadratureSpec& spec, const std::string& out,
                      const std::string& format) {
    volcorr::IntegralResult r = volcorr::second_moment(spec);
    json config{{"rel_tol", spec.rel_tol}, {"abs_tol", spec.abs_tol},
                {"u_max", spec.u_max},     {"diag_eps", spec.diag_eps},
                {"max_evals", spec.max_evals}};
    emit(out, format, make_manifest("analytic second-moment", config, out),
         integral_json(r));
    return 0;
}

int run_mgf(const volcorr::MgfPoint& p, const std::string& out, const std::string& format) {
    volcorr::CPair c = volcorr::cpair(p);
    double f = volcorr::eval_F(p);
    json config{{"beta1", p.beta1}, {"beta2", p.beta2}, {"a", p.a}};
    json results{{"value", f}, {"c_plus", c.c_plus}, {"c_minus", c.c_minus}};
    emit(out, format, make_manifest("analytic mgf", config, out), results);
    return 0;
}

int run_moment(int n, int r_max, double v_radius, const volcorr::QuadratureSpec& spec,
               int workers, const std::string& out, const std::string& format) {
    volcorr::MomentResult r = volcorr::even_moment(n, r_max, spec, v_radius, 0, workers);
    json config{{"n", n},       {"r_max", r_max},   {"v_radius", v_radius},
                {"u_max", spec.u_max}, {"workers", workers}};
    json results{{"order", 2 * n},
                 {"value", r.value},
                 {"r_truncation", r.r_truncation},
                 {"tail_estimate", r.tail_estimate},
                 {"method", r.method}};
    emit(out, format, make_manifest("analytic moment", config, out), results);
    return 0;
}

int run_generating(double z, volcorr::SimConfig cfg, const volcorr::QuadratureSpec& spec,
                   const std::string& out, const std::string& format) {
    volcorr::IntegralResult rhs = volcorr::generating_rhs(z, spec);
    volcorr::IntegralResult sm = volcorr::second_moment(spec);
    cfg.max_moment = 10;
    volcorr::MomentTable mc = volcorr::estimate_moments(cfg);

    // Series side: sum_n z^(2n)/(2n) * (n!)^2 4^n / (2n)! * E[theta^(2n)],
    // first term from the closed form, higher terms from Monte Carlo.
    auto coeff = [&](int n) {
        double c = 1.0 / (2.0 * n);
        for (int j = 1; j <= n; ++j) c *= 4.0 * j * j / ((2.0 * j) * (2.0 * j - 1.0)) ;
        for (int j = 0; j < 2 * n; ++j) c *= z;
        return c;
    };
    double lhs = coeff(1) * sm.value;
    double se_prop = coeff(1) * (sm.error_estimate + sm.truncation_tail);
    for (int n = 2; 2 * n <= 10; ++n) {
        lhs += coeff(n) * mc.rows[2 * n].estimate;
        se_prop += coeff(n) * 3.0 * mc.rows[2 * n].std_error;
    }
    double rel = std::fabs(lhs - rhs.value) / std::max(std::fabs(rhs.value), 1e-300);
    double tol = 1e-3 + (se_prop + rhs.error_estimate + rhs.truncation_tail) /
                            std::max(std::fabs(rhs.value), 1e-300);
    bool pass = rel <= tol;

    json config{{"z", z},       {"n", cfg.n},           {"paths", cfg.paths},
                {"seed", cfg.seed}, {"workers", cfg.workers}, {"u_max", spec.u_max}};
    json results{{"lhs_series", lhs},       {"rhs_integral", rhs.value},
                 {"rel_discrepancy", rel},  {"tolerance", tol},
                 {"pass", pass}};
    emit(out, format, make_manifest("verify generating", config, out), results);
    if (!pass) {
        std::cerr << "verify generating: discrepancy " << rel << " above tolerance " << tol
                  << "\n";
        return 1;
    }
    return 0;
}

int run_quadform(int m, uint64_t seed, long pairs, int workers, const std::string& out,
                 const std::string& format) {
    volcorr::SimConfig cfg;
    cfg.n = m;
    cfg.paths = pairs;
    cfg.seed = seed;
    cfg.workers = workers;
    std::vector<double> rel(pairs);
    for (long r = 0; r < pairs; ++r) {
        volcorr::PathPair p = volcorr::gen_walk(cfg, static_cast<uint64_t>(r));
        double x = volcorr::quadratic_form_X(p, 1, 2);
        double y = volcorr::centered_product_integral(p, 1, 2);
        rel[r] = std::fabs(x - y) / std::max(std::fabs(y), 1e-300);
    }
    std::vector<double> sorted = rel;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    bool pass = median <= 1e-2;

    json config{{"n", m}, {"seed", seed}, {"pairs", pairs}, {"workers", workers}};
    json results{{"median_rel_diff", median}, {"tolerance", 1e-2}, {"pass", pass}};
    emit(out, format, make_manifest("verify quadform", config, out), results);
    if (!pass) {
        std::cerr << "verify quadform: median discrepancy " << median << " above 1e-2\n";
        return 1;
    }
    return 0;
}

int run_fredholm(const volcorr::MgfPoint& p, int terms, const std::string& out,
                 const std::string& format) {
    volcorr::FredholmResult fr = volcorr::fredholm_det_truncated(p, terms);
    double f = volcorr::eval_F(p);
    double closed = 1.0 / (f * f);
    double rel = std::fabs(fr.value - closed) / closed;
    double tol = std::max(1e-3, 2.0 * fr.tail);
    bool pass = rel <= tol;

    json config{{"beta1", p.beta1}, {"beta2", p.beta2}, {"a", p.a}, {"terms", terms}};
    json results{{"value", fr.value},       {"closed_form", closed}, {"tail", fr.tail},
                 {"rel_discrepancy", rel},  {"tolerance", tol},      {"pass", pass}};
    emit(out, format, make_manifest("verify fredholm", config, out), results);
    if (!pass) {
        std::cerr << "verify fredholm: discrepancy " << rel << " above tolerance " << tol
                  << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moments of the empirical correlation of independent random walks"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config");
    app.require_subcommand(1);

    std::string out, format = "json";
    app.add_option("--out", out, "output file (default: stdout)")->capture_default_str();
    app.add_option("--format", format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    SimulateOpts sim_opts;
    sim_opts.cfg.workers = default_workers();
    CLI::App* sim = app.add_subcommand("simulate",
                                       "sample correlations of independent random-walk pairs");
    sim->fallthrough();
    sim->add_option("--n", sim_opts.cfg.n, "steps per path")->check(CLI::Range(2, 100000000));
    sim->add_option("--paths", sim_opts.cfg.paths, "independent replications")
        ->check(CLI::Range(1L, 1000000000L));
    sim->add_option("--seed", sim_opts.cfg.seed, "generator seed");
    sim->add_option("--workers", sim_opts.cfg.workers, "thread count (env VC_WORKERS)")
        ->check(CLI::Range(1, 1024));
    sim->add_option("--max-moment", sim_opts.cfg.max_moment, "highest reported moment (even)")
        ->check(CLI::Range(2, 40));
    sim->add_option("--bins", sim_opts.bins, "histogram bins")->check(CLI::Range(10, 100000));
    sim->add_option("--step-dist", sim_opts.step_dist, "step distribution")
        ->check(CLI::IsMember({"gaussian", "rademacher"}));

    CLI::App* analytic = app.add_subcommand("analytic", "closed-form quantities");
    analytic->require_subcommand(1);
    analytic->fallthrough();
    volcorr::QuadratureSpec qspec;
    CLI::App* asm_ = analytic->add_subcommand("second-moment",
                                              "second moment via the closed-form integral");
    asm_->fallthrough();
    asm_->add_option("--rel-tol", qspec.rel_tol)->check(CLI::Range(1e-14, 1e-1));
    asm_->add_option("--abs-tol", qspec.abs_tol)->check(CLI::Range(1e-16, 1e-1));
    asm_->add_option("--u-max", qspec.u_max)->check(CLI::Range(2.0, 500.0));
    asm_->add_option("--diag-eps", qspec.diag_eps)->check(CLI::Range(1e-8, 0.4));
    asm_->add_option("--max-evals", qspec.max_evals)->check(CLI::Range(15L, 1000000000L));

    volcorr::MgfPoint mgf_point{1.0, 1.0, 0.5};
    CLI::App* amgf = analytic->add_subcommand("mgf", "joint MGF value F at a point");
    amgf->fallthrough();
    amgf->add_option("--beta1", mgf_point.beta1)->required()->check(CLI::NonNegativeNumber);
    amgf->add_option("--beta2", mgf_point.beta2)->required()->check(CLI::NonNegativeNumber);
    amgf->add_option("--a", mgf_point.a)->required()->check(CLI::Range(-1.0, 1.0));

    int mom_n = 1, mom_rmax = 25, mom_workers = default_workers();
    double mom_vradius = 0.5;
    volcorr::QuadratureSpec mom_spec;
    CLI::App* amom = analytic->add_subcommand("moment", "even moment via the series scheme");
    amom->fallthrough();
    amom->add_option("--n", mom_n, "half-order: computes E[theta^(2n)]")
        ->required()
        ->check(CLI::Range(1, 20));
    amom->add_option("--r-max", mom_rmax)->check(CLI::Range(6, 40));
    amom->add_option("--v-radius", mom_vradius)->check(CLI::Range(0.05, 0.9));
    amom->add_option("--u-max", mom_spec.u_max)->check(CLI::Range(2.0, 500.0));
    amom->add_option("--workers", mom_workers)->check(CLI::Range(1, 1024));

    CLI::App* verify = app.add_subcommand("verify", "cross-checks between methods");
    verify->fallthrough();
    verify->require_subcommand(1);

    double gen_z = 0.1;
    volcorr::SimConfig gen_cfg;
    gen_cfg.workers = default_workers();
    volcorr::QuadratureSpec gen_spec;
    CLI::App* vgen = verify->add_subcommand(
        "generating", "moment generating identity: series vs double integral");
    vgen->fallthrough();
    vgen->add_option("--z", gen_z)->required()->check(CLI::Range(1e-6, 0.999999));
    vgen->add_option("--n", gen_cfg.n)->check(CLI::Range(2, 100000000));
    vgen->add_option("--paths", gen_cfg.paths)->check(CLI::Range(100L, 1000000000L));
    vgen->add_option("--seed", gen_cfg.seed);
    vgen->add_option("--workers", gen_cfg.workers)->check(CLI::Range(1, 1024));

    int qf_n = 2048;
    uint64_t qf_seed = 0;
    long qf_pairs = 100;
    int qf_workers = default_workers();
    CLI::App* vquad = verify->add_subcommand(
        "quadform", "kernel quadratic form vs centered product integral on sampled paths");
    vquad->fallthrough();
    vquad->add_option("--n", qf_n)->check(CLI::Range(8, 100000));
    vquad->add_option("--seed", qf_seed);
    vquad->add_option("--pairs", qf_pairs)->check(CLI::Range(1L, 100000L));
    vquad->add_option("--workers", qf_workers)->check(CLI::Range(1, 1024));

    volcorr::MgfPoint fred_point{1.0, 1.0, 0.5};
    int fred_terms = 10000;
    CLI::App* vfred =
        verify->add_subcommand("fredholm", "truncated determinant vs closed form");
    vfred->fallthrough();
    vfred->add_option("--beta1", fred_point.beta1)->required()->check(CLI::NonNegativeNumber);
    vfred->add_option("--beta2", fred_point.beta2)->required()->check(CLI::NonNegativeNumber);
    vfred->add_option("--a", fred_point.a)->required()->check(CLI::Range(-1.0, 1.0));
    vfred->add_option("--terms", fred_terms)->check(CLI::Range(1, 100000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto started = std::chrono::steady_clock::now();
    int rc = 1;
    std::string cmd = "?";
    try {
        if (sim->parsed()) {
            cmd = "simulate";
            rc = run_simulate(sim_opts, out, format);
        } else if (asm_->parsed()) {
            cmd = "analytic second-moment";
            rc = run_second_moment(qspec, out, format);
        } else if (amgf->parsed()) {
            cmd = "analytic mgf";
            rc = run_mgf(mgf_point, out, format);
        } else if (amom->parsed()) {
            cmd = "analytic moment";
            rc = run_moment(mom_n, mom_rmax, mom_vradius, mom_spec, mom_workers, out, format);
        } else if (vgen->parsed()) {
            cmd = "verify generating";
            rc = run_generating(gen_z, gen_cfg, gen_spec, out, format);
        } else if (vquad->parsed()) {
            cmd = "verify quadform";
            rc = run_quadform(qf_n, qf_seed, qf_pairs, qf_workers, out, format);
        } else if (vfred->parsed()) {
            cmd = "verify fredholm";
            rc = run_fredholm(fred_point, fred_terms, out, format);
        }
    } catch (const volcorr::BudgetExhausted& e) {
        std::cerr << cmd << ": " << e.what() << "; best value " << fmt_double(e.best.value)
                  << " with error estimate " << fmt_double(e.best.error_estimate) << " after "
                  << e.best.evaluations << " evaluations\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << cmd << ": " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << cmd << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << cmd << ": " << e.what() << "\n";
        return 1;
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    // timing goes to stderr so files and stdout stay byte-identical run to run
    std::fprintf(stderr, "[volcorr] %s finished in %.3f s\n", cmd.c_str(), dt);
    return rc;
}
