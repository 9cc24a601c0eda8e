// Command-line front end: ECRB evaluation, Marchenko-Pastur tables,
// Lemma-style trace checks, Monte-Carlo simulation, figure reproduction.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deflatecrb/deflatecrb.hpp"

namespace dc = deflatecrb;
using nlohmann::json;

namespace {

struct BoundArgs {
    long long n = 0, k = 0, la = 0, lb = 0;
    double snr_db = 10.0;
    double sigma_alpha2 = 1.0;
    double sigma_beta2 = 1.0;
    int draws = 1;
    std::uint64_t seed = 0;
    bool as_json = false;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe m;
    for (double x : v) m.mean += x;
    m.mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - m.mean) * (x - m.mean);
    var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
    m.se = std::sqrt(var / v.size());
    return m;
}

int run_bound(const BoundArgs& a) {
    const dc::ProblemDims dims(a.n, a.k, a.la, a.lb);
    const dc::GridPoint gp{dims, a.snr_db};
    const auto cal = dc::detail::calibrate_all(gp, a.sigma_alpha2, a.sigma_beta2);

    std::vector<double> cd, cj, ci, sd, sj, si;
    const double s = 1.0 / std::sqrt(static_cast<double>(dims.n));
    for (int d = 0; d < a.draws; ++d) {
        auto rng = dc::make_stream(a.seed, 0xB07DULL, static_cast<std::uint64_t>(d));
        const dc::Matrix am = dc::gaussian_matrix(dims.n, dims.l_a, s, rng);
        const dc::Matrix bm = dc::gaussian_matrix(dims.n, dims.l_b, s, rng);
        const dc::BoundReport rep = dc::detail::bound_report(am, bm, cal);
        cd.push_back(rep.c_deflated);
        cj.push_back(rep.c_joint);
        ci.push_back(rep.c_ideal);
        sd.push_back(rep.snr_na_deflated);
        sj.push_back(rep.snr_na_joint);
        si.push_back(rep.snr_na_ideal);
    }
    const double snr = dc::from_db(a.snr_db);
    const double cdi = dc::ecrb_deflated_asym(cal.ratios, a.sigma_alpha2, snr);
    const double cji = dc::ecrb_joint_asym(cal.ratios, a.sigma_alpha2, a.sigma_beta2,
                                           cal.joint.sigma2);
    const double cii = dc::ecrb_ideal_asym(cal.ratios, a.sigma_alpha2, snr);

    const MeanSe mcd = mean_se(cd), mcj = mean_se(cj), mci = mean_se(ci);
    const MeanSe msd = mean_se(sd), msj = mean_se(sj), msi = mean_se(si);

    if (a.as_json) {
        json j = {{"draws", a.draws},
                  {"snr_target_db", a.snr_db},
                  {"sigma2_deflated", cal.deflated.sigma2},
                  {"sigma2_joint", cal.joint.sigma2},
                  {"sigma2_ideal", cal.ideal.sigma2},
                  {"c_deflated", mcd.mean},
                  {"c_deflated_stderr", mcd.se},
                  {"c_deflated_inf", cdi},
                  {"c_joint", mcj.mean},
                  {"c_joint_stderr", mcj.se},
                  {"c_joint_inf", cji},
                  {"c_ideal", mci.mean},
                  {"c_ideal_stderr", mci.se},
                  {"c_ideal_inf", cii},
                  {"snr_na_deflated", msd.mean},
                  {"snr_na_joint", msj.mean},
                  {"snr_na_ideal", msi.mean}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::printf("ECRB report (N=%lld, K=%lld, L_A=%lld, L_B=%lld, target SNR=%.6g dB, %d draws)\n",
                a.n, a.k, a.la, a.lb, a.snr_db, a.draws);
    std::printf("  c_deflated      %.10g  (stderr %.3g)   asymptotic %.10g\n", mcd.mean, mcd.se, cdi);
    std::printf("  c_joint         %.10g  (stderr %.3g)   asymptotic %.10g\n", mcj.mean, mcj.se, cji);
    std::printf("  c_ideal         %.10g  (stderr %.3g)   asymptotic %.10g\n", mci.mean, mci.se, cii);
    std::printf("  snr_na deflated %.10g   joint %.10g   ideal %.10g\n", msd.mean, msj.mean, msi.mean);
    std::printf("  noise variances: deflated %.10g  joint %.10g  ideal %.10g\n",
                cal.deflated.sigma2, cal.joint.sigma2, cal.ideal.sigma2);
    return 0;
}

int run_mp(double rho_tilde, int grid, int moments_up_to, bool as_json) {
    const dc::MPLaw law(rho_tilde);
    std::vector<double> xs, dens;
    for (int i = 0; i < grid; ++i) {
        const double x = law.lambda_minus +
                         (law.lambda_plus - law.lambda_minus) * i / std::max(grid - 1, 1);
        xs.push_back(x);
        dens.push_back(dc::mp_density(x, law));
    }
    std::vector<double> moments;
    for (int k = 1; k <= moments_up_to; ++k) moments.push_back(dc::mp_moment(k, law));
    const bool has_s0 = rho_tilde > 1.0;
    const double s0 = has_s0 ? dc::mp_stieltjes({0.0, 0.0}, law).real() : 0.0;

    if (as_json) {
        json j = {{"rho_tilde", rho_tilde},
                  {"lambda_minus", law.lambda_minus},
                  {"lambda_plus", law.lambda_plus},
                  {"grid_x", xs},
                  {"density", dens},
                  {"moments", moments}};
        if (has_s0) j["stieltjes_at_0"] = s0;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::printf("Marchenko-Pastur law, rho_tilde=%.10g\n", rho_tilde);
    std::printf("  lambda_- = %.10g, lambda_+ = %.10g\n", law.lambda_minus, law.lambda_plus);
    if (has_s0) std::printf("  S(0) = %.10g\n", s0);
    for (std::size_t i = 0; i < moments.size(); ++i)
        std::printf("  moment %zu = %.10g\n", i + 1, moments[i]);
    for (std::size_t i = 0; i < xs.size(); ++i)
        std::printf("  f(%.6g) = %.10g\n", xs[i], dens[i]);
    return 0;
}

int run_lemma1(long long n, long long la, long long lb, int trials, std::uint64_t seed,
               bool direct, bool as_json) {
    const dc::ProblemDims dims(n, 2 * n, la, lb);
    const auto rep = dc::verify_lemma1(dims, trials, seed, direct);
    if (as_json) {
        json j = {{"trials", rep.trials},
                  {"mean_inv_trace", rep.mean_inv_trace},
                  {"stderr_inv_trace", rep.se_inv_trace},
                  {"limit_inv_trace", rep.limit_inv_trace},
                  {"rel_gap_inv_trace", rep.rel_gap_inv()},
                  {"mean_trace", rep.mean_trace},
                  {"stderr_trace", rep.se_trace},
                  {"limit_trace", rep.limit_trace},
                  {"rel_gap_trace", rep.rel_gap_tr()}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::printf("trace checks over %d trials (N=%lld, L_A=%lld, L_B=%lld, %s path)\n",
                rep.trials, n, la, lb, direct ? "direct i.i.d." : "deflation");
    std::printf("  (1/L_A) Tr{(F'F)^-1}: mean %.8g  stderr %.3g  limit %.8g  gap %.3g%%\n",
                rep.mean_inv_trace, rep.se_inv_trace, rep.limit_inv_trace,
                100.0 * rep.rel_gap_inv());
    std::printf("  (1/(N-L_B)) Tr{F'F}: mean %.8g  stderr %.3g  limit %.8g  gap %.3g%%\n",
                rep.mean_trace, rep.se_trace, rep.limit_trace, 100.0 * rep.rel_gap_tr());
    return 0;
}

void print_summary(const dc::ExperimentResult& result) {
    // one line per grid point
    std::map<std::string, std::vector<const dc::AggregateRow*>> by_point;
    std::vector<std::string> order;
    for (const auto& r : result.rows) {
        char key[128];
        std::snprintf(key, sizeof(key), "N=%lld L_A=%lld L_B=%lld snr=%g",
                      static_cast<long long>(r.dims.n), static_cast<long long>(r.dims.l_a),
                      static_cast<long long>(r.dims.l_b), r.snr_db);
        if (!by_point.count(key)) order.push_back(key);
        by_point[key].push_back(&r);
    }
    for (const auto& key : order) {
        std::string line = key + " |";
        for (const auto* r : by_point[key]) {
            char piece[96];
            std::snprintf(piece, sizeof(piece), " %s%s=%.4g dB", r->estimator.c_str(),
                          r->deflated ? "" : "(raw)", r->mse_db());
            line += piece;
        }
        const auto* r0 = by_point[key].front();
        char tail[96];
        std::snprintf(tail, sizeof(tail), " | c_defl=%.4g dB (ok %d)", dc::db(r0->c_deflated),
                      r0->trials_ok);
        line += tail;
        std::printf("%s\n", line.c_str());
    }
}

int export_and_summarize(const dc::ExperimentResult& result, const std::string& out,
                         const std::string& format, bool as_json) {
    const auto fmt = format == "json" ? dc::ExportFormat::Json : dc::ExportFormat::Csv;
    if (!out.empty()) dc::export_result(result, fmt, out);
    if (as_json) std::cout << dc::to_json(result).dump(2) << "\n";
    else print_summary(result);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interference-rejecting sparse estimation: ECRBs, Marchenko-Pastur "
                 "law, and Monte-Carlo benchmarks"};
    app.require_subcommand(1);

    BoundArgs ba;
    auto* bound = app.add_subcommand("bound", "Evaluate the three ECRBs for one scenario point");
    bound->add_option("--n", ba.n, "measurement count N")->required();
    bound->add_option("--k", ba.k, "dictionary columns K")->required();
    bound->add_option("--la", ba.la, "sources of interest L_A")->required();
    bound->add_option("--lb", ba.lb, "interfering sources L_B")->required();
    bound->add_option("--snr-db", ba.snr_db, "target output SNR in dB");
    bound->add_option("--sigma-alpha2", ba.sigma_alpha2, "amplitude prior variance");
    bound->add_option("--sigma-beta2", ba.sigma_beta2, "interference prior variance");
    bound->add_option("--draws", ba.draws, "dictionary draws to average")->check(CLI::PositiveNumber);
    bound->add_option("--seed", ba.seed, "random seed");
    bound->add_flag("--json", ba.as_json, "JSON output");

    double mp_rho_tilde = 0.0;
    int mp_grid = 9, mp_moments = 3;
    bool mp_json = false;
    auto* mp = app.add_subcommand("mp", "Marchenko-Pastur law: edges, density, moments");
    mp->add_option("--rho-tilde", mp_rho_tilde, "aspect ratio")->required()->check(CLI::PositiveNumber);
    mp->add_option("--grid", mp_grid, "density grid points")->check(CLI::NonNegativeNumber);
    mp->add_option("--moments-up-to", mp_moments, "print moments 1..k")->check(CLI::NonNegativeNumber);
    mp->add_flag("--json", mp_json, "JSON output");

    long long l1_n = 2000, l1_la = 200, l1_lb = 200;
    int l1_trials = 20;
    std::uint64_t l1_seed = 0;
    bool l1_direct = false, l1_json = false;
    auto* lemma1 = app.add_subcommand("lemma1", "Empirical trace limits of the deflated system");
    lemma1->add_option("--n", l1_n, "measurement count N");
    lemma1->add_option("--la", l1_la, "sources of interest L_A");
    lemma1->add_option("--lb", l1_lb, "interfering sources L_B");
    lemma1->add_option("--trials", l1_trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    lemma1->add_option("--seed", l1_seed, "random seed");
    lemma1->add_flag("--direct", l1_direct, "draw F directly i.i.d. instead of deflating");
    lemma1->add_flag("--json", l1_json, "JSON output");

    std::string sim_config, sim_out, sim_format = "csv";
    int sim_workers = 0;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false, sim_json = false;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo scenario from a config file");
    simulate->add_option("--config", sim_config, "scenario config file")->required();
    simulate->add_option("--out", sim_out, "output file path");
    simulate->add_option("--format", sim_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    simulate->add_option("--workers", sim_workers, "worker threads (0 = auto)");
    simulate->add_option("--seed", sim_seed, "override config seed")
        ->each([&](const std::string&) { sim_seed_set = true; });
    simulate->add_flag("--json", sim_json, "print full JSON payload to stdout");

    int fig_id = 0, fig_workers = 0, fig_trials = 0;
    std::string fig_out, fig_format = "csv";
    std::uint64_t fig_seed = 0;
    bool fig_json = false;
    auto* figure = app.add_subcommand("figure", "Reproduce a published experiment dataset");
    figure->add_option("--id", fig_id, "figure id (2-5)")->required()->check(CLI::Range(2, 5));
    figure->add_option("--out", fig_out, "output file path");
    figure->add_option("--format", fig_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    figure->add_option("--workers", fig_workers, "worker threads (0 = auto)");
    figure->add_option("--trials", fig_trials, "override trial/draw count");
    figure->add_option("--seed", fig_seed, "random seed");
    figure->add_flag("--json", fig_json, "print full JSON payload to stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (bound->parsed()) return run_bound(ba);
        if (mp->parsed()) return run_mp(mp_rho_tilde, mp_grid, mp_moments, mp_json);
        if (lemma1->parsed())
            return run_lemma1(l1_n, l1_la, l1_lb, l1_trials, l1_seed, l1_direct, l1_json);
        if (simulate->parsed()) {
            dc::Scenario sc = dc::load_scenario(sim_config);
            if (sim_seed_set) sc.seed = sim_seed;
            const auto result = dc::run_experiment(sc, sim_workers);
            return export_and_summarize(result, sim_out, sim_format, sim_json);
        }
        if (figure->parsed()) {
            const auto result = dc::reproduce_figure(fig_id, fig_seed, fig_trials, fig_workers);
            return export_and_summarize(result, fig_out, fig_format, fig_json);
        }
    } catch (const dc::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
