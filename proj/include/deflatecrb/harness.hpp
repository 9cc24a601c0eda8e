#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "deflatecrb/bounds.hpp"
#include "deflatecrb/common.hpp"
#include "deflatecrb/dims.hpp"
#include "deflatecrb/estimators.hpp"
#include "deflatecrb/model.hpp"

namespace deflatecrb {

enum class EstimatorKind { Omp, Cosamp, Bpdn, OracleLs };
enum class DeflationMode { On, Off, Both };

inline std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Omp: return "omp";
        case EstimatorKind::Cosamp: return "cosamp";
        case EstimatorKind::Bpdn: return "bpdn";
        case EstimatorKind::OracleLs: return "oracle_ls";
    }
    return "?";
}

inline EstimatorKind estimator_from_name(const std::string& s) {
    if (s == "omp") return EstimatorKind::Omp;
    if (s == "cosamp") return EstimatorKind::Cosamp;
    if (s == "bpdn") return EstimatorKind::Bpdn;
    if (s == "oracle_ls") return EstimatorKind::OracleLs;
    throw InvalidInput("unknown estimator '" + s + "'");
}

struct GridPoint {
    ProblemDims dims;
    double snr_db = 0.0;
};

struct Scenario {
    std::vector<GridPoint> grid;
    double sigma_alpha2 = 1.0;
    double sigma_beta2 = 1.0;
    AmplitudePrior prior = AmplitudePrior::Gaussian;
    EntryDist dict_dist = EntryDist::Gaussian;
    int trials = 500;
    std::vector<EstimatorKind> estimators;
    DeflationMode deflation = DeflationMode::On;
    std::uint64_t seed = 0;

    void check() const {
        if (grid.empty()) throw InvalidInput("Scenario: empty grid");
        if (trials < 1) throw InvalidInput("Scenario: trials must be >= 1");
        if (estimators.empty()) throw InvalidInput("Scenario: no estimators configured");
        if (!(sigma_alpha2 > 0.0)) throw InvalidInput("Scenario: sigma_alpha2 must be > 0");
        for (const auto& gp : grid) gp.dims.validate();
    }
};

struct EstimatorScore {
    EstimatorKind kind = EstimatorKind::Omp;
    bool deflated = true;
    double mse_value = 0.0;
    SupportMetrics support;
};

struct TrialResult {
    int trial_index = 0;
    bool ok = false;
    std::string error;
    std::vector<EstimatorScore> scores;
    BoundReport bounds;
};

struct AggregateRow {
    int figure_id = 0;
    ProblemDims dims;
    double snr_db = 0.0;
    std::string estimator;
    bool deflated = true;
    double mse_mean = 0.0;
    double stderr_mean = 0.0;
    double c_deflated = 0.0, c_deflated_inf = 0.0;
    double c_joint = 0.0, c_joint_inf = 0.0;
    double c_ideal = 0.0, c_ideal_inf = 0.0;
    int trials_ok = 0;

    double mse_db() const { return db(mse_mean); }
};

struct ExperimentResult {
    Scenario scenario;
    int figure_id = 0;
    std::vector<AggregateRow> rows;
    std::vector<std::vector<TrialResult>> trials;  // [grid][trial]
};

namespace detail {

struct Calibrations {
    NoiseCalibration deflated, joint, ideal;
    AsymptoticRatios ratios;
};

inline Calibrations calibrate_all(const GridPoint& gp, double sa2, double sb2) {
    Calibrations c;
    c.ratios = AsymptoticRatios::from_dims(gp.dims);
    c.deflated = calibrate_noise(gp.snr_db, sa2, sb2, c.ratios, BoundModel::Deflated);
    c.joint = calibrate_noise(gp.snr_db, sa2, sb2, c.ratios, BoundModel::Joint);
    c.ideal = calibrate_noise(gp.snr_db, sa2, sb2, c.ratios, BoundModel::Ideal);
    return c;
}

inline BoundReport bound_report(const Matrix& a_psi, const Matrix& b_psi,
                                const Calibrations& cal) {
    BoundReport r;
    r.ratios = cal.ratios;
    r.c_deflated = ecrb_deflated(a_psi, b_psi, cal.deflated.sigma2);
    r.c_joint = ecrb_joint(a_psi, b_psi, cal.joint.sigma2);
    r.c_ideal = ecrb_ideal(a_psi, cal.ideal.sigma2);
    const double snr = from_db(cal.deflated.snr_target_db);
    r.c_deflated_inf = ecrb_deflated_asym(cal.ratios, cal.deflated.sigma_alpha2, snr);
    r.c_joint_inf = ecrb_joint_asym(cal.ratios, cal.joint.sigma_alpha2,
                                    cal.joint.sigma_beta2, cal.joint.sigma2);
    r.c_ideal_inf = ecrb_ideal_asym(cal.ratios, cal.ideal.sigma_alpha2, snr);
    r.snr_na_deflated = snr_na(BoundModel::Deflated, a_psi, b_psi, cal.deflated.sigma_alpha2,
                               cal.deflated.sigma_beta2, cal.deflated.sigma2);
    r.snr_na_joint = snr_na(BoundModel::Joint, a_psi, b_psi, cal.joint.sigma_alpha2,
                            cal.joint.sigma_beta2, cal.joint.sigma2);
    r.snr_na_ideal = snr_na(BoundModel::Ideal, a_psi, b_psi, cal.ideal.sigma_alpha2,
                            cal.ideal.sigma_beta2, cal.ideal.sigma2);
    return r;
}

inline SparseEstimate run_estimator(EstimatorKind kind, const Matrix& h, const Vector& y,
                                    Eigen::Index sparsity, double noise_var,
                                    const IndexSet& oracle_support) {
    SolverOptions opts;
    opts.sparsity = sparsity;
    switch (kind) {
        case EstimatorKind::Omp:
            opts.tol = 1e-8;
            return omp(h, y, opts);
        case EstimatorKind::Cosamp:
            opts.tol = 1e-6;
            return cosamp(h, y, opts);
        case EstimatorKind::Bpdn:
            opts.tol = 1e-6;
            opts.lambda = std::sqrt(noise_var) *
                          std::sqrt(2.0 * std::log(static_cast<double>(h.cols())));
            opts.debias = true;
            return bpdn(h, y, opts);
        case EstimatorKind::OracleLs:
            return oracle_ls(h, y, oracle_support);
    }
    throw InvalidInput("run_estimator: unknown estimator");
}

} // namespace detail

// One Monte-Carlo cell. Deterministic given (scenario.seed, grid_index,
// trial_index); estimators consume no randomness, so the scene draws do
// not depend on which estimators are configured.
inline TrialResult run_trial(const Scenario& scenario, std::size_t grid_index,
                             int trial_index) {
    const GridPoint& gp = scenario.grid[grid_index];
    TrialResult out;
    out.trial_index = trial_index;
    try {
        const auto cal =
            detail::calibrate_all(gp, scenario.sigma_alpha2, scenario.sigma_beta2);
        const auto g = static_cast<std::uint64_t>(grid_index);
        const auto t = static_cast<std::uint64_t>(trial_index);

        auto dict_rng = make_stream(scenario.seed, g, t, 0);
        auto supp_rng = make_stream(scenario.seed, g, t, 1);
        auto amp_rng = make_stream(scenario.seed, g, t, 2);
        auto noise_rng = make_stream(scenario.seed, g, t, 3);

        const Matrix h = gen_dictionary(gp.dims, dict_rng, scenario.dict_dist);
        const SupportPair supports = draw_supports(gp.dims, supp_rng);
        const Vector alpha =
            draw_amplitudes(gp.dims.l_a, scenario.sigma_alpha2, scenario.prior, amp_rng);
        Vector beta(0);
        if (gp.dims.l_b > 0)
            beta = draw_amplitudes(gp.dims.l_b, scenario.sigma_beta2, scenario.prior, amp_rng);
        const SceneRealization scene = synthesize_observation(
            h, supports, alpha, beta, cal.deflated.sigma2, noise_rng);

        const Matrix a_psi = scene.a_psi();
        const Matrix b_psi = scene.b_psi();
        out.bounds = detail::bound_report(a_psi, b_psi, cal);

        const bool want_deflated = scenario.deflation != DeflationMode::Off;
        const bool want_raw = scenario.deflation != DeflationMode::On;

        if (want_deflated) {
            const Matrix u = orth_complement(b_psi);
            const DeflatedSystem dsys = deflate_system(u, scene);
            for (EstimatorKind kind : scenario.estimators) {
                const SparseEstimate est =
                    detail::run_estimator(kind, dsys.h_bar, dsys.y_bar, gp.dims.l_a,
                                          scene.noise_var, supports.t);
                EstimatorScore score;
                score.kind = kind;
                score.deflated = true;
                score.mse_value = mse(restrict_to_support(est.x_hat, supports.t), alpha);
                score.support = support_metrics(est, supports.t);
                out.scores.push_back(score);
            }
        }
        if (want_raw) {
            IndexSet full_support = supports.t;
            full_support.insert(full_support.end(), supports.t_tilde.begin(),
                                supports.t_tilde.end());
            std::sort(full_support.begin(), full_support.end());
            for (EstimatorKind kind : scenario.estimators) {
                const SparseEstimate est = detail::run_estimator(
                    kind, scene.h, scene.y, gp.dims.l(), scene.noise_var, full_support);
                EstimatorScore score;
                score.kind = kind;
                score.deflated = false;
                score.mse_value = mse(restrict_to_support(est.x_hat, supports.t), alpha);
                score.support = support_metrics(est, full_support);
                out.scores.push_back(score);
            }
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

inline int default_worker_count() {
    if (const char* env = std::getenv("DEFLATECRB_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs all (grid x trial) cells, possibly on several workers. Results are
// written into a pre-sized table indexed by (grid, trial), so the
// aggregation does not depend on completion order or worker count.
inline ExperimentResult run_experiment(const Scenario& scenario, int workers = 0) {
    scenario.check();
    if (workers <= 0) workers = default_worker_count();

    ExperimentResult result;
    result.scenario = scenario;
    result.trials.assign(scenario.grid.size(), std::vector<TrialResult>(scenario.trials));

    const std::size_t cells = scenario.grid.size() * static_cast<std::size_t>(scenario.trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= cells) break;
            const std::size_t g = cell / scenario.trials;
            const int t = static_cast<int>(cell % scenario.trials);
            result.trials[g][static_cast<std::size_t>(t)] = run_trial(scenario, g, t);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t g = 0; g < scenario.grid.size(); ++g) {
        const auto& cell_trials = result.trials[g];
        std::vector<const TrialResult*> ok;
        for (const auto& tr : cell_trials)
            if (tr.ok) ok.push_back(&tr);
        const double fail_frac =
            1.0 - static_cast<double>(ok.size()) / static_cast<double>(cell_trials.size());
        if (fail_frac > 0.10) {
            std::string first = cell_trials.empty() ? "" : "";
            for (const auto& tr : cell_trials)
                if (!tr.ok) { first = tr.error; break; }
            throw NumericalFailure("run_experiment: " +
                                   std::to_string(static_cast<int>(fail_frac * 100)) +
                                   "% of trials failed at grid point " + std::to_string(g) +
                                   " (first error: " + first + ")");
        }
        if (ok.empty()) continue;

        // dictionary-averaged bounds over successful trials
        double cd = 0, cj = 0, ci = 0;
        for (const auto* tr : ok) {
            cd += tr->bounds.c_deflated;
            cj += tr->bounds.c_joint;
            ci += tr->bounds.c_ideal;
        }
        cd /= ok.size(); cj /= ok.size(); ci /= ok.size();
        const BoundReport& any = ok.front()->bounds;

        const std::size_t n_scores = ok.front()->scores.size();
        for (std::size_t s = 0; s < n_scores; ++s) {
            AggregateRow row;
            row.dims = scenario.grid[g].dims;
            row.snr_db = scenario.grid[g].snr_db;
            row.estimator = estimator_name(ok.front()->scores[s].kind);
            row.deflated = ok.front()->scores[s].deflated;
            double mean = 0.0;
            for (const auto* tr : ok) mean += tr->scores[s].mse_value;
            mean /= ok.size();
            double var = 0.0;
            for (const auto* tr : ok) {
                const double d = tr->scores[s].mse_value - mean;
                var += d * d;
            }
            var = ok.size() > 1 ? var / (ok.size() - 1) : 0.0;
            row.mse_mean = mean;
            row.stderr_mean = std::sqrt(var / ok.size());
            row.c_deflated = cd;
            row.c_joint = cj;
            row.c_ideal = ci;
            row.c_deflated_inf = any.c_deflated_inf;
            row.c_joint_inf = any.c_joint_inf;
            row.c_ideal_inf = any.c_ideal_inf;
            row.trials_ok = static_cast<int>(ok.size());
            result.rows.push_back(row);
        }
    }
    return result;
}

// Bounds-only sweep (no estimators): per grid point, draws A and B
// directly and averages the non-asymptotic bounds plus their squared
// relative gaps to the closed forms.
struct BoundSweepRow {
    ProblemDims dims;
    double snr_db = 0.0;
    double gap2_deflated = 0.0, gap2_joint = 0.0, gap2_ideal = 0.0;
    double c_deflated = 0.0, c_joint = 0.0, c_ideal = 0.0;
    double c_deflated_inf = 0.0, c_joint_inf = 0.0, c_ideal_inf = 0.0;
    int draws = 0;
};

inline BoundSweepRow bound_sweep_point(const GridPoint& gp, double sa2, double sb2,
                                       int draws, std::uint64_t seed) {
    const auto cal = detail::calibrate_all(gp, sa2, sb2);
    BoundSweepRow row;
    row.dims = gp.dims;
    row.snr_db = gp.snr_db;
    row.draws = draws;
    const double s = 1.0 / std::sqrt(static_cast<double>(gp.dims.n));
    for (int d = 0; d < draws; ++d) {
        auto rng = make_stream(seed, 0xB0B0ULL, static_cast<std::uint64_t>(gp.dims.n) * 1000 +
                               static_cast<std::uint64_t>(gp.dims.l()), static_cast<std::uint64_t>(d));
        const Matrix a = gaussian_matrix(gp.dims.n, gp.dims.l_a, s, rng);
        const Matrix b = gaussian_matrix(gp.dims.n, gp.dims.l_b, s, rng);
        const BoundReport rep = detail::bound_report(a, b, cal);
        auto gap2 = [](double na, double asym) {
            const double g = (na - asym) / asym;
            return g * g;
        };
        row.gap2_deflated += gap2(rep.c_deflated, rep.c_deflated_inf);
        row.gap2_joint += gap2(rep.c_joint, rep.c_joint_inf);
        row.gap2_ideal += gap2(rep.c_ideal, rep.c_ideal_inf);
        row.c_deflated += rep.c_deflated;
        row.c_joint += rep.c_joint;
        row.c_ideal += rep.c_ideal;
        row.c_deflated_inf = rep.c_deflated_inf;
        row.c_joint_inf = rep.c_joint_inf;
        row.c_ideal_inf = rep.c_ideal_inf;
    }
    row.gap2_deflated /= draws;
    row.gap2_joint /= draws;
    row.gap2_ideal /= draws;
    row.c_deflated /= draws;
    row.c_joint /= draws;
    row.c_ideal /= draws;
    return row;
}

// Published figure parameter sets.
inline ExperimentResult reproduce_figure(int id, std::uint64_t seed, int trials_override = 0,
                                         int workers = 0) {
    ExperimentResult result;
    result.figure_id = id;
    switch (id) {
        case 2: {
            // sweep N with L_A = L_B = N/10, SNR = 10 dB, sa2 = 1, sb2 = 10
            const int draws = trials_override > 0 ? trials_override : 50;
            for (Eigen::Index n : {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000}) {
                GridPoint gp{ProblemDims(n, 4 * n, n / 10, n / 10), 10.0};
                const BoundSweepRow sw = bound_sweep_point(gp, 1.0, 10.0, draws, seed);
                auto push = [&](const std::string& name, double gap2) {
                    AggregateRow row;
                    row.figure_id = 2;
                    row.dims = gp.dims;
                    row.snr_db = gp.snr_db;
                    row.estimator = name;
                    row.deflated = true;
                    row.mse_mean = gap2;
                    row.c_deflated = sw.c_deflated;
                    row.c_joint = sw.c_joint;
                    row.c_ideal = sw.c_ideal;
                    row.c_deflated_inf = sw.c_deflated_inf;
                    row.c_joint_inf = sw.c_joint_inf;
                    row.c_ideal_inf = sw.c_ideal_inf;
                    row.trials_ok = sw.draws;
                    result.rows.push_back(row);
                };
                push("gap_deflated", sw.gap2_deflated);
                push("gap_joint", sw.gap2_joint);
                push("gap_ideal", sw.gap2_ideal);
            }
            return result;
        }
        case 3: {
            // N = 100, SNR = 10 dB, sa2 = sb2 = 1, six L_A values, sweep L_B
            const int draws = trials_override > 0 ? trials_override : 50;
            const Eigen::Index n = 100;
            for (Eigen::Index l_a : {1, 5, 10, 15, 20, 30}) {
                for (Eigen::Index l_b : {5, 10, 20, 30, 40, 50, 60}) {
                    if (l_a + l_b >= n) continue;
                    if (!((static_cast<double>(n - l_b) / l_a) > 1.05)) continue;
                    GridPoint gp{ProblemDims(n, 4 * n, l_a, l_b), 10.0};
                    const BoundSweepRow sw = bound_sweep_point(gp, 1.0, 1.0, draws, seed);
                    AggregateRow row;
                    row.figure_id = 3;
                    row.dims = gp.dims;
                    row.snr_db = gp.snr_db;
                    row.estimator = "bounds";
                    row.deflated = true;
                    row.mse_mean = sw.c_deflated;  // the plotted quantity
                    row.c_deflated = sw.c_deflated;
                    row.c_joint = sw.c_joint;
                    row.c_ideal = sw.c_ideal;
                    row.c_deflated_inf = sw.c_deflated_inf;
                    row.c_joint_inf = sw.c_joint_inf;
                    row.c_ideal_inf = sw.c_ideal_inf;
                    row.trials_ok = sw.draws;
                    result.rows.push_back(row);
                }
            }
            return result;
        }
        case 4:
        case 5: {
            Scenario sc;
            sc.seed = seed;
            sc.trials = trials_override > 0 ? trials_override : 500;
            sc.estimators = {EstimatorKind::Omp, EstimatorKind::Cosamp, EstimatorKind::Bpdn,
                             EstimatorKind::OracleLs};
            if (id == 4) {
                sc.sigma_alpha2 = 1.0;
                sc.sigma_beta2 = 1.0;
                sc.deflation = DeflationMode::On;
                for (double snr = 0.0; snr <= 40.0; snr += 5.0)
                    sc.grid.push_back({ProblemDims(100, 400, 10, 10), snr});
            } else {
                sc.sigma_alpha2 = 1.0;
                sc.sigma_beta2 = 100.0;
                sc.deflation = DeflationMode::Both;
                for (double snr = 0.0; snr <= 40.0; snr += 5.0)
                    sc.grid.push_back({ProblemDims(100, 400, 10, 50), snr});
            }
            ExperimentResult r = run_experiment(sc, workers);
            r.figure_id = id;
            for (auto& row : r.rows) row.figure_id = id;
            return r;
        }
        default:
            throw InvalidInput("reproduce_figure: id must be one of {2, 3, 4, 5}");
    }
}

// ---- export -------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline const char* csv_header() {
    return "figure_id,n,k,l_a,l_b,snr_db,estimator,deflated,mse,mse_db,c_deflated,"
           "c_deflated_inf,c_joint,c_joint_inf,c_ideal,c_ideal_inf,trials_ok,stderr";
}

inline std::string to_csv(const ExperimentResult& result) {
    std::ostringstream os;
    os << csv_header() << "\n";
    for (const auto& r : result.rows) {
        os << r.figure_id << ',' << r.dims.n << ',' << r.dims.k << ',' << r.dims.l_a << ','
           << r.dims.l_b << ',' << detail::fmt_double(r.snr_db) << ',' << r.estimator << ','
           << (r.deflated ? 1 : 0) << ',' << detail::fmt_double(r.mse_mean) << ','
           << detail::fmt_double(r.mse_db()) << ',' << detail::fmt_double(r.c_deflated) << ','
           << detail::fmt_double(r.c_deflated_inf) << ',' << detail::fmt_double(r.c_joint)
           << ',' << detail::fmt_double(r.c_joint_inf) << ',' << detail::fmt_double(r.c_ideal)
           << ',' << detail::fmt_double(r.c_ideal_inf) << ',' << r.trials_ok << ','
           << detail::fmt_double(r.stderr_mean) << "\n";
    }
    return os.str();
}

inline nlohmann::json to_json(const ExperimentResult& result) {
    nlohmann::json j;
    j["figure_id"] = result.figure_id;
    j["scenario"] = {
        {"trials", result.scenario.trials},
        {"seed", result.scenario.seed},
        {"sigma_alpha2", result.scenario.sigma_alpha2},
        {"sigma_beta2", result.scenario.sigma_beta2},
    };
    j["rows"] = nlohmann::json::array();
    for (const auto& r : result.rows) {
        j["rows"].push_back({{"figure_id", r.figure_id},
                             {"n", r.dims.n},
                             {"k", r.dims.k},
                             {"l_a", r.dims.l_a},
                             {"l_b", r.dims.l_b},
                             {"snr_db", r.snr_db},
                             {"estimator", r.estimator},
                             {"deflated", r.deflated},
                             {"mse", r.mse_mean},
                             {"mse_db", r.mse_db()},
                             {"c_deflated", r.c_deflated},
                             {"c_deflated_inf", r.c_deflated_inf},
                             {"c_joint", r.c_joint},
                             {"c_joint_inf", r.c_joint_inf},
                             {"c_ideal", r.c_ideal},
                             {"c_ideal_inf", r.c_ideal_inf},
                             {"trials_ok", r.trials_ok},
                             {"stderr", r.stderr_mean}});
    }
    return j;
}

enum class ExportFormat { Csv, Json };

inline void export_result(const ExperimentResult& result, ExportFormat format,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("export: cannot open '" + path + "' for writing");
    if (format == ExportFormat::Csv) out << to_csv(result);
    else out << to_json(result).dump(2) << "\n";
    if (!out) throw NumericalFailure("export: write failed for '" + path + "'");
}

} // namespace deflatecrb
