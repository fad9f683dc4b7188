#include "crosspred/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "crosspred/csv.hpp"
#include "crosspred/errors.hpp"
#include "crosspred/rng.hpp"
#include "crosspred/stats.hpp"

namespace crosspred {

namespace {

constexpr std::uint64_t kDataStream = 10;

std::string family_tag(const EstimandSpec& spec) {
    switch (spec.family) {
        case Family::Mean: return "mean";
        case Family::Quantile: return "quantile:" + format_double(spec.q);
        case Family::LinearRegression:
        case Family::Glm: {
            std::string tag = spec.family == Family::LinearRegression ? "ols" : "logit";
            if (spec.family == Family::Glm && spec.glm_family == GlmFamily::Gaussian)
                tag = "glm-gaussian";
            tag += ":";
            for (std::size_t i = 0; i < spec.regressor_indices.size(); ++i) {
                if (i) tag += "+";
                tag += std::to_string(spec.regressor_indices[i]);
            }
            tag += ":" + std::to_string(spec.report_coordinate);
            return tag;
        }
    }
    return "?";
}

}  // namespace

void DgpConfig::validate() const {
    if (!(sigma2_y > 0.0)) throw InvalidConfigError("dgp sigma2_y must be positive");
    if (!std::isfinite(mu)) throw InvalidConfigError("dgp mu must be finite");
    if (kind == DgpKind::MeanQuantile) {
        if (!(r2 >= 0.0 && r2 <= 1.0)) {
            throw InvalidConfigError("dgp r2 must lie in [0,1], got " + std::to_string(r2));
        }
    } else {
        if (!(r0 * r0 >= 0.0 && r0 * r0 <= 1.0)) {
            throw InvalidConfigError("dgp r0^2 must lie in [0,1], got r0=" + std::to_string(r0));
        }
    }
}

std::pair<LabeledDataset, UnlabeledDataset> sample_mean_quantile_dgp(double mu, double sigma2_y,
                                                                     double r2, int n, int N,
                                                                     std::uint64_t seed) {
    const double sigma_y = std::sqrt(sigma2_y);
    const double beta = std::sqrt(r2) * sigma_y / std::sqrt(2.0);
    const double noise_sd = std::sqrt(sigma2_y * (1.0 - r2));
    Rng rng(seed);
    LabeledDataset labeled;
    labeled.X.resize(n, 2);
    labeled.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        labeled.X(i, 0) = x1;
        labeled.X(i, 1) = x2;
        labeled.y(i) = mu + beta * (x1 + x2) + noise_sd * rng.normal();
    }
    UnlabeledDataset unlabeled;
    unlabeled.X.resize(N, 2);
    for (int i = 0; i < N; ++i) {
        unlabeled.X(i, 0) = rng.normal();
        unlabeled.X(i, 1) = rng.normal();
    }
    return {std::move(labeled), std::move(unlabeled)};
}

std::pair<LabeledDataset, UnlabeledDataset> sample_linear_dgp(double r0, double sigma2_y, int n,
                                                              int N, std::uint64_t seed) {
    const double sigma_y = std::sqrt(sigma2_y);
    const double beta3 = r0 * sigma_y;
    const double noise_sd = std::sqrt(sigma2_y * (1.0 - r0 * r0));
    Rng rng(seed);
    LabeledDataset labeled;
    labeled.X.resize(n, 3);
    labeled.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        const double x3 = rng.normal();
        labeled.X(i, 0) = x1;
        labeled.X(i, 1) = x2;
        labeled.X(i, 2) = x3;
        labeled.y(i) = x1 + x2 + beta3 * x3 + noise_sd * rng.normal();
    }
    UnlabeledDataset unlabeled;
    unlabeled.X.resize(N, 3);
    for (int i = 0; i < N; ++i) {
        unlabeled.X(i, 0) = rng.normal();
        unlabeled.X(i, 1) = rng.normal();
        unlabeled.X(i, 2) = rng.normal();
    }
    return {std::move(labeled), std::move(unlabeled)};
}

std::pair<LabeledDataset, UnlabeledDataset> sample_dgp(const DgpConfig& dgp, int n, int N,
                                                       std::uint64_t seed) {
    dgp.validate();
    if (dgp.kind == DgpKind::MeanQuantile) {
        return sample_mean_quantile_dgp(dgp.mu, dgp.sigma2_y, dgp.r2, n, N, seed);
    }
    return sample_linear_dgp(dgp.r0, dgp.sigma2_y, n, N, seed);
}

double ScenarioConfig::true_theta() const {
    if (dgp.kind == DgpKind::MeanQuantile) {
        if (estimand.family == Family::Mean) return dgp.mu;
        if (estimand.family == Family::Quantile) {
            return dgp.mu + std::sqrt(dgp.sigma2_y) * normal_quantile(estimand.q);
        }
        throw InvalidConfigError("mean_quantile dgp supports mean or quantile estimands");
    }
    if (estimand.family == Family::LinearRegression ||
        (estimand.family == Family::Glm && estimand.glm_family == GlmFamily::Gaussian)) {
        // Population slope of Y on (X1, X2) is 1 for either coefficient;
        // the intercept is 0.
        return estimand.report_coordinate == 0 ? 0.0 : 1.0;
    }
    throw InvalidConfigError("linear dgp supports ols or gaussian glm estimands");
}

void ScenarioConfig::validate() const {
    if (name.empty()) throw InvalidConfigError("scenario needs a name");
    dgp.validate();
    if (n < 4) throw InvalidConfigError("scenario " + name + ": n must be at least 4");
    if (pool_total != 0 && pool_total <= n) {
        throw InvalidConfigError("scenario " + name + ": pool_total must exceed n");
    }
    if (effective_N() < 2) throw InvalidConfigError("scenario " + name + ": unlabeled pool too small");
    if (K < 2 || K > n) throw InvalidConfigError("scenario " + name + ": K must lie in [2, n]");
    if (B < 2) throw InvalidConfigError("scenario " + name + ": B must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidConfigError("scenario " + name + ": alpha must lie in (0,1)");
    }
    if (!(ppi_train_fraction > 0.0 && ppi_train_fraction < 1.0)) {
        throw InvalidConfigError("scenario " + name + ": ppi_train_fraction must lie in (0,1)");
    }
    if (trials < 1) throw InvalidConfigError("scenario " + name + ": trials must be at least 1");
    if (methods.empty()) throw InvalidConfigError("scenario " + name + ": no methods requested");
    trainer.validate();
    const int p = dgp.kind == DgpKind::MeanQuantile ? 2 : 3;
    estimand.validate(p);
    true_theta();  // rejects unsupported dgp/estimand pairings
}

std::uint64_t ScenarioConfig::config_hash() const {
    std::string desc = name + "|";
    desc += dgp.kind == DgpKind::MeanQuantile ? "mq:" : "lin:";
    desc += format_double(dgp.mu) + "," + format_double(dgp.sigma2_y) + "," +
            format_double(dgp.r2) + "," + format_double(dgp.r0) + "|";
    desc += family_tag(estimand) + "|";
    desc += std::to_string(n) + "," + std::to_string(N) + "," + std::to_string(pool_total) + "," +
            std::to_string(K) + "," + std::to_string(B) + "," +
            (boot_with_replacement ? "wr" : "wor") + "," + format_double(alpha) + "|";
    desc += trainer.describe() + "|" + format_double(ppi_train_fraction) + "|" +
            std::to_string(trials) + "|";
    for (Method m : methods) desc += method_name(m) + ",";
    return hash_string(desc);
}

Method parse_method(const std::string& name) {
    if (name == "cross") return Method::CrossPrediction;
    if (name == "classical") return Method::Classical;
    if (name == "ppi") return Method::Ppi;
    if (name == "nodebias") return Method::NoDebias;
    if (name == "nofolds") return Method::NoFolds;
    throw InvalidConfigError("unknown method '" + name + "'");
}

namespace {

struct TrialOutcome {
    std::vector<TrialRecord> records;
    std::vector<Method> failed_methods;
    std::vector<std::string> messages;
};

TrialOutcome run_trial(const ScenarioConfig& config, int t) {
    TrialOutcome outcome;
    const std::uint64_t trial_seed = config.base_seed + static_cast<std::uint64_t>(t);
    const auto [labeled, unlabeled] =
        sample_dgp(config.dgp, config.n, config.effective_N(), derive_seed(trial_seed, kDataStream));
    std::uint64_t data_hash = hash_matrix(labeled.X);
    data_hash = hash_vector(labeled.y, data_hash);
    data_hash = hash_matrix(unlabeled.X, data_hash);

    MethodRunConfig run_cfg;
    run_cfg.estimand = config.estimand;
    run_cfg.trainer = config.trainer;
    run_cfg.K = config.K;
    run_cfg.boot.B = config.B;
    run_cfg.boot.with_replacement = config.boot_with_replacement;
    run_cfg.alpha = config.alpha;
    run_cfg.ppi_train_fraction = config.ppi_train_fraction;
    assign_seeds(run_cfg, trial_seed);

    const double theta_star = config.true_theta();
    TrialCache cache;
    for (Method method : config.methods) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const IntervalReport report = run_method(method, run_cfg, labeled, unlabeled, &cache);
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            TrialRecord rec;
            rec.scenario = config.name;
            rec.trial = t;
            rec.method = method;
            rec.estimate = report.estimate(0);
            rec.lower = report.lower(0);
            rec.upper = report.upper(0);
            rec.covered = report.lower(0) <= theta_star && theta_star <= report.upper(0);
            rec.width = report.upper(0) - report.lower(0);
            rec.seconds = elapsed.count();
            rec.dataset_hash = data_hash;
            outcome.records.push_back(std::move(rec));
        } catch (const std::exception& ex) {
            outcome.failed_methods.push_back(method);
            outcome.messages.push_back("scenario " + config.name + " trial " + std::to_string(t) +
                                       " method " + method_name(method) + " failed: " + ex.what());
        }
    }
    return outcome;
}

}  // namespace

std::vector<MethodSummary> summarize_records(const std::vector<TrialRecord>& records,
                                             const std::vector<Method>& method_order) {
    std::vector<MethodSummary> out;
    for (Method m : method_order) {
        MethodSummary s;
        s.method = m;
        std::vector<double> lowers, uppers;
        double covered = 0.0, width = 0.0;
        for (const TrialRecord& rec : records) {
            if (rec.method != m) continue;
            ++s.completed;
            covered += rec.covered ? 1.0 : 0.0;
            width += rec.width;
            lowers.push_back(rec.lower);
            uppers.push_back(rec.upper);
        }
        if (s.completed > 0) {
            s.coverage = covered / s.completed;
            s.mean_width = width / s.completed;
        }
        if (s.completed >= 2) {
            const auto map = [](std::vector<double>& v) {
                return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
            };
            s.sd_lower = sample_sd(map(lowers));
            s.sd_upper = sample_sd(map(uppers));
            s.sd_defined = true;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::pair<std::vector<TrialRecord>, ScenarioSummary> run_scenario(const ScenarioConfig& config,
                                                                  int jobs) {
    config.validate();
    if (jobs < 1) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    jobs = std::min(jobs, config.trials);

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(config.trials));
    std::atomic<int> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= config.trials) return;
            try {
                outcomes[static_cast<std::size_t>(t)] = run_trial(config, t);
            } catch (const std::exception& ex) {
                TrialOutcome failed;
                failed.failed_methods = config.methods;
                failed.messages.push_back("scenario " + config.name + " trial " +
                                          std::to_string(t) + " failed: " + ex.what());
                outcomes[static_cast<std::size_t>(t)] = std::move(failed);
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<TrialRecord> records;
    std::vector<std::pair<Method, int>> failures;
    for (Method m : config.methods) failures.emplace_back(m, 0);
    for (auto& outcome : outcomes) {
        for (auto& rec : outcome.records) records.push_back(std::move(rec));
        for (Method m : outcome.failed_methods) {
            for (auto& [method, count] : failures) {
                if (method == m) ++count;
            }
        }
        for (const std::string& msg : outcome.messages) {
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "warning: " << msg << "\n";
        }
    }

    ScenarioSummary summary;
    summary.scenario = config.name;
    summary.config_hash = config.config_hash();
    summary.methods = summarize_records(records, config.methods);
    for (auto& ms : summary.methods) {
        for (const auto& [method, count] : failures) {
            if (method == ms.method) ms.failures = count;
        }
    }
    return {std::move(records), std::move(summary)};
}

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path);
    if (!out) throw InvalidConfigError("cannot write " + path);
    out << "scenario,trial,method,estimate,lower,upper,covered,width,seconds\n";
    for (const TrialRecord& rec : records) {
        // Wall time is the one nondeterministic field; it is serialized as a
        // constant so identical configs produce identical bytes.
        out << rec.scenario << ',' << rec.trial << ',' << method_name(rec.method) << ','
            << format_double(rec.estimate) << ',' << format_double(rec.lower) << ','
            << format_double(rec.upper) << ',' << (rec.covered ? 1 : 0) << ','
            << format_double(rec.width) << ',' << "0.000" << '\n';
    }
    if (!out) throw InvalidConfigError("write to " + path + " failed");
}

void write_summary_csv(const std::string& path, const std::vector<ScenarioSummary>& summaries) {
    std::ofstream out(path);
    if (!out) throw InvalidConfigError("cannot write " + path);
    out << "scenario,method,coverage,mean_width,sd_lower,sd_upper,failures\n";
    for (const ScenarioSummary& scenario : summaries) {
        for (const MethodSummary& m : scenario.methods) {
            out << scenario.scenario << ',' << method_name(m.method) << ','
                << format_double(m.coverage) << ',' << format_double(m.mean_width) << ',';
            if (m.sd_defined) {
                out << format_double(m.sd_lower) << ',' << format_double(m.sd_upper);
            } else {
                out << ',';
            }
            out << ',' << m.failures << '\n';
        }
    }
    if (!out) throw InvalidConfigError("write to " + path + " failed");
}

std::vector<TrialRecord> parse_trials_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::vector<std::string> expected = {"scenario", "trial",   "method",
                                               "estimate", "lower",   "upper",
                                               "covered",  "width",   "seconds"};
    if (table.header != expected) {
        throw InvalidConfigError(path + ": header does not match the trials schema");
    }
    if (table.rows.empty()) throw InvalidConfigError(path + ": no trial rows");
    std::vector<TrialRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + " row " + std::to_string(r + 1);
        TrialRecord rec;
        rec.scenario = row[0];
        rec.trial = static_cast<int>(parse_long(row[1], where + " trial"));
        try {
            rec.method = parse_method(row[2]);
        } catch (const InvalidConfigError&) {
            throw InvalidConfigError(where + ": unknown method '" + row[2] + "'");
        }
        rec.estimate = parse_double(row[3], where + " estimate");
        rec.lower = parse_double(row[4], where + " lower");
        rec.upper = parse_double(row[5], where + " upper");
        const long covered = parse_long(row[6], where + " covered");
        if (covered != 0 && covered != 1) {
            throw InvalidConfigError(where + ": covered must be 0 or 1");
        }
        rec.covered = covered == 1;
        rec.width = parse_double(row[7], where + " width");
        rec.seconds = parse_double(row[8], where + " seconds");
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace crosspred
