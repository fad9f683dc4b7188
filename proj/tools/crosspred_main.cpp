// crosspred: estimate on user CSVs, simulate scenario grids, report summaries.
// Thin shell over the library; every number printed comes from a library call.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crosspred/config.hpp"
#include "crosspred/csv.hpp"
#include "crosspred/errors.hpp"
#include "crosspred/inference.hpp"
#include "crosspred/simulate.hpp"

namespace {

using namespace crosspred;

std::string json_number(double v) {
    // Infinite order-statistic bounds have no JSON literal; emit null.
    if (!std::isfinite(v)) return "null";
    return format_double(v);
}

struct EstimateArgs {
    std::string labeled_path;
    std::string unlabeled_path;
    std::string estimand_text = "mean";
    std::string trainer_text = "ridge";
    std::string method_text = "cross";
    std::string out_path;
    double alpha = 0.1;
    int folds = 10;
    int boot = 30;
    std::uint64_t seed = 0;
};

Method parse_method_flag(const std::string& text, double* ppi_fraction) {
    if (text.rfind("ppi:", 0) == 0) {
        *ppi_fraction = parse_double(text.substr(4), "--method ppi train fraction");
        return Method::Ppi;
    }
    if (text == "ppi")
        throw InvalidConfigError("--method ppi needs a train fraction, e.g. ppi:0.5");
    return parse_method(text);
}

int cmd_estimate(const EstimateArgs& args) {
    double ppi_fraction = 0.5;
    const Method method = parse_method_flag(args.method_text, &ppi_fraction);

    const LabeledDataset labeled = load_labeled_csv(args.labeled_path);
    const EstimandSpec estimand = parse_estimand_spec(args.estimand_text);
    estimand.validate(static_cast<int>(labeled.p()));

    MethodRunConfig cfg;
    cfg.estimand = estimand;
    cfg.trainer = parse_trainer_spec(args.trainer_text);
    cfg.K = args.folds;
    cfg.boot.B = args.boot;
    cfg.alpha = args.alpha;
    cfg.ppi_train_fraction = ppi_fraction;
    assign_seeds(cfg, args.seed);

    IntervalReport report;
    Eigen::Index N = 0;
    if (args.unlabeled_path.empty()) {
        if (method != Method::Classical)
            throw InvalidConfigError("--unlabeled is required for --method " +
                                     method_name(method));
        if (args.alpha <= 0.0 || args.alpha >= 1.0)
            throw InvalidConfigError("--alpha must lie in (0, 1)");
        validate_labeled(labeled);
        report = confint_classical(estimand, labeled, args.alpha);
    } else {
        const UnlabeledDataset unlabeled = load_unlabeled_csv(args.unlabeled_path);
        N = unlabeled.X.rows();
        report = run_method(method, cfg, labeled, unlabeled);
    }

    std::string json = "{\n";
    json += "  \"method\": \"" + method_name(method) + "\",\n";
    json += "  \"estimate\": " + json_number(report.estimate(0)) + ",\n";
    json += "  \"lower\": " + json_number(report.lower(0)) + ",\n";
    json += "  \"upper\": " + json_number(report.upper(0)) + ",\n";
    json += "  \"alpha\": " + format_double(args.alpha) + ",\n";
    json += "  \"n\": " + std::to_string(labeled.n()) + ",\n";
    json += "  \"N\": " + std::to_string(N) + ",\n";
    json += "  \"K\": " + std::to_string(args.folds) + ",\n";
    json += "  \"B\": " + std::to_string(args.boot) + ",\n";
    json += "  \"seed\": " + std::to_string(args.seed) + ",\n";
    json += "  \"variance\": {\n";
    json += "    \"se\": " + json_number(report.se(0));
    for (const auto& [key, value] : report.variance_details)
        json += ",\n    \"" + key + "\": " + json_number(value);
    json += "\n  }\n}\n";

    if (args.out_path.empty()) {
        std::cout << json;
    } else {
        std::ofstream out(args.out_path);
        if (!out) throw InvalidConfigError("cannot open output file " + args.out_path);
        out << json;
    }
    return 0;
}

struct SimulateArgs {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
};

int jobs_or_env(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("CROSSFIT_JOBS")) {
        const long parsed = parse_long(env, "CROSSFIT_JOBS");
        if (parsed < 1) throw InvalidConfigError("CROSSFIT_JOBS must be at least 1");
        return static_cast<int>(parsed);
    }
    return 0;  // run_scenario falls back to the hardware thread count
}

int cmd_simulate(const SimulateArgs& args) {
    const ConfigFile config = load_scenario_config(args.config_path);
    const int jobs = jobs_or_env(args.jobs);

    std::error_code ec;
    std::filesystem::create_directories(args.out_dir, ec);
    if (ec) throw InvalidConfigError("cannot create output directory " + args.out_dir);

    std::vector<TrialRecord> all_records;
    std::vector<ScenarioSummary> all_summaries;
    for (const ScenarioConfig& scenario : config.scenarios) {
        const auto start = std::chrono::steady_clock::now();
        auto [records, summary] = run_scenario(scenario, jobs);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::string line = scenario.name + ": trials=" + std::to_string(scenario.trials);
        for (const MethodSummary& m : summary.methods) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), " %s cov=%.3f width=%.4g",
                          method_name(m.method).c_str(), m.coverage, m.mean_width);
            line += buf;
            if (m.failures > 0) line += " fail=" + std::to_string(m.failures);
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), " (%.1fs)", elapsed);
        std::cout << line << buf << "\n" << std::flush;

        all_records.insert(all_records.end(), records.begin(), records.end());
        all_summaries.push_back(std::move(summary));
    }

    const std::filesystem::path out(args.out_dir);
    write_trials_csv((out / "trials.csv").string(), all_records);
    write_summary_csv((out / "summary.csv").string(), all_summaries);
    return 0;
}

int cmd_report(const std::string& in_path) {
    const std::vector<TrialRecord> records = parse_trials_csv(in_path);

    std::vector<std::string> scenario_order;
    for (const TrialRecord& rec : records) {
        bool seen = false;
        for (const std::string& name : scenario_order) seen = seen || name == rec.scenario;
        if (!seen) scenario_order.push_back(rec.scenario);
    }

    std::printf("%-28s %-10s %9s %11s %10s %10s\n", "scenario", "method", "coverage",
                "mean_width", "sd_lower", "sd_upper");
    for (const std::string& name : scenario_order) {
        std::vector<TrialRecord> subset;
        std::vector<Method> method_order;
        for (const TrialRecord& rec : records) {
            if (rec.scenario != name) continue;
            subset.push_back(rec);
            bool seen = false;
            for (Method m : method_order) seen = seen || m == rec.method;
            if (!seen) method_order.push_back(rec.method);
        }
        for (const MethodSummary& m : summarize_records(subset, method_order)) {
            if (m.sd_defined) {
                std::printf("%-28s %-10s %9.3f %11.5g %10.4g %10.4g\n", name.c_str(),
                            method_name(m.method).c_str(), m.coverage, m.mean_width, m.sd_lower,
                            m.sd_upper);
            } else {
                std::printf("%-28s %-10s %9.3f %11.5g %10s %10s\n", name.c_str(),
                            method_name(m.method).c_str(), m.coverage, m.mean_width, "-", "-");
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-prediction inference: estimation, simulation, reporting"};
    app.require_subcommand(1);

    EstimateArgs est;
    CLI::App* cmd_est = app.add_subcommand("estimate", "confidence interval from CSV data");
    cmd_est->add_option("--labeled", est.labeled_path, "labeled CSV (x1..xp,y)")->required();
    cmd_est->add_option("--unlabeled", est.unlabeled_path,
                        "unlabeled CSV (x1..xp); optional for --method classical");
    cmd_est->add_option("--estimand", est.estimand_text,
                        "mean | quantile:<q> | ols:<cols>:<coord> | logit:<cols>:<coord>");
    cmd_est->add_option("--alpha", est.alpha, "miscoverage level (default 0.1)");
    cmd_est->add_option("--folds", est.folds, "number of cross-fitting folds (default 10)");
    cmd_est->add_option("--boot", est.boot, "bootstrap replicates for variance (default 30)");
    cmd_est->add_option("--trainer", est.trainer_text,
                        "ridge[:lambda] | stumps[:rounds:lr:min_leaf] | knn[:k] | "
                        "biased:<offset>:<inner>");
    cmd_est->add_option("--seed", est.seed, "base RNG seed (default 0)");
    cmd_est->add_option("--method", est.method_text,
                        "cross | classical | ppi:<frac> | nodebias | nofolds");
    cmd_est->add_option("--out", est.out_path, "write JSON here instead of stdout");

    SimulateArgs sim;
    CLI::App* cmd_sim = app.add_subcommand("simulate", "run a scenario grid from a config file");
    cmd_sim->add_option("--config", sim.config_path, "scenario config file")->required();
    cmd_sim->add_option("--out", sim.out_dir, "output directory for trials.csv + summary.csv")
        ->required();
    cmd_sim->add_option("--jobs", sim.jobs,
                        "parallel workers (default: CROSSFIT_JOBS or all logical processors)");

    std::string report_in;
    CLI::App* cmd_rep = app.add_subcommand("report", "summarize a trials.csv");
    cmd_rep->add_option("--in", report_in, "trials.csv produced by simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_est->parsed()) return cmd_estimate(est);
        if (cmd_sim->parsed()) return cmd_simulate(sim);
        return cmd_report(report_in);
    } catch (const InvalidConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        // report treats a malformed trials.csv as a data failure, not a usage error
        return cmd_rep->parsed() ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
