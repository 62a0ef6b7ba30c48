// emos: calibrate, verify and grid-search EMOS wind-speed models; simulate
// synthetic ensembles.

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "emos/dates.hpp"
#include "emos/errors.hpp"
#include "emos/log.hpp"
#include "emos/pipeline.hpp"
#include "emos/synthetic.hpp"

namespace {

struct CommonArgs {
    std::string model = "tn";
    std::string strategy = "split";
    std::string verify_from, verify_to;
    std::string input, groups;
    std::vector<double> thresholds;
};

emos::Date require_date(const std::string& s, const char* flag) {
    const auto d = emos::parse_date(s);
    if (!d) throw emos::ConfigError(std::string(flag) + ": '" + s + "' is not a YYYY-MM-DD date");
    return *d;
}

void add_run_options(CLI::App* cmd, emos::RunConfig& cfg, CommonArgs& args, bool with_train_days) {
    cmd->add_option("-i,--input", args.input, "Dataset CSV (date,station,obs,m1..mM)")->required();
    cmd->add_option("--groups", args.groups, "Group map file (default: <input>.groups if present)");
    cmd->add_option("-m,--model", args.model, "tn, ln, gev, tn-ln, tn-gev, raw or climatology")
        ->capture_default_str();
    if (with_train_days)
        cmd->add_option("-n,--train-days", cfg.train_days, "Rolling training length in days")->capture_default_str();
    cmd->add_option("--strategy", args.strategy, "Mixture training: split or shared")->capture_default_str();
    cmd->add_option("--verify-from", args.verify_from, "First verification day (YYYY-MM-DD)");
    cmd->add_option("--verify-to", args.verify_to, "Last verification day (YYYY-MM-DD)");
    cmd->add_option("--thresholds", args.thresholds, "twCRPS thresholds (default: obs percentiles 90/95/99)")
        ->delimiter(',');
    cmd->add_option("--alpha", cfg.alpha, "Central interval level (default: 2/(M+1))");
    cmd->add_option("--seed", cfg.seed, "Seed for rank tie-breaking")->capture_default_str();
    cmd->add_option("-o,--output", cfg.output_dir, "Output directory")->capture_default_str();
    cmd->add_option("-j,--workers", cfg.workers, "Worker threads")->capture_default_str();
}

void finish_run_config(emos::RunConfig& cfg, const CommonArgs& args) {
    cfg.method = emos::parse_method(args.model);
    cfg.input = args.input;
    if (!args.groups.empty()) cfg.groups = args.groups;
    if (args.strategy == "split") cfg.strategy = emos::TrainingStrategy::split;
    else if (args.strategy == "shared") cfg.strategy = emos::TrainingStrategy::shared;
    else throw emos::ConfigError("--strategy must be split or shared");
    if (!args.verify_from.empty()) cfg.verify_from = require_date(args.verify_from, "--verify-from");
    if (!args.verify_to.empty()) cfg.verify_to = require_date(args.verify_to, "--verify-to");
    cfg.thresholds = args.thresholds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMOS post-processing of ensemble wind speed forecasts"};
    app.require_subcommand(1);
    std::string log_level;
    app.add_option("--log-level", log_level, "error, warn, info or debug (overrides EMOS_LOG_LEVEL)");

    const int cores = std::max(1u, std::thread::hardware_concurrency());

    emos::RunConfig cal_cfg, ver_cfg;
    cal_cfg.workers = ver_cfg.workers = cores;
    CommonArgs cal_args, ver_args;

    auto* cal = app.add_subcommand("calibrate", "Rolling-window fit, verification report and plot data");
    add_run_options(cal, cal_cfg, cal_args, true);
    cal->add_option("--theta", cal_cfg.theta, "Regime threshold for tn-ln / tn-gev (m/s)");

    auto* ver = app.add_subcommand("verify", "Verification report and plot data for any model");
    add_run_options(ver, ver_cfg, ver_args, true);
    ver->add_option("--theta", ver_cfg.theta, "Regime threshold for tn-ln / tn-gev (m/s)");

    emos::GridConfig grid_cfg;
    grid_cfg.run.workers = cores;
    CommonArgs grid_args;
    std::string lengths = "15..40", thetas = "4.0..8.0:0.1", select_from, select_to;
    auto* grid = app.add_subcommand("grid-search", "Mean CRPS over training lengths and thresholds");
    add_run_options(grid, grid_cfg.run, grid_args, false);
    grid->add_option("-n,--train-days", lengths, "Training lengths, e.g. 15..40 or 20,30")->capture_default_str();
    grid->add_option("--theta", thetas, "Thresholds, e.g. 4.0..8.0:0.1")->capture_default_str();
    grid->add_option("--select-from", select_from, "First selection day (default: first eligible day)");
    grid->add_option("--select-to", select_to, "Last selection day (default: day before --verify-from)");

    emos::SimulateConfig sim_cfg;
    std::optional<int> days, stations;
    auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
    sim->add_option("--scenario", sim_cfg.scenario, "calibrated, underdispersed, switching, tn, ln or gev")
        ->capture_default_str();
    sim->add_option("--seed", sim_cfg.seed, "Generator seed")->capture_default_str();
    sim->add_option("--days", days, "Number of days");
    sim->add_option("--stations", stations, "Number of stations");
    sim->add_option("-o,--output", sim_cfg.output, "Output CSV (group map written next to it)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (!log_level.empty()) {
            if (log_level == "error") emos::log::set_level(emos::log::Level::error);
            else if (log_level == "warn") emos::log::set_level(emos::log::Level::warn);
            else if (log_level == "info") emos::log::set_level(emos::log::Level::info);
            else if (log_level == "debug") emos::log::set_level(emos::log::Level::debug);
            else throw emos::ConfigError("--log-level must be error, warn, info or debug");
        }
        if (*cal) {
            finish_run_config(cal_cfg, cal_args);
            emos::calibrate(cal_cfg);
        } else if (*ver) {
            finish_run_config(ver_cfg, ver_args);
            emos::verify(ver_cfg);
        } else if (*grid) {
            finish_run_config(grid_cfg.run, grid_args);
            grid_cfg.lengths = emos::parse_int_range(lengths);
            grid_cfg.thetas = emos::parse_double_range(thetas);
            if (!select_from.empty()) grid_cfg.select_from = require_date(select_from, "--select-from");
            if (!select_to.empty()) grid_cfg.select_to = require_date(select_to, "--select-to");
            const auto result = emos::grid_search(grid_cfg);
            std::cout << "chosen train_days=" << result.chosen_train_days;
            if (emos::is_mixture(*emos::model_kind(grid_cfg.run.method)))
                std::cout << " theta=" << emos::format_number(result.chosen_theta);
            std::cout << '\n';
        } else if (*sim) {
            sim_cfg.days = days;
            sim_cfg.stations = stations;
            emos::simulate(sim_cfg);
        }
    } catch (const emos::InputError& e) {
        emos::log::error(e.what());
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        emos::log::error(e.what());
        return 1;
    } catch (const emos::NumericError& e) {
        emos::log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        emos::log::error(e.what());
        return 2;
    }
    return 0;
}
