#include <farmselect/cli/app.hpp>
#include <farmselect/cli/csv.hpp>
#include <farmselect/cli/report.hpp>
#include <farmselect/cli/rolling.hpp>
#include <farmselect/error.hpp>
#include <farmselect/parallel.hpp>

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace farmselect::cli {
namespace {

struct CommonFit
{
    std::string num_factors = "auto";
    std::string lambda = "cv";
    std::string lambda_rule = "min";
    std::string cv_loss = "deviance";
    Index folds = 10;
    std::string fold_scheme = "random";
    std::uint64_t seed = 0;
};

void add_fit_flags(CLI::App* cmd, CommonFit& fit)
{
    cmd->add_option("--num-factors", fit.num_factors, "auto or a non-negative integer")->capture_default_str();
    cmd->add_option("--lambda", fit.lambda, "cv or a positive penalty level")->capture_default_str();
    cmd->add_option("--lambda-rule", fit.lambda_rule, "CV readout: min or one-se")
        ->check(CLI::IsMember({"min", "one-se"}))
        ->capture_default_str();
    cmd->add_option("--cv-loss", fit.cv_loss, "held-out loss: deviance or misclassification (logistic only)")
        ->check(CLI::IsMember({"deviance", "misclassification"}))
        ->capture_default_str();
    cmd->add_option("--folds", fit.folds, "cross-validation folds")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--fold-scheme", fit.fold_scheme, "random permutation or contiguous blocks of rows")
        ->check(CLI::IsMember({"random", "contiguous"}))
        ->capture_default_str();
    cmd->add_option("--seed", fit.seed, "fold-assignment seed; base seed of the replications in simulate")->capture_default_str();
}

FarmSelectOptions fit_options(const CommonFit& fit)
{
    FarmSelectOptions o;
    if (fit.num_factors != "auto") {
        Index k = -1;
        std::istringstream in(fit.num_factors);
        if (!(in >> k) || !in.eof() || k < 0) {
            fail(ErrorKind::DataError, "--num-factors must be 'auto' or a non-negative integer, got '" +
                                           fit.num_factors + "'");
        }
        o.num_factors = k;
    }
    if (fit.lambda != "cv") {
        double v = 0.0;
        std::istringstream in(fit.lambda);
        if (!(in >> v) || !in.eof() || !(v > 0.0) || !std::isfinite(v)) {
            fail(ErrorKind::DataError, "--lambda must be 'cv' or a positive number, got '" + fit.lambda + "'");
        }
        o.lambda = v;
    }
    o.rule = fit.lambda_rule == "one-se" ? LambdaRule::OneStandardError : LambdaRule::MinCv;
    o.cv_loss = fit.cv_loss == "misclassification" ? CvLoss::Misclassification : CvLoss::NegLogLik;
    o.n_folds = fit.folds;
    o.fold_scheme = fit.fold_scheme == "contiguous" ? FoldScheme::ContiguousBlocks : FoldScheme::RandomPermutation;
    o.seed = fit.seed;
    return o;
}

/// Every option of the subcommand that was given a value, for provenance.
Json flags_of(const CLI::App* cmd)
{
    Json flags = Json::object();
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
        const auto results = opt->results();
        if (!results.empty()) {
            flags[opt->get_name()] = results.size() == 1 ? Json(results.front()) : Json(results);
        } else if (!opt->get_default_str().empty()) {
            flags[opt->get_name()] = opt->get_default_str();
        }
    }
    return flags;
}

void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write)
{
    if (path.empty()) {
        write(out);
        return;
    }
    std::ofstream file(path);
    if (!file) fail(ErrorKind::DataError, "cannot write '" + path + "'");
    write(file);
    if (!file) fail(ErrorKind::DataError, "failed writing '" + path + "'");
}

void emit_json(const std::string& path, std::ostream& out, const Json& doc)
{
    emit(path, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message)
{
    err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

int exit_code_for(ErrorKind kind)
{
    return kind == ErrorKind::NoConvergence || kind == ErrorKind::NonFiniteObjective ? kExitConvergence
                                                                                      : kExitDataError;
}

std::vector<double> parse_rho_sweep(const std::string& spec)
{
    double start = 0.0, stop = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || stop < start) {
        fail(ErrorKind::DataError, "--rho-sweep expects START:STOP:STEP with STEP > 0, got '" + spec + "'");
    }
    std::vector<double> grid;
    const auto count = static_cast<Index>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (Index k = 0; k < count; ++k) grid.push_back(start + static_cast<double>(k) * step);
    return grid;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Factor-adjusted regularized model selection", "farmselect"};
    app.require_subcommand(1);

    // select
    CommonFit select_fit;
    std::string select_data, select_response, select_family = "linear", select_out;
    bool select_standardize = false;
    CLI::App* select = app.add_subcommand("select", "Fit FarmSelect on a CSV file and report the selected model");
    select->add_option("--data", select_data, "CSV file with a header row")->required();
    select->add_option("--response", select_response, "response column name")->required();
    select->add_option("--family", select_family, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    select->add_flag("--standardize", select_standardize, "scale idiosyncratic columns to unit variance");
    select->add_option("--out", select_out, "JSON report path (stdout when absent)");
    add_fit_flags(select, select_fit);

    // simulate
    CommonFit sim_fit;
    DesignSpec design;
    std::string sim_design = "equicorr", sim_method = "farmselect", sim_out, rho_sweep;
    Index reps = 1, threads = 0;
    bool record_gamma = false;
    CLI::App* simulate = app.add_subcommand("simulate", "Run seeded replications of a simulation design");
    simulate->add_option("--design", sim_design, "equicorr, calibrated-linear, logistic-factor, logistic-equal, logistic-indep")
        ->check(CLI::IsMember({"equicorr", "calibrated-linear", "logistic-factor", "logistic-equal", "logistic-indep"}))
        ->capture_default_str();
    simulate->add_option("--n", design.n, "sample size")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--p", design.p, "number of covariates")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--rho", design.rho, "equicorrelation")->capture_default_str();
    simulate->add_option("--s", design.s, "number of nonzero coefficients (linear designs)")->capture_default_str();
    simulate->add_option("--burn-in", design.burn_in, "discarded VAR steps (calibrated design)")->capture_default_str();
    simulate->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--method", sim_method, "farmselect or lasso")
        ->check(CLI::IsMember({"farmselect", "lasso"}))
        ->capture_default_str();
    simulate->add_option("--threads", threads, "worker threads (0: FARMSELECT_THREADS or all cores)")->capture_default_str();
    simulate->add_flag("--gamma-inf", record_gamma, "record the irrepresentable statistic of every replication");
    simulate->add_option("--rho-sweep", rho_sweep, "START:STOP:STEP; one CSV row per rho");
    simulate->add_option("--out", sim_out, "report path; .csv writes one row per replication (or per rho)");
    add_fit_flags(simulate, sim_fit);

    // screen
    std::string screen_data, screen_response, screen_family = "linear", screen_out, screen_factors = "auto";
    Index top = 10;
    CLI::App* screen = app.add_subcommand("screen", "Rank covariates by factor-adjusted marginal fits");
    screen->add_option("--data", screen_data, "CSV file with a header row")->required();
    screen->add_option("--response", screen_response, "response column name")->required();
    screen->add_option("--family", screen_family, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    screen->add_option("--num-factors", screen_factors, "auto or a non-negative integer")->capture_default_str();
    screen->add_option("--top", top, "number of ranked covariates")->check(CLI::PositiveNumber)->capture_default_str();
    screen->add_option("--out", screen_out, "CSV path (stdout when absent)");

    // predict-rolling
    CommonFit roll_fit;
    std::string roll_data, roll_response, roll_method = "farmselect", roll_out;
    Index window = 120, roll_threads = 0;
    CLI::App* rolling = app.add_subcommand("predict-rolling", "One-step-ahead rolling-window forecasts and out-of-sample R^2");
    rolling->add_option("--data", roll_data, "CSV file, rows in time order")->required();
    rolling->add_option("--response", roll_response, "response column name")->required();
    rolling->add_option("--window", window, "training window length")->check(CLI::PositiveNumber)->capture_default_str();
    rolling->add_option("--method", roll_method, "farmselect or lasso")
        ->check(CLI::IsMember({"farmselect", "lasso"}))
        ->capture_default_str();
    rolling->add_option("--threads", roll_threads, "worker threads (0: FARMSELECT_THREADS or all cores)")->capture_default_str();
    rolling->add_option("--out", roll_out, "JSON report path (stdout when absent)");
    add_fit_flags(rolling, roll_fit);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(err, "UsageError", e.what());
        return kExitDataError;
    }

    try {
        if (*select) {
            const DatasetFile data = load_dataset(select_data, select_response);
            const GlmFamily family = parse_family(select_family);
            FarmSelectOptions options = fit_options(select_fit);
            options.standardize = select_standardize;
            const FarmSelectResult result = farm_select(data.X, data.y, family, options);
            Json report = select_report(data, family, result);
            report["flags"] = flags_of(select);
            report["seed"] = select_fit.seed;
            emit_json(select_out, out, report);
            if (!result.fit.converged) {
                print_error(err, "NoConvergence", "the selected fit did not reach the solver tolerance");
                return kExitConvergence;
            }
            return kExitOk;
        }

        if (*simulate) {
            design.kind = parse_design(sim_design);
            MethodSpec method;
            method.kind = parse_method(sim_method);
            method.options = fit_options(sim_fit);
            if (!rho_sweep.empty()) {
                const std::vector<double> grid = parse_rho_sweep(rho_sweep);
                Json reports = Json::array();
                std::ostringstream csv;
                csv << "rho,avg_model_size,mean_first_false_discovery,selection_consistency_rate,"
                       "sure_screening_rate,failures\n";
                for (const double rho : grid) {
                    design.rho = rho;
                    const SimulationReport r = run_replications(design, method, reps, sim_fit.seed, threads, record_gamma);
                    csv << format_double(rho) << ',' << format_double(r.avg_model_size) << ','
                        << format_double(r.mean_first_false_discovery) << ','
                        << format_double(r.selection_consistency_rate) << ',' << format_double(r.sure_screening_rate)
                        << ',' << r.failures << '\n';
                    reports.push_back(to_json(r));
                }
                if (ends_with(sim_out, ".csv")) {
                    emit(sim_out, out, [&](std::ostream& s) { s << csv.str(); });
                } else {
                    emit_json(sim_out, out,
                              Json{{"schema_version", kSchemaVersion},
                                   {"kind", "rho_sweep"},
                                   {"flags", flags_of(simulate)},
                                   {"seed", sim_fit.seed},
                                   {"reports", reports}});
                }
                return kExitOk;
            }
            const SimulationReport r = run_replications(design, method, reps, sim_fit.seed, threads, record_gamma);
            if (ends_with(sim_out, ".csv")) {
                emit(sim_out, out, [&](std::ostream& s) { write_replications_csv(s, r); });
            } else {
                Json doc = to_json(r);
                doc["flags"] = flags_of(simulate);
                doc["seed"] = sim_fit.seed;
                emit_json(sim_out, out, doc);
            }
            return kExitOk;
        }

        if (*screen) {
            const DatasetFile data = load_dataset(screen_data, screen_response);
            ScreenOptions options;
            CommonFit parsed;
            parsed.num_factors = screen_factors;
            options.num_factors = fit_options(parsed).num_factors;
            const ScreenResult result = farm_screen(data.X, data.y, parse_family(screen_family), top, options);
            emit(screen_out, out, [&](std::ostream& s) { write_screen_csv(s, data, result); });
            if (result.failed_fits > 0) {
                print_error(err, "NoConvergence",
                            std::to_string(result.failed_fits) + " marginal fits did not converge and scored 0");
                return kExitConvergence;
            }
            return kExitOk;
        }

        if (*rolling) {
            const DatasetFile data = load_dataset(roll_data, roll_response);
            RollingOptions options;
            options.window = window;
            options.method = parse_method(roll_method);
            options.options = fit_options(roll_fit);
            options.threads = roll_threads;
            Json report = to_json(rolling_forecast(data.X, data.y, options));
            report["flags"] = flags_of(rolling);
            report["seed"] = roll_fit.seed;
            emit_json(roll_out, out, report);
            return kExitOk;
        }
    } catch (const Error& e) {
        print_error(err, std::string(to_string(e.kind())), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        print_error(err, "DataError", e.what());
        return kExitDataError;
    }
    return kExitDataError;
}

} // namespace farmselect::cli
