#include <farmselect/cli/report.hpp>
#include <farmselect/error.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace farmselect::cli {
namespace {

Json vector_json(const Vector& v)
{
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
    return out;
}

Json vector_json(const std::vector<double>& v)
{
    Json out = Json::array();
    for (const double x : v) out.push_back(number(x));
    return out;
}

Json matrix3_json(const Eigen::Matrix3d& m)
{
    Json rows = Json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

Eigen::Matrix3d matrix3_from_json(const Json& j)
{
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

template <typename T>
Json optional_json(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const Json& j)
{
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

std::string_view rule_name(LambdaRule rule)
{
    return rule == LambdaRule::OneStandardError ? "one-se" : "min";
}

std::string_view loss_name(CvLoss loss)
{
    return loss == CvLoss::Misclassification ? "misclassification" : "deviance";
}

std::string_view scheme_name(FoldScheme scheme)
{
    return scheme == FoldScheme::ContiguousBlocks ? "contiguous" : "random";
}

} // namespace

Json number(double value)
{
    return std::isfinite(value) ? Json(value) : Json(nullptr);
}

double read_number(const Json& value)
{
    return value.is_null() ? std::numeric_limits<double>::quiet_NaN() : value.get<double>();
}

Json to_json(const FarmSelectOptions& o)
{
    return Json{
        {"num_factors", optional_json(o.num_factors)},
        {"k_max", optional_json(o.k_max)},
        {"lambda", optional_json(o.lambda)},
        {"lambdas", vector_json(o.lambdas)},
        {"n_lambdas", o.n_lambdas},
        {"lambda_ratio", o.lambda_ratio},
        {"n_folds", o.n_folds},
        {"lambda_rule", std::string(rule_name(o.rule))},
        {"cv_loss", std::string(loss_name(o.cv_loss))},
        {"seed", o.seed},
        {"fold_scheme", std::string(scheme_name(o.fold_scheme))},
        {"center", o.center},
        {"standardize", o.standardize},
        {"solver",
         {{"tol", o.solver.tol},
          {"max_sweeps", o.solver.max_sweeps},
          {"max_irls", o.solver.max_irls},
          {"weight_floor", o.solver.weight_floor},
          {"working_clip", o.solver.working_clip},
          {"polish", o.solver.polish}}},
    };
}

FarmSelectOptions farm_select_options_from_json(const Json& j)
{
    FarmSelectOptions o;
    o.num_factors = optional_from_json<Index>(j.at("num_factors"));
    o.k_max = optional_from_json<Index>(j.at("k_max"));
    o.lambda = optional_from_json<double>(j.at("lambda"));
    for (const auto& v : j.at("lambdas")) o.lambdas.push_back(read_number(v));
    o.n_lambdas = j.at("n_lambdas").get<Index>();
    o.lambda_ratio = j.at("lambda_ratio").get<double>();
    o.n_folds = j.at("n_folds").get<Index>();
    o.rule = j.at("lambda_rule").get<std::string>() == "one-se" ? LambdaRule::OneStandardError : LambdaRule::MinCv;
    o.cv_loss =
        j.at("cv_loss").get<std::string>() == "misclassification" ? CvLoss::Misclassification : CvLoss::NegLogLik;
    o.seed = j.at("seed").get<std::uint64_t>();
    o.fold_scheme =
        j.at("fold_scheme").get<std::string>() == "contiguous" ? FoldScheme::ContiguousBlocks : FoldScheme::RandomPermutation;
    o.center = j.at("center").get<bool>();
    o.standardize = j.at("standardize").get<bool>();
    const Json& s = j.at("solver");
    o.solver.tol = s.at("tol").get<double>();
    o.solver.max_sweeps = s.at("max_sweeps").get<Index>();
    o.solver.max_irls = s.at("max_irls").get<Index>();
    o.solver.weight_floor = s.at("weight_floor").get<double>();
    o.solver.working_clip = s.at("working_clip").get<double>();
    o.solver.polish = s.at("polish").get<bool>();
    return o;
}

Json to_json(const DesignSpec& d)
{
    return Json{
        {"design", std::string(to_string(d.kind))},
        {"n", d.n},
        {"p", d.p},
        {"rho", d.rho},
        {"s", d.s},
        {"burn_in", d.burn_in},
        {"params",
         {{"sigma_B", matrix3_json(d.params.sigma_B)},
          {"Phi", matrix3_json(d.params.Phi)},
          {"sigma_eta", matrix3_json(d.params.sigma_eta)},
          {"sigma_u2", d.params.sigma_u2}}},
    };
}

DesignSpec design_from_json(const Json& j)
{
    DesignSpec d;
    d.kind = parse_design(j.at("design").get<std::string>());
    d.n = j.at("n").get<Index>();
    d.p = j.at("p").get<Index>();
    d.rho = j.at("rho").get<double>();
    d.s = j.at("s").get<Index>();
    d.burn_in = j.at("burn_in").get<Index>();
    const Json& p = j.at("params");
    d.params.sigma_B = matrix3_from_json(p.at("sigma_B"));
    d.params.Phi = matrix3_from_json(p.at("Phi"));
    d.params.sigma_eta = matrix3_from_json(p.at("sigma_eta"));
    d.params.sigma_u2 = p.at("sigma_u2").get<double>();
    return d;
}

Json to_json(const ReplicationRecord& r)
{
    return Json{
        {"rep", r.rep},
        {"seed", r.seed},
        {"ok", r.ok},
        {"error", r.error},
        {"selected", r.selected},
        {"exact", r.score.exact},
        {"contains", r.score.contains},
        {"size", r.score.size},
        {"l2_error", number(r.score.l2_error)},
        {"num_factors", r.num_factors},
        {"lambda", number(r.lambda)},
        {"gamma_inf", number(r.gamma_inf)},
        {"first_false_discovery", r.first_false_discovery},
    };
}

ReplicationRecord replication_record_from_json(const Json& j)
{
    ReplicationRecord r;
    r.rep = j.at("rep").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.selected = j.at("selected").get<IndexSet>();
    r.score.exact = j.at("exact").get<bool>();
    r.score.contains = j.at("contains").get<bool>();
    r.score.size = j.at("size").get<Index>();
    r.score.l2_error = read_number(j.at("l2_error"));
    r.num_factors = j.at("num_factors").get<Index>();
    r.lambda = read_number(j.at("lambda"));
    r.gamma_inf = read_number(j.at("gamma_inf"));
    r.first_false_discovery = j.at("first_false_discovery").get<Index>();
    return r;
}

Json to_json(const SimulationReport& report)
{
    Json records = Json::array();
    for (const auto& r : report.records) records.push_back(to_json(r));
    return Json{
        {"schema_version", kSchemaVersion},
        {"kind", "simulation"},
        {"design", to_json(report.design)},
        {"method", {{"method", std::string(to_string(report.method.kind))}, {"options", to_json(report.method.options)}}},
        {"n_reps", report.n_reps},
        {"base_seed", report.base_seed},
        {"failures", report.failures},
        {"selection_consistency_rate", number(report.selection_consistency_rate)},
        {"sure_screening_rate", number(report.sure_screening_rate)},
        {"avg_model_size", number(report.avg_model_size)},
        {"mean_l2_error", number(report.mean_l2_error)},
        {"mean_first_false_discovery", number(report.mean_first_false_discovery)},
        {"records", records},
    };
}

SimulationReport simulation_report_from_json(const Json& j)
{
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
        fail(ErrorKind::DataError, "unsupported schema_version " + j.at("schema_version").dump());
    }
    SimulationReport report;
    report.design = design_from_json(j.at("design"));
    report.method.kind = parse_method(j.at("method").at("method").get<std::string>());
    report.method.options = farm_select_options_from_json(j.at("method").at("options"));
    report.n_reps = j.at("n_reps").get<Index>();
    report.base_seed = j.at("base_seed").get<std::uint64_t>();
    report.failures = j.at("failures").get<Index>();
    report.selection_consistency_rate = read_number(j.at("selection_consistency_rate"));
    report.sure_screening_rate = read_number(j.at("sure_screening_rate"));
    report.avg_model_size = read_number(j.at("avg_model_size"));
    report.mean_l2_error = read_number(j.at("mean_l2_error"));
    report.mean_first_false_discovery = read_number(j.at("mean_first_false_discovery"));
    for (const auto& r : j.at("records")) report.records.push_back(replication_record_from_json(r));
    return report;
}

Json to_json(const RollingForecastReport& report)
{
    Json points = Json::array();
    for (const auto& p : report.predictions) {
        points.push_back({{"t", p.t},
                          {"y", number(p.y)},
                          {"prediction", number(p.prediction)},
                          {"benchmark", number(p.benchmark)},
                          {"model_size", p.model_size}});
    }
    return Json{
        {"schema_version", kSchemaVersion},
        {"kind", "rolling_forecast"},
        {"window", report.window},
        {"horizon", report.horizon},
        {"r2_oos", number(report.r2_oos)},
        {"predictions", points},
    };
}

RollingForecastReport rolling_report_from_json(const Json& j)
{
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
        fail(ErrorKind::DataError, "unsupported schema_version " + j.at("schema_version").dump());
    }
    RollingForecastReport report;
    report.window = j.at("window").get<Index>();
    report.horizon = j.at("horizon").get<Index>();
    report.r2_oos = read_number(j.at("r2_oos"));
    for (const auto& p : j.at("predictions")) {
        report.predictions.push_back({p.at("t").get<Index>(), read_number(p.at("y")),
                                      read_number(p.at("prediction")), read_number(p.at("benchmark")),
                                      p.at("model_size").get<Index>()});
    }
    return report;
}

Json select_report(const DatasetFile& data, const GlmFamily& family, const FarmSelectResult& result)
{
    Json selected = Json::array();
    for (const Index j : result.selected) selected.push_back(data.feature_columns[static_cast<std::size_t>(j)]);
    Json coefficients = Json::object();
    for (std::size_t j = 0; j < data.feature_columns.size(); ++j) {
        coefficients[data.feature_columns[j]] = number(result.fit.beta[static_cast<Index>(j)]);
    }
    Json path_sizes = Json::array();
    for (const auto& fit : result.path.fits) path_sizes.push_back(fit.active_set.size());

    return Json{
        {"schema_version", kSchemaVersion},
        {"kind", "select"},
        {"family", std::string(family.name())},
        {"response", data.response_column},
        {"n", data.X.rows()},
        {"p", data.X.cols()},
        {"num_factors", result.K_used},
        {"eigenvalues", vector_json(result.factor_fit.eigenvalues)},
        {"lambda_path", vector_json(result.path.lambdas)},
        {"path_model_sizes", path_sizes},
        {"cv_scores", vector_json(result.cv_scores)},
        {"cv_standard_errors", vector_json(result.cv_standard_errors)},
        {"chosen_index", result.chosen_index},
        {"lambda", number(result.lambda_chosen)},
        {"selected", selected},
        {"intercept", number(result.fit.intercept)},
        {"coefficients", coefficients},
        {"factor_coefficients", vector_json(result.fit.gamma)},
        {"objective", number(result.fit.objective)},
        {"kkt_max_violation", number(result.fit.kkt_max_violation)},
        {"converged", result.fit.converged},
        {"iterations", result.fit.iterations},
    };
}

void write_replications_csv(std::ostream& out, const SimulationReport& report)
{
    out << "rep,seed,ok,exact,contains,size,l2_error,lambda,num_factors,gamma_inf,first_false_discovery,selected\n";
    for (const auto& r : report.records) {
        out << r.rep << ',' << r.seed << ',' << r.ok << ',' << r.score.exact << ',' << r.score.contains << ','
            << r.score.size << ',' << format_double(r.score.l2_error) << ',' << format_double(r.lambda) << ','
            << r.num_factors << ',' << format_double(r.gamma_inf) << ',' << r.first_false_discovery << ',';
        for (std::size_t k = 0; k < r.selected.size(); ++k) out << (k ? " " : "") << r.selected[k];
        out << '\n';
    }
}

void write_screen_csv(std::ostream& out, const DatasetFile& data, const ScreenResult& result)
{
    out << "rank,variable,score\n";
    for (std::size_t k = 0; k < result.ranked.size(); ++k) {
        const auto& e = result.ranked[k];
        out << k + 1 << ',' << data.feature_columns[static_cast<std::size_t>(e.index)] << ','
            << format_double(e.score) << '\n';
    }
}

} // namespace farmselect::cli
