#pragma once

#include <farmselect/cli/csv.hpp>
#include <farmselect/cli/rolling.hpp>
#include <farmselect/pipeline.hpp>
#include <farmselect/screening.hpp>
#include <farmselect/simulate.hpp>

#include "json.hpp"

#include <iosfwd>
#include <string>

namespace farmselect::cli {

using Json = nlohmann::json;

/// Version of every JSON document written by the tool.
inline constexpr int kSchemaVersion = 1;

/// Non-finite doubles are written as null and read back as NaN.
Json number(double value);
double read_number(const Json& value);

Json to_json(const FarmSelectOptions& options);
FarmSelectOptions farm_select_options_from_json(const Json& j);

Json to_json(const DesignSpec& design);
DesignSpec design_from_json(const Json& j);

Json to_json(const ReplicationRecord& record);
ReplicationRecord replication_record_from_json(const Json& j);

/// Schema mirrors SimulationReport, records included.
Json to_json(const SimulationReport& report);
SimulationReport simulation_report_from_json(const Json& j);

Json to_json(const RollingForecastReport& report);
RollingForecastReport rolling_report_from_json(const Json& j);

/// Chosen K, eigenvalues, lambda path, CV curve, selected names, coefficients and KKT residual.
Json select_report(const DatasetFile& data, const GlmFamily& family, const FarmSelectResult& result);

/// One row per replication: rep, seed, ok, exact, contains, size, l2_error, lambda, num_factors, gamma_inf, first_false_discovery, selected.
void write_replications_csv(std::ostream& out, const SimulationReport& report);

/// rank, variable, score (rank starts at 1).
void write_screen_csv(std::ostream& out, const DatasetFile& data, const ScreenResult& result);

} // namespace farmselect::cli
