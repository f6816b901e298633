#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mudelay/experiment.hpp"

namespace mudelay {

inline constexpr const char* kResultSchema = "mudelay.result_row/1";

/// CSV columns, in order.
const std::vector<std::string>& csv_columns();

/// One header line plus one line per row. Absent values are written as `null`.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Inverse of write_csv (details and errors are not part of the CSV).
std::vector<ResultRow> parse_csv(std::istream& in);

/// JSON sidecar: schema version, command, resolved spec and every row with its details.
std::string sidecar_json(const std::string& command, const ExperimentSpec& spec,
                         const std::vector<ResultRow>& rows);
std::string optimize_json(const OptimizeReport& report);

/// Formats a double with enough digits to be stable and readable.
std::string format_number(double value);

}  // namespace mudelay
