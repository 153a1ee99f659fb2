#pragma once

// CSV and JSON output. Numbers in CSV use 12 significant digits in the
// classic locale so identical inputs give byte-identical files.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oscar/model.hpp"
#include "oscar/oracle.hpp"
#include "oscar/phase.hpp"
#include "oscar/state.hpp"

namespace oscar {

using json = nlohmann::ordered_json;

std::string format_number(double x);

// Columns: theta, P (clipped values).
void write_phase_csv(std::ostream& os, const PhaseDistribution& dist);

json to_json(cdouble z);
json to_json(const DimensionlessParams& d);
json to_json(const PhysicalParams& p);
json to_json(const SystemState& s);
json to_json(const Time& t);
json to_json(const ConditionReport& r);
json to_json(const PhaseMeta& m);
json to_json(const std::vector<Peak>& peaks);
json to_json(const Diagnostics& g);
json to_json(const DiscrepancyReport& r);

// Writes `content` verbatim (binary mode). Throws Error("io", ...) on failure.
void write_file(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace oscar
