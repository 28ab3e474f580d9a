#pragma once

// Machine-readable run reports. Every report records the command, the seed
// where one is used, the SHA-256 of the input file and the module results.
// Key order is fixed, so identical runs give byte-identical output.

#include "chs/closure.hpp"
#include "chs/embed_fit.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace chs {

using ReportJson = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes);

ReportJson report_envelope(std::string_view command, std::string_view input_path, std::string_view input_bytes);

ReportJson to_report(const ValidationReport& v);
ReportJson to_report(const TensorElement& u);  // [[ [re, im], ... ], ...]
ReportJson to_report(const ExtensionResult& r);
ReportJson to_report(const IterationResult& r);
ReportJson to_report(const StepRecord& r);
ReportJson to_report(const FitResult& r);
ReportJson to_report(const std::vector<CurvePoint>& curve);
ReportJson to_report(const ProductCoefficients& pc);
ReportJson to_report(const std::vector<GeneratorGrowth>& growth);

std::string render(const ReportJson& report);

}  // namespace chs
