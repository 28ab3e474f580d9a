#pragma once

// Text format for cyclic structures and tensor coefficient files.
//
//   {
//     "format_version": 1,
//     "dim": n,
//     "labels": ["1", "x1", ...],
//     "pair_index": "row-major, p(i,j) = i*n + j",
//     "gram": [[[re, im], ...], ...]     n^2 rows of n^2 entries
//   }
//
// Numbers are written with 17 significant digits. Coefficient files hold
// {"dim": n, "coeffs": [[[re, im], ...], ...]} with n rows of n entries.

#include "chs/tensor_core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace chs {

inline constexpr int kFormatVersion = 1;

std::string serialize(const CyclicStructure& s);

struct LoadedStructure {
  CyclicStructure structure;
  ValidationReport validation;
  std::vector<std::string> warnings;  // failing axioms; the structure is still returned
};

// Throws ParseError (with line and column) on malformed documents.
LoadedStructure parse_structure(std::string_view text, double tol = kDefaultTol);

std::string serialize_coefficients(const TensorElement& u);
TensorElement parse_coefficients(std::string_view text);

// %.17g, the shared number format of every writer here.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace chs
