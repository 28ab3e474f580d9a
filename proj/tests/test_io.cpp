#include "chs/error.hpp"
#include "chs/moment_sources.hpp"
#include "chs/report.hpp"
#include "chs/structure_io.hpp"

#include <doctest.h>

#include <random>

using namespace chs;

namespace {

ParseError parse_failure(const std::string& text) {
  try {
    parse_structure(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("document accepted");
  return ParseError("", 0, 0);
}

std::string small_doc(const std::string& gram) {
  return "{\n  \"format_version\": 1,\n  \"dim\": 1,\n  \"gram\": " + gram + "\n}\n";
}

}  // namespace

TEST_CASE("round trip is exact") {
  std::vector<CyclicStructure> structures{structure_from_matrices(pauli_family()), semicircular_structure(3)};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    structures.push_back(structure_from_matrices(random_family(3, 4, seed)));
  }
  for (const CyclicStructure& s : structures) {
    const std::string text = serialize(s);
    const LoadedStructure back = parse_structure(text);
    CHECK(back.structure.dim() == s.dim());
    CHECK(back.structure.labels() == s.labels());
    const Matrix& a = s.gram();
    const Matrix& b = back.structure.gram();
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const cplx x = a.data()[k];
      const cplx y = b.data()[k];
      REQUIRE(std::abs(x.real() - y.real()) <= 1e-15 * std::abs(x.real()));
      REQUIRE(std::abs(x.imag() - y.imag()) <= 1e-15 * std::abs(x.imag()));
    }
    CHECK(back.warnings.empty());
    CHECK(serialize(back.structure) == text);
  }
}

TEST_CASE("Pauli document layout") {
  const std::string text = serialize(structure_from_matrices(pauli_family()));
  std::size_t rows = 0;
  for (std::size_t pos = text.find("\n    ["); pos != std::string::npos; pos = text.find("\n    [", pos + 1)) {
    ++rows;
  }
  CHECK(rows == 16);
  CHECK(text.find("\"format_version\": 1") != std::string::npos);
  CHECK(text.find("p(i,j) = i*n + j") != std::string::npos);
}

TEST_CASE("format_double keeps 17 digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("malformed documents") {
  SUBCASE("wrong row count") {
    std::string text = serialize(structure_from_matrices(pauli_family()));
    const auto last = text.rfind(",\n    [");
    const auto end = text.find("]\n  ]", last);
    text.erase(last, end - last + 1);
    const ParseError e = parse_failure(text);
    CHECK(std::string(e.what()).find("rows, expected 16") != std::string::npos);
    CHECK(e.line() == 6);
  }
  SUBCASE("non-numeric entry") {
    const ParseError e = parse_failure(small_doc("[[[0.1, \"x\"]]]"));
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
    CHECK(e.line() == 4);
    CHECK(e.column() == 19);
  }
  SUBCASE("missing member") {
    const ParseError e = parse_failure("{\"format_version\": 1, \"gram\": []}");
    CHECK(std::string(e.what()).find("missing member \"dim\"") != std::string::npos);
  }
  SUBCASE("entry shape") {
    const ParseError e = parse_failure(small_doc("[[[1]]]"));
    CHECK(std::string(e.what()).find("pair [re, im]") != std::string::npos);
  }
  SUBCASE("overflowing number") {
    const ParseError e = parse_failure(small_doc("[[[1e999, 0]]]"));
    CHECK(e.line() == 4);
  }
  SUBCASE("syntax error") {
    const ParseError e = parse_failure("{\n  \"dim\": 1,\n  \"gram\": [[[1, 0]]\n}");
    CHECK(e.line() == 4);
  }
  SUBCASE("version") {
    const ParseError e = parse_failure("{\"format_version\": 2, \"dim\": 1, \"gram\": [[[1, 0]]]}");
    CHECK(std::string(e.what()).find("format_version") != std::string::npos);
  }
}

TEST_CASE("invalid tensors load with warnings") {
  const LoadedStructure s = parse_structure(small_doc("[[[2, 0]]]"));
  CHECK_FALSE(s.validation.all_pass());
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("coefficient files") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Matrix c(3, 3);
  for (Eigen::Index k = 0; k < 9; ++k) {
    c.data()[k] = cplx(nd(rng), nd(rng));
  }
  const TensorElement u(c);
  const TensorElement back = parse_coefficients(serialize_coefficients(u));
  CHECK((back.coeffs() - c).norm() == 0.0);
  CHECK_THROWS_AS(parse_coefficients("{\"dim\": 2, \"coeffs\": [[[1, 0], [0, 0]]]}"), ParseError);
}

TEST_CASE("sha256 digest") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("reports are deterministic") {
  const std::string input = serialize(structure_from_matrices(pauli_family()));
  FitOptions o;
  o.d = 2;
  o.restarts = 2;
  o.seed = 5;
  const auto make = [&] {
    ReportJson r = report_envelope("fit", "pauli.chs", input);
    r["result"] = to_report(fit(parse_structure(input).structure, o));
    return render(r);
  };
  const std::string a = make();
  CHECK(a == make());
  CHECK(a.find(sha256_hex(input)) != std::string::npos);
}
