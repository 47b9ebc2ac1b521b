#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "grinent/csv_io.hpp"
#include "grinent/errors.hpp"
#include "grinent/fitkit.hpp"
#include "grinent/json_io.hpp"
#include "grinent/tomo.hpp"

using namespace grinent;

namespace {

int parse_error_line(const std::string& text, const std::vector<std::string>& header) {
  std::istringstream in(text);
  try {
    csv::read_table(in, header);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("real formatting round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    const std::string s = csv::format_real(v);
    CHECK(csv::parse_real(s, 1, "x") == v);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(csv::format_real(0.5) == "0.5");
  CHECK(csv::format_real(3.0) == "3");
}

TEST_CASE("table reader") {
  const std::vector<std::string> header{"a", "b"};
  std::istringstream ok("a,b\r\n1,2\r\n\n3,4\n");
  const auto rows = csv::read_table(ok, header);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].line == 2);
  CHECK(rows[1].line == 4);
  CHECK(rows[1].fields[1] == "4");

  CHECK(parse_error_line("", header) == 0);
  CHECK(parse_error_line("x,y\n1,2\n", header) == 1);
  CHECK(parse_error_line("a,b\n1,2\n1,2,3\n", header) == 3);
  CHECK(parse_error_line("a,b\n1\n", header) == 2);

  std::istringstream empty("");
  try {
    csv::read_table(empty, header);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("empty") != std::string::npos);
  }
}

TEST_CASE("field parsers") {
  CHECK(csv::parse_real("1e-7", 1, "x") == 1e-7);
  CHECK(csv::parse_count("42", 1, "n") == 42);
  CHECK_THROWS_AS(csv::parse_real("abc", 5, "x"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("1.0x", 5, "x"), ParseError);
  CHECK_THROWS_AS(csv::parse_count("-1", 5, "n"), ParseError);
  CHECK_THROWS_AS(csv::parse_count("2.5", 5, "n"), ParseError);
  try {
    csv::parse_count("x", 7, "coincidences");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    CHECK(std::string(e.what()).find("coincidences") != std::string::npos);
  }
}

TEST_CASE("unitary JSON round trip") {
  polkit::Unitary2 u;
  u << polkit::cplx(0.6, 0.0), polkit::cplx(0.0, 0.8), polkit::cplx(0.0, 0.8), polkit::cplx(0.6, 0.0);
  const auto back = json_io::unitary_from_json(json_io::json::parse(json_io::unitary_to_json(u).dump()));
  CHECK((back - u).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(json_io::unitary_from_json(json_io::json::parse("[[1,0],[0,1]]")), ParseError);
}

TEST_CASE("density JSON rejects bad shapes and non-physical matrices") {
  auto j = json_io::density_to_json(polkit::DensityMatrix::maximally_mixed());
  auto short_rows = j;
  short_rows["entries"].erase(0);
  CHECK_THROWS_AS(json_io::density_from_json(short_rows), ParseError);
  auto bad_trace = j;
  bad_trace["entries"][0][0] = {1.0, 0.0};
  CHECK_THROWS_AS(json_io::density_from_json(bad_trace), InvalidStateError);
  CHECK_THROWS_AS(json_io::density_from_json(json_io::json::object()), ParseError);
}

TEST_CASE("report JSON fields") {
  const auto r = tomo::report(polkit::bell_state(polkit::BellKind::kPsiMinus).density());
  const auto j = json_io::report_to_json(r);
  CHECK(j.at("best_target") == "psi-");
  CHECK(j.at("fidelities").at("psi-").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("tangle").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("purity").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("eigenvalues").size() == 4);
  CHECK(j.at("real").size() == 4);
  CHECK(j.at("imag").size() == 4);
  CHECK(j.contains("max_abs_imag"));
  CHECK(j.contains("density_matrix"));
}

TEST_CASE("fit JSON fields") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i * 0.1);
    y.push_back(5.0 * (1.0 + 0.5 * std::cos(2.0 * 3.14159265358979 * x.back() + 0.2)));
  }
  const auto j = json_io::fit_to_json(fitkit::fit_sinusoid(x, y));
  CHECK(j.at("model") == "fringe");
  CHECK(j.at("parameters").at("visibility").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("points_used") == 30);
  CHECK(j.contains("uncertainties"));
  CHECK(j.contains("raw_visibility"));

  std::vector<double> gy;
  for (double v : x) gy.push_back(std::exp(-(v - 1.5) * (v - 1.5) / 0.18));
  const auto g = json_io::fit_to_json(fitkit::fit_gaussian(x, gy));
  CHECK(g.at("model") == "profile");
  CHECK(g.at("parameters").at("fwhm").get<double>() == doctest::Approx(2.0 * std::sqrt(std::log(2.0) * 0.18)));
}
