#include "lodadapt/error.hpp"
#include "lodadapt/io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace lodadapt;
using testing::unit_mesh;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "lodadapt_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.25) == "-2.25");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(1.0 / 0.0) == "inf");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, u(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("CSV writer and reader") {
  const auto p = scratch("t.csv");
  CsvWriter w(p, {"n", "name", "value"});
  w.row({std::int64_t{3}, std::string("abc"), 0.25});
  w.row({std::int64_t{-1}, std::string("x"), std::nan("")});
  CHECK_THROWS_AS(w.row({std::int64_t{1}}), StateError);
  w.close();
  CHECK(slurp(p) == "n,name,value\n3,abc,0.25\n-1,x,nan\n");
  const auto rows = read_csv(p);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "abc");
  CHECK_THROWS_AS(read_csv(scratch("missing.csv")), ConfigError);
}

TEST_CASE("field files round trip bit for bit") {
  const MeshPair mesh = unit_mesh(2, 2, 3);
  std::mt19937_64 rng(11);
  const Coefficient a = testing::random_coefficient(rng, mesh, 1e-6, 1e3);
  const auto p = scratch("a.field");
  write_field(p, coefficient_field(mesh, a));
  const Coefficient b = field_coefficient(mesh, read_field(p));
  CHECK(b.values() == a.values());
  CHECK(slurp(p).rfind("lodadapt-field v1 2 6 6\n", 0) == 0);
  CHECK_THROWS_AS(field_coefficient(unit_mesh(2, 2, 2), read_field(p)), ConfigError);
}

TEST_CASE("malformed field files are rejected") {
  const auto write = [](const std::string& name, const std::string& text) {
    const auto p = scratch(name);
    std::ofstream(p) << text;
    return p;
  };
  CHECK_THROWS_AS(read_field(write("b1.field", "other v1 1 2\n1\n2\n")), ConfigError);
  CHECK_THROWS_AS(read_field(write("b2.field", "lodadapt-field v1 1 3\n1\n2\n")), ConfigError);
  CHECK_THROWS_AS(read_field(write("b3.field", "lodadapt-field v1 1 2\n1\n2\n3\n")), ConfigError);
  CHECK_THROWS_AS(read_field(write("b4.field", "lodadapt-field v1 1 2\n1\n2x\n")), ConfigError);
  CHECK_THROWS_AS(read_field(write("b5.field", "lodadapt-field v1 4 2 2 2 2\n")), ConfigError);
  const FieldFile ok = read_field(write("b6.field", "lodadapt-field v1 1 2\n1e-3\nnan\n"));
  CHECK(ok.values[0] == 1e-3);
  CHECK(std::isnan(ok.values[1]));
}

TEST_CASE("coarse solution and flux dumps") {
  const MeshPair mesh = unit_mesh(2, 2, 1);
  Eigen::VectorXd alpha(9);
  for (int i = 0; i < 9; ++i)
    alpha[i] = i;
  const auto p = scratch("sol.csv");
  write_coarse_solution(p, mesh, alpha);
  const auto rows = read_csv(p);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"node_index", "x", "y", "value"});
  CHECK(rows[6] == std::vector<std::string>{"5", "1", "0.5", "5"});

  const FaceSet faces(mesh);
  Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(faces.size(), 0.0, faces.size() - 1.0);
  const auto q = scratch("flux.csv");
  write_flux(q, mesh, faces, sigma);
  const auto fr = read_csv(q);
  REQUIRE(static_cast<int>(fr.size()) == faces.size() + 1);
  CHECK(fr[0] == std::vector<std::string>{"face_index", "axis", "i", "j", "sigma"});
  for (int i = 0; i < faces.size(); ++i) {
    CHECK(std::stoi(fr[i + 1][1]) == faces[i].axis);
    CHECK(std::stoi(fr[i + 1][2]) == faces[i].position[0]);
  }
}

TEST_CASE("artifact comparison masks named columns") {
  const auto root = std::filesystem::temp_directory_path() / "lodadapt_test_io_cmp";
  std::filesystem::remove_all(root);
  const auto a = root / "a", b = root / "b";
  std::filesystem::create_directories(a);
  std::filesystem::create_directories(b);
  std::ofstream(a / "s.csv") << "n,wall_ms,v\n1,3.5,2\n";
  std::ofstream(b / "s.csv") << "n,wall_ms,v\n1,9.25,2\n";
  std::ofstream(a / "metadata.json") << "{}";
  std::ofstream(b / "metadata.json") << "{\"threads\": 3}";
  CHECK(artifact_differences(a, b, {"wall_ms"}).empty());
  CHECK(artifact_differences(a, b, {}) == std::vector<std::string>{"s.csv"});
  std::ofstream(b / "x.field") << "lodadapt-field v1 1 1\n1\n";
  CHECK(artifact_differences(a, b, {"wall_ms"}) == std::vector<std::string>{"x.field"});
}
