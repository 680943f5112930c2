#include "lodadapt/config.hpp"
#include "lodadapt/error.hpp"

#include <doctest.h>

using namespace lodadapt;
using nlohmann::json;

TEST_CASE("every preset validates and survives a JSON round trip") {
  for (const std::string& name : preset_names(true)) {
    CAPTURE(name);
    const RunConfig c = preset(name);
    CHECK_NOTHROW(validate(c));
    const json j = to_json(c);
    const RunConfig back = parse_config(j);
    CHECK(to_json(back) == j);
  }
  CHECK(preset_names(false).size() == 4);
  CHECK_THROWS_AS(preset("kconv-huge"), ConfigError);
  CHECK_THROWS_AS(preset("nothing-desk"), ConfigError);
}

TEST_CASE("desk presets carry the documented grids") {
  const RunConfig k = preset("kconv-desk");
  const MeshPair m = make_mesh(k.mesh);
  CHECK(m.fine_cells()[0] == 256);
  CHECK(m.coarse_cells()[0] == 16);
  CHECK(k.k_values == std::vector<int>{1, 2, 3, 4});

  const RunConfig t = preset("tolsweep-desk");
  CHECK(make_mesh(t.mesh).fine_cells()[1] == 128);
  CHECK(t.tol_values == std::vector<double>{0.5, 0.1, 0.05, 0.01});
  CHECK(t.steps == 128);
  CHECK(t.k == 3);

  const RunConfig d = preset("darcy2d-desk");
  CHECK(d.reference == ReferenceMode::coarse_fem);
  CHECK(d.darcy.steps == 200);
  CHECK(d.darcy.dt == 1.0 / 200);

  const RunConfig d3 = preset("darcy3d-desk");
  const MeshPair m3 = make_mesh(d3.mesh);
  CHECK(m3.fine_cells()[2] == 32);
  CHECK(m3.coarse_cells()[2] == 8);
  CHECK(d3.darcy.steps == 50);
  CHECK(d3.boundary_load == "lagging");
  CHECK(preset("tolsweep-desk").boundary_load == "true");
}

TEST_CASE("parse_config overrides only present keys") {
  const RunConfig base = preset("kconv-desk");
  const RunConfig c = parse_config(json{{"k_values", {1, 2}}, {"field", {{"seed", 9}}}}, base);
  CHECK(c.k_values == std::vector<int>{1, 2});
  CHECK(c.field.seed == 9);
  CHECK(c.field.kind == "checkerboard");
  CHECK(c.mesh.coarse == base.mesh.coarse);
}

TEST_CASE("invalid configs are rejected") {
  const auto bad = [](const json& j) { CHECK_THROWS_AS(parse_config(j), ConfigError); };
  bad(json{{"unknown", 1}});
  bad(json{{"mesh", {{"cells", 3}}}});
  bad(json{{"k", -1}});
  bad(json{{"k", 1.5}});
  bad(json{{"k", "2"}});
  bad(json{{"tol_values", {0.1, -0.2}}});
  bad(json{{"experiment", "kconvergence"}});
  bad(json{{"reference", "exact"}});
  bad(json{{"darcy", {{"steps", 0}}}});
  bad(json{{"darcy", {{"dt", 0.0}}}});
  bad(json{{"darcy", {{"runs", {{{"k", 1}, {"TOL", 0.1}}}}}}});
  bad(json{{"mesh", {{"dim", 3}}}});
  bad(json{{"mesh", {{"coarse", {4, 4.5}}}}});
  bad(json{{"field", {{"seed", -3}}}});
  bad(json{{"field", {{"kind", "product3d"}}}});
  bad(json{{"write_masks", 1}});
  bad(json{{"boundary_load", "lag"}});
  bad(json{{"squared_threshold", "yes"}});
  bad(json{{"darcy", {{"g_flux", "exact"}}}});
  bad(json::array());
}

TEST_CASE("thread knob") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
