#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "socising/coupling.hpp"
#include "socising/experiments.hpp"

using namespace socising;
using namespace socising::experiments;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("socising-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig config_for(const std::string& text) {
  ExperimentConfig c;
  c.merge_text(text);
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("schema and defaults") {
    ExperimentConfig c;
    for (const auto& k : config_schema()) CHECK(c.get(k.name) == k.default_value);
    CHECK(c.get_real_list("T").front() == doctest::Approx(critical_temperature()));
    CHECK(c.get_real_list("p").front() == doctest::Approx(critical_p(2.0)));
    CHECK(command_names().size() == 9);
    CHECK_THROWS_AS(c.validate(), ConfigError);  // no command
  }

  TEST_CASE("parsing and rejection") {
    auto c = config_for("command = enumerate  # trailing comment\n\n n = 2, 3\n");
    CHECK(c.get("command") == "enumerate");
    CHECK(c.get_int_list("n") == std::vector<int>{2, 3});
    c.validate();

    try {
      config_for("colour = blue\n");
      FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "colour");
    }
    CHECK_THROWS_AS(config_for("no equals sign\n"), ConfigError);

    auto bad = [](const std::string& text, const std::string& key) {
      try {
        config_for(text).validate();
        FAIL("accepted: " << text);
      } catch (const ConfigError& e) {
        CHECK(e.key() == key);
      }
    };
    bad("command = soc-run\ntau = 0\n", "tau");
    bad("command = fk-sample\nq = 3\n", "q");
    bad("command = surgery-demo\nn = 8\n", "n");
    bad("command = surgery-demo\nn = 20\nbc = free\n", "bc");
    bad("command = surgery-demo\nn = 20\na = 1.5\n", "a");
    bad("command = fss-freq\nsamples = 50\n", "samples");
    bad("command = enumerate\np = 1.5\n", "p");
    bad("command = enumerate\nseed = -4\n", "seed");
    bad("command = teleport\n", "command");
    bad("command = tail-fit\nsampler = gibbs\n", "sampler");
    config_for("command = fk-sample\nq = 3\nsampler = heat-bath\n").validate();
  }

  TEST_CASE("text and json round trips") {
    auto c = config_for("command = soc-run\nn = 8\nseed = 77\n");
    ExperimentConfig d;
    d.merge_text(c.to_text());
    CHECK(d.to_json() == c.to_json());
    const auto j = json::parse(c.to_json());
    CHECK(j["seed"] == "77");
    CHECK(j.size() == config_schema().size());
  }

  TEST_CASE("Wilson interval") {
    const auto none = wilson_interval(0, 100);
    CHECK(none.low == 0.0);
    CHECK(none.high == doctest::Approx(0.0370).epsilon(0.01));
    const auto all = wilson_interval(100, 100);
    CHECK(all.high == 1.0);
    CHECK(all.low == doctest::Approx(0.963).epsilon(0.01));
    const auto half = wilson_interval(50, 100);
    CHECK(half.low == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(half.high == doctest::Approx(0.5962).epsilon(1e-3));
  }

  TEST_CASE("format_real round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 2.269185314213022, 1e-300, -7.5, 0.0}) CHECK(std::stod(format_real(x)) == x);
    CHECK(format_real(0.5) == "0.5");
    CHECK(format_real(INFINITY) == "inf");
  }

  TEST_CASE("config serialization round trips") {
    auto g = build_box(6);
    RngStream rng(3, 0);
    SpinConfig s(g);
    for (VertexId v : g->interior_vertices())
      if (rng.bernoulli(0.5)) s.set(v, -1);
    const auto text = serialize_spins(s, 1.25, 1.99, 42);
    CHECK(text.find('\n') == std::string::npos);
    CHECK(deserialize_spins(text) == s);

    BondConfig w(g);
    for (EdgeId e = 0; e < g->edge_count(); ++e) w.set(e, rng.bernoulli(0.4));
    const auto bt = serialize_bonds(w, FKParams{0.4, 2.0, BoundaryCondition::free}, 9);
    CHECK(deserialize_bonds(bt) == w);
    CHECK(json::parse(bt)["bonds"].get<std::string>().size() == g->edge_count());
    CHECK_THROWS(deserialize_bonds("{\"n\": 3, \"bonds\": \"01\"}"));
  }

  TEST_CASE("enumerate run writes the documented files") {
    const auto dir = scratch("enumerate");
    auto c = config_for("command = enumerate\nn = 3\na = 1.99\nout = " + dir.string() + "\n");
    const auto outcome = run_experiment(c);
    CHECK(outcome.row_count == 2);
    for (const char* f : {"metadata.json", "rows.csv", "summary.json"}) CHECK(fs::exists(dir / f));
    const auto meta = json::parse(slurp(dir / "metadata.json"));
    CHECK(meta["rng"]["algorithm"] == "philox4x32-10");
    CHECK(meta["csv_schema_version"] == kCsvSchemaVersion);
    CHECK(meta["columns"].size() == 6);
    const auto summary = json::parse(slurp(dir / "summary.json"));
    const auto& cell = summary["cells"][0];
    CHECK(cell["z_abs_difference"].get<double>() <= 1e-12);
    CHECK(cell["deviation"]["holds"] == true);
    const auto csv = slurp(dir / "rows.csv");
    CHECK(csv.rfind("n,mask,m,H,T_n,mu_n\n", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("duality-verify at n = 3, q = 2, p = 0.7") {
    const auto dir = scratch("duality");
    const auto outcome =
        run_experiment(config_for("command = duality-verify\nn = 3\nq = 2\np = 0.7\nout = " + dir.string() + "\n"));
    const auto s = json::parse(outcome.summary_json);
    CHECK(s["max_abs_error"].get<double>() <= 1e-10);
    CHECK(s["pass"] == true);
    fs::remove_all(dir);
  }

  TEST_CASE("runs are reproducible and independent of the parallel mode") {
    const std::string base = "command = fk-sample\nn = 8,10\nchains = 3\nsamples = 20\nthin = 2\np = 0.6\nseed = 5\n";
    const auto d1 = scratch("repro1"), d2 = scratch("repro2"), d3 = scratch("repro3");
    run_experiment(config_for(base + "out = " + d1.string() + "\n"));
    run_experiment(config_for(base + "out = " + d2.string() + "\n"));
    run_experiment(config_for(base + "parallel = serial\nout = " + d3.string() + "\n"));
    CHECK(slurp(d1 / "rows.csv") == slurp(d2 / "rows.csv"));
    CHECK(slurp(d1 / "rows.csv") == slurp(d3 / "rows.csv"));
    CHECK(slurp(d1 / "final_configs.jsonl") == slurp(d3 / "final_configs.jsonl"));
    const auto other = scratch("repro4");
    run_experiment(config_for(base + "seed = 6\nout = " + other.string() + "\n"));
    CHECK(slurp(d1 / "rows.csv") != slurp(other / "rows.csv"));
    for (const auto& d : {d1, d2, d3, other}) fs::remove_all(d);
  }

  TEST_CASE("failed runs leave nothing behind") {
    const auto dir = scratch("failed");
    CHECK_THROWS_AS(run_experiment(config_for("command = fss-freq\nn = 64\nsamples = 100\nout = " + dir.string() + "\n")),
                    std::domain_error);
    CHECK_FALSE(fs::exists(dir));

    const auto blocker = scratch("blocker");
    { std::ofstream(blocker) << "x"; }
    CHECK_THROWS(run_experiment(config_for("command = enumerate\nn = 2\nout = " + (blocker / "sub").string() + "\n")));
    CHECK_FALSE(fs::exists(blocker / "sub"));
    fs::remove(blocker);
  }
}
