#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> lines(const std::string& s) {
  std::vector<nlohmann::json> v;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) v.push_back(nlohmann::json::parse(line));
  return v;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"no-such-command"}).code == 1);
    CHECK(run({"verify-pco", "--bogus"}).code == 1);
    CHECK(run({"verify-pco", "--F", "count:Q", "--samples", "10"}).code == 1);
    CHECK(run({"verify-mecke", "--h", "wobble:1", "--samples", "10"}).code == 1);
    CHECK(run({"verify-pco", "--format", "xml"}).code == 1);
  }

  TEST_CASE("help exits cleanly") { CHECK(run({"--help"}).code == 0); }

  TEST_CASE("passing checks exit with 0 and tag every row") {
    const auto r = run({"verify-pco", "--F", "count_squared:A", "--samples", "50", "--seed", "3"});
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(!rows.empty());
    for (const auto& row : rows) {
      CHECK(row.contains("config_hash"));
      CHECK(row.at("seed") == 3);
    }
  }

  TEST_CASE("a failing check exits with 2") {
    const auto r = run({"verify-isometry", "--h", "ind:A", "--samples", "200", "--z-max", "0"});
    CHECK(r.code == 2);
  }

  TEST_CASE("same seed gives identical output across thread counts") {
    const std::vector<std::string> base{"verify-mecke", "--F", "count:A", "--h", "ind:A", "--samples", "2000", "--seed", "9"};
    auto a = base, b = base;
    a.insert(a.end(), {"--threads", "1"});
    b.insert(b.end(), {"--threads", "4"});
    const auto ra = run(a), rb = run(b);
    CHECK(ra.code == 0);
    CHECK(ra.out == rb.out);
  }

  TEST_CASE("seed comes from the environment when not given") {
    ::setenv("POISSON_MALLIAVIN_SEED", "41", 1);
    const auto r = run({"verify-pco", "--F", "count:A", "--samples", "10"});
    ::unsetenv("POISSON_MALLIAVIN_SEED");
    REQUIRE(r.code == 0);
    CHECK(lines(r.out).front().at("seed") == 41);
    const auto d = run({"verify-pco", "--F", "count:A", "--samples", "10"});
    CHECK(lines(d.out).front().at("seed") == 1);
  }

  TEST_CASE("configuration files") {
    const auto good = write_temp("pm_cli_good.json", R"({"T": 2, "marks": {"kind": "interval", "M": 3}, "seed": 5,
      "regions": {"E": {"t": [0, 1], "x": [0, 2]}}, "functionals": ["count_squared:E"], "samples": 20})");
    const auto r = run({"verify-pco", "--config", good.string()});
    CHECK(r.code == 0);
    CHECK(lines(r.out).front().at("seed") == 5);
    const auto flagged = run({"verify-pco", "--config", good.string(), "--seed", "6"});
    CHECK(lines(flagged.out).front().at("seed") == 6);
    CHECK(lines(flagged.out).front().at("config_hash") != lines(r.out).front().at("config_hash"));

    const auto bad = write_temp("pm_cli_bad.json", R"({"T": 1, "colour": "red"})");
    CHECK(run({"verify-pco", "--config", bad.string()}).code == 1);
    const auto broken = write_temp("pm_cli_broken.json", "{ not json");
    CHECK(run({"verify-pco", "--config", broken.string()}).code == 1);
  }

  TEST_CASE("csv output has a header") {
    const auto r = run({"verify-pco", "--F", "count:A", "--samples", "10", "--format", "csv"});
    CHECK(r.code == 0);
    const auto header = r.out.substr(0, r.out.find('\n'));
    CHECK(header.find("config_hash") != std::string::npos);
    CHECK(header.find("seed") != std::string::npos);
  }

  TEST_CASE("reports go to the output file") {
    const auto p = std::filesystem::temp_directory_path() / "pm_cli_out.jsonl";
    std::filesystem::remove(p);
    const auto r = run({"simulate-hawkes", "--model", "small", "--samples", "50", "--out", p.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(!lines(ss.str()).empty());
  }
}
