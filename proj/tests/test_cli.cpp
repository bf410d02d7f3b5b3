#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"

using nlohmann::json;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "reeb-lab");
  std::ostringstream out, err;
  int status = reeb::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).status == reeb::cli::kExitUsage);
  CHECK(run({"nope"}).status == reeb::cli::kExitUsage);
  CHECK(run({"flow", "--bogus", "1"}).status == reeb::cli::kExitUsage);
  CHECK(run({"flow", "--x0", "1,2"}).status == reeb::cli::kExitUsage);
  CHECK(run({"flow", "--x0", "0,0,0", "--format", "xml"}).status == reeb::cli::kExitUsage);
  CHECK(run({"exponent", "--H", "sin(("}).status == reeb::cli::kExitUsage);
  CHECK(run({"kernel", "--form", "darboux"}).status == reeb::cli::kExitUsage);
  CHECK(run({"verify", "--suite", "geometry,nothing"}).status == reeb::cli::kExitUsage);
  CHECK(run({"--version"}).out.find(reeb::cli::version()) != std::string::npos);
}

TEST_CASE("reeb flow csv ends at the shifted point") {
  auto r = run({"flow", "--form", "darboux", "--field", "reeb", "--x0", "0,0,0", "--T", "1"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto rows = lines(r.out);
  CHECK(rows.front() == "t,q,p,z");
  double t, q, p, z;
  REQUIRE(std::sscanf(rows.back().c_str(), "%lf,%lf,%lf,%lf", &t, &q, &p, &z) == 4);
  CHECK(t == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(q) < 1e-12);
  CHECK(std::abs(p) < 1e-12);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("computation failure exits 1 with a structured error") {
  auto r = run({"flow", "--field", "ham:H=-z*z", "--x0", "0,1,1", "--T", "10", "--format", "json"});
  CHECK(r.status == reeb::cli::kExitFailure);
  auto report = json::parse(r.out);
  CHECK(report["pass"] == false);
  CHECK(report["error"]["type"].is_string());
  CHECK(report["error"]["message"].is_string());
}

TEST_CASE("kernel report on the standard sphere") {
  auto r = run({"kernel", "--form", "s3", "--degree", "2", "--N", "20000", "--format", "json"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto report = json::parse(r.out);
  CHECK(report["results"]["h0"] == 4);
  CHECK(report["results"]["h1"] == 4);
  CHECK(report["results"]["gap"].get<double>() > 1e3);
  CHECK(report["config"]["degree"] == 2);
  CHECK(report["version"] == reeb::cli::version());
  REQUIRE(report["checks"].size() == 1);
  CHECK(report["checks"][0]["name"] == "h0_equals_h1");
  CHECK(report.contains("wall_time_s"));
  CHECK_FALSE(reeb::cli::payload(report).contains("wall_time_s"));
}

TEST_CASE("config file merges under command-line flags") {
  auto cfg = temp_file("reeb_lab_test.cfg", "# flow from a file\ncommand = flow\nx0 = 0,0,0\nT = 2\n");
  auto r = run({"--config", cfg, "--T", "0.5", "--format", "json"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto report = json::parse(r.out);
  CHECK(report["command"] == "flow");
  CHECK(report["config"]["T"] == 0.5);
  CHECK(report["results"]["end"][2].get<double>() == doctest::Approx(0.5));

  auto bad = temp_file("reeb_lab_bad.cfg", "command=flow\nwidth=3\n");
  CHECK(run({"--config", bad}).status == reeb::cli::kExitUsage);
  CHECK(run({"--config", "/nonexistent/reeb.cfg", "flow"}).status == reeb::cli::kExitUsage);
}

TEST_CASE("same config and seed give the same payload") {
  std::vector<std::string> args{"exponent", "--H", "0.3*sin(x)", "--samples", "4", "--seed", "9", "--format", "json"};
  auto a = run(args), b = run(args);
  REQUIRE(a.status == reeb::cli::kExitPass);
  CHECK(reeb::cli::payload(json::parse(a.out)) == reeb::cli::payload(json::parse(b.out)));
  CHECK(json::parse(a.out)["checks"][0]["name"] == "method_agreement");
}

TEST_CASE("solve writes a csv grid and reports obstructions") {
  auto r = run({"solve", "--form", "darboux:box=0..1", "--u", "cos(z)", "--grid", "16"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto rows = lines(r.out);
  CHECK(rows.front() == "q,p,z,f");
  CHECK(rows.size() == 1 + 16 * 16 * 16);

  auto blocked = run({"solve", "--u", "1", "--periodic", "--grid", "16", "--format", "json"});
  auto report = json::parse(blocked.out);
  CHECK(report["results"]["solvable"] == false);
  CHECK(report["warnings"].size() == 1);
}

TEST_CASE("verify lists a manifest") {
  auto r = run({"verify", "--form", "darboux", "--suite", "geometry,contact,characteristic", "--format", "json"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto report = json::parse(r.out);
  CHECK(report["pass"] == true);
  CHECK(report["manifest"].size() >= report["checks"].size());
  bool any_contact = false;
  for (const auto& c : report["checks"]) any_contact |= c["suite"] == "contact";
  CHECK(any_contact);
}

TEST_CASE("vary with the oracle records the winning variant") {
  auto r = run({"vary", "--dir", "h=0.1*q", "--check-fd", "--samples", "3", "--format", "json"});
  REQUIRE(r.status == reeb::cli::kExitPass);
  auto report = json::parse(r.out);
  CHECK(report["results"]["variant_winner"].is_string());
  CHECK(report["checks"].size() == 2);
}
