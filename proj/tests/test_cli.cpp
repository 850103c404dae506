#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "nostra/cli.hpp"
#include "nostra/ingest.hpp"
#include "nostra/report.hpp"
#include "support/temp_dir.hpp"
#include "support/wards.hpp"

using namespace nostra;
using nlohmann::json;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json load_json(const std::filesystem::path& p) { return json::parse(read_text_file(p)); }

double source_probability(const json& block, const std::string& label) {
  for (const auto& s : block["sources"]) {
    if (s["source"] == label) return s["probability"].get<double>();
  }
  FAIL("no source " << label);
  return -1.0;
}

// Writes a ward to `dir` and returns the matching command-line flags.
std::vector<std::string> ward_flags(const WardSnapshot& s, const std::filesystem::path& dir) {
  const auto p = write_ward(s, dir);
  return {"--cases", p.cases.string(), "--locations", p.locations->string(), "--weights", p.weights->string(),
          "--fasta", p.fasta->string(), "--config", p.config->string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("single case without admission reports an even hospital/community split") {
  TempDir dir("cli-single");
  write_file(dir / "cases.csv", "id,onset_date\nB,2020-01-10\n");
  const auto r = cli({"posterior", "--cases", (dir / "cases.csv").string(), "--focal", "B", "--out",
                      (dir / "out").string()});
  REQUIRE(r.code == kExitOk);
  const auto doc = load_json(dir / "out" / "posterior.json");
  CHECK(doc["schema"] == kReportSchema);
  CHECK(doc["kind"] == "posterior");
  const auto& block = doc["results"][0];
  CHECK(block["focal"] == "B");
  CHECK(source_probability(block, "Hospital") == 0.5);
  CHECK(source_probability(block, "Community") == 0.5);
  CHECK(block["nosocomial"] == 0.5);
  CHECK(doc["provenance"]["inputs"][0]["file"] == "cases.csv");
  CHECK(doc["provenance"]["inputs"][0]["sha256"] == sha256_hex("id,onset_date\nB,2020-01-10\n"));
  CHECK(doc["provenance"]["toggles"]["genetics"] == true);
  CHECK(doc["provenance"]["parameters"]["genetic.ne"] == "51");
}

TEST_CASE("--all excludes each focal from its own candidates") {
  TempDir dir("cli-all");
  write_file(dir / "cases.csv", "id,onset_date,admission_date\nA,2020-01-03,\nB,2020-01-06,2020-01-02\nC,2020-01-09,\n");
  const auto r = cli({"posterior", "--cases", (dir / "cases.csv").string(), "--all", "--out", (dir / "out").string()});
  REQUIRE(r.code == kExitOk);
  const auto doc = load_json(dir / "out" / "posterior.json");
  REQUIRE(doc["results"].size() == 3);
  for (const auto& block : doc["results"]) {
    REQUIRE(block["sources"].size() == 4);
    double total = 0.0;
    for (const auto& s : block["sources"]) {
      CHECK(s["source"] != block["focal"]);
      total += s["probability"].get<double>();
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(block["sources"][2]["source"] == "Hospital");
    CHECK(block["sources"][3]["source"] == "Community");
  }
  const std::string heatmap = read_text_file(dir / "out" / "heatmap.csv");
  CHECK(heatmap.rfind("focal,A,B,C,Hospital,Community,Nosocomial\n", 0) == 0);
  CHECK(heatmap.find("\nA,,") != std::string::npos);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  TempDir dir("cli-determinism");
  const auto s = build_snapshot(testsupport::three_candidate_ward(true));
  const auto flags = ward_flags(s, dir / "ward");
  for (const std::string format : {"json", "csv"}) {
    const auto a = cli(concat({"posterior", "--all", "--threads", "1", "--format", format, "--out", (dir / "a").string()}, flags));
    const auto b = cli(concat({"posterior", "--all", "--threads", "4", "--format", format, "--out", (dir / "b").string()}, flags));
    const auto c = cli(concat({"posterior", "--all", "--threads", "1", "--format", format, "--out", (dir / "c").string()}, flags));
    REQUIRE(a.code == kExitOk);
    REQUIRE(b.code == kExitOk);
    REQUIRE(c.code == kExitOk);
    for (const std::string name : {"posterior." + format, std::string("heatmap.csv")}) {
      CHECK(read_text_file(dir / "a" / name) == read_text_file(dir / "b" / name));
      CHECK(read_text_file(dir / "a" / name) == read_text_file(dir / "c" / name));
    }
  }
}

TEST_CASE("exit codes") {
  TempDir dir("cli-exit");
  write_file(dir / "cases.csv", "id,onset_date\nB,2020-01-10\nB,2020-01-11\n");
  auto r = cli({"posterior", "--cases", (dir / "cases.csv").string(), "--focal", "B", "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("duplicate case id") != std::string::npos);

  write_file(dir / "ok.csv", "id,onset_date\nB,2020-01-10\n");
  r = cli({"posterior", "--cases", (dir / "ok.csv").string(), "--focal", "Q", "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  r = cli({"posterior", "--cases", (dir / "ok.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  r = cli({"posterior", "--cases", (dir / "ok.csv").string(), "--focal", "B", "--prior", "noso:2", "--out",
           (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  r = cli({"posterior", "--cases", (dir / "missing.csv").string(), "--focal", "B", "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  r = cli({"ablation", "--cases", (dir / "ok.csv").string(), "--focal", "B", "--order", "genetics", "--out",
           (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  r = cli({"frobnicate"});
  CHECK(r.code == kExitValidation);

  write_file(dir / "degenerate.csv", "id,onset_date,admission_date\nB,2020-01-01,2020-01-01\n");
  write_file(dir / "density.txt", "waiting.discretization = density\n");
  r = cli({"posterior", "--cases", (dir / "degenerate.csv").string(), "--config", (dir / "density.txt").string(),
           "--focal", "B", "--out", (dir / "o").string()});
  CHECK(r.code == kExitDegenerate);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("ablation stages, deltas and the contact zero") {
  TempDir dir("cli-ablation");
  const auto s = build_snapshot(testsupport::three_candidate_ward(true));
  const auto flags = ward_flags(s, dir / "ward");
  const auto r = cli(concat({"ablation", "--focal", "B", "--order", "genetics,locations,admissions", "--out",
                             (dir / "out").string()},
                            flags));
  REQUIRE(r.code == kExitOk);
  const auto doc = load_json(dir / "out" / "ablation.json");
  const auto& stages = doc["results"][0]["stages"];
  REQUIRE(stages.size() == 4);
  CHECK(stages[0]["stage"] == "onsets");
  CHECK(stages[3]["stage"] == "admissions");

  // Stage 0 equals a posterior run with every optional source off.
  const auto p = cli(concat({"posterior", "--focal", "B", "--no-genetics", "--no-locations", "--no-admissions",
                             "--out", (dir / "post").string()},
                            flags));
  REQUIRE(p.code == kExitOk);
  const auto post = load_json(dir / "post" / "posterior.json");
  CHECK(stages[0]["posterior"]["sources"].size() == post["results"][0]["sources"].size());
  for (std::size_t i = 0; i < post["results"][0]["sources"].size(); ++i) {
    CHECK(stages[0]["posterior"]["sources"][i]["probability"] == post["results"][0]["sources"][i]["probability"]);
  }

  // Deltas telescope to final minus first.
  const std::size_t n = stages[0]["posterior"]["sources"].size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& stage : stages) sum += stage["posterior"]["sources"][i]["delta"].get<double>();
    const double first = stages[0]["posterior"]["sources"][i]["probability"];
    const double last = stages[3]["posterior"]["sources"][i]["probability"];
    CHECK(sum == doctest::Approx(last - first).epsilon(1e-12).scale(1e-12));
  }

  // Genetics makes A1 the favourite; locations then rule it out.
  CHECK(stages[1]["posterior"]["most_probable_source"] == "A1");
  CHECK(source_probability(stages[2]["posterior"], "A1") == 0.0);
  CHECK(source_probability(stages[3]["posterior"], "A1") == 0.0);
}
