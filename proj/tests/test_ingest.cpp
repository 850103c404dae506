#include <doctest.h>

#include <functional>
#include <random>

#include "nostra/ingest.hpp"
#include "support/random_ward.hpp"
#include "support/temp_dir.hpp"

using namespace nostra;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

IngestErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const IngestError& e) {
    return e.kind();
  }
  FAIL("expected an IngestError");
  return IngestErrorKind::Format;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const IngestError& e) {
    return e.what();
  }
  return {};
}

WardData one_case() {
  WardData w;
  w.cases = parse_cases_csv("id,onset_date\nB,2020-01-10\n");
  return w;
}

}  // namespace

TEST_CASE("minimal ward loads with an empty alignment") {
  TempDir dir("ingest-min");
  write_file(dir / "cases.csv", "id,onset_date,admission_date,sample_date\nB,2020-01-10,,\n");
  const auto s = load_ward({dir / "cases.csv", std::nullopt, std::nullopt, std::nullopt, std::nullopt});
  CHECK(s.cases.size() == 1);
  CHECK(s.alignment.empty());
  CHECK(s.case_record("B").onset == 9);
  CHECK_FALSE(s.case_record("B").admission);
  CHECK(s.warnings.size() == 2);
  CHECK(s.params == ModelParams{});
}

TEST_CASE("fasta id without a case row names the id") {
  auto w = one_case();
  w.sequences = {{"B", "ACGT"}, {"Z9", "ACGT"}};
  CHECK(kind_of([&] { build_snapshot(w); }) == IngestErrorKind::UnknownReference);
  CHECK(message_of([&] { build_snapshot(w); }).find("Z9") != std::string::npos);
}

TEST_CASE("each load failure has its own kind") {
  CHECK(kind_of([] { parse_cases_csv("id,onset_date\nB,2020-13-01\n"); }) == IngestErrorKind::DateParse);
  CHECK(kind_of([] { parse_cases_csv("id,onset_date\nB,10/01/2020\n"); }) == IngestErrorKind::DateParse);
  CHECK(kind_of([] { parse_cases_csv("id\nB\n"); }) == IngestErrorKind::Format);
  CHECK(kind_of([] { parse_cases_csv("id,onset_date\nB,2020-01-01,extra\n"); }) == IngestErrorKind::Format);

  auto dup = one_case();
  dup.cases.push_back(dup.cases.front());
  CHECK(kind_of([&] { build_snapshot(dup); }) == IngestErrorKind::DuplicateCase);

  auto lengths = one_case();
  lengths.cases.push_back({"C", parse_date("2020-01-05"), std::nullopt, std::nullopt});
  lengths.sequences = {{"B", "ACGT"}, {"C", "ACG"}};
  CHECK(kind_of([&] { build_snapshot(lengths); }) == IngestErrorKind::SequenceLength);

  auto early = one_case();
  early.config["epidemic_start"] = "2020-02-01";
  CHECK(kind_of([&] { build_snapshot(early); }) == IngestErrorKind::Validation);

  auto adm = one_case();
  adm.cases[0].admission = parse_date("2020-01-12");
  CHECK(kind_of([&] { build_snapshot(adm); }) == IngestErrorKind::Validation);

  auto loc = one_case();
  loc.locations = parse_locations_csv("id,date,location_code\nX,2020-01-02,W1\n");
  CHECK(kind_of([&] { build_snapshot(loc); }) == IngestErrorKind::UnknownReference);

  auto twice = one_case();
  twice.locations = parse_locations_csv("id,date,location_code\nB,2020-01-02,W1\nB,2020-01-02,W2\n");
  CHECK(kind_of([&] { build_snapshot(twice); }) == IngestErrorKind::DuplicateRow);

  auto horizon = one_case();
  horizon.config["horizon_end"] = "2020-01-05";
  CHECK(kind_of([&] { build_snapshot(horizon); }) == IngestErrorKind::Validation);

  CHECK(kind_of([] { parse_config("genetic.nee = 3\n"); }) == IngestErrorKind::Config);
  CHECK(kind_of([] { parse_config("genetic.ne = 3\ngenetic.ne = 4\n"); }) == IngestErrorKind::Config);
  CHECK(kind_of([] { parse_config("genetic.ne 3\n"); }) == IngestErrorKind::Config);
  CHECK(kind_of([] { resolve_config({{"genetic.ne", "abc"}}); }) == IngestErrorKind::Config);
  CHECK(kind_of([] { resolve_config({{"genetic.ne", "-1"}}); }) == IngestErrorKind::Config);
  CHECK(kind_of([] { resolve_config({{"profile.masses", "0.5,0.5"}, {"profile.meanlog", "1"}}); }) ==
        IngestErrorKind::Config);
}

TEST_CASE("CUH config echoes exactly") {
  const auto rc = resolve_config(parse_config(
      "# CUH ward\n"
      "epidemic_start = 2020-01-01\n"
      "genetic.ne = 51\n"
      "genetic.gen_time = 5.5\n"
      "genetic.mu = 1.829e-6   # per site per day\n"
      "genetic.error_constant = 0.404\n"));
  CHECK(rc.epidemic_start == parse_date("2020-01-01"));
  CHECK(rc.params.genetic.ne == 51.0);
  CHECK(rc.params.genetic.gen_time == 5.5);
  CHECK(rc.params.genetic.mu == 1.829e-6);
  CHECK(rc.params.genetic.error_constant == 0.404);
  CHECK(rc.params.genetic.error_mode == ErrorTermMode::FixedConstant);
  CHECK(resolve_config(parse_config(render_config(to_config_map(rc)))).params == rc.params);
}

TEST_CASE("explicit profile masses") {
  const auto rc = resolve_config({{"profile.min_offset", "-1"}, {"profile.masses", "0.25, 0.5,0.25"}});
  CHECK(rc.params.profile.min_offset == -1);
  CHECK(rc.params.profile.masses == std::vector<double>{0.25, 0.5, 0.25});
}

TEST_CASE("quoted csv fields and column order") {
  const auto rows = parse_cases_csv("sample_date,\"id\",onset_date\n2020-01-03,\"B, 1\",2020-01-02\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].id == "B, 1");
  CHECK(rows[0].sample == parse_date("2020-01-03"));
  CHECK_FALSE(rows[0].admission);
}

TEST_CASE("contact history from locations") {
  WardData w;
  w.cases = parse_cases_csv("id,onset_date\nA,2020-01-10\nB,2020-01-12\n");
  w.locations = parse_locations_csv(
      "id,date,location_code\n"
      "A,2020-01-02,W1\nB,2020-01-02,W1\n"
      "A,2020-01-03,W1\nB,2020-01-03,W1\n"
      "A,2020-01-04,A\nB,2020-01-04,B\n"
      "A,2020-01-05,W1\n");
  w.weights = parse_weights_csv("id_a,id_b,date,weight\nB,A,2020-01-06,0.3\n");
  const auto s = build_snapshot(w);
  const auto h = build_contact_history(s, "A", "B");
  REQUIRE(h.days.size() == 5);
  CHECK(h.days[0].status == ContactStatus::Together);
  CHECK(h.days[1].status == ContactStatus::Together);
  CHECK(h.days[2].status == ContactStatus::Apart);
  CHECK(h.days[3].status == ContactStatus::Unknown);
  CHECK(h.days[3].weight == 0.5);
  CHECK(h.days[4].day == 5);
  CHECK(h.days[4].status == ContactStatus::Unknown);
  CHECK(h.days[4].weight == 0.3);
}

TEST_CASE("contact history is symmetric and round trips through files") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto data = testsupport::random_ward(rng, {});
    const auto s = build_snapshot(data);
    for (const auto& [a, _] : s.cases) {
      for (const auto& [b, __] : s.cases) {
        if (a == b) continue;
        const auto ab = build_contact_history(s, a, b);
        const auto ba = build_contact_history(s, b, a);
        REQUIRE(ab.days.size() == ba.days.size());
        for (std::size_t i = 0; i < ab.days.size(); ++i) {
          CHECK(ab.days[i].day == ba.days[i].day);
          CHECK(ab.days[i].status == ba.days[i].status);
          CHECK(ab.days[i].weight == ba.days[i].weight);
        }
      }
    }
    TempDir dir("roundtrip");
    const auto paths = write_ward(s, dir.path());
    const auto again = load_ward(paths);
    CHECK(again == s);
    const auto third = load_ward(write_ward(again, dir / "second"));
    CHECK(third == s);
  }
}
