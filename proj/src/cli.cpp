#include "nostra/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "nostra/inference.hpp"
#include "nostra/ingest.hpp"
#include "nostra/report.hpp"

namespace nostra {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string cases;
  std::string locations;
  std::string weights;
  std::string fasta;
  std::string config;
  std::string focal;
  bool all = false;
  std::vector<std::string> candidates;
  std::string prior = "uniform";
  std::string out_dir;
  std::string format = "json";
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--cases", o.cases, "Cases CSV")->required();
  cmd->add_option("--locations", o.locations, "Locations CSV");
  cmd->add_option("--weights", o.weights, "Elicited contact weights CSV");
  cmd->add_option("--fasta", o.fasta, "Aligned sequences (FASTA)");
  cmd->add_option("--config", o.config, "Run configuration file");
  auto* focal = cmd->add_option("--focal", o.focal, "Focal case id");
  auto* all = cmd->add_flag("--all", o.all, "Every case in turn as the focal case");
  focal->excludes(all);
  cmd->add_option("--candidates", o.candidates, "Candidate ids (default: every other case)")->delimiter(',');
  cmd->add_option("--prior", o.prior, "uniform | noso:<p>");
  cmd->add_option("--out", o.out_dir, "Output directory")->required();
  cmd->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", o.threads, "Worker threads for --all (0 = hardware concurrency)");
}

struct Inputs {
  WardPaths paths;
  Provenance provenance;
};

Inputs resolve_inputs(const CommonOptions& o) {
  Inputs in;
  in.paths.cases = o.cases;
  in.provenance.inputs.push_back(digest_file("cases", in.paths.cases));
  auto optional = [&](const std::string& value, const std::string& role, std::optional<fs::path>& slot) {
    if (value.empty()) return;
    slot = value;
    in.provenance.inputs.push_back(digest_file(role, *slot));
  };
  optional(o.locations, "locations", in.paths.locations);
  optional(o.weights, "weights", in.paths.weights);
  optional(o.fasta, "fasta", in.paths.fasta);
  optional(o.config, "config", in.paths.config);
  return in;
}

std::vector<CaseId> resolve_focals(const CommonOptions& o, const WardSnapshot& s) {
  if (o.all) {
    std::vector<CaseId> ids;
    for (const auto& [id, _] : s.cases) ids.push_back(id);
    return ids;
  }
  if (o.focal.empty()) throw CLI::ValidationError("--focal", "one of --focal or --all is required");
  s.case_record(o.focal);
  return {o.focal};
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError(IngestErrorKind::Format, "cannot write '" + path.string() + "'");
  out << body;
}

unsigned worker_count(unsigned requested) {
  return requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
}

std::vector<SourcePosterior> run_posteriors(const InferenceEngine& engine, const CommonOptions& o,
                                            const std::vector<CaseId>& focals, const SourcePrior& prior,
                                            const DataToggles& toggles) {
  if (o.candidates.empty()) return posterior_matrix(engine, focals, prior, toggles, worker_count(o.threads));
  std::vector<SourcePosterior> out;
  for (const auto& f : focals) {
    std::vector<CaseId> cands;
    for (const auto& c : o.candidates) {
      if (c != f) cands.push_back(c);
    }
    out.push_back(engine.posterior(f, cands, prior, toggles));
  }
  return out;
}

int posterior_command(const CommonOptions& o, const DataToggles& toggles, std::ostream& out) {
  Inputs in = resolve_inputs(o);
  const WardSnapshot snapshot = load_ward(in.paths);
  const InferenceEngine engine(snapshot);
  const SourcePrior prior = SourcePrior::parse(o.prior);
  const auto focals = resolve_focals(o, snapshot);
  const auto results = run_posteriors(engine, o, focals, prior, toggles);

  in.provenance.params = to_config_map({snapshot.params, snapshot.frame.origin,
                                        add_days(snapshot.frame.origin, snapshot.frame.horizon_end)});
  in.provenance.prior = prior.to_string();
  in.provenance.warnings = snapshot.warnings;

  fs::create_directories(o.out_dir);
  const fs::path dir = o.out_dir;
  if (o.format == "json") {
    write_file(dir / "posterior.json", posterior_report(in.provenance, toggles, results).dump(2) + "\n");
  } else {
    write_file(dir / "posterior.csv", posterior_csv(results));
  }
  if (o.all) {
    std::vector<CaseId> ids;
    for (const auto& [id, _] : snapshot.cases) ids.push_back(id);
    write_file(dir / "heatmap.csv", heatmap_csv(results, ids));
  }
  out << "wrote " << results.size() << " posterior block(s) to " << dir.string() << "\n";
  return kExitOk;
}

int ablation_command(const CommonOptions& o, const std::string& order_text, std::ostream& out) {
  Inputs in = resolve_inputs(o);
  const WardSnapshot snapshot = load_ward(in.paths);
  const InferenceEngine engine(snapshot);
  const SourcePrior prior = SourcePrior::parse(o.prior);
  const auto order = parse_ablation_order(order_text);
  const auto focals = resolve_focals(o, snapshot);

  std::vector<FocalAblation> results;
  for (const auto& f : focals) {
    std::vector<CaseId> cands;
    if (o.candidates.empty()) {
      cands = engine.default_candidates(f);
    } else {
      for (const auto& c : o.candidates) {
        if (c != f) cands.push_back(c);
      }
    }
    results.push_back({f, engine.ablation_sequence(f, cands, prior, order)});
  }

  in.provenance.params = to_config_map({snapshot.params, snapshot.frame.origin,
                                        add_days(snapshot.frame.origin, snapshot.frame.horizon_end)});
  in.provenance.prior = prior.to_string();
  in.provenance.warnings = snapshot.warnings;

  fs::create_directories(o.out_dir);
  const fs::path dir = o.out_dir;
  if (o.format == "json") {
    write_file(dir / "ablation.json", ablation_report(in.provenance, results).dump(2) + "\n");
  } else {
    write_file(dir / "ablation.csv", ablation_csv(results));
  }
  out << "wrote ablation for " << results.size() << " focal case(s) to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infection-source attribution for hospital patients"};
  app.require_subcommand(1);

  CommonOptions post_opts;
  bool no_genetics = false, no_locations = false, no_admissions = false;
  auto* post = app.add_subcommand("posterior", "Posterior over infection sources");
  add_common(post, post_opts);
  post->add_flag("--no-genetics", no_genetics, "Ignore sequence data");
  post->add_flag("--no-locations", no_locations, "Ignore co-location data");
  post->add_flag("--no-admissions", no_admissions, "Ignore admission dates");

  CommonOptions abl_opts;
  std::string order = "genetics,locations,admissions";
  auto* abl = app.add_subcommand("ablation", "Posteriors with data sources added one at a time");
  add_common(abl, abl_opts);
  abl->add_option("--order", order, "Permutation of genetics,locations,admissions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (post->parsed()) {
      DataToggles toggles;
      toggles.use_genetics = !no_genetics;
      toggles.use_locations = !no_locations;
      toggles.use_admissions = !no_admissions;
      return posterior_command(post_opts, toggles, out);
    }
    return ablation_command(abl_opts, order, out);
  } catch (const DegenerateEvidenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace nostra
