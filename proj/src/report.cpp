#include "nostra/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>

namespace nostra {

using nlohmann::json;

namespace {

json log_lik_json(LogProb v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* kind_name(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::Candidate: return "candidate";
    case HypothesisKind::Hospital: return "hospital";
    case HypothesisKind::Community: return "community";
  }
  return "";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

InputDigest digest_file(const std::string& role, const std::filesystem::path& path) {
  return {role, path.filename().string(), sha256_hex(read_text_file(path))};
}

json toggles_json(const DataToggles& t) {
  return {{"onsets", t.use_onsets}, {"genetics", t.use_genetics}, {"locations", t.use_locations},
          {"admissions", t.use_admissions}};
}

json posterior_json(const SourcePosterior& p) {
  json sources = json::array();
  for (const auto& e : p.entries) {
    sources.push_back({{"source", e.hypothesis.label()},
                       {"kind", kind_name(e.hypothesis.kind)},
                       {"prior", e.prior},
                       {"probability", e.probability},
                       {"log_likelihood", log_lik_json(e.log_likelihood)}});
  }
  return {{"focal", p.focal},
          {"sources", sources},
          {"nosocomial", p.nosocomial},
          {"most_probable_source", p.map_estimate().hypothesis.label()},
          {"notes", p.notes}};
}

json provenance_json(const Provenance& p) {
  json inputs = json::array();
  for (const auto& d : p.inputs) inputs.push_back({{"role", d.role}, {"file", d.file}, {"sha256", d.sha256}});
  return {{"parameters", p.params}, {"prior", p.prior}, {"inputs", inputs}, {"warnings", p.warnings}};
}

json posterior_report(const Provenance& prov, const DataToggles& toggles, const std::vector<SourcePosterior>& results) {
  json blocks = json::array();
  for (const auto& r : results) blocks.push_back(posterior_json(r));
  json prov_json = provenance_json(prov);
  prov_json["toggles"] = toggles_json(toggles);
  return {{"schema", kReportSchema}, {"kind", "posterior"}, {"provenance", prov_json}, {"results", blocks}};
}

json ablation_report(const Provenance& prov, const std::vector<FocalAblation>& results) {
  json focals = json::array();
  for (const auto& fa : results) {
    json stages = json::array();
    for (std::size_t s = 0; s < fa.stages.size(); ++s) {
      const auto& stage = fa.stages[s];
      json block = posterior_json(stage.posterior);
      const SourcePosterior* prev = s == 0 ? nullptr : &fa.stages[s - 1].posterior;
      for (std::size_t i = 0; i < stage.posterior.entries.size(); ++i) {
        block["sources"][i]["delta"] =
            prev ? stage.posterior.entries[i].probability - prev->entries[i].probability : 0.0;
      }
      block["nosocomial_delta"] = prev ? stage.posterior.nosocomial - prev->nosocomial : 0.0;
      stages.push_back({{"stage", stage.name}, {"toggles", toggles_json(stage.toggles)}, {"posterior", block}});
    }
    focals.push_back({{"focal", fa.focal}, {"stages", stages}});
  }
  return {{"schema", kReportSchema}, {"kind", "ablation"}, {"provenance", provenance_json(prov)}, {"results", focals}};
}

std::string posterior_csv(const std::vector<SourcePosterior>& results) {
  std::string out = "focal,source,kind,prior,probability,log_likelihood,nosocomial\n";
  for (const auto& p : results) {
    for (const auto& e : p.entries) {
      out += csv_field(p.focal) + ',' + csv_field(e.hypothesis.label()) + ',' + kind_name(e.hypothesis.kind) + ',' +
             format_number(e.prior) + ',' + format_number(e.probability) + ',' + format_number(e.log_likelihood) +
             ',' + format_number(p.nosocomial) + '\n';
    }
  }
  return out;
}

std::string ablation_csv(const std::vector<FocalAblation>& results) {
  std::string out = "focal,stage,source,kind,probability,delta,log_likelihood,nosocomial\n";
  for (const auto& fa : results) {
    for (std::size_t s = 0; s < fa.stages.size(); ++s) {
      const auto& p = fa.stages[s].posterior;
      for (std::size_t i = 0; i < p.entries.size(); ++i) {
        const auto& e = p.entries[i];
        const double delta = s == 0 ? 0.0 : e.probability - fa.stages[s - 1].posterior.entries[i].probability;
        out += csv_field(fa.focal) + ',' + fa.stages[s].name + ',' + csv_field(e.hypothesis.label()) + ',' +
               kind_name(e.hypothesis.kind) + ',' + format_number(e.probability) + ',' + format_number(delta) + ',' +
               format_number(e.log_likelihood) + ',' + format_number(p.nosocomial) + '\n';
      }
    }
  }
  return out;
}

std::string heatmap_csv(const std::vector<SourcePosterior>& results, const std::vector<CaseId>& all_cases) {
  std::string out = "focal";
  for (const auto& id : all_cases) out += ',' + csv_field(id);
  out += ",Hospital,Community,Nosocomial\n";
  for (const auto& p : results) {
    std::map<std::string, double> by_candidate;
    for (const auto& e : p.entries) {
      if (e.hypothesis.kind == HypothesisKind::Candidate) by_candidate[e.hypothesis.candidate] = e.probability;
    }
    out += csv_field(p.focal);
    for (const auto& id : all_cases) {
      out += ',';
      if (auto it = by_candidate.find(id); it != by_candidate.end()) out += format_number(it->second);
    }
    out += ',' + format_number(p.probability(Hypothesis::hospital())) + ',' +
           format_number(p.probability(Hypothesis::community())) + ',' + format_number(p.nosocomial) + '\n';
  }
  return out;
}

}  // namespace nostra
