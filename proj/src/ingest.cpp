#include "nostra/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace nostra {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV ------------------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  if (quoted) throw IngestError(IngestErrorKind::Format, "line " + std::to_string(line_no) + ": unterminated quote");
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)

  std::optional<std::size_t> column(std::string_view col) const {
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }

  std::size_t require(std::string_view col) const {
    if (auto c = column(col)) return *c;
    throw IngestError(IngestErrorKind::Format, name + ": missing required column '" + std::string(col) + "'");
  }

  std::string where(std::size_t line) const { return name + " line " + std::to_string(line); }
};

CsvTable read_csv(std::string_view text, std::string name) {
  CsvTable t{std::move(name), {}, {}};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw IngestError(IngestErrorKind::Format, t.where(line_no) + ": expected " + std::to_string(t.header.size()) +
                                                     " fields, found " + std::to_string(fields.size()));
    }
    t.rows.emplace_back(line_no, std::move(fields));
  }
  if (t.header.empty()) throw IngestError(IngestErrorKind::Format, t.name + ": missing header row");
  return t;
}

Date date_field(const CsvTable& t, std::size_t line, const std::string& value) {
  try {
    return parse_date(value);
  } catch (const std::invalid_argument& e) {
    throw IngestError(IngestErrorKind::DateParse, t.where(line) + ": " + e.what());
  }
}

std::optional<Date> optional_date_field(const CsvTable& t, std::size_t line, const std::vector<std::string>& row,
                                        std::optional<std::size_t> col) {
  if (!col || row[*col].empty()) return std::nullopt;
  return date_field(t, line, row[*col]);
}

std::string id_field(const CsvTable& t, std::size_t line, const std::string& value) {
  if (value.empty()) throw IngestError(IngestErrorKind::Format, t.where(line) + ": empty id");
  return value;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// ---- config ---------------------------------------------------------------

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "epidemic_start",        "horizon_end",           "genetic.ne",           "genetic.mu",
      "genetic.gen_time",      "genetic.error_mode",    "genetic.error_constant", "genetic.error_per_base",
      "waiting.meanlog",       "waiting.sdlog",         "waiting.discretization", "profile.min_offset",
      "profile.max_offset",    "profile.meanlog",       "profile.sdlog",        "profile.masses",
      "contact.default_weight",
  };
  return keys;
}

IngestError config_error(const std::string& key, const std::string& msg) {
  return IngestError(IngestErrorKind::Config, "config key '" + key + "': " + msg);
}

double config_double(const ConfigMap& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  if (auto v = parse_number<double>(it->second)) return *v;
  throw config_error(key, "not a number: '" + it->second + "'");
}

int config_int(const ConfigMap& c, const std::string& key, int fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  if (auto v = parse_number<int>(it->second)) return *v;
  throw config_error(key, "not an integer: '" + it->second + "'");
}

}  // namespace

bool ModelParams::operator==(const ModelParams& o) const {
  auto gen = [](const PathogenGeneticParams& g) {
    return std::tie(g.ne, g.mu, g.gen_time, g.error_mode, g.error_constant, g.error_per_base);
  };
  return gen(genetic) == gen(o.genetic) && waiting.meanlog == o.waiting.meanlog && waiting.sdlog == o.waiting.sdlog &&
         waiting.discretization == o.waiting.discretization && profile == o.profile &&
         default_contact_weight == o.default_contact_weight;
}

ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw IngestError(IngestErrorKind::Config, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_config_keys().contains(key)) {
      throw IngestError(IngestErrorKind::Config, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!out.emplace(key, value).second) {
      throw IngestError(IngestErrorKind::Config, "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

RunConfig resolve_config(const ConfigMap& c) {
  for (const auto& [key, value] : c) {
    if (!known_config_keys().contains(key)) throw config_error(key, "unknown key");
  }
  RunConfig rc;
  auto date_key = [&](const std::string& key) -> std::optional<Date> {
    const auto it = c.find(key);
    if (it == c.end()) return std::nullopt;
    try {
      return parse_date(it->second);
    } catch (const std::invalid_argument& e) {
      throw IngestError(IngestErrorKind::DateParse, "config key '" + key + "': " + e.what());
    }
  };
  rc.epidemic_start = date_key("epidemic_start").value_or(parse_date("2020-01-01"));
  rc.horizon_end = date_key("horizon_end");

  auto& g = rc.params.genetic;
  g.ne = config_double(c, "genetic.ne", g.ne);
  g.mu = config_double(c, "genetic.mu", g.mu);
  g.gen_time = config_double(c, "genetic.gen_time", g.gen_time);
  g.error_constant = config_double(c, "genetic.error_constant", g.error_constant);
  g.error_per_base = config_double(c, "genetic.error_per_base", g.error_per_base);
  if (auto it = c.find("genetic.error_mode"); it != c.end()) {
    if (it->second == "fixed") {
      g.error_mode = ErrorTermMode::FixedConstant;
    } else if (it->second == "per_base") {
      g.error_mode = ErrorTermMode::PerBase;
    } else {
      throw config_error(it->first, "expected 'fixed' or 'per_base'");
    }
  }

  auto& w = rc.params.waiting;
  w.meanlog = config_double(c, "waiting.meanlog", w.meanlog);
  w.sdlog = config_double(c, "waiting.sdlog", w.sdlog);
  if (auto it = c.find("waiting.discretization"); it != c.end()) {
    if (it->second == "day_bin") {
      w.discretization = Discretization::DayBin;
    } else if (it->second == "density") {
      w.discretization = Discretization::Density;
    } else {
      throw config_error(it->first, "expected 'day_bin' or 'density'");
    }
  }

  const int min_offset = config_int(c, "profile.min_offset", -3);
  if (auto it = c.find("profile.masses"); it != c.end()) {
    if (c.contains("profile.meanlog") || c.contains("profile.sdlog") || c.contains("profile.max_offset")) {
      throw config_error("profile.masses", "cannot be combined with profile.meanlog/sdlog/max_offset");
    }
    TransmissionProfile p{min_offset, {}};
    std::string_view rest = it->second;
    while (true) {
      const auto comma = rest.find(',');
      const auto v = parse_number<double>(rest.substr(0, comma));
      if (!v) throw config_error(it->first, "expected a comma-separated list of numbers");
      p.masses.push_back(*v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    rc.params.profile = std::move(p);
  } else {
    rc.params.profile = discretized_profile(min_offset, config_int(c, "profile.max_offset", 7),
                                            config_double(c, "profile.meanlog", 1.3),
                                            config_double(c, "profile.sdlog", 0.45));
  }
  rc.params.default_contact_weight = config_double(c, "contact.default_weight", 0.5);

  try {
    validate(rc.params.genetic);
    validate(rc.params.waiting);
    validate(rc.params.profile);
  } catch (const DomainError& e) {
    throw IngestError(IngestErrorKind::Config, std::string("config: ") + e.what());
  }
  if (!(rc.params.default_contact_weight >= 0.0 && rc.params.default_contact_weight <= 1.0)) {
    throw config_error("contact.default_weight", "must lie in [0, 1]");
  }
  return rc;
}

ConfigMap to_config_map(const RunConfig& rc) {
  ConfigMap c;
  c["epidemic_start"] = format_date(rc.epidemic_start);
  if (rc.horizon_end) c["horizon_end"] = format_date(*rc.horizon_end);
  const auto& g = rc.params.genetic;
  c["genetic.ne"] = format_double(g.ne);
  c["genetic.mu"] = format_double(g.mu);
  c["genetic.gen_time"] = format_double(g.gen_time);
  c["genetic.error_mode"] = g.error_mode == ErrorTermMode::FixedConstant ? "fixed" : "per_base";
  c["genetic.error_constant"] = format_double(g.error_constant);
  c["genetic.error_per_base"] = format_double(g.error_per_base);
  c["waiting.meanlog"] = format_double(rc.params.waiting.meanlog);
  c["waiting.sdlog"] = format_double(rc.params.waiting.sdlog);
  c["waiting.discretization"] = rc.params.waiting.discretization == Discretization::DayBin ? "day_bin" : "density";
  c["profile.min_offset"] = std::to_string(rc.params.profile.min_offset);
  std::string masses;
  for (double m : rc.params.profile.masses) {
    if (!masses.empty()) masses += ',';
    masses += format_double(m);
  }
  c["profile.masses"] = masses;
  c["contact.default_weight"] = format_double(rc.params.default_contact_weight);
  return c;
}

std::string render_config(const ConfigMap& config) {
  std::string out;
  for (const auto& [k, v] : config) out += k + " = " + v + "\n";
  return out;
}

std::vector<CaseRow> parse_cases_csv(std::string_view text) {
  const CsvTable t = read_csv(text, "cases");
  const auto c_id = t.require("id");
  const auto c_onset = t.require("onset_date");
  const auto c_adm = t.column("admission_date");
  const auto c_sample = t.column("sample_date");
  std::vector<CaseRow> out;
  for (const auto& [line, row] : t.rows) {
    out.push_back({id_field(t, line, row[c_id]), date_field(t, line, row[c_onset]),
                   optional_date_field(t, line, row, c_adm), optional_date_field(t, line, row, c_sample)});
  }
  return out;
}

std::vector<LocationRow> parse_locations_csv(std::string_view text) {
  const CsvTable t = read_csv(text, "locations");
  const auto c_id = t.require("id");
  const auto c_date = t.require("date");
  const auto c_loc = t.require("location_code");
  std::vector<LocationRow> out;
  for (const auto& [line, row] : t.rows) {
    if (row[c_loc].empty()) throw IngestError(IngestErrorKind::Format, t.where(line) + ": empty location_code");
    out.push_back({id_field(t, line, row[c_id]), date_field(t, line, row[c_date]), row[c_loc]});
  }
  return out;
}

std::vector<WeightRow> parse_weights_csv(std::string_view text) {
  const CsvTable t = read_csv(text, "weights");
  const auto c_a = t.require("id_a");
  const auto c_b = t.require("id_b");
  const auto c_date = t.require("date");
  const auto c_w = t.require("weight");
  std::vector<WeightRow> out;
  for (const auto& [line, row] : t.rows) {
    const auto w = parse_number<double>(row[c_w]);
    if (!w || !(*w >= 0.0 && *w <= 1.0)) {
      throw IngestError(IngestErrorKind::Format, t.where(line) + ": weight must be a number in [0, 1]");
    }
    out.push_back({id_field(t, line, row[c_a]), id_field(t, line, row[c_b]), date_field(t, line, row[c_date]), *w});
  }
  return out;
}

const CaseRecord& WardSnapshot::case_record(const CaseId& id) const {
  const auto it = cases.find(id);
  if (it == cases.end()) throw NotFoundError("unknown case id '" + id + "'");
  return it->second;
}

bool WardSnapshot::operator==(const WardSnapshot& o) const {
  return cases == o.cases && alignment.sequences() == o.alignment.sequences() && locations == o.locations &&
         contact_weights == o.contact_weights && params == o.params && frame == o.frame;
}

WardSnapshot build_snapshot(const WardData& data) {
  const RunConfig rc = resolve_config(data.config);
  WardSnapshot s;
  s.params = rc.params;
  s.frame.origin = rc.epidemic_start;

  Day latest = 0;
  auto to_day = [&](Date d, const std::string& what) {
    const Day day = days_between(rc.epidemic_start, d);
    if (day < 0) {
      throw IngestError(IngestErrorKind::Validation,
                        what + ": date " + format_date(d) + " precedes epidemic_start " + format_date(rc.epidemic_start));
    }
    latest = std::max(latest, day);
    return day;
  };

  for (const auto& row : data.cases) {
    const std::string what = "case '" + row.id + "'";
    CaseRecord rec{row.id, to_day(row.onset, what), std::nullopt, std::nullopt, false};
    if (row.admission) rec.admission = to_day(*row.admission, what);
    if (row.sample) rec.sample_time = to_day(*row.sample, what);
    if (rec.admission && *rec.admission > rec.onset) {
      throw IngestError(IngestErrorKind::Validation, what + ": admission_date is after onset_date");
    }
    if (!s.cases.emplace(row.id, std::move(rec)).second) {
      throw IngestError(IngestErrorKind::DuplicateCase, "duplicate case id '" + row.id + "'");
    }
  }

  auto require_case = [&](const CaseId& id, const std::string& source) {
    if (!s.cases.contains(id)) {
      throw IngestError(IngestErrorKind::UnknownReference, source + " references unknown case id '" + id + "'");
    }
  };

  for (const auto& row : data.locations) {
    require_case(row.id, "locations");
    const Day day = to_day(row.date, "location of '" + row.id + "'");
    if (!s.locations[row.id].emplace(day, row.location).second) {
      throw IngestError(IngestErrorKind::DuplicateRow,
                        "locations: case '" + row.id + "' has two rows for " + format_date(row.date));
    }
  }

  for (const auto& row : data.weights) {
    require_case(row.id_a, "weights");
    require_case(row.id_b, "weights");
    if (row.id_a == row.id_b) {
      throw IngestError(IngestErrorKind::Validation, "weights: row pairs case '" + row.id_a + "' with itself");
    }
    if (!(row.weight >= 0.0 && row.weight <= 1.0)) {
      throw IngestError(IngestErrorKind::Validation, "weights: weight outside [0, 1]");
    }
    const Day day = to_day(row.date, "weight for '" + row.id_a + "'/'" + row.id_b + "'");
    if (!s.contact_weights[pair_key(row.id_a, row.id_b)].emplace(day, row.weight).second) {
      throw IngestError(IngestErrorKind::DuplicateRow, "weights: pair '" + row.id_a + "'/'" + row.id_b +
                                                           "' has two rows for " + format_date(row.date));
    }
  }

  for (const auto& rec : data.sequences) require_case(rec.id, "fasta");
  try {
    s.alignment = Alignment(data.sequences);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const bool length = msg.find("length") != std::string::npos;
    throw IngestError(length ? IngestErrorKind::SequenceLength : IngestErrorKind::Format, msg);
  }
  for (auto& [id, rec] : s.cases) rec.has_sequence = s.alignment.contains(id);

  if (rc.horizon_end) {
    const Day end = days_between(rc.epidemic_start, *rc.horizon_end);
    if (end < latest) {
      throw IngestError(IngestErrorKind::Validation, "data extends past horizon_end " + format_date(*rc.horizon_end));
    }
    s.frame.horizon_end = end;
  } else {
    s.frame.horizon_end = latest;
  }

  for (const auto& [id, rec] : s.cases) {
    if (!rec.has_sequence) s.warnings.push_back("case '" + id + "' has no sequence");
    if (!s.locations.contains(id)) s.warnings.push_back("case '" + id + "' has no location records");
  }
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestErrorKind::Format, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WardData read_ward_files(const WardPaths& paths) {
  WardData d;
  d.cases = parse_cases_csv(read_text_file(paths.cases));
  if (paths.locations) d.locations = parse_locations_csv(read_text_file(*paths.locations));
  if (paths.weights) d.weights = parse_weights_csv(read_text_file(*paths.weights));
  if (paths.config) d.config = parse_config(read_text_file(*paths.config));
  if (paths.fasta) {
    std::ifstream in(*paths.fasta);
    if (!in) throw IngestError(IngestErrorKind::Format, "cannot open '" + paths.fasta->string() + "'");
    try {
      d.sequences = read_fasta(in);
    } catch (const std::invalid_argument& e) {
      throw IngestError(IngestErrorKind::Format, e.what());
    }
  }
  return d;
}

WardSnapshot load_ward(const WardPaths& paths) { return build_snapshot(read_ward_files(paths)); }

WardPaths write_ward(const WardSnapshot& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WardPaths p{dir / "cases.csv", dir / "locations.csv", dir / "weights.csv", dir / "sequences.fasta",
              dir / "config.txt"};
  auto date = [&](Day d) { return format_date(add_days(s.frame.origin, d)); };
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(IngestErrorKind::Format, "cannot write '" + path.string() + "'");
    return out;
  };
  {
    auto out = open(p.cases);
    out << "id,onset_date,admission_date,sample_date\n";
    for (const auto& [id, c] : s.cases) {
      out << id << ',' << date(c.onset) << ',' << (c.admission ? date(*c.admission) : "") << ','
          << (c.sample_time ? date(*c.sample_time) : "") << '\n';
    }
  }
  {
    auto out = open(*p.locations);
    out << "id,date,location_code\n";
    for (const auto& [id, days] : s.locations) {
      for (const auto& [day, code] : days) out << id << ',' << date(day) << ',' << code << '\n';
    }
  }
  {
    auto out = open(*p.weights);
    out << "id_a,id_b,date,weight\n";
    for (const auto& [key, days] : s.contact_weights) {
      for (const auto& [day, w] : days) {
        out << key.first << ',' << key.second << ',' << date(day) << ',' << format_double(w) << '\n';
      }
    }
  }
  {
    auto out = open(*p.fasta);
    for (const auto& [id, seq] : s.alignment.sequences()) out << '>' << id << '\n' << seq << '\n';
  }
  {
    RunConfig rc{s.params, s.frame.origin, add_days(s.frame.origin, s.frame.horizon_end)};
    auto out = open(*p.config);
    out << render_config(to_config_map(rc));
  }
  return p;
}

ContactHistory build_contact_history(const WardSnapshot& s, const CaseId& az, const CaseId& focal) {
  s.case_record(az);
  s.case_record(focal);
  static const std::map<Day, std::string> kNone;
  static const std::map<Day, double> kNoWeights;
  const auto find_locs = [&](const CaseId& id) -> const std::map<Day, std::string>& {
    const auto it = s.locations.find(id);
    return it == s.locations.end() ? kNone : it->second;
  };
  const auto& la = find_locs(az);
  const auto& lb = find_locs(focal);
  const auto wit = s.contact_weights.find(pair_key(az, focal));
  const auto& weights = wit == s.contact_weights.end() ? kNoWeights : wit->second;

  std::set<Day> coverage;
  for (const auto& [d, _] : la) coverage.insert(d);
  for (const auto& [d, _] : lb) coverage.insert(d);
  for (const auto& [d, _] : weights) coverage.insert(d);

  std::vector<ContactDay> days;
  days.reserve(coverage.size());
  for (Day d : coverage) {
    const auto a = la.find(d);
    const auto b = lb.find(d);
    if (a != la.end() && b != lb.end()) {
      days.push_back({d, a->second == b->second ? ContactStatus::Together : ContactStatus::Apart, 0.5});
    } else {
      const auto w = weights.find(d);
      days.push_back({d, ContactStatus::Unknown, w != weights.end() ? w->second : s.params.default_contact_weight});
    }
  }
  return make_contact_history(std::move(days), s.params.default_contact_weight);
}

}  // namespace nostra
