#include "nostra/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "nostra/report.hpp"

namespace nostra {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string string_field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ApiError(400, "missing field '" + path + "'", path);
  const json& v = obj.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) throw ApiError(400, "field must be a non-empty string", path);
  return v.get<std::string>();
}

Date date_field(const json& obj, const std::string& key, const std::string& path) {
  const std::string text = string_field(obj, key, path);
  try {
    return parse_date(text);
  } catch (const std::invalid_argument& e) {
    throw ApiError(400, e.what(), path);
  }
}

std::optional<Date> optional_date(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (obj.at(key).is_string() && obj.at(key).get<std::string>().empty()) return std::nullopt;
  return date_field(obj, key, path);
}

const json& rows_field(const json& event) {
  if (!event.contains("rows") || !event.at("rows").is_array()) throw ApiError(400, "'rows' must be an array", "rows");
  return event.at("rows");
}

std::string config_value(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  throw ApiError(400, "config values must be strings or numbers", "config." + key);
}

}  // namespace

// ---- WardSession ------------------------------------------------------------

WardSession::WardSession(std::string id, std::optional<fs::path> log_path)
    : id_(std::move(id)), log_path_(std::move(log_path)) {
  publish(state_, 0);
}

std::shared_ptr<const WardView> WardSession::view() const {
  std::shared_lock lock(view_mutex_);
  return view_;
}

void WardSession::mutate(State& state, const json& event) {
  if (!event.is_object() || !event.contains("type") || !event.at("type").is_string()) {
    throw ApiError(400, "event needs a string 'type'", "type");
  }
  const std::string type = event.at("type").get<std::string>();
  if (type == "upsert_case") {
    if (!event.contains("case")) throw ApiError(400, "missing field 'case'", "case");
    const json& c = event.at("case");
    CaseRow row{string_field(c, "id", "case.id"), date_field(c, "onset_date", "case.onset_date"),
                optional_date(c, "admission_date", "case.admission_date"),
                optional_date(c, "sample_date", "case.sample_date")};
    state.cases[row.id] = row;
  } else if (type == "upsert_locations") {
    const json& rows = rows_field(event);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string p = "rows[" + std::to_string(i) + "]";
      state.locations[{string_field(rows[i], "id", p + ".id"), date_field(rows[i], "date", p + ".date")}] =
          string_field(rows[i], "location_code", p + ".location_code");
    }
  } else if (type == "upsert_weights") {
    const json& rows = rows_field(event);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string p = "rows[" + std::to_string(i) + "]";
      const json& r = rows[i];
      if (!r.contains("weight") || !r.at("weight").is_number()) {
        throw ApiError(400, "weight must be a number", p + ".weight");
      }
      const double w = r.at("weight").get<double>();
      if (!(w >= 0.0 && w <= 1.0)) throw ApiError(400, "weight must lie in [0, 1]", p + ".weight");
      const auto key = pair_key(string_field(r, "id_a", p + ".id_a"), string_field(r, "id_b", p + ".id_b"));
      state.weights[{key, date_field(r, "date", p + ".date")}] = w;
    }
  } else if (type == "upload_fasta") {
    std::istringstream in(string_field(event, "fasta", "fasta"));
    std::vector<FastaRecord> records;
    try {
      records = read_fasta(in);
    } catch (const std::invalid_argument& e) {
      throw ApiError(400, e.what(), "fasta");
    }
    for (auto& r : records) state.sequences[r.id] = std::move(r.residues);
  } else if (type == "set_params") {
    if (!event.contains("config") || !event.at("config").is_object()) {
      throw ApiError(400, "'config' must be an object", "config");
    }
    for (const auto& [key, value] : event.at("config").items()) {
      if (value.is_null()) {
        state.config.erase(key);
      } else {
        state.config[key] = config_value(value, key);
      }
    }
  } else {
    throw ApiError(400, "unknown event type '" + type + "'", "type");
  }
}

WardData WardSession::to_ward_data(const State& state) {
  WardData d;
  for (const auto& [_, row] : state.cases) d.cases.push_back(row);
  for (const auto& [key, code] : state.locations) d.locations.push_back({key.first, key.second, code});
  for (const auto& [key, w] : state.weights) d.weights.push_back({key.first.first, key.first.second, key.second, w});
  for (const auto& [id, seq] : state.sequences) d.sequences.push_back({id, seq});
  d.config = state.config;
  return d;
}

void WardSession::publish(State next, std::uint64_t revision) {
  WardSnapshot snapshot = build_snapshot(to_ward_data(next));
  publish_snapshot(std::move(next), std::move(snapshot), revision);
}

void WardSession::publish_snapshot(State next, WardSnapshot snapshot, std::uint64_t revision) {
  auto view = std::make_shared<WardView>();
  view->revision = revision;
  view->snapshot = std::move(snapshot);
  view->engine = std::make_unique<InferenceEngine>(view->snapshot);
  state_ = std::move(next);
  std::unique_lock lock(view_mutex_);
  view_ = std::move(view);
}

std::uint64_t WardSession::apply(const json& event, std::optional<std::uint64_t> expected_revision) {
  std::lock_guard write(write_mutex_);
  const std::uint64_t current = view()->revision;
  if (expected_revision && *expected_revision != current) {
    throw ApiError(409, "revision conflict: ward is at revision " + std::to_string(current) + ", request expected " +
                            std::to_string(*expected_revision));
  }
  State next = state_;
  mutate(next, event);
  WardSnapshot snapshot;
  try {
    snapshot = build_snapshot(to_ward_data(next));
  } catch (const IngestError& e) {
    throw ApiError(400, e.what());
  }
  const std::uint64_t revision = current + 1;
  if (log_path_) {
    std::ofstream log(*log_path_, std::ios::app | std::ios::binary);
    if (!log) throw ApiError(500, "cannot append to the ward event log");
    log << json{{"revision", revision}, {"event", event}}.dump() << '\n';
    log.flush();
    if (!log) throw ApiError(500, "cannot append to the ward event log");
  }
  publish_snapshot(std::move(next), std::move(snapshot), revision);
  return revision;
}

void WardSession::replay(const json& event) {
  std::lock_guard write(write_mutex_);
  State next = state_;
  mutate(next, event);
  publish(std::move(next), view()->revision + 1);
}

// ---- WardStore --------------------------------------------------------------

WardStore::WardStore(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.data_dir) return;
  fs::create_directories(*options_.data_dir);
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(*options_.data_dir)) {
    if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    const std::string id = path.stem().string();
    auto session = std::make_shared<WardSession>(id, path);
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      session->replay(json::parse(line).at("event"));
    }
    wards_.emplace(id, session);
    constexpr std::string_view prefix = "ward-";
    if (id.starts_with(prefix)) {
      try {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(prefix.size())) + 1);
      } catch (const std::exception&) {
      }
    }
  }
}

std::shared_ptr<WardSession> WardStore::create() {
  std::unique_lock lock(mutex_);
  const std::string id = "ward-" + std::to_string(next_id_++);
  std::optional<fs::path> log;
  if (options_.data_dir) {
    log = *options_.data_dir / (id + ".jsonl");
    std::ofstream touch(*log, std::ios::app);
  }
  auto session = std::make_shared<WardSession>(id, log);
  wards_.emplace(id, session);
  return session;
}

std::shared_ptr<WardSession> WardStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = wards_.find(id);
  if (it == wards_.end()) throw ApiError(404, "unknown ward '" + id + "'");
  return it->second;
}

// ---- HTTP -------------------------------------------------------------------

json posterior_body(const WardView& view, const SourcePosterior& p) {
  json body = posterior_json(p);
  body["revision"] = view.revision;
  body["toggles"] = toggles_json(p.toggles);
  return body;
}

json summary_body(const WardView& view, const std::vector<SourcePosterior>& rows) {
  json columns = json::array();
  for (const auto& [id, _] : view.snapshot.cases) columns.push_back(id);
  columns.push_back("Hospital");
  columns.push_back("Community");
  columns.push_back("Nosocomial");
  json out_rows = json::array();
  for (const auto& p : rows) {
    json cells = json::object();
    for (const auto& e : p.entries) cells[e.hypothesis.label()] = e.probability;
    cells["Nosocomial"] = p.nosocomial;
    out_rows.push_back({{"focal", p.focal}, {"cells", cells}});
  }
  return {{"revision", view.revision}, {"columns", columns}, {"rows", out_rows}};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
  json err = {{"status", status}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  send_json(res, status, {{"error", err}});
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ApiError& e) {
      send_error(res, e.status(), e.what(), e.field());
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const DegenerateEvidenceError& e) {
      send_error(res, 422, e.what());
    } catch (const IngestError& e) {
      send_error(res, 400, e.what());
    } catch (const DomainError& e) {
      send_error(res, 400, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("invalid JSON: ") + e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, std::string("invalid JSON body: ") + e.what());
  }
}

std::optional<std::uint64_t> expected_revision(const json& body) {
  if (!body.contains("expected_revision") || body.at("expected_revision").is_null()) return std::nullopt;
  if (!body.at("expected_revision").is_number_unsigned()) {
    throw ApiError(400, "expected_revision must be a non-negative integer", "expected_revision");
  }
  return body.at("expected_revision").get<std::uint64_t>();
}

bool flag_param(const httplib::Request& req, const std::string& key) {
  if (!req.has_param(key)) return true;
  const std::string v = req.get_param_value(key);
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ApiError(400, "query parameter must be true/false", key);
}

DataToggles toggles_from(const httplib::Request& req) {
  DataToggles t;
  t.use_genetics = flag_param(req, "genetics");
  t.use_locations = flag_param(req, "locations");
  t.use_admissions = flag_param(req, "admissions");
  return t;
}

SourcePrior prior_from(const httplib::Request& req) {
  if (!req.has_param("prior")) return SourcePrior::uniform();
  try {
    return SourcePrior::parse(req.get_param_value("prior"));
  } catch (const DomainError& e) {
    throw ApiError(400, e.what(), "prior");
  }
}

std::vector<CaseId> candidates_from(const httplib::Request& req, const WardView& view, const CaseId& focal) {
  if (!req.has_param("candidates")) return view.engine->default_candidates(focal);
  std::vector<CaseId> out;
  std::stringstream ss(req.get_param_value("candidates"));
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (id.empty() || id == focal) continue;
    if (!view.snapshot.cases.contains(id)) throw ApiError(404, "unknown candidate '" + id + "'");
    out.push_back(id);
  }
  return out;
}

CaseId focal_from(const httplib::Request& req, const WardView& view) {
  if (!req.has_param("focal")) throw ApiError(400, "missing query parameter 'focal'", "focal");
  const CaseId focal = req.get_param_value("focal");
  if (!view.snapshot.cases.contains(focal)) throw ApiError(404, "unknown case '" + focal + "'");
  return focal;
}

json ward_json(const WardSession& ward, const WardView& view) {
  json cases = json::array();
  for (const auto& [id, c] : view.snapshot.cases) {
    auto date = [&](Day d) { return format_date(add_days(view.snapshot.frame.origin, d)); };
    json row = {{"id", id}, {"onset_date", date(c.onset)}, {"has_sequence", c.has_sequence}};
    row["admission_date"] = c.admission ? json(date(*c.admission)) : json(nullptr);
    row["sample_date"] = c.sample_time ? json(date(*c.sample_time)) : json(nullptr);
    cases.push_back(row);
  }
  return {{"ward_id", ward.id()},
          {"revision", view.revision},
          {"cases", cases},
          {"warnings", view.snapshot.warnings},
          {"parameters", to_config_map({view.snapshot.params, view.snapshot.frame.origin, std::nullopt})}};
}

void mutation(httplib::Server& server, WardStore& store, const std::string& method, const std::string& pattern,
              std::function<json(const httplib::Request&)> make_event) {
  auto handler = guarded([&store, make_event](const httplib::Request& req, httplib::Response& res) {
    auto ward = store.find(req.path_params.at("ward"));
    const json body = parse_body(req);
    const json event = make_event(req);
    const std::uint64_t revision = ward->apply(event, expected_revision(body));
    send_json(res, 200, {{"ward_id", ward->id()}, {"revision", revision}});
  });
  if (method == "PUT") {
    server.Put(pattern, handler);
  } else {
    server.Post(pattern, handler);
  }
}

}  // namespace

void register_routes(httplib::Server& server, WardStore& store) {
  const std::string origin = store.options().cors_origin;
  const std::string token = store.options().bearer_token;

  server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
    if (token.empty() || req.method == "OPTIONS") return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + token) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, 401, "missing or invalid bearer token");
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
  });
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.status = 204;
  });

  server.Post("/v1/wards", guarded([&store](const httplib::Request&, httplib::Response& res) {
                auto ward = store.create();
                send_json(res, 201, {{"ward_id", ward->id()}, {"revision", ward->view()->revision}});
              }));

  server.Get("/v1/wards/:ward", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto ward = store.find(req.path_params.at("ward"));
               const auto view = ward->view();
               send_json(res, 200, ward_json(*ward, *view));
             }));

  mutation(server, store, "PUT", "/v1/wards/:ward/cases/:case", [](const httplib::Request& req) {
    json body = parse_body(req);
    body["id"] = req.path_params.at("case");
    body.erase("expected_revision");
    return json{{"type", "upsert_case"}, {"case", body}};
  });
  mutation(server, store, "POST", "/v1/wards/:ward/locations", [](const httplib::Request& req) {
    const json body = parse_body(req);
    return json{{"type", "upsert_locations"}, {"rows", body.value("rows", json())}};
  });
  mutation(server, store, "POST", "/v1/wards/:ward/weights", [](const httplib::Request& req) {
    const json body = parse_body(req);
    return json{{"type", "upsert_weights"}, {"rows", body.value("rows", json())}};
  });
  mutation(server, store, "PUT", "/v1/wards/:ward/params", [](const httplib::Request& req) {
    const json body = parse_body(req);
    return json{{"type", "set_params"}, {"config", body.value("config", json())}};
  });

  server.Post("/v1/wards/:ward/fasta", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                auto ward = store.find(req.path_params.at("ward"));
                std::string text;
                std::optional<std::uint64_t> expected;
                if (req.is_multipart_form_data()) {
                  if (!req.has_file("file")) throw ApiError(400, "multipart upload needs a 'file' part", "file");
                  text = req.get_file_value("file").content;
                  if (req.has_file("expected_revision")) {
                    try {
                      expected = std::stoull(req.get_file_value("expected_revision").content);
                    } catch (const std::exception&) {
                      throw ApiError(400, "expected_revision must be an integer", "expected_revision");
                    }
                  }
                } else {
                  text = req.body;
                }
                const std::uint64_t revision = ward->apply({{"type", "upload_fasta"}, {"fasta", text}}, expected);
                send_json(res, 200, {{"ward_id", ward->id()}, {"revision", revision}});
              }));

  server.Get("/v1/wards/:ward/posterior", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const auto view = store.find(req.path_params.at("ward"))->view();
               const CaseId focal = focal_from(req, *view);
               const auto p =
                   view->engine->posterior(focal, candidates_from(req, *view, focal), prior_from(req), toggles_from(req));
               json body = posterior_body(*view, p);
               body["prior"] = prior_from(req).to_string();
               send_json(res, 200, body);
             }));

  server.Get("/v1/wards/:ward/ablation", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const auto view = store.find(req.path_params.at("ward"))->view();
               const CaseId focal = focal_from(req, *view);
               std::vector<DataSource> order;
               try {
                 order = parse_ablation_order(req.has_param("order") ? req.get_param_value("order")
                                                                     : "genetics,locations,admissions");
               } catch (const DomainError& e) {
                 throw ApiError(400, e.what(), "order");
               }
               const auto stages =
                   view->engine->ablation_sequence(focal, candidates_from(req, *view, focal), prior_from(req), order);
               json out = json::array();
               for (std::size_t s = 0; s < stages.size(); ++s) {
                 json block = posterior_body(*view, stages[s].posterior);
                 for (std::size_t i = 0; i < stages[s].posterior.entries.size(); ++i) {
                   block["sources"][i]["delta"] = s == 0 ? 0.0
                                                         : stages[s].posterior.entries[i].probability -
                                                               stages[s - 1].posterior.entries[i].probability;
                 }
                 out.push_back({{"stage", stages[s].name}, {"posterior", block}});
               }
               send_json(res, 200, {{"revision", view->revision}, {"focal", focal}, {"stages", out}});
             }));

  server.Get("/v1/wards/:ward/summary", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const auto view = store.find(req.path_params.at("ward"))->view();
               std::vector<CaseId> focals;
               for (const auto& [id, _] : view->snapshot.cases) focals.push_back(id);
               const auto rows = posterior_matrix(*view->engine, focals, prior_from(req), toggles_from(req));
               send_json(res, 200, summary_body(*view, rows));
             }));
}

}  // namespace nostra
