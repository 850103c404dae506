#pragma once
// Ward sessions behind the /v1/ HTTP+JSON API.
//
// Each ward is mutated by a single writer at a time; every accepted mutation
// bumps the revision, is appended to <data_dir>/<ward_id>.jsonl and publishes a
// new immutable snapshot. Readers take a reference to the published snapshot
// and compute against it without holding any lock.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nostra/inference.hpp"
#include "nostra/ingest.hpp"

namespace httplib {
class Server;
}

namespace nostra {

class ApiError : public std::runtime_error {
 public:
  ApiError(int status, const std::string& message, std::string field = {})
      : std::runtime_error(message), status_(status), field_(std::move(field)) {}
  int status() const { return status_; }
  const std::string& field() const { return field_; }

 private:
  int status_;
  std::string field_;
};

// An immutable, fully validated view of a ward at one revision.
struct WardView {
  std::uint64_t revision = 0;
  WardSnapshot snapshot;
  std::unique_ptr<InferenceEngine> engine;  // bound to `snapshot`
};

class WardSession {
 public:
  WardSession(std::string id, std::optional<std::filesystem::path> log_path);

  const std::string& id() const { return id_; }
  std::shared_ptr<const WardView> view() const;

  /// Applies one event: {"type": "upsert_case" | "upsert_locations" |
  /// "upsert_weights" | "upload_fasta" | "set_params", ...}. Rejects with 409
  /// when `expected_revision` is given and stale, 400 when the resulting ward
  /// fails validation. Returns the new revision.
  std::uint64_t apply(const nlohmann::json& event, std::optional<std::uint64_t> expected_revision = std::nullopt);

  /// Re-applies a logged event without writing it back to the log.
  void replay(const nlohmann::json& event);

 private:
  struct State {
    std::map<CaseId, CaseRow> cases;
    std::map<std::pair<CaseId, Date>, std::string> locations;
    std::map<std::pair<PairKey, Date>, double> weights;
    std::map<CaseId, std::string> sequences;
    ConfigMap config;
  };

  static void mutate(State& state, const nlohmann::json& event);
  static WardData to_ward_data(const State& state);
  void publish(State next, std::uint64_t revision);
  void publish_snapshot(State next, WardSnapshot snapshot, std::uint64_t revision);

  std::string id_;
  std::optional<std::filesystem::path> log_path_;
  std::mutex write_mutex_;
  State state_;
  mutable std::shared_mutex view_mutex_;
  std::shared_ptr<const WardView> view_;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> data_dir;
  std::string cors_origin = "*";
  std::string bearer_token;  // empty disables the check
};

class WardStore {
 public:
  explicit WardStore(ServiceOptions options);

  std::shared_ptr<WardSession> create();
  std::shared_ptr<WardSession> find(const std::string& id) const;  // throws ApiError(404)
  const ServiceOptions& options() const { return options_; }

 private:
  ServiceOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<WardSession>> wards_;
  std::uint64_t next_id_ = 1;
};

/// Registers every /v1/ route on `server`. The store must outlive the server.
void register_routes(httplib::Server& server, WardStore& store);

// JSON bodies shared by the HTTP layer and tests.
nlohmann::json posterior_body(const WardView& view, const SourcePosterior& p);
nlohmann::json summary_body(const WardView& view, const std::vector<SourcePosterior>& rows);

}  // namespace nostra
