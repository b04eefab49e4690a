#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "slicebench/orchestrator.hpp"
#include "slicebench/store.hpp"

namespace httplib {
class Server;
}

namespace slicebench {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP status for an error code (400/404/409/422/500).
int http_status_for(Errc code);

/// Routes:
///   POST /runs            {hosts:[...] | inventory:"path", memory_mib, cpu_mode, image?} -> 202 {run_id}
///   GET  /runs            run records, newest first, paginated
///   GET  /runs/{id}       run record snapshot
///   GET  /rankings        ?dataset&weights&mode&max_age_days
///   GET  /datasets        dataset index, paginated
///   GET  /vms             known VMs, paginated
/// Errors are {"code": "...", "message": "..."}. Listings take offset
/// (default 0) and limit (default 100, max 1000) and return
/// {items, total, offset, limit}.
class ApiService {
 public:
  using ClockFn = std::function<Timestamp()>;

  ApiService(DatasetStore& store, Orchestrator& orchestrator, Taxonomy taxonomy = default_taxonomy(),
             ClockFn clock = now_utc);
  ~ApiService();

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  /// Transport-free dispatch; the HTTP server forwards every request here.
  ApiResponse handle(const ApiRequest& request) const;

  /// Binds "host:port" (port 0 picks a free one). Returns the bound port.
  /// Throws InvalidArgument for a malformed address, Conflict if the port is busy.
  int bind(const std::string& listen_address);
  /// Blocks until stop(). Returns at once if stop() already ran.
  void serve();
  /// Safe to call from any thread, before or during serve().
  void stop();

 private:
  ApiResponse post_run(const ApiRequest& request) const;
  ApiResponse get_run(const std::string& run_id) const;
  ApiResponse list_runs(const ApiRequest& request) const;
  ApiResponse get_rankings(const ApiRequest& request) const;
  ApiResponse list_datasets(const ApiRequest& request) const;
  ApiResponse list_vms(const ApiRequest& request) const;

  DatasetStore& store_;
  Orchestrator& orchestrator_;
  Taxonomy taxonomy_;
  ClockFn clock_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex serve_mutex_;
  bool serving_ = false;
  bool stopped_ = false;
};

/// Splits "host:port"; throws InvalidArgument.
std::pair<std::string, int> parse_listen_address(const std::string& address);

}  // namespace slicebench
