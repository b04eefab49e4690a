#include "slicebench/api.hpp"

#include <algorithm>
#include <charconv>
#include <thread>

#include <httplib.h>

#include "slicebench/serialize.hpp"
#include "slicebench/service.hpp"

namespace slicebench {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultLimit = 100;
constexpr std::size_t kMaxLimit = 1000;

ApiResponse error_response(Errc code, const std::string& message) {
  return ApiResponse{http_status_for(code), json{{"code", std::string(to_string(code))}, {"message", message}}};
}

std::optional<std::string> query_value(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::size_t parse_count(const std::string& name, const std::string& text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::InvalidArgument, name + " must be a non-negative integer");
  }
  return v;
}

json paginate(const ApiRequest& r, const json& items) {
  std::size_t offset = 0;
  std::size_t limit = kDefaultLimit;
  if (auto v = query_value(r, "offset")) offset = parse_count("offset", *v);
  if (auto v = query_value(r, "limit")) limit = parse_count("limit", *v);
  if (limit == 0 || limit > kMaxLimit) {
    throw Error(Errc::InvalidArgument, "limit must be in [1, " + std::to_string(kMaxLimit) + "]");
  }
  json page = json::array();
  for (std::size_t i = offset; i < items.size() && i < offset + limit; ++i) page.push_back(items[i]);
  return json{{"items", std::move(page)}, {"total", items.size()}, {"offset", offset}, {"limit", limit}};
}

json index_entry_json(const DatasetIndexEntry& e) {
  return json{{"dataset_id", e.dataset_id},
              {"role", std::string(to_string(e.role))},
              {"container", to_json(e.container)},
              {"stored_at", format_timestamp(e.stored_at)},
              {"checksum", e.checksum},
              {"vm_ids", e.vm_ids},
              {"measurements", e.measurement_count}};
}

}  // namespace

int http_status_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::SchemaViolation:
    case Errc::MalformedNumber:
    case Errc::UnknownAttribute:
    case Errc::NonFiniteValue:
      return 400;
    case Errc::NotFound:
    case Errc::UnknownRun:
      return 404;
    case Errc::Conflict:
    case Errc::NoEligibleHistoric:
    case Errc::StaleHistoricData:
      return 409;
    case Errc::IncompleteDataset:
    case Errc::VmSetMismatch:
    case Errc::EmptyInput:
      return 422;
    default:
      return 500;
  }
}

std::pair<std::string, int> parse_listen_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw Error(Errc::InvalidArgument, "listen address must be host:port, got '" + address + "'");
  }
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string port_text = address.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(Errc::InvalidArgument, "bad port in listen address '" + address + "'");
  }
  return {host, port};
}

ApiService::ApiService(DatasetStore& store, Orchestrator& orchestrator, Taxonomy taxonomy, ClockFn clock)
    : store_(store), orchestrator_(orchestrator), taxonomy_(std::move(taxonomy)), clock_(std::move(clock)) {}

ApiService::~ApiService() { stop(); }

ApiResponse ApiService::handle(const ApiRequest& request) const {
  try {
    const std::string& p = request.path;
    if (p == "/runs") {
      if (request.method == "POST") return post_run(request);
      if (request.method == "GET") return list_runs(request);
    } else if (p.rfind("/runs/", 0) == 0 && p.size() > 6 && p.find('/', 6) == std::string::npos) {
      if (request.method == "GET") return get_run(p.substr(6));
    } else if (p == "/rankings") {
      if (request.method == "GET") return get_rankings(request);
    } else if (p == "/datasets") {
      if (request.method == "GET") return list_datasets(request);
    } else if (p == "/vms") {
      if (request.method == "GET") return list_vms(request);
    } else {
      return error_response(Errc::NotFound, "no route for " + p);
    }
    return ApiResponse{405, json{{"code", "MethodNotAllowed"}, {"message", request.method + " not allowed on " + p}}};
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const std::exception& e) {
    return ApiResponse{500, json{{"code", "Internal"}, {"message", e.what()}}};
  }
}

ApiResponse ApiService::post_run(const ApiRequest& request) const {
  json body;
  try {
    body = json::parse(request.body);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("body is not valid JSON: ") + e.what());
  }
  if (!body.is_object()) throw Error(Errc::InvalidArgument, "body must be a JSON object");

  std::vector<HostBinding> fleet;
  try {
    if (body.contains("hosts")) {
      fleet = parse_inventory(body.at("hosts").dump());
    } else if (body.contains("inventory")) {
      fleet = load_inventory(body.at("inventory").get<std::string>());
    } else {
      throw Error(Errc::InvalidArgument, "body needs 'hosts' or 'inventory'");
    }
  } catch (const Error& e) {
    // A missing inventory file is the caller's mistake, not a missing resource.
    throw Error(Errc::InvalidArgument, e.what());
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, e.what());
  }

  ContainerSpec spec;
  try {
    spec.memory_mib = body.at("memory_mib").get<std::int64_t>();
    spec.cpu_mode = parse_cpu_mode(body.at("cpu_mode").get<std::string>());
    if (body.contains("image")) spec.image_ref = body.at("image").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad container fields: ") + e.what());
  }
  spec.validate();

  const std::string run_id = orchestrator_.start_campaign(std::move(fleet), spec);
  return ApiResponse{202, json{{"run_id", run_id}}};
}

ApiResponse ApiService::get_run(const std::string& run_id) const {
  try {
    return ApiResponse{200, to_json(orchestrator_.poll_status(run_id))};
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownRun) throw;
  }
  // Runs from earlier service lifetimes are only in the store.
  if (auto stored = store_.get_run(run_id)) return ApiResponse{200, to_json(*stored)};
  throw Error(Errc::UnknownRun, "unknown run '" + run_id + "'");
}

ApiResponse ApiService::list_runs(const ApiRequest& request) const {
  std::map<std::string, RunRecord> runs;
  for (auto& r : store_.list_runs()) runs[r.run_id] = std::move(r);
  for (auto& r : orchestrator_.list_runs()) runs[r.run_id] = std::move(r);
  std::vector<const RunRecord*> ordered;
  for (const auto& [id, r] : runs) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(), [](const RunRecord* a, const RunRecord* b) {
    if (a->started_at != b->started_at) return a->started_at > b->started_at;
    return a->run_id > b->run_id;
  });
  json items = json::array();
  for (const auto* r : ordered) items.push_back(to_json(*r));
  return ApiResponse{200, paginate(request, items)};
}

ApiResponse ApiService::get_rankings(const ApiRequest& request) const {
  RankRequest rr;
  const auto dataset = query_value(request, "dataset");
  if (!dataset || dataset->empty()) throw Error(Errc::InvalidArgument, "missing 'dataset'");
  rr.dataset_id = *dataset;
  const auto weights = query_value(request, "weights");
  if (!weights) throw Error(Errc::InvalidArgument, "missing 'weights'");
  rr.weights = WeightVector::parse(*weights);
  if (auto mode = query_value(request, "mode")) {
    rr.mode = parse_rank_mode(*mode);
    if (rr.mode == RankMode::Empirical) throw Error(Errc::InvalidArgument, "mode must be lightweight or hybrid");
  }
  if (auto age = query_value(request, "max_age_days")) {
    rr.historic_max_age_days = static_cast<int>(parse_count("max_age_days", *age));
  }
  if (auto agg = query_value(request, "aggregate")) rr.options.aggregate = parse_group_aggregate(*agg);
  return ApiResponse{200, to_json(rank_dataset(store_, taxonomy_, rr, clock_()))};
}

ApiResponse ApiService::list_datasets(const ApiRequest& request) const {
  json items = json::array();
  for (const auto& e : store_.list_datasets()) items.push_back(index_entry_json(e));
  return ApiResponse{200, paginate(request, items)};
}

ApiResponse ApiService::list_vms(const ApiRequest& request) const {
  std::map<std::string, json> vms;
  for (const auto& e : store_.list_datasets()) {
    for (const auto& id : e.vm_ids) vms.emplace(id, json{{"id", id}});
  }
  for (const auto& vm : orchestrator_.known_vms()) vms[vm.id] = to_json(vm);
  json items = json::array();
  for (auto& [id, j] : vms) items.push_back(std::move(j));
  return ApiResponse{200, paginate(request, items)};
}

int ApiService::bind(const std::string& listen_address) {
  const auto [host, port] = parse_listen_address(listen_address);
  server_ = std::make_unique<httplib::Server>();

  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const ApiResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  // httplib defaults to SO_REUSEPORT, which would let a second server share a
  // busy port. SO_REUSEADDR alone still allows fast restarts.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  server_->Get(R"(/.*)", forward);
  server_->Post(R"(/.*)", forward);
  server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::Conflict, "cannot bind " + listen_address);
  } else if (!server_->bind_to_port(host, port)) {
    throw Error(Errc::Conflict, "cannot bind " + listen_address + " (port busy or address unavailable)");
  }
  return bound;
}

void ApiService::serve() {
  if (!server_) throw Error(Errc::InvalidArgument, "bind() before serve()");
  {
    std::lock_guard lock(serve_mutex_);
    if (stopped_) return;
    serving_ = true;
  }
  server_->listen_after_bind();
  std::lock_guard lock(serve_mutex_);
  serving_ = false;
}

void ApiService::stop() {
  if (!server_) return;
  // A stop that races the start of serve() must wait for the listen loop,
  // otherwise httplib ignores it and serve() never returns.
  for (;;) {
    {
      std::lock_guard lock(serve_mutex_);
      stopped_ = true;
      if (!serving_) return;
      if (server_->is_running()) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds{1});
  }
  server_->stop();
}

}  // namespace slicebench
