#include "slicebench/engine.hpp"

#include <sys/socket.h>

#include <thread>

#include <httplib.h>

namespace slicebench {

using nlohmann::json;

ContainerCreateRequest make_create_request(const VmDescriptor& vm, const ContainerSpec& spec,
                                           std::string_view run_id) {
  spec.validate();
  ContainerCreateRequest req;
  req.name = "slicebench-" + std::string(run_id) + "-" + vm.id;
  for (char& c : req.name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '-';
  }
  req.image = spec.image_ref.empty() ? std::string(kDefaultBenchmarkImage) : spec.image_ref;
  req.memory_bytes = spec.memory_bytes();
  req.cpuset_cpus = spec.cpuset_for(vm.vcpus);
  req.labels[std::string(kLabelRun)] = std::string(run_id);
  req.labels[std::string(kLabelMemoryMib)] = std::to_string(spec.memory_mib);
  req.labels[std::string(kLabelCpuMode)] = std::string(to_string(spec.cpu_mode));
  return req;
}

json engine_create_body(const ContainerCreateRequest& request) {
  json body{{"Image", request.image},
            {"Labels", request.labels},
            {"AttachStdout", true},
            {"AttachStderr", true},
            {"Tty", false},
            {"HostConfig",
             {{"Memory", request.memory_bytes},
              {"MemorySwap", request.memory_bytes},
              {"CpusetCpus", request.cpuset_cpus},
              {"AutoRemove", false}}}};
  if (!request.cmd.empty()) body["Cmd"] = request.cmd;
  return body;
}

std::vector<std::string> demux_docker_logs(std::string_view body) {
  std::string text;
  const auto framed = [&](std::string_view b) {
    return b.size() >= 8 && static_cast<unsigned char>(b[0]) <= 2 && b[1] == 0 && b[2] == 0 && b[3] == 0;
  };
  if (framed(body)) {
    while (body.size() >= 8) {
      const auto* h = reinterpret_cast<const unsigned char*>(body.data());
      const std::size_t len = (std::size_t{h[4]} << 24) | (std::size_t{h[5]} << 16) | (std::size_t{h[6]} << 8) | h[7];
      const std::size_t take = std::min(len, body.size() - 8);
      if (h[0] != 2) text.append(body.substr(8, take));  // drop stderr frames
      body.remove_prefix(8 + take);
    }
  } else {
    text.assign(body);
  }
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

// --- DockerEngine -------------------------------------------------------------

DockerEngine::DockerEngine(std::string endpoint, std::chrono::seconds connect_timeout)
    : endpoint_(std::move(endpoint)), connect_timeout_(connect_timeout) {
  std::string_view ep = endpoint_;
  if (ep.rfind("unix://", 0) == 0) {
    target_.unix_socket = true;
    target_.host_or_path = std::string(ep.substr(7));
    if (target_.host_or_path.empty()) throw Error(Errc::InvalidArgument, "empty unix socket path");
    return;
  }
  for (std::string_view prefix : {"tcp://", "http://"}) {
    if (ep.rfind(prefix, 0) == 0) ep.remove_prefix(prefix.size());
  }
  const auto colon = ep.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(Errc::InvalidArgument, "engine endpoint '" + endpoint_ + "' needs host:port");
  }
  target_.host_or_path = std::string(ep.substr(0, colon));
  try {
    target_.port = std::stoi(std::string(ep.substr(colon + 1)));
  } catch (const std::exception&) {
    target_.port = 0;
  }
  if (target_.port <= 0 || target_.port > 65535) {
    throw Error(Errc::InvalidArgument, "engine endpoint '" + endpoint_ + "' has a bad port");
  }
}

template <typename Fn>
auto DockerEngine::with_client(std::chrono::milliseconds read_timeout, Fn&& fn) {
  std::unique_ptr<httplib::Client> client;
  if (target_.unix_socket) {
    client = std::make_unique<httplib::Client>(target_.host_or_path);
    client->set_address_family(AF_UNIX);
  } else {
    client = std::make_unique<httplib::Client>(target_.host_or_path, target_.port);
  }
  client->set_connection_timeout(connect_timeout_);
  client->set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(read_timeout).count(),
                           static_cast<time_t>((read_timeout.count() % 1000) * 1000));
  client->set_write_timeout(connect_timeout_);
  return fn(*client);
}

namespace {

std::string engine_message(const httplib::Result& res) {
  if (!res) return httplib::to_string(res.error());
  try {
    auto j = json::parse(res->body);
    if (j.contains("message")) return j.at("message").get<std::string>();
  } catch (const json::exception&) {
  }
  return "HTTP " + std::to_string(res->status) + " " + res->body;
}

}  // namespace

void DockerEngine::pull(const std::string& image) {
  std::string name = image, tag = "latest";
  if (auto colon = image.rfind(':'); colon != std::string::npos && image.find('/', colon) == std::string::npos) {
    name = image.substr(0, colon);
    tag = image.substr(colon + 1);
  }
  with_client(std::chrono::minutes{10}, [&](httplib::Client& c) {
    auto res = c.Post(std::string(kApiPrefix) + "/images/create?fromImage=" + httplib::detail::encode_url(name) +
                          "&tag=" + httplib::detail::encode_url(tag),
                      "", "application/json");
    if (!res) throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
    if (res->status != 200) {
      throw Error(Errc::ContainerCreateFailed, endpoint_ + ": pulling " + image + ": " + engine_message(res));
    }
    return 0;
  });
}

std::string DockerEngine::create(const ContainerCreateRequest& request) {
  const std::string body = engine_create_body(request).dump();
  const std::string path = std::string(kApiPrefix) + "/containers/create?name=" + httplib::detail::encode_url(request.name);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = with_client(std::chrono::seconds{30},
                           [&](httplib::Client& c) { return c.Post(path, body, "application/json"); });
    if (!res) throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
    if (res->status == 201) {
      try {
        return json::parse(res->body).at("Id").get<std::string>();
      } catch (const json::exception&) {
        throw Error(Errc::ContainerCreateFailed, endpoint_ + ": create response has no Id");
      }
    }
    if (res->status == 404 && attempt == 0) {
      pull(request.image);
      continue;
    }
    throw Error(Errc::ContainerCreateFailed, endpoint_ + ": " + engine_message(res));
  }
  throw Error(Errc::ContainerCreateFailed, endpoint_ + ": image unavailable after pull");
}

void DockerEngine::start(const std::string& container_id) {
  auto res = with_client(std::chrono::seconds{30}, [&](httplib::Client& c) {
    return c.Post(std::string(kApiPrefix) + "/containers/" + container_id + "/start", "", "application/json");
  });
  if (!res) throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
  if (res->status != 204 && res->status != 304) {
    throw Error(Errc::EngineError, endpoint_ + ": start failed: " + engine_message(res));
  }
}

WaitResult DockerEngine::wait(const std::string& container_id, std::chrono::milliseconds timeout) {
  auto res = with_client(timeout, [&](httplib::Client& c) {
    return c.Post(std::string(kApiPrefix) + "/containers/" + container_id + "/wait", "", "application/json");
  });
  if (!res) {
    if (res.error() == httplib::Error::Read) return WaitResult{true, -1};
    throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
  }
  if (res->status != 200) throw Error(Errc::EngineError, endpoint_ + ": wait failed: " + engine_message(res));
  try {
    return WaitResult{false, json::parse(res->body).at("StatusCode").get<int>()};
  } catch (const json::exception&) {
    throw Error(Errc::EngineError, endpoint_ + ": malformed wait response");
  }
}

std::vector<std::string> DockerEngine::logs(const std::string& container_id) {
  auto res = with_client(std::chrono::seconds{60}, [&](httplib::Client& c) {
    return c.Get(std::string(kApiPrefix) + "/containers/" + container_id + "/logs?stdout=1&stderr=0");
  });
  if (!res) throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
  if (res->status != 200) throw Error(Errc::EngineError, endpoint_ + ": logs failed: " + engine_message(res));
  return demux_docker_logs(res->body);
}

void DockerEngine::remove(const std::string& container_id) {
  auto res = with_client(std::chrono::seconds{30}, [&](httplib::Client& c) {
    return c.Delete(std::string(kApiPrefix) + "/containers/" + container_id + "?force=1");
  });
  if (!res) throw Error(Errc::HostUnreachable, endpoint_ + ": " + engine_message(res));
  if (res->status != 204 && res->status != 404) {
    throw Error(Errc::EngineError, endpoint_ + ": remove failed: " + engine_message(res));
  }
}

// --- SimulatedEngine ----------------------------------------------------------

SimulatedEngine::SimulatedEngine(VmDescriptor vm, std::uint64_t profile_seed, SimulationConfig config)
    : vm_(std::move(vm)), seed_(profile_seed), config_(config) {}

SimulatedEngine::Container& SimulatedEngine::find(const std::string& id) {
  auto it = containers_.find(id);
  if (it == containers_.end()) throw Error(Errc::EngineError, "no such container '" + id + "'");
  return it->second;
}

std::string SimulatedEngine::create(const ContainerCreateRequest& request) {
  if (request.memory_bytes <= 0 || request.cpuset_cpus.empty()) {
    throw Error(Errc::ContainerCreateFailed, vm_.id + ": resource caps missing");
  }
  Container c;
  c.request = request;
  c.spec.image_ref = request.image;
  c.spec.memory_mib = request.memory_bytes >> 20;
  if (auto it = request.labels.find(std::string(kLabelCpuMode)); it != request.labels.end()) {
    c.spec.cpu_mode = parse_cpu_mode(it->second);
  } else {
    c.spec.cpu_mode = request.cpuset_cpus == "0" ? CpuMode::SingleCore : CpuMode::AllCores;
  }
  std::lock_guard lock(mutex_);
  const std::string id = "sim-" + vm_.id + "-" + std::to_string(next_id_++);
  containers_.emplace(id, std::move(c));
  return id;
}

void SimulatedEngine::start(const std::string& container_id) {
  std::lock_guard lock(mutex_);
  auto& c = find(container_id);
  c.started = std::chrono::steady_clock::now();
  c.running = true;
}

WaitResult SimulatedEngine::wait(const std::string& container_id, std::chrono::milliseconds timeout) {
  std::chrono::steady_clock::time_point finish;
  {
    std::lock_guard lock(mutex_);
    auto& c = find(container_id);
    if (!c.running) throw Error(Errc::EngineError, "container '" + container_id + "' was not started");
    finish = c.started + simulated_work_time(c.spec, config_);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  if (finish > deadline) {
    std::this_thread::sleep_until(deadline);
    return WaitResult{true, -1};
  }
  std::this_thread::sleep_until(finish);
  std::lock_guard lock(mutex_);
  find(container_id).running = false;
  return WaitResult{false, 0};
}

std::vector<std::string> SimulatedEngine::logs(const std::string& container_id) {
  ContainerSpec spec;
  {
    std::lock_guard lock(mutex_);
    spec = find(container_id).spec;
  }
  return simulated_execute(vm_, spec, seed_, config_).lines;
}

void SimulatedEngine::remove(const std::string& container_id) {
  std::lock_guard lock(mutex_);
  containers_.erase(container_id);
}

std::size_t SimulatedEngine::live_containers() const {
  std::lock_guard lock(mutex_);
  return containers_.size();
}

}  // namespace slicebench
