#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "slicebench/model.hpp"
#include "slicebench/simulator.hpp"

namespace slicebench {

/// Everything the engine needs to create one capped benchmark container.
struct ContainerCreateRequest {
  std::string name;
  std::string image;
  std::vector<std::string> cmd;
  std::int64_t memory_bytes = 0;
  std::string cpuset_cpus;
  std::map<std::string, std::string> labels;
};

inline constexpr std::string_view kLabelRun = "slicebench.run";
inline constexpr std::string_view kLabelMemoryMib = "slicebench.memory_mib";
inline constexpr std::string_view kLabelCpuMode = "slicebench.cpu_mode";

ContainerCreateRequest make_create_request(const VmDescriptor& vm, const ContainerSpec& spec,
                                           std::string_view run_id);

/// Body of the engine's container-create call. Memory and MemorySwap carry
/// the same byte limit (no swap beyond the cap); CpusetCpus pins the CPUs.
nlohmann::json engine_create_body(const ContainerCreateRequest& request);

struct WaitResult {
  bool timed_out = false;
  int exit_code = 0;
};

/// Minimal container lifecycle used by the orchestrator. Implementations
/// throw Error with HostUnreachable, ContainerCreateFailed or EngineError.
class ContainerEngine {
 public:
  virtual ~ContainerEngine() = default;

  virtual std::string create(const ContainerCreateRequest& request) = 0;
  virtual void start(const std::string& container_id) = 0;
  virtual WaitResult wait(const std::string& container_id, std::chrono::milliseconds timeout) = 0;
  virtual std::vector<std::string> logs(const std::string& container_id) = 0;
  /// Force-removes the container; removing an unknown id is not an error.
  virtual void remove(const std::string& container_id) = 0;
};

/// Docker Engine REST client (API v1.41). Endpoints:
/// "unix:///var/run/docker.sock", "tcp://host:2375" or "http://host:2375".
class DockerEngine final : public ContainerEngine {
 public:
  static constexpr std::string_view kApiPrefix = "/v1.41";

  explicit DockerEngine(std::string endpoint, std::chrono::seconds connect_timeout = std::chrono::seconds{5});

  std::string create(const ContainerCreateRequest& request) override;
  void start(const std::string& container_id) override;
  WaitResult wait(const std::string& container_id, std::chrono::milliseconds timeout) override;
  std::vector<std::string> logs(const std::string& container_id) override;
  void remove(const std::string& container_id) override;

 private:
  struct Target {
    std::string host_or_path;
    int port = 0;
    bool unix_socket = false;
  };

  template <typename Fn>
  auto with_client(std::chrono::milliseconds read_timeout, Fn&& fn);
  void pull(const std::string& image);

  std::string endpoint_;
  Target target_;
  std::chrono::seconds connect_timeout_;
};

/// Splits a Docker log body into lines, removing the 8-byte multiplexing
/// headers when present.
std::vector<std::string> demux_docker_logs(std::string_view body);

/// In-process engine that "runs" the simulated benchmark: create/start/wait
/// honour the request, and logs() returns simulated_execute output. Sleeps
/// for the simulated work time inside wait().
class SimulatedEngine final : public ContainerEngine {
 public:
  SimulatedEngine(VmDescriptor vm, std::uint64_t profile_seed, SimulationConfig config = {});

  std::string create(const ContainerCreateRequest& request) override;
  void start(const std::string& container_id) override;
  WaitResult wait(const std::string& container_id, std::chrono::milliseconds timeout) override;
  std::vector<std::string> logs(const std::string& container_id) override;
  void remove(const std::string& container_id) override;

  std::size_t live_containers() const;

 private:
  struct Container {
    ContainerCreateRequest request;
    ContainerSpec spec;
    std::chrono::steady_clock::time_point started{};
    bool running = false;
  };
  Container& find(const std::string& id);

  VmDescriptor vm_;
  std::uint64_t seed_;
  SimulationConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, Container> containers_;
  std::uint64_t next_id_ = 1;
};

}  // namespace slicebench
