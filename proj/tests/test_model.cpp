#include <gtest/gtest.h>

#include "slicebench/model.hpp"

using namespace slicebench;

TEST(ContainerSpec, MemoryCapIsMibTimesTwoToTheTwenty) {
  ContainerSpec s;
  for (std::int64_t mib : {4, 100, 500, 1000, 4096}) {
    s.memory_mib = mib;
    EXPECT_EQ(s.memory_bytes(), mib * 1048576);
  }
}

TEST(ContainerSpec, CpusetFollowsMode) {
  ContainerSpec s;
  s.cpu_mode = CpuMode::SingleCore;
  EXPECT_EQ(s.cpuset_for(32), "0");
  s.cpu_mode = CpuMode::AllCores;
  EXPECT_EQ(s.cpuset_for(1), "0");
  EXPECT_EQ(s.cpuset_for(4), "0-3");
  EXPECT_EQ(s.cpuset_for(32), "0-31");
}

TEST(ContainerSpec, RejectsTinyMemory) {
  ContainerSpec s;
  s.memory_mib = 0;
  EXPECT_THROW(s.validate(), Error);
  s.memory_mib = 3;
  EXPECT_THROW(s.validate(), Error);
  s.memory_mib = ContainerSpec::kMinMemoryMib;
  EXPECT_NO_THROW(s.validate());
}

TEST(WeightVector, ParsesBraceOrder) {
  const auto w = WeightVector::parse("4,3,5,0");
  EXPECT_EQ(w.w, (std::array<double, 4>{4, 3, 5, 0}));
  EXPECT_EQ(w.to_string(), "4,3,5,0");
  EXPECT_NO_THROW(WeightVector::parse(" 0, 2.5 ,5,1"));
}

TEST(WeightVector, RejectsOutOfRangeAndShape) {
  for (const char* bad : {"6,0,0,0", "-1,0,0,0", "1,2,3", "1,2,3,4,5", "a,1,1,1", "", "1,,1,1", "nan,1,1,1"}) {
    EXPECT_THROW(WeightVector::parse(bad), Error) << bad;
  }
}

TEST(Enums, RoundTripThroughText) {
  for (auto m : {CpuMode::SingleCore, CpuMode::AllCores}) EXPECT_EQ(parse_cpu_mode(to_string(m)), m);
  for (auto m : {RankMode::Lightweight, RankMode::Hybrid, RankMode::Empirical}) EXPECT_EQ(parse_rank_mode(to_string(m)), m);
  for (auto g : {Group::MemoryProcess, Group::LocalCommunication, Group::Computation, Group::Storage}) {
    EXPECT_EQ(parse_group(to_string(g)), g);
  }
  EXPECT_EQ(to_string(Group::Storage), "G4");
  EXPECT_THROW(parse_cpu_mode("some-cores"), Error);
}

TEST(HostState, TransitionsOnlyMoveForward) {
  EXPECT_TRUE(can_transition(HostState::Pending, HostState::Provisioning));
  EXPECT_TRUE(can_transition(HostState::Benchmarking, HostState::Failed));
  EXPECT_FALSE(can_transition(HostState::Collecting, HostState::Benchmarking));
  EXPECT_FALSE(can_transition(HostState::Done, HostState::Failed));
  EXPECT_FALSE(can_transition(HostState::Failed, HostState::Done));
  EXPECT_TRUE(is_terminal(HostState::Done));
  EXPECT_FALSE(is_terminal(HostState::Collecting));
}

TEST(Timestamp, FormatsAndParsesIsoUtc) {
  const auto t = parse_timestamp("2026-10-17T08:30:05Z");
  EXPECT_EQ(format_timestamp(t), "2026-10-17T08:30:05Z");
  EXPECT_THROW(parse_timestamp("2026-10-17 08:30"), Error);
}

TEST(Taxonomy, DefaultCoversAllGroupsWithPolarity) {
  const auto& tax = default_taxonomy();
  std::array<int, 4> per_group{};
  for (const auto& a : tax.attributes()) ++per_group[index_of(a.group)];
  for (int c : per_group) EXPECT_GT(c, 0);
  EXPECT_EQ(tax.at("mem_read_bw_mbps").polarity, Polarity::HigherBetter);
  EXPECT_EQ(tax.at("float_div_latency_ns").polarity, Polarity::LowerBetter);
  EXPECT_EQ(tax.at("float_div_latency_ns").group, Group::Computation);
  EXPECT_THROW(tax.at("no_such_attribute"), Error);
}

TEST(Taxonomy, OverrideReplacesAndAdds) {
  Taxonomy tax = default_taxonomy();
  tax.apply_override(R"({"mem_read_bw_mbps": {"group": "G3", "polarity": "higher-better", "unit": "MB/s"},
                         "custom_op_ns": {"group": "G3", "polarity": "lower-better", "unit": "ns"}})");
  EXPECT_EQ(tax.at("mem_read_bw_mbps").group, Group::Computation);
  EXPECT_EQ(tax.at("custom_op_ns").polarity, Polarity::LowerBetter);
  EXPECT_EQ(tax.size(), default_taxonomy().size() + 1);
  EXPECT_THROW(tax.apply_override(R"({"x": {"group": "G9", "polarity": "lower-better", "unit": "ns"}})"), Error);
}

namespace {
AttributeMeasurement meas(std::string vm, std::string key, double v) {
  AttributeMeasurement m;
  m.vm_id = std::move(vm);
  m.attribute_key = std::move(key);
  m.value = v;
  return m;
}
}  // namespace

TEST(BenchmarkDataset, RejectsDuplicatesAndNonFinite) {
  BenchmarkDataset ds;
  ds.add(meas("a", "stat_us", 1.0));
  try {
    ds.add(meas("a", "stat_us", 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateMeasurement);
  }
  try {
    ds.add(meas("b", "stat_us", std::numeric_limits<double>::infinity()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteValue);
  }
}

TEST(BenchmarkDataset, CompletenessAndRestriction) {
  BenchmarkDataset ds;
  ds.add(meas("a", "stat_us", 1.0));
  ds.add(meas("b", "stat_us", 2.0));
  ds.add(meas("a", "pipe_bw_mbps", 3.0));
  EXPECT_FALSE(ds.is_complete());
  const auto report = validate_dataset(ds, {}, default_taxonomy());
  ASSERT_EQ(report.gaps.size(), 1u);
  EXPECT_EQ(report.gaps[0], (std::pair<std::string, std::string>{"b", "pipe_bw_mbps"}));

  ds.add(meas("b", "pipe_bw_mbps", 4.0));
  EXPECT_TRUE(ds.is_complete());
  const std::vector<std::string> only_a{"a"};
  const auto r = ds.restricted_to(only_a);
  EXPECT_EQ(r.vm_ids(), only_a);
  EXPECT_EQ(r.size(), 2u);
}

TEST(BenchmarkDataset, ValidationFlagsUnknownKeysAndVms) {
  std::vector<AttributeMeasurement> ms{meas("a", "stat_us", 1.0), meas("ghost", "stat_us", 1.0),
                                       meas("a", "warp_speed", 9.0)};
  VmDescriptor a;
  a.id = "a";
  a.vcpus = 1;
  a.memory_gib = 1;
  const std::vector<VmDescriptor> fleet{a};
  const auto report = validate_measurements(ms, fleet, default_taxonomy());
  EXPECT_FALSE(report.complete);
  EXPECT_EQ(report.unknown_keys, std::vector<std::string>{"warp_speed"});
  EXPECT_EQ(report.unexpected_vms, std::vector<std::string>{"ghost"});
}
