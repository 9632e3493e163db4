#include <gtest/gtest.h>

#include <deque>
#include <set>

#include "ipi/identifier.hpp"
#include "ipi/simulator.hpp"
#include "support/checks.hpp"

namespace ipi { namespace {

std::string config_error_field(const SimConfig& cfg) {
  try {
    simulate(cfg);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigInvalid);
    return e.detail().substr(0, e.detail().find(':'));
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

Errc scenario_error(const Scenario& s) {
  try {
    script(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "scenario accepted";
  return Errc::LengthMismatch;
}

TEST(Simulator, RejectsInvalidConfigNamingTheField) {
  SimConfig cfg;
  cfg.post_prob = 1.5;
  EXPECT_EQ(config_error_field(cfg), "post_prob");
  cfg = {};
  cfg.arrival_prob = {0.1};
  EXPECT_EQ(config_error_field(cfg), "arrival_prob");
  cfg = {};
  cfg.task_len = {5, 2};
  EXPECT_EQ(config_error_field(cfg), "task_len");
  cfg = {};
  cfg.horizon = 0;
  EXPECT_EQ(config_error_field(cfg), "horizon");
  cfg = {};
  cfg.task_names[9] = {"X"};
  EXPECT_EQ(config_error_field(cfg), "task_names");
  cfg = {};
  cfg.irqs = {1, 1};
  EXPECT_EQ(config_error_field(cfg), "irqs");
  cfg = {};
  cfg.nest_depth_max = 0;
  EXPECT_EQ(config_error_field(cfg), "nest_depth_max");
}

TEST(Simulator, NoArrivalsGivesEmptyTrace) {
  SimConfig cfg;
  cfg.arrival_prob = {0.0, 0.0};
  cfg.drain = true;
  EXPECT_TRUE(simulate(cfg).empty());
}

TEST(Simulator, ScriptFig1a) {
  auto trace = script(*builtin_scenario("fig1a"));
  EXPECT_EQ(write_trace(trace, false),
            "IHEntry irq=1 truth=1:1:START\n"
            "PostTaskEntry task=T1 truth=1:1:INTERM\n"
            "PostOk task=T1 truth=1:1:INTERM\n"
            "IHEntry irq=2 truth=2:2:START\n"
            "IHExit irq=2 truth=2:2:END\n"
            "PostTaskEntry task=T1 truth=1:1:INTERM\n"
            "PostFail task=T1 truth=1:1:INTERM\n"
            "IHExit irq=1 truth=1:1:INTERM\n"
            "RunTaskEntry task=T1 truth=1:1:INTERM\n"
            "RunTaskExit task=T1 truth=1:1:END\n");
  EXPECT_EQ(*truth_of(trace), testing::fig1a_labels());
}

TEST(Simulator, ScriptFig1bMatchesHandTrace) {
  auto trace = script(*builtin_scenario("fig1b"));
  EXPECT_EQ(events_of(trace), testing::fig1b_events());
  EXPECT_EQ(*truth_of(trace), testing::fig1b_labels());
  EXPECT_EQ(*truth_of(trace), run(events_of(trace)));
}

TEST(Simulator, MinimalScript) {
  auto trace = script({ScriptAction::irq_arrive(0, 1)});
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_EQ(trace[0].event.kind(), PointKind::IHEntry);
  EXPECT_EQ(trace[1].event.kind(), PointKind::IHExit);
  EXPECT_EQ(trace[1].truth, (Label{Inst{1, 1}, Pos::End}));
}

TEST(Simulator, ScriptRoundTripsThroughJson) {
  auto scenario = *builtin_scenario("fig1b");
  EXPECT_EQ(script(scenario_from_json(to_json(scenario))), script(scenario));
}

TEST(Simulator, ScriptWithBodiesGapsAndBootPost) {
  using A = ScriptAction;
  auto trace = script({A::post(0, "Boot"), A::irq_arrive(2, 3), A::body_len(3, 2),
                       A::post(5, "T", 2)});
  // Boot posting runs in the non-interrupt instance; irq 3 preempts nothing.
  std::vector<PointKind> kinds;
  for (const auto& le : trace) kinds.push_back(le.event.kind());
  EXPECT_EQ(kinds, (std::vector<PointKind>{
                       PointKind::PostTaskEntry, PointKind::PostOk, PointKind::IHEntry,
                       PointKind::Other, PointKind::Other, PointKind::PostTaskEntry,
                       PointKind::Other, PointKind::Other, PointKind::PostOk, PointKind::IHExit,
                       PointKind::RunTaskEntry, PointKind::RunTaskExit, PointKind::RunTaskEntry,
                       PointKind::RunTaskExit}));
  EXPECT_EQ(trace[10].truth->inst, Inst::non_interrupt());
  EXPECT_EQ(trace[13].truth, (Label{Inst{1, 3}, Pos::End}));
  EXPECT_EQ(*truth_of(trace), run(events_of(trace)));
}

TEST(Simulator, ScriptRejectsBadScenarios) {
  using A = ScriptAction;
  // Posting an already-pending task while expecting success.
  EXPECT_EQ(scenario_error({A::irq_arrive(0, 1), A::post(1, "T"), A::post(3, "T")}),
            Errc::ScenarioInvalid);
  // Expecting a failure that does not happen.
  EXPECT_EQ(scenario_error({A::irq_arrive(0, 1), A::post_fail_expected(1, "T")}),
            Errc::ScenarioInvalid);
  EXPECT_EQ(scenario_error({A::irq_arrive(1, 1), A::irq_arrive(0, 2)}), Errc::ScenarioInvalid);
  EXPECT_EQ(scenario_error({A::irq_arrive(0, 1), A::irq_arrive(5, 1)}), Errc::ScenarioInvalid);
  EXPECT_EQ(scenario_error({A::irq_arrive(0, 0)}), Errc::ScenarioInvalid);
  EXPECT_EQ(scenario_error({A::irq_arrive(0, 1), A::post(1, "T", 3), A::post(2, "U")}),
            Errc::ScenarioInvalid);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"([{"at":0,"action":"jump"}])")), Error);
}

TEST(Simulator, DeterministicPerSeed) {
  auto cfg = testing::corpus_config(11);
  EXPECT_EQ(write_trace(simulate(cfg), true), write_trace(simulate(cfg), true));
  auto other = cfg;
  other.seed += 1;
  EXPECT_NE(write_trace(simulate(cfg), true), write_trace(simulate(other), true));
}

TEST(Simulator, ConfigJsonRoundTrip) {
  auto cfg = testing::corpus_config(7);
  auto again = sim_config_from_json(to_json(cfg));
  EXPECT_EQ(write_trace(simulate(cfg), true), write_trace(simulate(again), true));

  auto parsed = sim_config_from_json(nlohmann::json::parse(
      R"({"irqs":[1,2,3],"arrival_prob":0.1,"handler_len":4,"task_names":{"2":["A"]}})"));
  EXPECT_EQ(parsed.arrival_prob, (std::vector<double>{0.1, 0.1, 0.1}));
  EXPECT_EQ(parsed.handler_len.min, 4u);
  EXPECT_EQ(parsed.handler_len.max, 4u);
  EXPECT_EQ(parsed.task_names.size(), 1u);

  EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"horizon":-3})")), Error);
  EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"irqs":[-1]})")), Error);
  EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"colour":1})")), Error);
  EXPECT_THROW(sim_config_from_json(nlohmann::json::parse(R"({"post_gap":[3]})")), Error);
}

// Property: structural rules of the machine hold on every generated trace.
TEST(Simulator, StructuralInvariants) {
  for (std::uint64_t i = 0; i < 60; ++i) {
    auto cfg = testing::corpus_config(i);
    cfg.horizon = 4000;
    auto trace = simulate(cfg);

    std::vector<std::uint32_t> nest;
    std::deque<std::string> queue;
    std::set<std::string> pending;
    std::optional<std::string> running;
    for (const auto& le : trace) {
      const auto& e = le.event;
      switch (e.kind()) {
        case PointKind::IHEntry:
          nest.push_back(e.irq());
          ASSERT_LE(nest.size(), cfg.nest_depth_max);
          break;
        case PointKind::IHExit:
          ASSERT_FALSE(nest.empty());
          ASSERT_EQ(nest.back(), e.irq());
          nest.pop_back();
          break;
        case PointKind::PostOk:
          ASSERT_FALSE(pending.count(e.task()));
          queue.push_back(e.task());
          pending.insert(e.task());
          break;
        case PointKind::PostFail:
          ASSERT_TRUE(pending.count(e.task())) << "PostFail of a task that is not pending";
          break;
        case PointKind::RunTaskEntry:
          ASSERT_TRUE(nest.empty());
          ASSERT_FALSE(running);
          ASSERT_FALSE(queue.empty());
          ASSERT_EQ(queue.front(), e.task()) << "task runs out of FIFO order";
          queue.pop_front();
          pending.erase(e.task());
          running = e.task();
          break;
        case PointKind::RunTaskExit:
          ASSERT_EQ(running, e.task());
          running.reset();
          break;
        default:
          break;
      }
    }
    EXPECT_TRUE(nest.empty());
    EXPECT_TRUE(queue.empty());
    EXPECT_FALSE(running);
  }
}

TEST(Simulator, SelfNestingFollowsConfig) {
  auto has_self_nest = [](const std::vector<LabeledEvent>& trace) {
    std::vector<std::uint32_t> nest;
    for (const auto& le : trace) {
      if (le.event.kind() == PointKind::IHEntry) {
        if (std::find(nest.begin(), nest.end(), le.event.irq()) != nest.end()) return true;
        nest.push_back(le.event.irq());
      } else if (le.event.kind() == PointKind::IHExit) {
        nest.pop_back();
      }
    }
    return false;
  };
  SimConfig cfg;
  cfg.irqs = {1};
  cfg.arrival_prob = {0.2};
  cfg.task_names = {{1, {"T"}}};
  cfg.nest_depth_max = 3;
  cfg.horizon = 5000;
  EXPECT_FALSE(has_self_nest(simulate(cfg)));
  cfg.allow_self_nest = true;
  EXPECT_TRUE(has_self_nest(simulate(cfg)));
}

TEST(Simulator, UndrainedTraceKeepsLiveInstancesOpen) {
  auto cfg = testing::corpus_config(2);
  cfg.drain = false;
  cfg.horizon = 3000;
  auto trace = simulate(cfg);
  auto labels = run(events_of(trace));
  // Truth and identifier agree wherever the identifier has committed.
  EXPECT_EQ(*truth_of(trace), labels);
}

TEST(Simulator, TruthMatchesIdentifier) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto cfg = testing::corpus_config(i);
    cfg.horizon = 5000;
    auto trace = simulate(cfg);
    ASSERT_EQ(*truth_of(trace), run(events_of(trace))) << "config " << i;
  }
}

}}  // namespace ipi::
