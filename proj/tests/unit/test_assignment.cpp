#include <doctest.h>

#include <algorithm>
#include <limits>

#include "cfisac/assignment.hpp"

using namespace cfisac;

TEST_SUITE("assignment") {

TEST_CASE("single SSA takes its best AP for RX and the runner-up for TX") {
  Mat g(1, 3);
  g << 5, 9, 2;
  const AssignmentPlan p = select_ap_modes(g, 1, 1);
  CHECK(p.ssa_rx[0] == std::vector<int>{1});
  CHECK(p.ssa_tx[0] == std::vector<int>{0});
  CHECK(p.idle_aps == std::vector<int>{2});
  p.check_invariants(1, 1, false);
}

TEST_CASE("the first SSA in order wins a contested AP") {
  // Both SSAs rank AP 3 first; SSA 1 falls back to its second choice.
  Mat g(2, 6);
  g << 1, 2, 3, 9, 8, 0,
       0, 4, 7, 10, 1, 2;
  const AssignmentPlan p = select_ap_modes(g, 1, 1);
  CHECK(p.ssa_rx[0] == std::vector<int>{3});
  CHECK(p.ssa_rx[1] == std::vector<int>{2});
  // TX picks come after both RX picks: SSA 0 takes AP 4, SSA 1 takes AP 1.
  CHECK(p.ssa_tx[0] == std::vector<int>{4});
  CHECK(p.ssa_tx[1] == std::vector<int>{1});
  p.check_invariants(1, 1, false);
}

TEST_CASE("extra RX-APs may be shared between SSAs") {
  Mat g(2, 6);
  g << 9, 8, 1, 1, 7, 0,
       1, 1, 9, 8, 7, 0;
  const AssignmentPlan p = select_ap_modes(g, 1, 2);
  CHECK(p.ssa_rx[0] == std::vector<int>{0, 4});
  CHECK(p.ssa_rx[1] == std::vector<int>{2, 4});
  CHECK(p.rx_aps == std::vector<int>{0, 2, 4});
  p.check_invariants(1, 2, false);
}

TEST_CASE("ties break toward the lower AP index") {
  Mat g(1, 4);
  g << 3, 3, 3, 3;
  const AssignmentPlan p = select_ap_modes(g, 2, 1);
  CHECK(p.ssa_rx[0] == std::vector<int>{0});
  CHECK(p.ssa_tx[0] == std::vector<int>{1, 2});
}

TEST_CASE("too few APs is reported as infeasible") {
  Mat g(2, 3);
  g << 1, 2, 3, 3, 2, 1;
  CHECK_THROWS_AS(select_ap_modes(g, 1, 1), InfeasibleAssignment);
}

TEST_CASE("UE association accumulates gain until the threshold") {
  Mat sensing(1, 5);
  sensing << 0, 0, 0, 0, 100;  // AP 4 becomes RX, AP 0 TX
  AssignmentPlan p = select_ap_modes(sensing, 1, 1);
  REQUIRE(p.ssa_rx[0] == std::vector<int>{4});
  Mat ue(1, 5);
  ue << 10, 30, 5, 1, 1000;
  const AssignmentPlan q = associate_ues(ue, p, 35.0);
  // RX AP 4 is never eligible; 30 + 10 = 40 ≥ 35 after two picks.
  CHECK(q.serving_sets[0] == std::vector<int>{0, 1});
  CHECK(q.serves(1, 0));
  CHECK(q.tx_index(1) >= 0);
  CHECK(std::find(q.idle_aps.begin(), q.idle_aps.end(), 1) == q.idle_aps.end());
  q.check_invariants(1, 1, true);

  const AssignmentPlan master_only = associate_ues(ue, p, 0.0);
  CHECK(master_only.serving_sets[0] == std::vector<int>{1});
  const AssignmentPlan everyone = associate_ues(ue, p, std::numeric_limits<double>::infinity());
  CHECK(everyone.serving_sets[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(everyone.idle_aps.empty());
}

TEST_CASE("default layout with one TX and one RX per SSA") {
  SystemConfig c;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scenario sc = build_scenario(c, seed);
    const AssignmentPlan p = build_assignment(sc);
    CHECK(p.num_rx() == 4);
    CHECK(p.num_tx() >= 4);
    CHECK(p.num_tx() + p.num_rx() + static_cast<int>(p.idle_aps.size()) == 25);
    p.check_invariants(1, 1, true);
  }
}

TEST_CASE("invariant checker catches a broken reverse map") {
  Mat g(1, 3);
  g << 5, 9, 2;
  AssignmentPlan p = select_ap_modes(g, 1, 1);
  p.ap_targets[0].clear();
  CHECK_THROWS_AS(p.check_invariants(1, 1, false), ContractViolation);
}

TEST_CASE("plans survive a JSON round trip") {
  const Scenario sc = build_scenario(SystemConfig{}, 4);
  const AssignmentPlan p = build_assignment(sc);
  const nlohmann::json j = p;
  const AssignmentPlan q = j.get<AssignmentPlan>();
  CHECK(q.serving_sets == p.serving_sets);
  CHECK(q.ap_ues == p.ap_ues);
  CHECK(q.ap_targets == p.ap_targets);
  CHECK(q.rx_aps == p.rx_aps);
}

}
