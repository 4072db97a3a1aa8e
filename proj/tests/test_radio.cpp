#include <cmath>

#include "doctest.h"
#include "mmfl/mobility.hpp"
#include "mmfl/radio.hpp"
#include "mmfl/rng.hpp"

using namespace mmfl;

namespace {

// reference-table budget: p=30 dBm, h=-34 dB, sigma2=-104 dBm, nu=2, W=20 MHz
LinkBudget table_budget() {
  LinkBudget b;
  b.p_watt = dbm_to_watt(30.0);
  b.h_ref = db_to_linear(-34.0);
  b.sigma2_watt = dbm_to_watt(-104.0);
  b.pathloss_exp = 2.0;
  b.bandwidth_hz = 2.0e7;
  b.d_direct_m = 100.0;
  b.xi = 1.0;
  return b;
}

// two vehicles 100 m apart, vehicle 1 leads task 0, vehicle 0 is the SOV
struct TwoVehicleFixture {
  Schedule sched{1, 2, 1, 60};
  std::vector<VehicleState> world{2};
  TaskSpec task;

  TwoVehicleFixture() {
    sched.assign_at(0, 0) = 1;
    sched.assign_at(1, 0) = 1;
    sched.leader_at(1, 0) = 1;
    sched.grant_at(0, 0, 0) = 1;
    world[0].id = 1;
    world[1].id = 2;
    world[1].x = 100.0;
    task.task_id = 1;
    task.model_dim = 10;
    task.z_bits = 1000000;
    task.dataset_sizes = {4, 4};
  }
};

}  // namespace

TEST_CASE("dbm conversions") {
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
  CHECK(dbm_to_watt(0.0) == doctest::Approx(0.001));
  CHECK(dbm_to_watt(-104.0) == doctest::Approx(3.9811e-14).epsilon(1e-4));
}

TEST_CASE("bandwidth ratio counts granted subcarriers over N") {
  TwoVehicleFixture f;
  CHECK(bandwidth_ratio(f.sched, 0, 1) == doctest::Approx(1.0 / 60.0));

  f.sched.grant_at(0, 0, 1) = 1;
  f.sched.grant_at(0, 0, 2) = 1;
  CHECK(bandwidth_ratio(f.sched, 0, 1) == doctest::Approx(0.05));

  Schedule empty(1, 2, 1, 60);
  empty.assign_at(1, 0) = 1;
  empty.leader_at(1, 0) = 1;
  CHECK(bandwidth_ratio(empty, 0, 1) == 0.0);

  CHECK_THROWS_AS(bandwidth_ratio(f.sched, 1, 0), RadioError);  // vehicle 0 leads nothing
}

TEST_CASE("tx_rate reproduces the reference-table value at 100 m") {
  const LinkBudget b = table_budget();
  const double rate = tx_rate(1.0 / 60.0, b, 100.0);
  CHECK(rate == doctest::Approx(6.6439e6).epsilon(1e-3));
  CHECK(tx_rate(0.0, b, 100.0) == 0.0);
}

TEST_CASE("indirect links use the scaled fixed distance") {
  LinkBudget b = table_budget();
  b.xi = 2.0;
  const double rate = tx_rate(1.0 / 60.0, b, 150.0);  // effective distance 200 m
  CHECK(rate == doctest::Approx(5.9772e6).epsilon(1e-3));
  // inside the radius the true distance applies
  CHECK(tx_rate(1.0 / 60.0, b, 100.0) == doctest::Approx(6.6439e6).epsilon(1e-3));
}

TEST_CASE("tx_rate is monotone in ratio and distance") {
  const LinkBudget b = table_budget();
  double prev = 0.0;
  for (int c = 1; c <= 10; ++c) {
    const double r = tx_rate(c / 60.0, b, 80.0);
    CHECK(r > prev);
    prev = r;
  }
  prev = 1e18;
  for (double d = 10.0; d <= 100.0; d += 10.0) {
    const double r = tx_rate(1.0 / 60.0, b, d);
    CHECK(r < prev);
    prev = r;
  }
  // ratio linearity: doubling the subcarrier count doubles the rate
  CHECK(tx_rate(2.0 / 60.0, b, 80.0) == doctest::Approx(2.0 * tx_rate(1.0 / 60.0, b, 80.0)));
}

TEST_CASE("sov_cost divides model bits by the realized rate") {
  TwoVehicleFixture f;
  const LinkBudget b = table_budget();
  const CostResult c = sov_cost(f.sched, 0, b, f.world, f.task);
  CHECK(c.time_s == doctest::Approx(0.15051).epsilon(1e-3));
  CHECK(c.energy_j == doctest::Approx(c.time_s * b.p_watt));

  // unscheduled vehicle: zero
  Schedule idle(1, 2, 1, 60);
  idle.assign_at(1, 0) = 1;
  idle.leader_at(1, 0) = 1;
  const CostResult none = sov_cost(idle, 0, b, f.world, f.task);
  CHECK(none.time_s == 0.0);
  CHECK(none.energy_j == 0.0);

  // the leader itself: zero
  const CostResult leader = sov_cost(f.sched, 1, b, f.world, f.task);
  CHECK(leader.time_s == 0.0);

  // scheduled but no subcarrier: surfaced as an error
  Schedule no_grant = f.sched;
  no_grant.grant_at(0, 0, 0) = 0;
  CHECK_THROWS_AS(sov_cost(no_grant, 0, b, f.world, f.task), RadioError);
}

TEST_CASE("chv_cost is max over times and sum over energies") {
  // three vehicles, leader 2; SOV times differ via subcarrier counts
  Schedule sched(1, 3, 1, 60);
  for (int h = 0; h < 3; ++h) sched.assign_at(h, 0) = 1;
  sched.leader_at(2, 0) = 1;
  sched.grant_at(0, 0, 0) = 1;  // one subcarrier
  sched.grant_at(0, 1, 1) = 1;  // two subcarriers
  sched.grant_at(0, 1, 2) = 1;
  std::vector<VehicleState> world(3);
  for (int h = 0; h < 3; ++h) world[h].id = h + 1;
  world[0].x = 50.0;
  world[1].x = 50.0;
  world[2].x = 0.0;
  TaskSpec task;
  task.task_id = 1;
  task.z_bits = 1000000;
  task.dataset_sizes = {4, 4, 4};
  const LinkBudget b = table_budget();

  const CostResult s0 = sov_cost(sched, 0, b, world, task);
  const CostResult s1 = sov_cost(sched, 1, b, world, task);
  const CostResult head = chv_cost(sched, 2, b, world, {task});
  CHECK(head.time_s == doctest::Approx(std::max(s0.time_s, s1.time_s)));
  CHECK(head.energy_j == doctest::Approx(s0.energy_j + s1.energy_j));

  // leader with no members: zero
  Schedule solo(1, 3, 1, 60);
  solo.assign_at(2, 0) = 1;
  solo.leader_at(2, 0) = 1;
  const CostResult lone = chv_cost(solo, 2, b, world, {task});
  CHECK(lone.time_s == 0.0);
  CHECK(lone.energy_j == 0.0);

  CHECK_THROWS_AS(chv_cost(sched, 0, b, world, {task}), RadioError);
}

TEST_CASE("more subcarriers strictly lower the upload time") {
  TwoVehicleFixture f;
  const LinkBudget b = table_budget();
  const double t1 = sov_cost(f.sched, 0, b, f.world, f.task).time_s;
  f.sched.grant_at(0, 0, 1) = 1;
  const double t2 = sov_cost(f.sched, 0, b, f.world, f.task).time_s;
  CHECK(t2 == doctest::Approx(t1 / 2.0));
  CHECK(t2 < t1);
}

TEST_CASE("rates stay finite below the reference distance") {
  const LinkBudget b = table_budget();
  const double at_ref = tx_rate(1.0, b, 1.0);
  CHECK(std::isfinite(tx_rate(1.0, b, 0.0)));
  CHECK(tx_rate(1.0, b, 0.5) == doctest::Approx(at_ref));
  CHECK(tx_rate(1.0, b, 0.0) == doctest::Approx(at_ref));
}
