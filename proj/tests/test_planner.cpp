#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rcov/planner.hpp"
#include "test_support.hpp"

using namespace rcov;
using testing::error_kind;

namespace {

RobotModel wide_double(double u_max = 1.0, double v_max = 100.0) {
  RobotModel m;
  m.kind = ModelKind::DoubleIntegrator;
  m.dt = 0.1;
  m.u_max = u_max;
  m.v_max = v_max;
  m.pos_min = Vec2(-20, -20);
  m.pos_max = Vec2(20, 20);
  return m;
}

Eigen::VectorXd rest_at(double x, double y) { return Eigen::Vector4d(x, y, 0, 0); }

// Exact discrete rest-to-rest minimum for one axis without a speed cap:
// N steps reach at most u_max dt^2 floor(N^2 / 4).
int discrete_bang_bang_steps(double L, double u_max, double dt) {
  int n = 0;
  while (u_max * dt * dt * std::floor(n * n / 4.0) < L - 1e-12) ++n;
  return n;
}

ReturnPlan checked_plan(const Eigen::VectorXd& x0, const Vec2& base, const RobotModel& m,
                        std::span<const Obstacle> obs = {}, double base_radius = 0.15) {
  EnergyParams p;
  const ReturnPlan plan = min_time_return(x0, base, m, obs, p);
  const auto v = plan_violations(plan, x0, base, base_radius, m, obs);
  for (const auto& s : v) FAIL_CHECK(s);
  return plan;
}

}  // namespace

TEST_CASE("feasibility probe examples") {
  const RobotModel m = wide_double();
  const auto at_base = feasibility_probe(0, rest_at(0, 0), Vec2(0, 0), m, {});
  REQUIRE(at_base);
  CHECK(at_base->steps() == 0);

  // L = 1, u_max = 1, dt = 0.1: the discrete optimum is exactly 20 steps.
  CHECK(discrete_bang_bang_steps(1.0, 1.0, 0.1) == 20);
  CHECK_FALSE(feasibility_probe(15, rest_at(1, 0), Vec2(0, 0), m, {}));
  CHECK_FALSE(feasibility_probe(19, rest_at(1, 0), Vec2(0, 0), m, {}));
  CHECK(feasibility_probe(20, rest_at(1, 0), Vec2(0, 0), m, {}));

  const auto generous = feasibility_probe(60, rest_at(1, -0.5), Vec2(0, 0), m, {});
  REQUIRE(generous);
  for (const Vec2& u : generous->inputs) CHECK(u.cwiseAbs().maxCoeff() <= m.u_max + 1e-9);
  ReturnPlan wrap{*generous, 60, 0.0};
  CHECK(plan_violations(wrap, rest_at(1, -0.5), Vec2(0, 0), 1e-6, m, {}).empty());
}

TEST_CASE("min_time_return examples") {
  const RobotModel m = wide_double();
  const ReturnPlan home = checked_plan(rest_at(0.3, 0.2), Vec2(0.3, 0.2), m);
  CHECK(home.tau_star == 0);
  CHECK(home.energy_required == 0.0);

  const ReturnPlan one = checked_plan(rest_at(1, 0), Vec2(0, 0), m);
  CHECK(std::abs(one.tau_star - 20) <= 2);
  CHECK(one.tau_star == 20);

  const std::vector<Obstacle> blocker{{Vec2(0, 0), 0.3}};
  CHECK(error_kind([&] { min_time_return(rest_at(1, 0), Vec2(0, 0), m, blocker, EnergyParams{}); }) ==
        ErrorKind::Unreachable);
}

TEST_CASE("follow_plan examples") {
  const ReturnPlan plan = checked_plan(rest_at(1, 0), Vec2(0, 0), wide_double());
  CHECK(follow_plan(plan, 0) == plan.trajectory.inputs.front());
  CHECK(error_kind([&] { follow_plan(plan, plan.tau_star); }) == ErrorKind::PlanExhausted);
  // A new plan from a later state starts again at offset 0.
  const ReturnPlan again = checked_plan(plan.trajectory.states[5], Vec2(0, 0), wide_double());
  CHECK(follow_plan(again, 0) == again.trajectory.inputs.front());
  CHECK(again.tau_star <= plan.tau_star - 5);
}

TEST_CASE("property: tau_star equals the discrete bang-bang optimum on 1-D instances") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> length(0.1, 3.0), accel(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double L = length(rng), a = accel(rng);
    const RobotModel m = wide_double(a);
    const ReturnPlan plan = checked_plan(rest_at(L, 0), Vec2(0, 0), m);
    const double analytic = 2.0 * std::sqrt(L / a) / m.dt;
    CHECK(std::abs(plan.tau_star - analytic) <= 2.0);
    CHECK(plan.tau_star == discrete_bang_bang_steps(L, a, m.dt));
  }
}

TEST_CASE("property: the continuous bound never exceeds the discrete optimum") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> pos(-1.5, 1.5), vel(-0.4, 0.4);
  RobotModel m = wide_double(1.0, 0.5);
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::VectorXd x0(4);
    x0 << pos(rng), pos(rng), vel(rng), vel(rng);
    const ReturnPlan plan = checked_plan(x0, Vec2(0, 0), m);
    CHECK(min_time_lower_bound(x0, Vec2(0, 0), m) <= plan.tau_star * m.dt + 1e-9);
    CHECK_FALSE(feasibility_probe(plan.tau_star - 1, x0, Vec2(0, 0), m, {}));
  }
}

TEST_CASE("property: energy_required grows with distance from the base") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), dist(0.05, 3.0);
  RobotModel m = wide_double(1.0, 0.5);
  const Vec2 base(0.5, 0.5);
  // Least-effort energy at the minimum horizon can dip when the horizon
  // steps up, so the check is pairwise agreement on well-separated starts.
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 40; ++i) {
    const double th = angle(rng), r = dist(rng);
    const Vec2 p = base + r * Vec2(std::cos(th), std::sin(th));
    samples.emplace_back(r, checked_plan(rest_at(p.x(), p.y()), base, m).energy_required);
  }
  int agree = 0, total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      if (std::abs(samples[i].first - samples[j].first) < 0.5) continue;
      ++total;
      if ((samples[i].first < samples[j].first) == (samples[i].second < samples[j].second)) ++agree;
    }
  CHECK(agree >= 0.95 * total);
}

TEST_CASE("obstacles are avoided") {
  RobotModel m = wide_double(1.0, 0.5);
  const Vec2 base(0, 0);
  const Eigen::VectorXd x0 = rest_at(2, 0);
  const ReturnPlan free = checked_plan(x0, base, m);
  const std::vector<Obstacle> obs{{Vec2(1.0, 0.0), 0.2}};
  const ReturnPlan detour = checked_plan(x0, base, m, obs);
  CHECK(detour.tau_star >= free.tau_star);
  for (const auto& s : detour.trajectory.states) CHECK((RobotModel::position(s) - obs[0].center).norm() >= 0.2 - 1e-6);

  // An obstacle that already contains the start is ignored.
  const std::vector<Obstacle> around{{Vec2(2.05, 0.0), 0.2}};
  CHECK(checked_plan(x0, base, m, around).tau_star == free.tau_star);
}

TEST_CASE("single integrator and position bounds") {
  RobotModel m;
  m.kind = ModelKind::SingleIntegrator;
  m.dt = 0.1;
  m.u_max = 0.5;
  m.pos_min = Vec2(0, 0);
  m.pos_max = Vec2(4, 4);
  const ReturnPlan p = checked_plan(Eigen::Vector2d(3.0, 1.0), Vec2(0.5, 0.5), m);
  CHECK(p.tau_star == 50);
  CHECK(default_t_max(m) == static_cast<int>(std::ceil(4.0 * std::sqrt(32.0) / 0.5 / 0.1)));
  CHECK(error_kind([&] { min_time_return(Eigen::Vector2d(1, 1), Vec2(5, 5), m, {}, EnergyParams{}); }) ==
        ErrorKind::InvalidArgument);
}
