#include "helpers.hpp"

#include "seldagger/commands.hpp"
#include "seldagger/error.hpp"
#include "seldagger/expert.hpp"

#include <doctest.h>

#include <numbers>

using namespace seldagger;
using namespace testutil;

namespace {

TrackPose centered(double s) { return {s, 0.0, 0.0}; }

}  // namespace

TEST_SUITE("expert") {

TEST_CASE("straight road: no steering, cruise speed") {
  const TrackSpline sp(line_points(20), false);
  const ExpertParams p;
  const ControlAction a = expert_action(sp, centered(50.0), 10.0, p);
  CHECK(std::abs(a.steering) < 1e-9);
  CHECK(a.speed_cmd == doctest::Approx(13.8));
}

TEST_CASE("signed tangent angle") {
  CHECK(signed_tangent_angle_deg({1, 0}, {0, 1}) == doctest::Approx(90.0));
  CHECK(signed_tangent_angle_deg({1, 0}, {0, -1}) == doctest::Approx(-90.0));
  CHECK(signed_tangent_angle_deg({2, 0}, {3, 0}) == 0.0);
}

TEST_CASE("circle steering equals the arc angle over l_ref") {
  ExpertParams p;
  p.correction = false;
  for (double r : {50.0, 100.0, 200.0}) {
    const TrackSpline sp = circle(r, 128);
    const double expect = (1.0 / r) * 180.0 / std::numbers::pi;
    CHECK(expert_steering(sp, centered(10.0), p) == doctest::Approx(expect).epsilon(0.02));
  }
}

TEST_CASE("speed rule over a speed-scaled lookahead") {
  const ExpertParams p;
  SUBCASE("beta 0.2 rad on a 100 m circle at 4 m/s") {
    // lookahead = 1 * 4 * 5 = 20 m, arc angle 20/100 = 0.2 rad
    const TrackSpline sp = circle(100.0, 128);
    CHECK(expert_speed(sp, centered(30.0), 4.0, p) == doctest::Approx(11.8).epsilon(1e-3));
  }
  SUBCASE("zero speed means zero lookahead") {
    const TrackSpline sp = circle(50.0);
    CHECK(expert_speed(sp, centered(30.0), 0.0, p) == doctest::Approx(13.8));
  }
  SUBCASE("monotone in beta with slope -k_speed") {
    const TrackSpline sp = circle(100.0, 128);
    double prev = 1e9;
    for (double v = 1.0; v <= 6.0; v += 1.0) {
      const double beta = 5.0 * v / 100.0;
      const double a = expert_speed(sp, centered(0.0), v, p);
      CHECK(a < prev);
      CHECK(a == doctest::Approx(13.8 - 10.0 * beta).epsilon(1e-3));
      prev = a;
    }
  }
  SUBCASE("degree convention") {
    ExpertParams d = p;
    d.beta_unit = AngleUnit::Degrees;
    const TrackSpline sp = circle(100.0, 128);
    const double beta_deg = 0.2 * 180.0 / std::numbers::pi;
    CHECK(expert_speed(sp, centered(30.0), 4.0, d) ==
          doctest::Approx(std::max(0.0, 13.8 - 10.0 * beta_deg)));
  }
}

TEST_CASE("car on a left-hand circle steers left and slows") {
  const TrackSpline sp = circle(50.0);
  const Vec2 pos = sp.point_at(20.0);
  const Vec2 t = sp.tangent_at(20.0);
  const CarState car{pos.x(), pos.y(), std::atan2(t.y(), t.x()), 13.8};
  const ControlAction a = expert_action(sp, car, ExpertParams{}, 20.0, 30.0);
  CHECK(a.steering > 0.0);
  CHECK(a.speed_cmd < 13.8);
}

TEST_CASE("left displacement on a straight gives corrective right steering") {
  const TrackSpline sp(line_points(20), false);
  const CarState car{50.0, 1.0, 0.0, 10.0};
  CHECK(expert_action(sp, car, ExpertParams{}, 50.0, 30.0).steering < 0.0);
}

TEST_CASE("mirrored track negates steering") {
  const TrackSpline ccw = circle(80.0, 64, true);
  const TrackSpline cw = circle(80.0, 64, false);
  for (double s = 5.0; s < 400.0; s += 37.0) {
    for (double lat : {-0.5, 0.0, 0.7}) {
      const TrackPose a{s, lat, 0.02};
      const TrackPose b{s, -lat, -0.02};
      const ExpertParams p;
      CHECK(expert_steering(ccw, a, p) ==
            doctest::Approx(-expert_steering(cw, b, p)).epsilon(1e-6));
      CHECK(expert_speed(ccw, a, 9.0, p) == doctest::Approx(expert_speed(cw, b, 9.0, p)));
    }
  }
}

TEST_CASE("steering is clamped to the actuator limit") {
  const TrackSpline sp(line_points(20), false);
  const ExpertParams p;
  CHECK(expert_steering(sp, {50.0, 30.0, 0.0}, p) == -p.max_steer);
}

TEST_CASE("projection failure propagates") {
  const TrackSpline sp = circle(50.0);
  CHECK_THROWS_AS(expert_action(sp, CarState{0, 0, 0, 5}, ExpertParams{}), Error);
}

TEST_CASE("expert completes a lap on every bundled track") {
  const RunSettings settings;
  for (const char* name : {"train", "validation", "test1", "test2", "test3"}) {
    const auto track = load_track(asset(std::string(name) + ".track"));
    const TrackCheck c = expert_lap(*track, settings);
    CAPTURE(name);
    CHECK(c.drivable);
    CHECK(c.max_lateral < 1.0);
    CHECK(c.mean_speed > 8.0);
    CHECK(c.mean_speed < 14.0);
  }
}

}  // TEST_SUITE
