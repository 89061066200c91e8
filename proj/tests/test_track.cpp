#include "helpers.hpp"

#include "seldagger/error.hpp"
#include "seldagger/track.hpp"

#include <doctest.h>

#include <numbers>

using namespace seldagger;
using namespace testutil;

TEST_SUITE("track") {

TEST_CASE("circle of 16 points has the analytic circumference") {
  const TrackSpline sp(circle_points(50.0, 16), true);
  CHECK(sp.total_length() == doctest::Approx(2 * std::numbers::pi * 50.0).epsilon(0.5 / 314.159));
}

TEST_CASE("unit square corners are interpolated") {
  const std::vector<Waypoint> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const TrackSpline sp(sq, true);
  // Circle through the four corners: radius sqrt(2)/2.
  CHECK(sp.total_length() == doctest::Approx(std::numbers::pi * std::sqrt(2.0)).epsilon(0.05));
  for (const auto& w : sq) {
    const TrackPose p = sp.project(w.x, w.y, 0.0);
    CHECK(std::abs(p.lateral_offset) < 1e-4);
  }
  const Vec2 p0 = sp.point_at(0.0);
  CHECK(p0.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p0.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("open collinear points have a constant tangent and zero curvature") {
  const TrackSpline sp(line_points(8), false);
  for (double s = 0.0; s < sp.total_length(); s += 3.7) {
    const Vec2 t = sp.tangent_at(s);
    CHECK(t.x() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(t.y()) < 1e-9);
    CHECK(std::abs(sp.curvature_at(s)) < 1e-6);
  }
  CHECK(sp.total_length() == doctest::Approx(70.0).epsilon(1e-9));
}

TEST_CASE("point_at follows the circle") {
  const TrackSpline sp = circle(50.0);
  const Vec2 q = sp.point_at(sp.total_length() / 4);
  CHECK((q - Vec2(0.0, 50.0)).norm() < 0.1);
  CHECK((sp.point_at(sp.total_length()) - sp.point_at(0.0)).norm() < 1e-9);
}

TEST_CASE("tangent is unit and perpendicular to the radius") {
  const TrackSpline sp = circle(50.0, 256);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, sp.total_length());
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng);
    const Vec2 t = sp.tangent_at(s);
    CHECK(std::abs(t.norm() - 1.0) < 1e-9);
    CHECK(std::abs(t.dot(sp.point_at(s).normalized())) < 1e-6);
  }
}

TEST_CASE("curvature sign follows the direction of travel") {
  const TrackSpline ccw = circle(50.0, 64, true);
  const TrackSpline cw = circle(50.0, 64, false);
  for (double s = 0.0; s < ccw.total_length(); s += 17.0) {
    CHECK(ccw.curvature_at(s) == doctest::Approx(0.02).epsilon(0.02));
    CHECK(cw.curvature_at(s) == doctest::Approx(-0.02).epsilon(0.02));
  }
}

TEST_CASE("project returns signed lateral offsets") {
  SUBCASE("on the curve") {
    const TrackSpline sp = circle(50.0);
    const Vec2 p = sp.point_at(40.0);
    const TrackPose pose = sp.project(p.x(), p.y(), 35.0);
    CHECK(std::abs(pose.lateral_offset) < 1e-4);
    CHECK(pose.s == doctest::Approx(40.0).epsilon(1e-5));
  }
  SUBCASE("1 m left of a straight") {
    const TrackSpline sp(line_points(8), false);
    const TrackPose pose = sp.project(20.0, 1.0, 20.0);
    CHECK(pose.lateral_offset == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("inside a counter-clockwise circle") {
    const TrackSpline sp = circle(50.0);
    const TrackPose pose = sp.project(0.0, 49.0, sp.total_length() / 4);
    CHECK(pose.lateral_offset == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("too far away") {
    const TrackSpline sp = circle(50.0);
    CHECK_THROWS_AS(sp.project(0.0, 0.0, 0.0), Error);
    try {
      sp.project(0.0, 0.0, 0.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProjectionDiverged);
    }
  }
}

TEST_CASE("heading error is measured against the tangent") {
  const TrackSpline sp(line_points(8), false);
  const TrackPose pose = sp.project(30.0, 0.0, 0.1, 30.0, -1.0);
  CHECK(pose.heading_error == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("advance wraps on closed tracks") {
  const TrackSpline sp = circle(50.0);
  const double L = sp.total_length();
  CHECK(sp.advance(0.0, L) == doctest::Approx(0.0));
  CHECK(sp.advance(5.0, 3.0) == doctest::Approx(8.0));
  CHECK(sp.advance(L - 1.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("arc length, tangent and curvature are mutually consistent") {
  const TrackSpline sp(stadium_points(120.0, 60.0), true);
  for (double s = 1.0; s < sp.total_length() - 2.0; s += 13.3) {
    const double ds = 0.5;
    const double chord = (sp.point_at(s + ds) - sp.point_at(s)).norm();
    CHECK(chord == doctest::Approx(ds).epsilon(1e-3));

    const double h = 1e-3;
    const Vec2 fd = (sp.point_at(s + h) - sp.point_at(s - h)) / (2 * h);
    CHECK((fd.normalized() - sp.tangent_at(s)).norm() < 1e-3);

    const Vec2 t0 = sp.tangent_at(s - h);
    const Vec2 t1 = sp.tangent_at(s + h);
    const double turn = std::atan2(t0.x() * t1.y() - t0.y() * t1.x(), t0.dot(t1)) / (2 * h);
    const double k = sp.curvature_at(s);
    if (std::abs(k) > 1e-3) CHECK(turn == doctest::Approx(k).epsilon(0.02));
    else CHECK(std::abs(turn - k) < 1e-4);

    const Vec2 p = sp.point_at(s);
    CHECK(sp.project(p.x(), p.y(), s + 3.0).s == doctest::Approx(s).epsilon(1e-3 / s));
  }
}

TEST_CASE("construction errors") {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::MalformedFile;  // sentinel: nothing thrown
  };
  CHECK(code([] { TrackSpline({{0, 0}, {1, 0}, {2, 1}}, true); }) == ErrorCode::TooFewWaypoints);
  CHECK(code([] { TrackSpline({{0, 0}, {1, 0}, {1, 0}, {2, 1}}, false); }) ==
        ErrorCode::DegenerateSegment);
}

TEST_CASE("track file parsing") {
  const auto def = parse_track("# demo\nclosed=false\nhalf_width=3.5\n0 0\n10 0\n20 0\n30 0\n", "demo");
  CHECK_FALSE(def.closed);
  CHECK(def.half_width == 3.5);
  CHECK(def.waypoints.size() == 4);
  CHECK_THROWS_AS(parse_track("0 0\n10 zero\n", "bad"), Error);
  CHECK_THROWS_AS(load_track_file("/nonexistent/x.track"), Error);
}

TEST_CASE("bundled tracks load") {
  for (const char* name : {"train", "validation", "test1", "test2", "test3"}) {
    const auto def = load_track_file(asset(std::string(name) + ".track"));
    const Track t(def);
    CHECK(t.spline.closed());
    CHECK(t.spline.total_length() > 1500.0);
  }
}

}  // TEST_SUITE
