#include "ngsac/error.hpp"
#include "ngsac/geometry.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ngsac;

namespace {

const Mat3 kE = (Mat3() << 0, 0, 0, 0, 0, -1, 0, 1, 0).finished();

bool throws_code(ErrorCode code, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("epipolar error examples") {
    CHECK(epipolar_error(Correspondence{0, 0, 0, 0}, kE) == 0.0);
    CHECK(epipolar_error(Correspondence{0, 0, 0, 0.1}, kE) == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(throws_code(ErrorCode::DegenerateModel, [] { epipolar_error(Correspondence{0, 0, 0, 0}, Mat3::Zero()); }));
    Mat3 tiny = kE * 1e-13;
    CHECK(throws_code(ErrorCode::DegenerateModel, [&] { epipolar_error(Correspondence{0, 0, 0, 0}, tiny); }));
    CHECK(epipolar_distance(Correspondence{0, 0, 0, 0.1}, kE) == doctest::Approx(std::sqrt(0.005)));
    CHECK(std::isinf(epipolar_distance(Correspondence{0, 0, 0, 0}, Mat3::Zero())));
  }

  TEST_CASE("epipolar error is invariant to scaling the matrix") {
    CounterRng rng(1, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const auto s = test::make_f_scene(trial, 1);
      const Correspondence y{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const double base = epipolar_error(y, s.f);
      for (const double k : {1e-3, 1e-2, 0.5, -1.0, 7.0, 1e3}) {
        CHECK(epipolar_error(y, Mat3(k * s.f)) == doctest::Approx(base).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("noise-free synthetic correspondences have zero epipolar error") {
    EpipolarSceneConfig c;
    c.outlier_rate = 0.0;
    c.noise_std = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      c.seed = seed;
      const auto s = gen_epipolar_scene(c);
      for (const auto& y : s.correspondences) REQUIRE(epipolar_error(y, s.gt_essential) < 1e-18);
    }
  }

  TEST_CASE("point line distance") {
    CHECK(point_line_distance({0, 0}, Line2{0, 1, 0}) == 0.0);
    CHECK(point_line_distance({0, 2}, Line2{0, 1, 0}) == 2.0);
    CHECK(point_line_distance({3, 4}, Line2{0.6, 0.8, -5}) == doctest::Approx(0.0).epsilon(1e-15));
    CounterRng rng(2, 0);
    for (int i = 0; i < 500; ++i) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
      const Vec2 p(rng.uniform(-5, 5), rng.uniform(-5, 5));
      const double k = rng.uniform(0.1, 10.0) * (i % 2 ? 1 : -1);
      const Line2 l = Line2::normalized(a, b, c);
      const Line2 l2 = Line2::normalized(k * a, k * b, k * c);
      CHECK(point_line_distance(p, l2) == doctest::Approx(point_line_distance(p, l)).epsilon(1e-12));
      CHECK(std::abs(l.a * l.a + l.b * l.b - 1.0) < 1e-12);
    }
  }

  TEST_CASE("normalize coordinates") {
    const std::vector<Correspondence> set{{0, 0, 0, 0}, {2, 2, 2, 2}};
    const auto n = normalize_coordinates(set);
    for (int d = 0; d < 4; ++d) {
      CHECK(n.stats.mean[d] == 1.0);
      CHECK(n.stats.stddev[d] == 1.0);
    }
    CHECK(n.correspondences[0] == Correspondence{-1, -1, -1, -1});
    CHECK(n.correspondences[1] == Correspondence{1, 1, 1, 1});

    NormalizationStats id;
    const auto same = normalize_coordinates(n.correspondences, id);
    CHECK(same.correspondences == n.correspondences);

    const std::vector<Correspondence> flat(5, Correspondence{1, 2, 3, 4});
    CHECK(throws_code(ErrorCode::ZeroVariance, [&] { normalize_coordinates(flat); }));

    CounterRng rng(3, 0);
    std::vector<Correspondence> r;
    for (int i = 0; i < 50; ++i) r.push_back({rng.normal(), rng.uniform(), 10 * rng.normal(), rng.uniform(-3, 9)});
    const auto rn = normalize_coordinates(r);
    const auto back = denormalize_coordinates(rn.correspondences, rn.stats);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(std::abs(back[i].x1 - r[i].x1) < 1e-12);
      CHECK(std::abs(back[i].y1 - r[i].y1) < 1e-12);
      CHECK(std::abs(back[i].x2 - r[i].x2) < 1e-12);
      CHECK(std::abs(back[i].y2 - r[i].y2) < 1e-12);
    }
  }

  TEST_CASE("decompose essential") {
    auto supports_for = [](const Pose& p, std::uint64_t seed) {
      CounterRng rng(seed, 1);
      std::vector<Correspondence> out;
      while (out.size() < 20) {
        const Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(3, 6));
        const Vec3 x2 = p.rotation * x + p.translation;
        if (x2.z() <= 0.5) continue;
        out.push_back({x.x() / x.z(), x.y() / x.z(), x2.x() / x2.z(), x2.y() / x2.z()});
      }
      return out;
    };
    {
      const Pose gt{Mat3::Identity(), Vec3::UnitX()};
      const auto sup = supports_for(gt, 1);
      const Pose est = decompose_essential({compose_essential(gt), MatrixKind::Essential}, sup);
      CHECK((est.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((est.translation - Vec3::UnitX()).cwiseAbs().maxCoeff() < 1e-6);
    }
    {
      const Pose gt{test::rot_z(10), Vec3::UnitZ()};
      const auto sup = supports_for(gt, 2);
      const Pose est = decompose_essential({compose_essential(gt), MatrixKind::Essential}, sup);
      CHECK(angular_pose_error(est, gt) < 1e-6);
    }
    CHECK(throws_code(ErrorCode::PreconditionViolation, [] {
      decompose_essential({compose_essential(Pose{}), MatrixKind::Essential}, {});
    }));
  }

  TEST_CASE("decompose after compose is the identity on random poses") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      EpipolarSceneConfig c;
      c.outlier_rate = 0.0;
      c.noise_std = 0.0;
      c.n_correspondences = 30;
      c.seed = seed;
      const auto s = gen_epipolar_scene(c);
      const Pose est = decompose_essential(s.gt_essential, s.correspondences);
      CHECK(angular_pose_error(est, s.gt_pose) < 1e-6);
    }
  }

  TEST_CASE("angular pose error") {
    const Pose a{Mat3::Identity(), Vec3::UnitX()};
    CHECK(angular_pose_error(a, a) == 0.0);
    CHECK(angular_pose_error(Pose{test::rot_z(10), Vec3::UnitX()}, a) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(angular_pose_error(Pose{Mat3::Identity(), Vec3::UnitY()}, a) == doctest::Approx(90.0).epsilon(1e-12));
    // Undirected translation axis.
    CHECK(angular_pose_error(Pose{Mat3::Identity(), -Vec3::UnitX()}, a) == doctest::Approx(0.0));
  }

  TEST_CASE("essential projection has two equal singular values and a zero") {
    CounterRng rng(5, 0);
    for (int i = 0; i < 100; ++i) {
      Mat3 m;
      for (int k = 0; k < 9; ++k) m.data()[k] = rng.normal();
      const Mat3 e = project_to_essential(m);
      Eigen::JacobiSVD<Mat3> svd(e);
      const auto s = svd.singularValues();
      CHECK(std::abs(s(0) - s(1)) / s(0) < 1e-6);
      CHECK(s(2) / s(0) < 1e-6);
    }
  }
}
