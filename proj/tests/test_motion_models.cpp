#include <doctest.h>

#include <array>
#include <cmath>

#include "gwm/error.hpp"
#include "gwm/motion_models.hpp"
#include "gwm/prng.hpp"
#include "oracles.hpp"

using namespace gwm;

namespace {

constexpr std::array<ModelFamily, 3> kFamilies = {ModelFamily::Constant, ModelFamily::Affine,
                                                  ModelFamily::Quadratic12};

bool close_rel(double a, double b, double tol, double abs_floor = 1e-12) {
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

FlowField random_flow(Prng& rng, int w, int h, double amp = 5.0) {
  FlowField field(w, h);
  for (float& f : field.data) f = static_cast<float>(rng.uniform(-amp, amp));
  return field;
}

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

std::vector<double> random_weights(Prng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform(0.05, 1.0);
  return w;
}

MotionModelParams random_model(Prng& rng, ModelFamily family, double amp = 3.0) {
  MotionModelParams m;
  m.family = family;
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < lifted_dim(family); ++j) m.a[c][j] = rng.uniform(-amp, amp);
    m.b[c] = rng.uniform(-amp, amp);
  }
  return m;
}

double max_param_diff(const MotionModelParams& p, const MotionModelParams& q) {
  double d = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < kMaxLiftDim; ++j) d = std::max(d, std::fabs(p.a[c][j] - q.a[c][j]));
    d = std::max(d, std::fabs(p.b[c] - q.b[c]));
  }
  return d;
}

}  // namespace

TEST_CASE("lift evaluates the documented bases") {
  CHECK(lift(ModelFamily::Quadratic12, 0.0, 0.0) == std::vector<double>{0, 0, 0, 0, 0});
  CHECK(lift(ModelFamily::Quadratic12, 0.5, -1.0) ==
        std::vector<double>{0.5, 0.25, -1.0, 1.0, -0.5});
  CHECK(lift(ModelFamily::Affine, 0.3, 0.7) == std::vector<double>{0.3, 0.7});
  CHECK(lift(ModelFamily::Constant, 0.9, 0.9).empty());
}

TEST_CASE("coordinate normalization maps corners and center") {
  const auto norm = CoordNormalization::for_frame(9, 5);
  CHECK(norm.nx(0) == doctest::Approx(-1.0));
  CHECK(norm.nx(8) == doctest::Approx(1.0));
  CHECK(norm.nx(4) == doctest::Approx(0.0));
  CHECK(norm.ny(2) == doctest::Approx(0.0));
  CHECK(norm.px(norm.nx(3.25)) == doctest::Approx(3.25));
}

TEST_CASE("constant flow is fitted exactly by every family") {
  FlowField flow(6, 7);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    flow.data[2 * i] = 2.0f;
    flow.data[2 * i + 1] = 3.0f;
  }
  const auto norm = CoordNormalization::for_frame(6, 7);
  const auto weights = uniform_weights(flow.pixels());
  for (ModelFamily family : kFamilies) {
    const auto params = fit_wls(flow, weights, family, norm);
    CHECK(params.energy <= 1e-9);
    for (int y = 0; y < flow.height; ++y)
      for (int x = 0; x < flow.width; ++x) {
        const auto f = params.flow_at(norm.nx(x), norm.ny(y));
        CHECK(std::fabs(f[0] - 2.0) < 1e-6);
        CHECK(std::fabs(f[1] - 3.0) < 1e-6);
      }
  }
}

TEST_CASE("fit recovers an exact affine member on an 8x8 grid") {
  Prng rng(11);
  const auto norm = CoordNormalization::for_frame(8, 8);
  const MotionModelParams truth = random_model(rng, ModelFamily::Affine, 2.0);
  const FlowField flow = synthesize_flow(truth, 8, 8, norm);
  const auto fitted =
      fit_wls(flow, uniform_weights(flow.pixels()), ModelFamily::Affine, norm);
  CHECK(max_param_diff(fitted, truth) < 1e-6);
  CHECK(fitted.energy <= 1e-9);
}

TEST_CASE("random quadratic fits match the normal-equation oracle and resist descent") {
  Prng rng(17);
  const auto norm = CoordNormalization::for_frame(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const FlowField flow = random_flow(rng, 3, 3);
    const auto weights = random_weights(rng, flow.pixels());
    const auto fitted = fit_wls(flow, weights, ModelFamily::Quadratic12, norm, 0.0);
    const auto oracle = test::wls_normal_equation_oracle(flow, weights, ModelFamily::Quadratic12, norm);
    CHECK(close_rel(fitted.energy, oracle.energy, 1e-8, 1e-10));
    const double refined =
        test::descend_objective(flow, weights, ModelFamily::Quadratic12, norm, oracle.theta, 200);
    CHECK(fitted.energy <= refined + 1e-8 * std::max(1.0, refined));
  }
}

TEST_CASE("homogeneous and centered forms agree on 1000 random instances") {
  Prng rng(23);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 3 + static_cast<int>(rng.below(8));
    const int h = 3 + static_cast<int>(rng.below(8));
    const FlowField flow = random_flow(rng, w, h);
    const auto weights = random_weights(rng, flow.pixels());
    const ModelFamily family = kFamilies[trial % 3];
    const auto norm = CoordNormalization::for_frame(w, h);
    const auto a = fit_wls(flow, weights, family, norm);
    const auto b = fit_wls_centered(flow, weights, family, norm);
    CHECK(close_rel(a.energy, b.energy, 1e-8, 1e-12));
    CHECK(max_param_diff(a, b) < 1e-8 * std::max(1.0, std::fabs(a.b[0]) + std::fabs(a.b[1])));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("constant family reduces to the weighted mean") {
  FlowField flow(2, 1);
  flow.u(0, 0) = 1.0f;
  flow.u(1, 0) = 3.0f;
  const auto norm = CoordNormalization::for_frame(2, 1);

  const std::vector<double> even = {1.0, 1.0};
  const auto fit_even = fit_wls_centered(flow, even, ModelFamily::Constant, norm, 0.0);
  CHECK(fit_even.b[0] == doctest::Approx(2.0));
  CHECK(fit_even.b[1] == doctest::Approx(0.0));
  CHECK(fit_even.energy == doctest::Approx(2.0));  // 1^2 + 1^2 at original scale

  const std::vector<double> skew = {3.0, 1.0};
  const auto fit_skew = fit_wls_centered(flow, skew, ModelFamily::Constant, norm, 0.0);
  CHECK(fit_skew.b[0] == doctest::Approx(1.5));
}

TEST_CASE("residual map reproduces the fit energy and simple cases") {
  SUBCASE("exact model gives zero residuals") {
    Prng rng(31);
    const auto norm = CoordNormalization::for_frame(7, 6);
    const MotionModelParams model = random_model(rng, ModelFamily::Quadratic12, 1.5);
    const FlowField flow = synthesize_flow(model, 7, 6, norm);
    for (double r : residual_map(flow, model, norm)) CHECK(r < 1e-10);
  }
  SUBCASE("zero model against unit diagonal flow") {
    FlowField flow(4, 4);
    for (float& f : flow.data) f = 1.0f;
    MotionModelParams zero;
    zero.family = ModelFamily::Constant;
    const auto norm = CoordNormalization::for_frame(4, 4);
    for (double r : residual_map(flow, zero, norm)) CHECK(r == doctest::Approx(2.0));
  }
  SUBCASE("weighted residual sum equals the reported energy at ridge 0") {
    Prng rng(37);
    for (ModelFamily family : kFamilies) {
      const FlowField flow = random_flow(rng, 6, 5);
      const auto weights = random_weights(rng, flow.pixels());
      const auto norm = CoordNormalization::for_frame(6, 5);
      const auto params = fit_wls(flow, weights, family, norm, 0.0);
      const auto residuals = residual_map(flow, params, norm);
      double total = 0.0;
      for (std::size_t i = 0; i < residuals.size(); ++i) total += weights[i] * residuals[i];
      CHECK(close_rel(total, params.energy, 1e-6));
    }
  }
}

TEST_CASE("synthesize_flow structure") {
  const auto norm = CoordNormalization::for_frame(9, 4);
  SUBCASE("pure translation") {
    MotionModelParams m;
    m.family = ModelFamily::Constant;
    m.b = {1.0, -1.0};
    const FlowField flow = synthesize_flow(m, 9, 4, norm);
    for (std::size_t i = 0; i < flow.pixels(); ++i) {
      CHECK(flow.data[2 * i] == 1.0f);
      CHECK(flow.data[2 * i + 1] == -1.0f);
    }
  }
  SUBCASE("x^2 term only: parabola in x, constant in y") {
    MotionModelParams m;
    m.family = ModelFamily::Quadratic12;
    m.a[0][1] = 2.0;  // u_x = 2 x^2
    const FlowField flow = synthesize_flow(m, 9, 4, norm);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 9; ++x) {
        const double nx = norm.nx(x);
        CHECK(flow.u(x, y) == doctest::Approx(2.0 * nx * nx));
        CHECK(flow.v(x, y) == doctest::Approx(0.0));
        CHECK(flow.u(x, y) == flow.u(x, 0));
      }
  }
  SUBCASE("fit-synthesize roundtrip") {
    Prng rng(41);
    const MotionModelParams truth = random_model(rng, ModelFamily::Quadratic12, 2.0);
    const FlowField flow = synthesize_flow(truth, 9, 4, norm);
    const auto fitted =
        fit_wls(flow, uniform_weights(flow.pixels()), ModelFamily::Quadratic12, norm);
    CHECK(max_param_diff(fitted, truth) < 1e-5);
    CHECK(fitted.energy <= 1e-9);
  }
}

TEST_CASE("weight-scale invariance") {
  Prng rng(43);
  const FlowField flow = random_flow(rng, 5, 5);
  auto weights = random_weights(rng, flow.pixels());
  const auto norm = CoordNormalization::for_frame(5, 5);
  const auto base = fit_wls(flow, weights, ModelFamily::Affine, norm, 0.0);
  const double c = 37.5;
  for (double& w : weights) w *= c;
  const auto scaled = fit_wls(flow, weights, ModelFamily::Affine, norm, 0.0);
  CHECK(max_param_diff(base, scaled) < 1e-9);
  CHECK(close_rel(scaled.energy, c * base.energy, 1e-9));
}

TEST_CASE("optimality: random perturbations never decrease the ridged objective") {
  Prng rng(47);
  const FlowField flow = random_flow(rng, 5, 4);
  const auto weights = random_weights(rng, flow.pixels());
  const auto norm = CoordNormalization::for_frame(5, 4);
  const double ridge = 1e-6;
  const auto params = fit_wls(flow, weights, ModelFamily::Quadratic12, norm, ridge);

  // normalized objective + ridge * |M|_F^2, evaluated through the oracle path
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  auto ridged = [&](const std::vector<double>& theta) {
    double sq = 0.0;
    for (double v : theta) sq += v * v;
    return test::wls_objective(flow, weights, ModelFamily::Quadratic12, norm, theta) / wsum +
           ridge * sq;
  };

  std::vector<double> theta(12);
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < 5; ++j) theta[6 * c + j] = params.a[c][j];
    theta[6 * c + 5] = params.b[c];
  }
  const double at_optimum = ridged(theta);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> dir(12);
    double norm_sq = 0.0;
    for (double& v : dir) {
      v = rng.normal();
      norm_sq += v * v;
    }
    std::vector<double> perturbed = theta;
    for (int j = 0; j < 12; ++j) perturbed[j] += 1e-3 * dir[j] / std::sqrt(norm_sq);
    CHECK(ridged(perturbed) >= at_optimum - 1e-15);
  }
}

TEST_CASE("family nesting: larger families never fit worse") {
  Prng rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    const FlowField flow = random_flow(rng, 6, 6);
    const auto weights = random_weights(rng, flow.pixels());
    const auto norm = CoordNormalization::for_frame(6, 6);
    const double e_const = fit_wls(flow, weights, ModelFamily::Constant, norm).energy;
    const double e_affine = fit_wls(flow, weights, ModelFamily::Affine, norm).energy;
    const double e_quad = fit_wls(flow, weights, ModelFamily::Quadratic12, norm).energy;
    CHECK(e_quad <= e_affine + 1e-9);
    CHECK(e_affine <= e_const + 1e-9);
  }
}

TEST_CASE("fit error paths") {
  FlowField flow(3, 3);
  const auto norm = CoordNormalization::for_frame(3, 3);
  SUBCASE("zero weights") {
    const std::vector<double> weights(flow.pixels(), 0.0);
    try {
      fit_wls(flow, weights, ModelFamily::Affine, norm);
      FAIL("expected ZeroWeight");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ZeroWeight);
    }
  }
  SUBCASE("single pixel under the quadratic family with no ridge") {
    std::vector<double> weights(flow.pixels(), 0.0);
    weights[4] = 1.0;
    try {
      fit_wls(flow, weights, ModelFamily::Quadratic12, norm, 0.0);
      FAIL("expected SingularSystem");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularSystem);
    }
    // the default ridge keeps it solvable
    const auto params = fit_wls(flow, weights, ModelFamily::Quadratic12, norm);
    CHECK(params.energy >= 0.0);
  }
  SUBCASE("wrong weight length") {
    const std::vector<double> weights(4, 1.0);
    try {
      fit_wls(flow, weights, ModelFamily::Affine, norm);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }
}
