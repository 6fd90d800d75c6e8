// Randomised checks of the invariants each module promises.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "eit/forward.hpp"
#include "eit/inverse.hpp"
#include "eit/metrics.hpp"
#include "eit/phantom.hpp"
#include "oracles.hpp"

namespace eit {
namespace {

constexpr int kMeshes = 12;

TEST(MeshProperties, DifferenceOfConstantVanishes) {
  for (int i = 0; i < kMeshes; ++i) {
    const std::size_t target = 256u << (i % 4);
    const TriMesh mesh = oracle::jittered_disk_mesh(0.1, target, 0.25, 1000 + i);
    const auto ops = build_difference_operators(mesh);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.num_elements()));
    EXPECT_LT((ops.d * ones).cwiseAbs().maxCoeff(), 1e-9) << "mesh " << i;
  }
}

TEST(MeshProperties, RasterAssignIdempotent) {
  for (int i = 0; i < kMeshes; ++i) {
    const TriMesh mesh = oracle::jittered_disk_mesh(0.1, 1024, 0.2, 2000 + i);
    const auto f = assign_conductivity(mesh, lung_model(1 + i % 10));
    const Image im = rasterize(mesh, std::span(f.values().data(), f.values().size()), 96);
    std::set<double> in_image;
    for (double v : im.pixels) {
      if (Image::in_domain(v)) in_image.insert(v);
    }
    std::set<double> in_field(f.values().data(), f.values().data() + f.values().size());
    EXPECT_TRUE(std::includes(in_field.begin(), in_field.end(), in_image.begin(), in_image.end()));
  }
}

TEST(ForwardProperties, ReciprocityOnRandomFields) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < 4; ++i) {
    const TriMesh mesh = oracle::jittered_disk_mesh(0.1, 1024, 0.2, 3000 + i);
    const auto layout = place_electrodes(mesh, 16);
    Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.num_elements()));
    for (auto& x : v) x = u(rng);
    const VoltageFrame f = simulate_frame(mesh, ConductivityField(v), layout, 1.0);
    const double scale = f.data.cwiseAbs().maxCoeff();
    for (const auto& [j, m] : neighbouring_protocol(16)) {
      EXPECT_LE(std::abs(f.at(j, m) - f.at(m, j)), 1e-8 * scale);
    }
  }
}

TEST(ForwardProperties, SignRelationOnRandomBumps) {
  // Raising the conductivity anywhere lowers the signed datum's projection
  // on S ds; the chosen sign keeps it positive.
  const TriMesh mesh = generate_disk_mesh(0.1, 1024);
  const auto layout = place_electrodes(mesh, 16);
  const auto sigma0 = ConductivityField::homogeneous(mesh.num_elements(), 1.0);
  const auto sens = sensitivity_matrix(mesh, layout, sigma0, 1.0);
  const VoltageFrame ref = simulate_frame(mesh, sigma0, layout, 1.0);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> pos(-0.06, 0.06);
  for (int i = 0; i < 6; ++i) {
    PhantomSpec spec;
    EllipseInclusion e;
    e.center = Vec2(pos(rng), pos(rng));
    e.axis_a = Vec2(0.02, 0.0);
    e.axis_b = Vec2(0.0, 0.015);
    e.value = 1.05;
    spec.inclusions.push_back(e);
    const auto field = assign_conductivity(mesh, spec);
    const Eigen::VectorXd ds = field.values().array() - 1.0;
    const Eigen::VectorXd dv = signed_difference(simulate_frame(mesh, field, layout, 1.0), ref);
    EXPECT_GT(dv.dot(sens.s * ds), 0.0);
  }
}

TEST(InverseProperties, SoftThresholdAlgebra) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ug(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double g = ug(rng);
    const double h = soft_threshold(x, g);
    EXPECT_EQ(soft_threshold(-x, g), -h);
    EXPECT_LE(std::abs(h), std::abs(x));
    EXPECT_LE(std::abs(h - soft_threshold(y, g)), std::abs(x - y) + 1e-15);
    if (std::abs(x) > g) {
      EXPECT_NEAR(h + std::copysign(g, x), x, 1e-15);
    } else {
      EXPECT_EQ(h, 0.0);
    }
  }
}

TEST(InverseProperties, ZUpdateSignRelation) {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> n(0.0, 1.0);
  const TriMesh mesh = generate_disk_mesh(0.1, 1024);
  const auto ops = build_difference_operators(mesh);
  const Eigen::Index nn = static_cast<Eigen::Index>(mesh.num_elements());
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd ds(nn);
    Eigen::VectorXd y(2 * nn);
    for (auto& v : ds) v = 0.05 * n(rng);
    for (auto& v : y) v = 1e-10 * n(rng);
    const Eigen::VectorXd w = ops.d * ds + y / 1e-10;
    const Eigen::VectorXd p = nwatv_weights(ds, ops, 0.01);
    const Eigen::VectorXd z = z_update(w, p, 5e-13, 1e-10);
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      if (z[k] != 0.0) ASSERT_EQ(std::signbit(z[k]), std::signbit(w[k]));
    }
  }
}

struct Instance {
  TriMesh mesh;
  DifferenceOperators ops;
  Eigen::MatrixXd s;
  Eigen::VectorXd dv;
};

const Instance& instance() {
  static const Instance inst = [] {
    Instance i;
    i.mesh = generate_disk_mesh(0.1, 1024);
    const auto layout = place_electrodes(i.mesh, 16);
    i.ops = build_difference_operators(i.mesh);
    i.s = sensitivity_matrix(i.mesh, layout, ConductivityField::homogeneous(i.mesh.num_elements(), 1.0), 1.0).s;
    const Eigen::VectorXd truth = assign_conductivity(i.mesh, lung_model(7)).values().array() - 1.0;
    i.dv = add_noise(i.s * truth, 50.0, 42);
    return i;
  }();
  return inst;
}

TEST(InverseProperties, MaskConfinementOnRandomMasks) {
  const auto& in = instance();
  const AdmmSolver solver(in.s, in.ops, 1e-10);
  std::mt19937_64 rng(71);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> mask;
    std::vector<bool> member(in.mesh.num_elements(), false);
    for (std::size_t k = 0; k < in.mesh.num_elements(); ++k) {
      if (keep(rng)) {
        mask.push_back(static_cast<int>(k));
        member[k] = true;
      }
    }
    SolverConfig cfg;
    cfg.mask = mask;
    cfg.max_iters = 5;
    for (Regularizer method : {Regularizer::kNwatv, Regularizer::kFotv, Regularizer::kTv}) {
      const ReconResult r = solver.run(method, in.dv, cfg);
      for (const auto& it : r.history) {
        for (Eigen::Index k = 0; k < it.size(); ++k) {
          if (!member[static_cast<std::size_t>(k)]) ASSERT_EQ(it[k], 0.0);
        }
      }
    }
  }
}

TEST(InverseProperties, ToleranceStopReportsSmallStep) {
  const auto& in = instance();
  const AdmmSolver solver(in.s, in.ops, 1e-10);
  for (double tol : {1e-2, 1e-3, 1e-4}) {
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = 500;
    const ReconResult r = solver.run(Regularizer::kNwatv, in.dv, cfg);
    if (r.termination == Termination::kTolerance) {
      EXPECT_LT(r.diagnostics.back().step_norm, tol);
    }
  }
}

TEST(InverseProperties, BitIdenticalRuns) {
  const auto& in = instance();
  for (Regularizer method : {Regularizer::kNwatv, Regularizer::kFotv, Regularizer::kTv, Regularizer::kTikhonov}) {
    SolverConfig cfg;
    if (method == Regularizer::kTikhonov) cfg.lambda = 1e-6;
    const ReconResult a = reconstruct(method, in.s, in.dv, in.ops, cfg);
    const ReconResult b = reconstruct(method, in.s, in.dv, in.ops, cfg);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) ASSERT_EQ(a.history[i], b.history[i]);
    EXPECT_EQ(a.termination, b.termination);
  }
}

TEST(InverseProperties, FotvEqualsNwatvAtZeroLambda) {
  const auto& in = instance();
  SolverConfig cfg;
  cfg.lambda = 0.0;
  cfg.max_iters = 5;
  const ReconResult a = reconstruct_nwatv(in.s, in.dv, in.ops, cfg);
  const ReconResult b = reconstruct_fotv(in.s, in.dv, in.ops, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i], b.history[i]);
}

TEST(NoiseProperties, SeedDeterminesNoise) {
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(208, 1.0, 2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(add_noise(f, 40.0, seed), add_noise(f, 40.0, seed));
    EXPECT_NE(add_noise(f, 40.0, seed), add_noise(f, 40.0, seed + 1));
  }
}

TEST(MetricProperties, RelativeErrorHomogeneity) {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd ref(40);
    Eigen::VectorXd e(40);
    for (auto& v : ref) v = 1.0 + 0.1 * n(rng);
    for (auto& v : e) v = 0.05 * n(rng);
    const double c = std::abs(n(rng)) + 0.1;
    EXPECT_NEAR(relative_error(ref + e, ref), e.norm() / ref.norm(), 1e-14);
    EXPECT_NEAR(relative_error(ref + c * e, ref), c * relative_error(ref + e, ref), 1e-13);
    EXPECT_NEAR(relative_error(ref - e, ref), relative_error(ref + e, ref), 1e-14);
  }
}

TEST(MetricProperties, PsnrScaleInvarianceAndNoiseOrdering) {
  std::mt19937_64 rng(91);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Image ref;
    ref.width = ref.height = 24;
    ref.extent = 1.0;
    ref.pixels.resize(24 * 24);
    for (auto& v : ref.pixels) v = 1.0 + 0.1 * std::abs(n(rng));
    std::vector<double> noise(ref.pixels.size());
    for (auto& v : noise) v = n(rng);
    double previous = kPsnrIdentical;
    for (double sd : {1e-4, 1e-3, 1e-2, 3e-2, 1e-1}) {
      Image x = ref;
      for (std::size_t i = 0; i < noise.size(); ++i) x.pixels[i] += sd * noise[i];
      const double p = psnr(x, ref);
      EXPECT_LT(p, previous);
      previous = p;
      Image xs = x;
      Image rs = ref;
      for (auto& v : xs.pixels) v *= 3.0;
      for (auto& v : rs.pixels) v *= 3.0;
      EXPECT_NEAR(psnr(xs, rs), p, 1e-9);
    }
  }
}

}  // namespace
}  // namespace eit
