#include <gtest/gtest.h>

#include <fstream>

#include "fastge/fastge.hpp"
#include "oracles.hpp"

using namespace fastge;
using nlohmann::json;

namespace {

// Replaces every leaf by its type name and every array by the skeleton of its
// first element, so the comparison checks shape rather than values.
json skeleton(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = skeleton(it.value());
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    if (!j.empty()) out.push_back(skeleton(j.front()));
    return out;
  }
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  return "null";
}

}  // namespace

TEST(Pipeline, TwoTrianglesSplitAtBridge) {
  const WeightedGraph g(6, oracle::two_triangles());
  const RunReport r = run_pipeline(g, {}, PipelineConfig{});
  EXPECT_EQ(r.partition.labels, (Labels{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(r.eig_method, "dense");
  ASSERT_TRUE(r.quality.sweep_certificate.has_value());
  EXPECT_GT(*r.quality.sweep_certificate, 0.0);
  EXPECT_LE(*r.quality.sweep_certificate, r.eigenvalues[0] * (1 + 1e-9));
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Pipeline, CannotLinkInsideTriangleMovesTheCut) {
  // With the bridge weight raised and a heavy CL inside the left triangle,
  // the best split separates vertex 0 from vertex 2.
  const WeightedGraph g(6, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 0.05}, {2, 3, 1.0},
                            {3, 4, 1.0}, {4, 5, 1.0}, {3, 5, 1.0}});
  ConstraintSet c;
  c.cl = {{0, 2, 50.0}};
  const RunReport r = run_pipeline(g, c, PipelineConfig{});
  EXPECT_NE(r.partition.labels[0], r.partition.labels[2]);
}

TEST(Pipeline, LobpcgPathMatchesDensePath) {
  const auto cloud = four_moons(400, 0.05, 3);
  const WeightedGraph g = noisy_knn(cloud, 10, 2.0, 4);
  const ConstraintSet c = sample_constraints(cloud.labels, 20, 5);
  PipelineConfig dense;
  dense.k = 4;
  dense.dense_threshold = 1000;
  PipelineConfig iterative = dense;
  iterative.dense_threshold = 0;
  iterative.tol = 1e-8;
  const RunReport a = run_pipeline(g, c, dense);
  const RunReport b = run_pipeline(g, c, iterative);
  EXPECT_EQ(a.eig_method, "dense");
  EXPECT_EQ(b.eig_method, "lobpcg");
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(a.eigenvalues[j], b.eigenvalues[j], 1e-6 * a.eigenvalues[j]);
}

TEST(Pipeline, DeterministicReport) {
  const auto cloud = four_moons(300, 0.05, 1);
  const WeightedGraph g = noisy_knn(cloud, 10, 3.0, 2);
  const ConstraintSet c = sample_constraints(cloud.labels, 15, 3);
  PipelineConfig cfg;
  cfg.k = 4;
  cfg.dense_threshold = 0;
  const auto a = to_json(run_pipeline(g, c, cfg, cloud.labels), false);
  const auto b = to_json(run_pipeline(g, c, cfg, cloud.labels), false);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Pipeline, ReportMatchesGoldenSchema) {
  const WeightedGraph g(6, oracle::two_triangles());
  const Labels truth{0, 0, 0, 1, 1, 1};
  const json report = to_json(run_pipeline(g, {}, PipelineConfig{}, truth));
  std::ifstream in(FASTGE_GOLDEN_DIR "/report_schema.json");
  ASSERT_TRUE(in) << "missing golden file";
  const json golden = json::parse(in);
  EXPECT_EQ(skeleton(report), golden) << skeleton(report).dump(2);
  EXPECT_EQ(report["quality"]["rand_index"], 1.0);
  EXPECT_EQ(report["labels"], json(truth));
}

TEST(Pipeline, GiantComponentWarning) {
  auto edges = oracle::two_triangles();
  edges.push_back({6, 7, 1.0});
  const WeightedGraph g(8, edges);
  ConstraintSet c;
  c.cl = {{0, 5, std::nullopt}, {6, 7, std::nullopt}};
  const RunReport r = run_pipeline(g, c, PipelineConfig{});
  EXPECT_EQ(r.vertices, (std::vector<Index>{0, 1, 2, 3, 4, 5}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("6 of 8"), std::string::npos) << r.warnings[0];
  EXPECT_NE(r.warnings[0].find("1 constraints dropped"), std::string::npos);

  PipelineConfig strict;
  strict.extract_giant_component = false;
  EXPECT_THROW(run_pipeline(g, c, strict), DisconnectedGraphError);
}

TEST(Pipeline, StageTaggedErrors) {
  const WeightedGraph g(6, oracle::two_triangles());
  ConstraintSet bad;
  bad.ml = {{0, 0, std::nullopt}};
  try {
    run_pipeline(g, bad, PipelineConfig{});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("merge: ", 0), 0u) << e.what();
  }

  PipelineConfig cfg;
  cfg.k = 1;
  EXPECT_THROW(run_pipeline(g, {}, cfg), InputError);
  cfg.k = 7;
  EXPECT_THROW(run_pipeline(g, {}, cfg), InputError);

  // A non-converging iterative solve still reports, with a warning.
  PipelineConfig slow;
  slow.dense_threshold = 0;
  slow.max_iter = 1;
  slow.tol = 1e-14;
  const auto cloud = four_moons(200, 0.05, 1);
  const RunReport r = run_pipeline(noisy_knn(cloud, 8, 1.0, 1), {}, slow);
  EXPECT_FALSE(r.eig_converged);
  EXPECT_FALSE(r.warnings.empty());

  const Labels short_truth{0, 1};
  EXPECT_THROW(run_pipeline(g, {}, PipelineConfig{}, short_truth), DimensionError);
}

TEST(Pipeline, FourMoonsSmoke) {
  const auto cloud = four_moons(800, 0.05, 7);
  const WeightedGraph g = noisy_knn(cloud, 30, 15.0, 8);
  const ConstraintSet c = sample_constraints(cloud.labels, 60, 9);
  PipelineConfig cfg;
  cfg.k = 4;
  const RunReport r = run_pipeline(g, c, cfg, cloud.labels);
  EXPECT_EQ(r.partition.k, 4);
  ASSERT_TRUE(r.quality.rand_index.has_value());
  EXPECT_GT(*r.quality.rand_index, 0.85);
  EXPECT_EQ(r.quality.per_cluster_badness.size(), 4u);
}

TEST(Pipeline, RefineNeverReducesClusterCount) {
  const auto cloud = four_moons(300, 0.05, 2);
  const WeightedGraph g = noisy_knn(cloud, 10, 2.0, 3);
  const ConstraintSet c = sample_constraints(cloud.labels, 20, 4);
  PipelineConfig cfg;
  cfg.k = 4;
  const RunReport plain = run_pipeline(g, c, cfg);
  cfg.refine = true;
  const RunReport refined = run_pipeline(g, c, cfg);
  EXPECT_GE(refined.partition.k, plain.partition.k);
}

TEST(PipelineConfig, ParsesEnumNames) {
  EXPECT_EQ(parse_degree_source("data"), DegreeSource::data);
  EXPECT_EQ(parse_degree_source("merged"), DegreeSource::merged);
  EXPECT_THROW(parse_degree_source("other"), InputError);
  EXPECT_EQ(parse_preconditioner_kind("none"), PreconditionerKind::identity);
  EXPECT_THROW(parse_preconditioner_kind("ilu"), InputError);
}
