// Command-line front end: generate, cluster, segment, evaluate, bench.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fastge/fastge.hpp"

namespace fs = std::filesystem;
using namespace fastge;

namespace {

struct ClusterFlags {
  Index k = 2;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  int restarts = 20;
  bool refine = false;
  int threads = 1;
  Index dense_threshold = 200;
  std::string preconditioner = "multilevel";
  std::string normalization = "minimum_demand_edge";
  std::string degree_source = "merged";
  std::string report;
};

void add_cluster_flags(CLI::App* app, ClusterFlags& f) {
  app->add_option("--k", f.k, "number of clusters")->check(CLI::PositiveNumber);
  app->add_option("--tol", f.tol, "eigensolver relative residual tolerance");
  app->add_option("--max-iter", f.max_iter, "eigensolver iteration cap");
  app->add_option("--seed", f.seed, "seed for the eigensolver and k-means");
  app->add_option("--restarts", f.restarts, "k-means restarts");
  app->add_flag("--refine", f.refine, "split clusters by a per-cluster sweep when it helps");
  app->add_option("--threads", f.threads, "threads for k-means restarts");
  app->add_option("--dense-threshold", f.dense_threshold, "use the dense eigensolver up to this n");
  app->add_option("--preconditioner", f.preconditioner, "identity | jacobi | multilevel");
  app->add_option("--normalization", f.normalization,
                  "minimum_demand_edge | data_graph_minimum_edge");
  app->add_option("--degree-source", f.degree_source, "merged | data");
  app->add_option("--report", f.report, "write a JSON run report");
}

PipelineConfig make_config(const ClusterFlags& f) {
  PipelineConfig cfg;
  cfg.k = f.k;
  cfg.tol = f.tol;
  cfg.max_iter = f.max_iter;
  cfg.eig_seed = f.seed;
  cfg.kmeans_seed = f.seed;
  cfg.restarts = f.restarts;
  cfg.refine = f.refine;
  cfg.threads = f.threads;
  cfg.dense_threshold = f.dense_threshold;
  cfg.preconditioner = parse_preconditioner_kind(f.preconditioner);
  cfg.merge.normalization = parse_demand_normalization(f.normalization);
  cfg.degree_source = parse_degree_source(f.degree_source);
  return cfg;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

void print_summary(const RunReport& r) {
  std::fprintf(stderr, "n=%lld k=%lld eig=%s iters=%d max_badness=%g total=%.1f ms\n",
               static_cast<long long>(r.partition.size()), static_cast<long long>(r.partition.k),
               r.eig_method.c_str(), r.eig_iterations, r.quality.max_badness, r.timings.total_ms);
  if (r.quality.rand_index) std::fprintf(stderr, "rand_index=%.6f\n", *r.quality.rand_index);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// --- generate --------------------------------------------------------------

struct GenerateFlags {
  std::string dataset = "four-moons";
  Index n = 1500;
  Index kg = 30;
  double lg = 15.0;
  double noise = 0.05;
  Index labeled = 75;
  std::uint64_t seed = 0;
  std::string points_file;
  std::string out = "data";
};

int run_generate(const GenerateFlags& f) {
  LabeledPointCloud cloud;
  if (f.dataset == "four-moons") {
    cloud = four_moons(f.n, f.noise, f.seed);
  } else if (f.dataset == "points") {
    if (f.points_file.empty()) throw InputError("generate points: --points is required");
    auto pc = io::read_point_cloud(fs::path(f.points_file));
    cloud.points = std::move(pc.points);
    cloud.labels = canonical_partition(pc.labels).labels;
  } else {
    throw InputError("unknown dataset '" + f.dataset + "' (expected four-moons or points)");
  }
  // Independent streams for the geometry, the noise edges and the constraints.
  const WeightedGraph g = noisy_knn(cloud, f.kg, f.lg, f.seed + 1);
  const ConstraintSet c = sample_constraints(cloud.labels, f.labeled, f.seed + 2);
  io::write_edge_list(fs::path(f.out + ".edges"), g);
  io::write_labels(fs::path(f.out + ".truth"), cloud.labels);
  io::write_constraints(fs::path(f.out + ".constraints"), c);
  io::write_point_cloud(fs::path(f.out + ".points"), cloud.points, cloud.labels);
  std::printf("%s.edges: %lld vertices, %lld edges; %zu ML, %zu CL constraints\n", f.out.c_str(),
              static_cast<long long>(g.num_vertices()), static_cast<long long>(g.num_edges()),
              c.ml.size(), c.cl.size());
  return 0;
}

// --- cluster ---------------------------------------------------------------

struct ClusterIo {
  std::string graph;
  std::string constraints;
  std::string labels_out = "labels.txt";
  std::string truth;
  std::string mapping_out;
};

int run_cluster(const ClusterIo& io_flags, const ClusterFlags& f) {
  const WeightedGraph g = io::read_edge_list(fs::path(io_flags.graph));
  const ConstraintSet c =
      io_flags.constraints.empty() ? ConstraintSet{} : io::read_constraints(fs::path(io_flags.constraints));
  Labels truth;
  if (!io_flags.truth.empty()) truth = io::read_labels(fs::path(io_flags.truth));
  const PipelineConfig cfg = make_config(f);
  const RunReport r = io_flags.truth.empty()
                          ? run_pipeline(g, c, cfg)
                          : run_pipeline(g, c, cfg, std::span<const Index>(truth));
  if (r.vertices.empty()) {
    io::write_labels(fs::path(io_flags.labels_out), r.partition.labels);
  } else {
    // Vertices outside the extracted component are written as -1.
    io::write_labels(fs::path(io_flags.labels_out),
                     io::expand_labels(r.partition.labels, r.vertices, g.num_vertices()));
    const std::string mapping =
        io_flags.mapping_out.empty() ? io_flags.labels_out + ".mapping" : io_flags.mapping_out;
    std::ofstream out(mapping);
    if (!out) throw InputError("cannot open '" + mapping + "' for writing");
    io::write_mapping(out, r.vertices);
    std::fprintf(stderr, "component id mapping written to %s\n", mapping.c_str());
  }
  if (!f.report.empty()) write_json(f.report, to_json(r));
  print_summary(r);
  return 0;
}

// --- segment ---------------------------------------------------------------

struct SegmentFlags {
  std::string image;
  std::string scribbles;
  double sigma = 0.1;
  int connectivity = 4;
  std::string out = "segments.pgm";
};

int run_segment(const SegmentFlags& s, ClusterFlags f, bool k_given) {
  const io::GrayImage img = io::read_pgm(fs::path(s.image));
  const auto scribbles = io::read_scribbles(fs::path(s.scribbles));
  const WeightedGraph g = io::image_to_graph(img, s.sigma, s.connectivity);
  const ConstraintSet c = io::scribble_constraints(scribbles, img.rows, img.cols);
  if (!k_given) {
    std::set<Index> distinct;
    for (const auto& x : scribbles) distinct.insert(x.label);
    f.k = std::max<Index>(2, static_cast<Index>(distinct.size()));
  }
  const RunReport r = run_pipeline(g, c, make_config(f));
  Labels labels = r.partition.labels;
  if (!r.vertices.empty()) {
    labels = io::expand_labels(r.partition.labels, r.vertices, g.num_vertices(), r.partition.k);
  }
  io::write_pgm(fs::path(s.out), io::label_image(labels, img.rows, img.cols));
  if (!f.report.empty()) write_json(f.report, to_json(r));
  print_summary(r);
  return 0;
}

// --- evaluate --------------------------------------------------------------

int run_evaluate(const std::string& labels, const std::string& truth) {
  const Labels a = io::read_labels(fs::path(labels));
  const Labels b = io::read_labels(fs::path(truth));
  std::printf("%.17g\n", rand_index(a, b));
  return 0;
}

// --- bench -----------------------------------------------------------------

/// Two-region synthetic image as a 4-connected grid graph, plus `m` random
/// pixel pairs labelled by region.
std::pair<WeightedGraph, ConstraintSet> bench_instance(Index side, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  io::GrayImage img;
  img.rows = img.cols = side;
  img.maxval = 255;
  img.pixels.resize(static_cast<std::size_t>(side * side));
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const double base = c < side / 2 ? 0.3 : 0.7;
      const double v = std::clamp(base + noise(rng), 0.0, 1.0);
      img.pixels[r * side + c] = static_cast<std::uint16_t>(std::lround(255.0 * v));
    }
  }
  const WeightedGraph g = io::image_to_graph(img, 0.1, 4);
  std::uniform_int_distribution<Index> pick(0, side * side - 1);
  ConstraintSet cons;
  std::set<std::pair<Index, Index>> seen;
  while (static_cast<Index>(seen.size()) < m) {
    Index u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) continue;
    const bool same = (u % side < side / 2) == (v % side < side / 2);
    (same ? cons.ml : cons.cl).push_back({u, v, std::nullopt});
  }
  return {g, cons};
}

int run_bench(const std::vector<Index>& sides, Index m, const ClusterFlags& f) {
  nlohmann::json rows = nlohmann::json::array();
  std::printf("%8s %10s %10s %10s %10s %10s %10s %6s\n", "side", "n", "merge_ms", "eigs_ms",
              "embed_ms", "part_ms", "total_ms", "iters");
  for (Index side : sides) {
    const auto [g, c] = bench_instance(side, m, f.seed);
    const RunReport r = run_pipeline(g, c, make_config(f));
    std::printf("%8lld %10lld %10.1f %10.1f %10.1f %10.1f %10.1f %6d\n",
                static_cast<long long>(side), static_cast<long long>(g.num_vertices()),
                r.timings.merge_ms, r.timings.eigs_ms, r.timings.embed_ms, r.timings.partition_ms,
                r.timings.total_ms, r.eig_iterations);
    nlohmann::json row = to_json(r);
    row.erase("labels");
    row["side"] = side;
    rows.push_back(row);
  }
  if (!f.report.empty()) write_json(f.report, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained spectral clustering via generalized eigenvectors"};
  app.require_subcommand(1);

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "synthetic NoisyKnn data with sampled constraints");
  generate->add_option("dataset", gen.dataset, "four-moons | points");
  generate->add_option("--n", gen.n, "number of points");
  generate->add_option("--kg", gen.kg, "nearest neighbours per point");
  generate->add_option("--lg", gen.lg, "expected random edges per point");
  generate->add_option("--noise", gen.noise, "coordinate noise standard deviation");
  generate->add_option("--labeled", gen.labeled, "vertices whose labels become constraints");
  generate->add_option("--seed", gen.seed, "random seed");
  generate->add_option("--points", gen.points_file, "input point cloud for 'points'");
  generate->add_option("--out", gen.out, "output path prefix");

  ClusterFlags cf;
  ClusterIo cio;
  auto* cluster = app.add_subcommand("cluster", "cluster an edge-list graph under constraints");
  cluster->add_option("--graph", cio.graph, "edge list")->required();
  cluster->add_option("--constraints", cio.constraints, "constraint file");
  cluster->add_option("--labels", cio.labels_out, "output labels file");
  cluster->add_option("--truth", cio.truth, "ground-truth labels for the Rand index");
  cluster->add_option("--mapping", cio.mapping_out, "component id mapping output");
  add_cluster_flags(cluster, cf);

  ClusterFlags sf;
  SegmentFlags seg;
  auto* segment = app.add_subcommand("segment", "segment a PGM image from scribbles");
  segment->add_option("--image", seg.image, "PGM image (P2 or P5)")->required();
  segment->add_option("--scribbles", seg.scribbles, "'row col label' file")->required();
  segment->add_option("--sigma", seg.sigma, "RBF kernel width on [0,1] gray levels");
  segment->add_option("--connectivity", seg.connectivity, "4 or 8");
  segment->add_option("--out", seg.out, "output label image");
  add_cluster_flags(segment, sf);

  std::string eval_labels, eval_truth;
  auto* evaluate = app.add_subcommand("evaluate", "Rand index of a labeling against ground truth");
  evaluate->add_option("--labels", eval_labels, "labels file")->required();
  evaluate->add_option("--truth", eval_truth, "ground-truth labels file")->required();

  ClusterFlags bf;
  std::vector<Index> sides{32, 64, 128};
  Index bench_constraints = 100;
  auto* bench = app.add_subcommand("bench", "timings on synthetic grid images");
  bench->add_option("--sides", sides, "grid side lengths")->delimiter(',');
  bench->add_option("--constraints", bench_constraints, "random constraint pairs per instance");
  add_cluster_flags(bench, bf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*cluster) return run_cluster(cio, cf);
    if (*segment) return run_segment(seg, sf, segment->count("--k") > 0);
    if (*evaluate) return run_evaluate(eval_labels, eval_truth);
    if (*bench) return run_bench(sides, bench_constraints, bf);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
