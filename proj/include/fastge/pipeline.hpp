#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fastge/eigensolver.hpp"
#include "fastge/embedding.hpp"
#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/io.hpp"
#include "fastge/merge.hpp"
#include "fastge/metrics.hpp"
#include "fastge/operators.hpp"
#include "fastge/partition.hpp"

namespace fastge {

/// Which degree vector centres the embedding columns.
enum class DegreeSource {
  merged,  ///< degrees of G = G_D + G_ML
  data,    ///< degrees of G_D
};

inline std::string to_string(DegreeSource s) { return s == DegreeSource::merged ? "merged" : "data"; }

inline DegreeSource parse_degree_source(const std::string& s) {
  if (s == "merged") return DegreeSource::merged;
  if (s == "data") return DegreeSource::data;
  throw InputError("unknown degree source '" + s + "' (expected merged or data)");
}

struct PipelineConfig {
  Index k = 2;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t eig_seed = 0;
  int restarts = 20;
  int kmeans_max_iter = 300;
  std::uint64_t kmeans_seed = 0;
  MergeOptions merge;
  bool refine = false;
  Index dense_threshold = 200;
  PreconditionerKind preconditioner = PreconditionerKind::multilevel;
  DegreeSource degree_source = DegreeSource::merged;
  int threads = 1;
  /// Run on the largest connected component when the data graph is disconnected.
  bool extract_giant_component = true;

  void validate() const {
    if (k < 2) throw InputError("config: k must be at least 2");
    if (!(tol > 0.0)) throw InputError("config: tol must be positive");
    if (max_iter < 1) throw InputError("config: max_iter must be positive");
    if (restarts < 1) throw InputError("config: restarts must be positive");
    if (kmeans_max_iter < 1) throw InputError("config: kmeans_max_iter must be positive");
    if (dense_threshold < 0) throw InputError("config: dense_threshold must be nonnegative");
    if (threads < 1) throw InputError("config: threads must be positive");
  }
};

struct StageTimings {
  double merge_ms = 0.0;
  double eigs_ms = 0.0;
  double embed_ms = 0.0;
  double partition_ms = 0.0;
  double total_ms = 0.0;
};

struct RunReport {
  Partition partition;
  QualityReport quality;
  Vector eigenvalues;
  Vector residuals;
  int eig_iterations = 0;
  bool eig_converged = false;
  std::string eig_method;
  /// Original vertex id of every clustered vertex; empty when the whole
  /// graph was clustered.
  std::vector<Index> vertices;
  StageTimings timings;
  PipelineConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

/// Re-throws the active exception with `stage` prefixed, keeping its type.
[[noreturn]] inline void rethrow_tagged(const std::string& stage) {
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(stage + ": " + e.what(), e.residual(), e.iterations());
  } catch (const IllPosedError& e) {
    throw IllPosedError(stage + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(stage + ": " + e.what());
  } catch (const DisconnectedGraphError& e) {
    throw DisconnectedGraphError(stage + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(stage + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(stage + ": " + e.what());
  } catch (const Error& e) {
    throw Error(stage + ": " + e.what());
  }
}

template <class F>
auto timed_stage(const char* stage, double& ms, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto r = f();
      ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return r;
    }
  } catch (const Error&) {
    rethrow_tagged(stage);
  }
}

}  // namespace detail

/// merge -> generalized eigenvectors -> embedding -> partition -> badness.
///
/// For k = 2 the partition is the Cheeger sweep over the first nontrivial
/// eigenvector, which also yields a certificate; otherwise k-means runs on the
/// row-normalized embedding. `truth`, when given, adds the Rand index.
inline RunReport run_pipeline(const WeightedGraph& data, const ConstraintSet& constraints,
                              const PipelineConfig& cfg,
                              std::optional<std::span<const Index>> truth = std::nullopt) {
  const auto t_start = std::chrono::steady_clock::now();
  try {
    cfg.validate();
  } catch (const Error&) {
    detail::rethrow_tagged("config");
  }
  RunReport report;
  report.config = cfg;

  const WeightedGraph* graph = &data;
  const ConstraintSet* cons = &constraints;
  io::ComponentExtraction giant;
  ConstraintSet restricted;
  if (data.num_vertices() >= 2 && !is_connected(data) && cfg.extract_giant_component) {
    giant = io::largest_component(data);
    Index lost = 0;
    try {
      restricted = io::restrict_constraints(constraints, giant.original, data.num_vertices(), &lost);
    } catch (const Error&) {
      detail::rethrow_tagged("merge");
    }
    report.vertices = giant.original;
    report.warnings.push_back("data graph is disconnected; clustering the largest component (" +
                              std::to_string(giant.original.size()) + " of " +
                              std::to_string(data.num_vertices()) + " vertices, " +
                              std::to_string(lost) + " constraints dropped)");
    graph = &giant.graph;
    cons = &restricted;
  }
  if (truth && static_cast<Index>(truth->size()) != data.num_vertices()) {
    throw DimensionError("evaluate: ground truth has " + std::to_string(truth->size()) +
                         " labels for " + std::to_string(data.num_vertices()) + " vertices");
  }
  const Index n = graph->num_vertices();
  if (cfg.k > n) {
    throw InputError("config: k = " + std::to_string(cfg.k) + " exceeds the vertex count " +
                     std::to_string(n));
  }

  const MergedProblem problem =
      detail::timed_stage("merge", report.timings.merge_ms, [&] { return merge(*graph, *cons, cfg.merge); });
  const LaplacianOperator g_op = problem.g_operator();
  const LaplacianOperator h_op = problem.h_operator();

  const EigenSolution eig = detail::timed_stage("eigs", report.timings.eigs_ms, [&] {
    EigenOptions eo;
    eo.tol = cfg.tol;
    eo.max_iter = cfg.max_iter;
    eo.seed = cfg.eig_seed;
    Preconditioner precond;
    if (n > cfg.dense_threshold) precond = build_preconditioner(problem.g, cfg.preconditioner);
    return solve_pencil(g_op, h_op, cfg.k, precond, eo, cfg.dense_threshold);
  });
  report.eigenvalues = eig.values;
  report.residuals = eig.residual_norms;
  report.eig_iterations = eig.iterations;
  report.eig_converged = eig.converged;
  report.eig_method = eig.method;
  if (!eig.converged) {
    report.warnings.push_back("eigensolver stopped after " + std::to_string(eig.iterations) +
                              " iterations with max residual " +
                              std::to_string(eig.residual_norms.maxCoeff()));
  }

  const EmbeddingResult emb = detail::timed_stage("embed", report.timings.embed_ms, [&] {
    const DegreeVector d =
        cfg.degree_source == DegreeSource::merged ? degrees(problem.g) : problem.d;
    return compute_embedding(eig.vectors, h_op, d);
  });

  detail::timed_stage("partition", report.timings.partition_ms, [&] {
    if (cfg.k == 2) {
      const SweepResult sweep = cheeger_sweep(problem.g, h_op, emb.raw.col(0));
      Labels labels(static_cast<std::size_t>(n));
      for (Index v = 0; v < n; ++v) labels[v] = sweep.cut_set.contains(v) ? 0 : 1;
      report.partition = canonical_partition(labels);
      report.quality.sweep_certificate = sweep.certificate;
    } else {
      KMeansOptions ko;
      ko.k = cfg.k;
      ko.restarts = cfg.restarts;
      ko.max_iter = cfg.kmeans_max_iter;
      ko.seed = cfg.kmeans_seed;
      ko.threads = cfg.threads;
      std::vector<bool> zero_rows(static_cast<std::size_t>(n));
      for (Index v = 0; v < n; ++v) zero_rows[v] = emb.is_zero_row(v);
      report.partition = kmeans(emb.u, ko, zero_rows).partition;
    }
    if (cfg.refine) {
      report.partition = refine_per_component_sweep(report.partition, emb.l, problem.g, h_op);
    }
    const auto certificate = report.quality.sweep_certificate;
    report.quality = badness(problem.g, h_op, report.partition.labels);
    report.quality.sweep_certificate = certificate;
  });

  if (truth) {
    if (report.vertices.empty()) {
      report.quality.rand_index = rand_index(report.partition.labels, *truth);
    } else {
      Labels sub;
      sub.reserve(report.vertices.size());
      for (Index v : report.vertices) sub.push_back((*truth)[v]);
      report.quality.rand_index = rand_index(report.partition.labels, sub);
    }
  }
  if (report.quality.has_infinite_badness()) {
    report.warnings.push_back("some clusters cut no H weight; their badness is infinite");
  }
  report.timings.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

/// Finite numbers as-is; infinities and NaN become null.
inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline nlohmann::json vector_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {
      {"k", c.k},
      {"tol", c.tol},
      {"max_iter", c.max_iter},
      {"eig_seed", c.eig_seed},
      {"restarts", c.restarts},
      {"kmeans_max_iter", c.kmeans_max_iter},
      {"kmeans_seed", c.kmeans_seed},
      {"demand_normalization", to_string(c.merge.normalization)},
      {"refine", c.refine},
      {"dense_threshold", c.dense_threshold},
      {"preconditioner", to_string(c.preconditioner)},
      {"degree_source", to_string(c.degree_source)},
      {"threads", c.threads},
      {"extract_giant_component", c.extract_giant_component},
  };
}

inline nlohmann::json to_json(const QualityReport& q) {
  nlohmann::json j;
  j["rand_index"] = q.rand_index ? nlohmann::json(*q.rand_index) : nlohmann::json(nullptr);
  nlohmann::json per = nlohmann::json::array();
  nlohmann::json infinite = nlohmann::json::array();
  for (std::size_t c = 0; c < q.per_cluster_badness.size(); ++c) {
    per.push_back(detail::finite_or_null(q.per_cluster_badness[c]));
    if (std::isinf(q.per_cluster_badness[c])) infinite.push_back(c);
  }
  j["per_cluster_badness"] = per;
  j["max_badness"] = detail::finite_or_null(q.max_badness);
  j["infinite_badness_clusters"] = infinite;
  j["sweep_certificate"] =
      q.sweep_certificate ? detail::finite_or_null(*q.sweep_certificate) : nlohmann::json(nullptr);
  return j;
}

/// Everything except the timings is a deterministic function of the inputs
/// and the config, so two runs serialize identically once timings are dropped.
inline nlohmann::json to_json(const RunReport& r, bool include_timings = true) {
  nlohmann::json j;
  j["n"] = r.partition.size();
  j["k"] = r.partition.k;
  j["labels"] = r.partition.labels;
  j["quality"] = to_json(r.quality);
  j["eigen"] = {
      {"values", detail::vector_json(r.eigenvalues)},
      {"residuals", detail::vector_json(r.residuals)},
      {"iterations", r.eig_iterations},
      {"converged", r.eig_converged},
      {"method", r.eig_method},
  };
  j["vertices"] = r.vertices;
  j["config"] = to_json(r.config);
  j["warnings"] = r.warnings;
  if (include_timings) {
    j["timings_ms"] = {
        {"merge", r.timings.merge_ms},
        {"eigs", r.timings.eigs_ms},
        {"embed", r.timings.embed_ms},
        {"partition", r.timings.partition_ms},
        {"total", r.timings.total_ms},
    };
  }
  return j;
}

}  // namespace fastge
