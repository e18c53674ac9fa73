// Acceptance checks for the whole library. One PASS/FAIL line per criterion;
// the exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "fastge/fastge.hpp"
#include "oracles.hpp"

using namespace fastge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ConstraintSet random_cannot_links(Index n, Index m, std::mt19937_64& rng) {
  ConstraintSet c;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::set<std::pair<Index, Index>> seen;
  while (static_cast<Index>(seen.size()) < m) {
    Index u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (seen.insert({u, v}).second) c.cl.push_back({u, v, std::nullopt});
  }
  return c;
}

// Dense L_H assembled from the merged problem's parts, independent of the
// operator's own densification.
Matrix dense_h(const MergedProblem& p) {
  Matrix h = oracle::laplacian(p.size(), p.h_sparse.edges());
  if (p.h_demand_scale > 0.0) h += p.h_demand_scale * oracle::demand_laplacian(p.d.d);
  return h;
}

Outcome eigensolver_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst_value = 0.0, worst_rq = 0.0;
  bool all_converged = true;
  int iterations = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 20 + static_cast<Index>(rng() % 81);
    const WeightedGraph data(n, oracle::random_connected_edges(n, n, rng));
    const ConstraintSet cl = random_cannot_links(n, 2 + n / 5, rng);
    // Alternate between the merged pencil (K plus CL) and a bare CL graph,
    // whose Laplacian is singular well beyond the constant vector.
    const MergedProblem p = merge(data, cl);
    const LaplacianOperator a = p.g_operator();
    const LaplacianOperator b = trial % 2 == 0 ? p.h_operator() : LaplacianOperator(p.h_sparse);
    const Matrix b_dense = trial % 2 == 0 ? dense_h(p) : oracle::laplacian(n, p.h_sparse.edges());
    const auto [values, vectors] = oracle::pencil_eigs(oracle::laplacian(n, p.g.edges()), b_dense, 4);
    EigenOptions eo;
    eo.tol = 1e-8;
    eo.seed = static_cast<std::uint64_t>(trial);
    const PreconditionerKind kinds[] = {PreconditionerKind::jacobi, PreconditionerKind::identity,
                                        PreconditionerKind::multilevel};
    const EigenSolution sol = generalized_eigs(a, b, 4, build_preconditioner(p.g, kinds[trial % 3]), eo);
    iterations += sol.iterations;
    all_converged = all_converged && sol.converged;
    for (Index j = 0; j < 4; ++j) {
      worst_value = std::max(worst_value, std::abs(sol.values[j] - values[j]) / values[j]);
      const double rq = rayleigh_quotient(a, b, Vector(sol.vectors.col(j)));
      worst_rq = std::max(worst_rq, std::abs(rq - sol.values[j]) / sol.values[j]);
    }
  }
  const double secs = seconds_since(t0);
  return {all_converged && worst_value <= 1e-6 && worst_rq <= 1e-5 && secs < 30.0,
          "max rel eigenvalue err " + fmt("%.2e", worst_value) + ", max rel Rayleigh err " +
              fmt("%.2e", worst_rq) + ", " + std::to_string(iterations) + " iterations, " +
              fmt("%.2f s", secs) +
              (all_converged ? "" : ", some solves did not converge")};
}

Outcome cheeger_inequality() {
  std::mt19937_64 rng(202);
  int violations = 0, checked = 0;
  double tightest = std::numeric_limits<double>::infinity();
  while (checked < 200) {
    const Index n = 3 + static_cast<Index>(rng() % 38);
    const WeightedGraph g(n, oracle::random_connected_edges(n, n, rng));
    const LaplacianOperator h(WeightedGraph(n, oracle::random_edges(n, 1 + n, rng)));
    const DegreeVector d = degrees(g);
    Vector x = oracle::random_vector(n, rng);
    x.array() -= x.dot(d.d) / d.vol;
    if (h.quadratic(x) <= 0.0) continue;
    const SweepResult s = cheeger_sweep(g, h, x);
    const double rq = laplacian_quadratic(g, x) / h.quadratic(x);
    const double bound = 0.25 * s.ratio_gh * s.ratio_gk;
    if (rq < bound * (1 - 1e-9)) ++violations;
    tightest = std::min(tightest, rq / bound);
    ++checked;
  }
  int brute_violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 4 + static_cast<Index>(rng() % 11);
    const WeightedGraph g(n, oracle::random_connected_edges(n, n / 2, rng));
    const LaplacianOperator h(WeightedGraph(n, oracle::random_edges(n, n, rng)));
    const double lambda = dense_generalized_eigs(LaplacianOperator(g), h, 1).values[0];
    const double phi_gh = brute_force_phi(g, h).value;
    const double phi_gk = brute_force_phi(g, LaplacianOperator::demand_only(1.0, degrees(g))).value;
    if (lambda < 0.25 * phi_gh * phi_gk * (1 - 1e-9)) ++brute_violations;
  }
  return {violations == 0 && brute_violations == 0,
          std::to_string(violations) + "/200 sweep violations (min Rayleigh/bound " +
              fmt("%.3f", tightest) + "), " + std::to_string(brute_violations) +
              "/50 exhaustive violations"};
}

Outcome reversion() {
  std::mt19937_64 rng(303);
  double worst_corr = 1.0, worst_value = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 30 + static_cast<Index>(rng() % 121);
    const auto edges = oracle::random_connected_edges(n, 2 * n, rng);
    const WeightedGraph g(n, edges);
    const MergedProblem p = merge(g, {});
    EigenOptions eo;
    eo.tol = 1e-10;
    eo.seed = static_cast<std::uint64_t>(trial);
    const EigenSolution sol = generalized_eigs(p.g_operator(), p.h_operator(), 1,
                                               build_preconditioner(p.g), eo);
    // Standard problem L x = lambda D x, solved densely.
    const Matrix l = oracle::laplacian(n, edges);
    const Matrix dmat = oracle::degrees(n, edges).asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> std_solver(l, dmat);
    const Vector y = std_solver.eigenvectors().col(1);
    const double lambda_std = std_solver.eigenvalues()[1];

    Vector x = sol.vectors.col(0);
    Vector yc = y;
    x.array() -= x.mean();
    yc.array() -= yc.mean();
    const double corr = std::abs(x.dot(yc)) / (x.norm() * yc.norm());
    worst_corr = std::min(worst_corr, corr);
    // On the complement of d, L_K acts as D, so the eigenvalues differ by the scale.
    worst_value = std::max(worst_value,
                           std::abs(sol.values[0] * p.h_demand_scale - lambda_std) / lambda_std);
  }
  return {worst_corr >= 1 - 1e-6 && worst_value <= 1e-6,
          "min correlation 1-" + fmt("%.2e", 1 - worst_corr) + ", max rel eigenvalue gap " +
              fmt("%.2e", worst_value)};
}

Outcome four_moons_reproduction() {
  double sum = 0.0, slowest = 0.0, worst = 1.0;
  const int runs = 10;
  for (int s = 1; s <= runs; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto t0 = Clock::now();
    const LabeledPointCloud cloud = four_moons(1500, 0.05, seed);
    const WeightedGraph g = noisy_knn(cloud, 30, 15.0, seed + 1);
    const ConstraintSet c = sample_constraints(cloud.labels, 75, seed + 2);
    PipelineConfig cfg;
    cfg.k = 4;
    cfg.eig_seed = cfg.kmeans_seed = seed;
    const RunReport r = run_pipeline(g, c, cfg, cloud.labels);
    slowest = std::max(slowest, seconds_since(t0));
    sum += *r.quality.rand_index;
    worst = std::min(worst, *r.quality.rand_index);
  }
  const double mean = sum / runs;
  return {mean >= 0.90 && slowest < 10.0, "mean Rand " + fmt("%.4f", mean) + " (min " +
                                              fmt("%.4f", worst) + "), slowest run " +
                                              fmt("%.2f s", slowest)};
}

Outcome grid_scalability() {
  const Index side = 316;
  std::mt19937_64 rng(505);
  std::normal_distribution<double> noise(0.0, 0.05);
  io::GrayImage img;
  img.rows = img.cols = side;
  img.pixels.resize(static_cast<std::size_t>(side * side));
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const double v = std::clamp((c < side / 2 ? 0.3 : 0.7) + noise(rng), 0.0, 1.0);
      img.pixels[r * side + c] = static_cast<std::uint16_t>(std::lround(255.0 * v));
    }
  }
  const auto t0 = Clock::now();
  const WeightedGraph g = io::image_to_graph(img, 0.1, 4);
  const double build_s = seconds_since(t0);
  std::uniform_int_distribution<Index> pick(0, side * side - 1);
  ConstraintSet cons;
  std::set<std::pair<Index, Index>> seen;
  while (seen.size() < 100) {
    Index u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) continue;
    const bool same = (u % side < side / 2) == (v % side < side / 2);
    (same ? cons.ml : cons.cl).push_back({u, v, std::nullopt});
  }
  PipelineConfig cfg;
  cfg.k = 2;
  cfg.threads = 1;
  const RunReport r = run_pipeline(g, cons, cfg);
  const double total = build_s + r.timings.total_ms / 1000.0;
  std::printf("    grid %lldx%lld n=%lld m=%lld: graph %.2f s, merge %.2f s, eigs %.2f s (%d iters, %s), "
              "embed %.2f s, partition %.2f s, total %.2f s\n",
              static_cast<long long>(side), static_cast<long long>(side),
              static_cast<long long>(g.num_vertices()), static_cast<long long>(g.num_edges()), build_s,
              r.timings.merge_ms / 1000, r.timings.eigs_ms / 1000, r.eig_iterations,
              r.eig_converged ? "converged" : "not converged", r.timings.embed_ms / 1000,
              r.timings.partition_ms / 1000, total);
  return {total < 60.0 && r.eig_converged, "n=" + std::to_string(g.num_vertices()) + ", " +
                                               fmt("%.2f s", total) + " end to end"};
}

Outcome demand_quadratic_identity() {
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 200);
    const WeightedGraph g(n, oracle::random_connected_edges(n, n, rng));
    const DegreeVector d = degrees(g);
    Vector x = oracle::random_vector(n, rng);
    x.array() -= x.dot(d.d) / d.vol;
    const double lhs = (d.d.array() * x.array().square()).sum();
    const double err = std::abs(lhs - demand_quadratic(d, x)) / (x.squaredNorm() * d.d.maxCoeff());
    worst = std::max(worst, err);
  }
  return {worst <= 1e-9, "max normalized gap " + fmt("%.2e", worst)};
}

Outcome exact_values() {
  const Labels a{0, 0, 1, 1};
  const Labels b{0, 1, 0, 1};
  const WeightedGraph triangle(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  const WeightedGraph path(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const DegreeVector dp = degrees(path);
  const double r = rand_index(a, b);
  const double dc = demand_cut(degrees(triangle), VertexSet::from_members(3, std::vector<Index>{0}));
  const double w02 = auto_weight(dp, 0, 2);
  const double w01 = auto_weight(dp, 0, 1);
  const bool ok = r == 1.0 / 3.0 && dc == 4.0 / 3.0 && w02 == 0.5 && w01 == 1.0;
  return {ok, "rand " + fmt("%.17g", r) + ", triangle demand cut " + fmt("%.17g", dc) +
                  ", auto weights " + fmt("%.17g", w02) + " and " + fmt("%.17g", w01)};
}

Outcome determinism() {
  const LabeledPointCloud cloud = four_moons(1500, 0.05, 11);
  const WeightedGraph g = noisy_knn(cloud, 30, 15.0, 12);
  const ConstraintSet c = sample_constraints(cloud.labels, 75, 13);
  bool ok = true;
  std::string detail;
  for (Index k : {Index{2}, Index{4}}) {
    PipelineConfig cfg;
    cfg.k = k;
    cfg.eig_seed = cfg.kmeans_seed = 5;
    const RunReport x = run_pipeline(g, c, cfg);
    const RunReport y = run_pipeline(g, c, cfg);
    const bool bitwise = x.partition.labels == y.partition.labels && x.eigenvalues == y.eigenvalues &&
                         to_json(x, false).dump() == to_json(y, false).dump();
    cfg.threads = 4;
    const RunReport z = run_pipeline(g, c, cfg);
    const double drift = (z.eigenvalues - x.eigenvalues).cwiseAbs().maxCoeff();
    const bool threaded = z.partition.labels == x.partition.labels && drift <= 1e-12;
    ok = ok && bitwise && threaded;
    detail += "k=" + std::to_string(k) + (bitwise ? " bitwise" : " DIFFERS") +
              (threaded ? ", threads=4 same labels" : ", threads=4 DIFFERS") + "; ";
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"eigensolver matches dense oracle", eigensolver_equivalence},
      {"generalized Cheeger inequality", cheeger_inequality},
      {"reverts to standard spectral clustering", reversion},
      {"four moons Rand index", four_moons_reproduction},
      {"316x316 grid under 60 s", grid_scalability},
      {"demand quadratic identity", demand_quadratic_identity},
      {"exact small-case values", exact_values},
      {"determinism", determinism},
  };
  int failures = 0;
  int id = 1;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id++, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
