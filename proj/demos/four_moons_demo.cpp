// Four interleaved moons, a noisy kNN graph and a handful of labelled points.
// Prints the Rand index with and without the constraints.

#include <cstdio>
#include <cstdlib>

#include "fastge/fastge.hpp"

int main(int argc, char** argv) {
  using namespace fastge;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;

  const LabeledPointCloud cloud = four_moons(1500, 0.05, seed);
  const WeightedGraph g = noisy_knn(cloud, 30, 15.0, seed + 1);
  const ConstraintSet labelled = sample_constraints(cloud.labels, 75, seed + 2);

  PipelineConfig cfg;
  cfg.k = 4;
  cfg.eig_seed = cfg.kmeans_seed = seed;

  for (const ConstraintSet* c : {&labelled, static_cast<const ConstraintSet*>(nullptr)}) {
    const RunReport r = run_pipeline(g, c ? *c : ConstraintSet{}, cfg, cloud.labels);
    std::printf("%-18s rand=%.4f max_badness=%.4g eigs=%.1f ms total=%.1f ms\n",
                c ? "75 labelled nodes" : "no constraints", *r.quality.rand_index,
                r.quality.max_badness, r.timings.eigs_ms, r.timings.total_ms);
  }
  return 0;
}
