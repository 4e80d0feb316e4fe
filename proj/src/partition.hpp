#ifndef NEUROFEM_PARTITION_HPP
#define NEUROFEM_PARTITION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "sparse.hpp"

namespace neurofem {

struct Partition {
    std::vector<std::size_t> assignment;  // node -> chip
    std::vector<std::array<double, 2>> chip_positions;
    std::size_t n_chips = 0;
    std::size_t iterations_run = 0;
};

struct CoreLayout {
    std::vector<std::pair<std::size_t, std::size_t>> core_of_node;  // node -> (chip, core)
    std::vector<std::vector<std::size_t>> neurons_per_core;         // [chip][core]
};

// Greedy centroid partitioning with sequential load-balanced assignment:
// d_eff(p, c) = ||p - pos_c|| * (1 + balance_weight * max(0, load_c/target - 1)).
// Empty chips are relocated onto their nearest mesh node.
Partition partition_mesh(const Mesh& mesh, std::size_t n_chips, std::size_t iterations = 16,
                         double balance_weight = 1.0, std::uint64_t seed = 0);

CoreLayout assign_cores(const Partition& partition, std::size_t npm,
                        std::size_t cores_per_chip = 128,
                        std::size_t max_neurons_per_core = 512);

struct PartitionMetrics {
    std::size_t edge_cut = 0;  // off-diagonal system nonzero blocks crossing chips
    double load_std = 0.0;
    double max_load_ratio = 0.0;  // max chip load / mean load
};

PartitionMetrics partition_metrics(const Partition& partition, const CsrMatrix& system_a);

// CSV (node, chip, core) plus layout columns (x, y) for plotting.
void export_partition_csv(const Partition& partition, const CoreLayout& layout,
                          const Mesh& mesh, const std::string& path);

}  // namespace neurofem

#endif
