#include "partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace neurofem {

Partition partition_mesh(const Mesh& mesh, std::size_t n_chips, std::size_t iterations,
                         double balance_weight, std::uint64_t seed) {
    const std::size_t n = mesh.n_nodes();
    if (n_chips == 0 || n_chips > n)
        throw DomainError("partition_mesh: n_chips must be in [1, n_nodes]");

    Partition part;
    part.n_chips = n_chips;
    part.assignment.assign(n, 0);
    part.chip_positions.resize(n_chips);

    // initial chip positions: nodes sampled without replacement
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t c = 0; c < n_chips; ++c) {
        std::uniform_int_distribution<std::size_t> pick(c, n - 1);
        std::swap(pool[c], pool[pick(rng)]);
        part.chip_positions[c] = {mesh.nodes[pool[c]][0], mesh.nodes[pool[c]][1]};
    }

    const double target = static_cast<double>(n) / static_cast<double>(n_chips);
    std::vector<std::size_t> load(n_chips);

    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(load.begin(), load.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < n_chips; ++c) {
                double dx = mesh.nodes[i][0] - part.chip_positions[c][0];
                double dy = mesh.nodes[i][1] - part.chip_positions[c][1];
                double over = std::max(0.0, static_cast<double>(load[c]) / target - 1.0);
                double d = std::sqrt(dx * dx + dy * dy) * (1.0 + balance_weight * over);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            part.assignment[i] = best_c;
            ++load[best_c];
        }

        // centroids
        std::vector<double> cx(n_chips, 0.0), cy(n_chips, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            cx[part.assignment[i]] += mesh.nodes[i][0];
            cy[part.assignment[i]] += mesh.nodes[i][1];
        }
        for (std::size_t c = 0; c < n_chips; ++c) {
            if (load[c] > 0) {
                part.chip_positions[c] = {cx[c] / static_cast<double>(load[c]),
                                          cy[c] / static_cast<double>(load[c])};
            }
        }
        // relocate empty chips onto their nearest node, stealing it
        for (std::size_t c = 0; c < n_chips; ++c) {
            if (load[c] > 0) continue;
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_node = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (load[part.assignment[i]] <= 1) continue;  // keep donors nonempty
                double dx = mesh.nodes[i][0] - part.chip_positions[c][0];
                double dy = mesh.nodes[i][1] - part.chip_positions[c][1];
                double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    best_node = i;
                }
            }
            --load[part.assignment[best_node]];
            part.assignment[best_node] = c;
            ++load[c];
            part.chip_positions[c] = {mesh.nodes[best_node][0], mesh.nodes[best_node][1]};
        }
        part.iterations_run = it + 1;
    }
    return part;
}

CoreLayout assign_cores(const Partition& partition, std::size_t npm,
                        std::size_t cores_per_chip, std::size_t max_neurons_per_core) {
    CoreLayout layout;
    layout.core_of_node.assign(partition.assignment.size(), {0, 0});
    layout.neurons_per_core.assign(partition.n_chips,
                                   std::vector<std::size_t>(cores_per_chip, 0));
    std::vector<std::size_t> rank(partition.n_chips, 0);
    for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
        std::size_t chip = partition.assignment[i];
        std::size_t core = rank[chip] % cores_per_chip;
        ++rank[chip];
        layout.core_of_node[i] = {chip, core};
        layout.neurons_per_core[chip][core] += npm;
        if (layout.neurons_per_core[chip][core] > max_neurons_per_core)
            throw CapacityError("assign_cores: chip " + std::to_string(chip) +
                                " core " + std::to_string(core) + " exceeds " +
                                std::to_string(max_neurons_per_core) + " neurons");
    }
    return layout;
}

PartitionMetrics partition_metrics(const Partition& partition, const CsrMatrix& system_a) {
    if (system_a.n_rows > partition.assignment.size())
        throw StructuralError("partition_metrics: assignment does not cover the system");
    PartitionMetrics m;
    for (std::size_t i = 0; i < system_a.n_rows; ++i) {
        for (std::size_t k = system_a.row_ptr[i]; k < system_a.row_ptr[i + 1]; ++k) {
            std::size_t j = system_a.col_idx[k];
            if (j != i && partition.assignment[i] != partition.assignment[j]) ++m.edge_cut;
        }
    }
    std::vector<std::size_t> load(partition.n_chips, 0);
    for (std::size_t c : partition.assignment) ++load[c];
    double mean = static_cast<double>(partition.assignment.size()) /
                  static_cast<double>(partition.n_chips);
    double var = 0.0;
    std::size_t max_load = 0;
    for (std::size_t l : load) {
        var += (static_cast<double>(l) - mean) * (static_cast<double>(l) - mean);
        max_load = std::max(max_load, l);
    }
    m.load_std = std::sqrt(var / static_cast<double>(partition.n_chips));
    m.max_load_ratio = static_cast<double>(max_load) / mean;
    return m;
}

void export_partition_csv(const Partition& partition, const CoreLayout& layout,
                          const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("export_partition_csv: cannot open " + path);
    out << std::setprecision(12) << "node,x,y,chip,core\n";
    for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
        out << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << ','
            << layout.core_of_node[i].first << ',' << layout.core_of_node[i].second << '\n';
    }
}

}  // namespace neurofem
