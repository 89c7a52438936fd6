#ifndef DTMM_CHAIN_IO_HPP
#define DTMM_CHAIN_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dtmm/dirichlet_tree.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/sampler.hpp"
#include "dtmm/summaries.hpp"

namespace dtmm {

// FNV-1a, used to pin inputs in chain headers (not cryptographic).
std::uint64_t fnv1a64(const std::string& text);
std::string data_hash(const OtuTable& table);
std::string tree_hash(const PhyloTree& tree);

// Chain files are JSON lines: a header record pinning format version,
// input hashes and the sampler configuration, then one record per retained
// draw {chain, t, c, gamma, beta, lambda}. (g, s) are re-derived on read.
struct ChainHeader {
  int version = 1;
  std::string tree_hash;
  std::string data_hash;
  int n = 0;
  int n_leaves = 0;
  std::vector<std::string> sample_ids;
  PriorConfig config;
  int chains = 1;
};

void write_chain(const std::string& path, const ChainHeader& header,
                 const std::vector<PosteriorChain>& chains);
std::pair<ChainHeader, PosteriorChain> read_chain(const std::string& path);

// Resumable snapshot of a running chain.
struct Checkpoint {
  int version = 1;
  int next_iteration = 1;
  std::vector<int> labels;  // 1-based
  std::vector<std::uint8_t> gamma;
  double beta = 1.0;
  double lambda = 0.5;
  std::string rng_state;
  std::string tree_hash;
  std::string data_hash;
  PriorConfig config;
};

void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

std::string rng_state_string(const Rng& rng);
Rng rng_from_state(const std::string& state);

// Result writers (12 significant digits).
void write_coclustering_csv(const std::string& path,
                            const CoClusteringMatrix& pi,
                            const std::vector<std::string>& sample_ids);
void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& sample_ids,
                      const std::vector<int>& labels);
std::vector<std::pair<std::string, int>> read_labels_csv(
    const std::string& path);
void write_activation_json(const std::string& path,
                           const std::vector<double>& means);
// Global and one-vs-rest importance scores per OTU; undefined entries stay
// empty. Header-only when the labeling has a single cluster.
void write_importance_csv(const std::string& path, const OtuTable& table,
                          const std::vector<int>& labels, bool use_raw);
void write_centroids_json(const std::string& path, const CentroidEstimate& ce,
                          const std::vector<std::string>& otu_ids,
                          const std::vector<double>& tau_support);
void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace);

// Canonical node-order JSON for Dirichlet-tree parameters.
std::string dt_params_json(const DtParams& params);
DtParams dt_params_from_json(const std::string& text);

}  // namespace dtmm

#endif  // DTMM_CHAIN_IO_HPP
