#ifndef DTMM_OTU_TABLE_HPP
#define DTMM_OTU_TABLE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtmm/tree.hpp"

namespace dtmm {

// n x M nonnegative count matrix with sample and OTU identifiers.
struct OtuTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> otu_ids;
  std::vector<std::int64_t> counts;  // row-major n x M

  int n_samples() const { return static_cast<int>(sample_ids.size()); }
  int n_otus() const { return static_cast<int>(otu_ids.size()); }
  std::span<const std::int64_t> row(int i) const {
    return {counts.data() + static_cast<std::size_t>(i) * n_otus(),
            static_cast<std::size_t>(n_otus())};
  }
  std::int64_t total(int i) const;

  // Relative abundance of row i (all-zero rows stay zero).
  std::vector<double> relative_row(int i) const;

  void validate() const;

  // Returns a copy with columns reordered to match the tree's leaf order.
  // Any mismatch between OTU ids and leaf ids is an error naming the
  // symmetric difference.
  OtuTable matched_to_tree(const PhyloTree& tree) const;

  // Drops samples whose total is below min_total.
  OtuTable filtered(std::int64_t min_total) const;
};

// Reads a TSV/CSV table: header row of OTU ids, first column of sample ids.
// The delimiter is sniffed from the header line (tab wins over comma).
OtuTable read_otu_table(const std::string& path);
OtuTable parse_otu_table(const std::string& text, const std::string& origin);

void write_otu_table(const OtuTable& table, const std::string& path,
                     char delim = '\t');

}  // namespace dtmm

#endif  // DTMM_OTU_TABLE_HPP
