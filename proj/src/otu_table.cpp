#include "dtmm/otu_table.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace dtmm {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // Trim trailing CR from Windows line endings.
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

}  // namespace

std::int64_t OtuTable::total(int i) const {
  std::int64_t t = 0;
  for (auto v : row(i)) t += v;
  return t;
}

std::vector<double> OtuTable::relative_row(int i) const {
  auto r = row(i);
  std::vector<double> out(r.size(), 0.0);
  double t = static_cast<double>(total(i));
  if (t > 0)
    for (std::size_t j = 0; j < r.size(); ++j) out[j] = r[j] / t;
  return out;
}

void OtuTable::validate() const {
  if (n_otus() < 2) throw std::runtime_error("otu table: need at least 2 OTUs");
  std::unordered_set<std::string> ids(otu_ids.begin(), otu_ids.end());
  if (static_cast<int>(ids.size()) != n_otus())
    throw std::runtime_error("otu table: duplicate OTU ids");
  std::unordered_set<std::string> sids(sample_ids.begin(), sample_ids.end());
  if (static_cast<int>(sids.size()) != n_samples())
    throw std::runtime_error("otu table: duplicate sample ids");
  for (auto v : counts)
    if (v < 0) throw std::runtime_error("otu table: negative count");
}

OtuTable OtuTable::matched_to_tree(const PhyloTree& tree) const {
  std::unordered_map<std::string, int> col;
  for (int j = 0; j < n_otus(); ++j) col[otu_ids[j]] = j;

  std::vector<std::string> missing_in_table, missing_in_tree;
  std::set<std::string> leaf_set(tree.leaf_ids().begin(),
                                 tree.leaf_ids().end());
  for (const auto& id : tree.leaf_ids())
    if (!col.count(id)) missing_in_table.push_back(id);
  for (const auto& id : otu_ids)
    if (!leaf_set.count(id)) missing_in_tree.push_back(id);
  if (!missing_in_table.empty() || !missing_in_tree.empty()) {
    std::ostringstream msg;
    msg << "otu table and tree disagree on identifiers:";
    if (!missing_in_tree.empty()) {
      msg << " OTUs absent from tree:";
      for (const auto& s : missing_in_tree) msg << ' ' << s;
      msg << ';';
    }
    if (!missing_in_table.empty()) {
      msg << " tree leaves absent from table:";
      for (const auto& s : missing_in_table) msg << ' ' << s;
    }
    throw std::runtime_error(msg.str());
  }

  OtuTable out;
  out.sample_ids = sample_ids;
  out.otu_ids = tree.leaf_ids();
  out.counts.resize(counts.size());
  for (int i = 0; i < n_samples(); ++i)
    for (int j = 0; j < n_otus(); ++j)
      out.counts[static_cast<std::size_t>(i) * n_otus() + j] =
          counts[static_cast<std::size_t>(i) * n_otus() +
                 col[tree.leaf_ids()[j]]];
  return out;
}

OtuTable OtuTable::filtered(std::int64_t min_total) const {
  OtuTable out;
  out.otu_ids = otu_ids;
  for (int i = 0; i < n_samples(); ++i) {
    if (total(i) < min_total) continue;
    out.sample_ids.push_back(sample_ids[i]);
    auto r = row(i);
    out.counts.insert(out.counts.end(), r.begin(), r.end());
  }
  return out;
}

OtuTable parse_otu_table(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(origin + ": empty table");
  char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  auto header = split_line(line, delim);
  if (header.size() < 3)
    throw std::runtime_error(origin + ":1: header needs >= 2 OTU columns");

  OtuTable table;
  table.otu_ids.assign(header.begin() + 1, header.end());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_line(line, delim);
    if (fields.size() != header.size())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    table.sample_ids.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      std::int64_t v = 0;
      try {
        std::size_t used = 0;
        v = std::stoll(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
      } catch (const std::exception&) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": count '" + fields[j] +
                                 "' is not a nonnegative integer");
      }
      if (v < 0)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": negative count");
      table.counts.push_back(v);
    }
  }
  table.validate();
  return table;
}

OtuTable read_otu_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_otu_table(buf.str(), path);
}

void write_otu_table(const OtuTable& table, const std::string& path,
                     char delim) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample";
  for (const auto& id : table.otu_ids) out << delim << id;
  out << '\n';
  for (int i = 0; i < table.n_samples(); ++i) {
    out << table.sample_ids[i];
    for (auto v : table.row(i)) out << delim << v;
    out << '\n';
  }
}

}  // namespace dtmm
