#ifndef WSCORE_CSV_HPP
#define WSCORE_CSV_HPP

// Long-format CSV ingestion: one row per measurement with a cluster id, an
// optional time column, an ordinal response and covariates.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wscore/dataset.hpp"
#include "wscore/error.hpp"

namespace wscore {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line;  ///< record number of each row; the header is record 1

  int column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("column '" + name + "' not found in the header");
    return static_cast<int>(it - header.begin());
  }
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded line breaks, CRLF.
inline CsvTable parse_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw InputError("CSV: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (records.empty()) throw InputError("CSV: empty input");

  CsvTable t;
  t.header = records.front();
  for (auto& h : t.header) {
    // Strip a UTF-8 byte order mark and surrounding blanks.
    if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
    while (!h.empty() && std::isspace(static_cast<unsigned char>(h.back()))) h.pop_back();
    while (!h.empty() && std::isspace(static_cast<unsigned char>(h.front()))) h.erase(0, 1);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw InputError("CSV record " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                       " fields; the header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
    t.line.push_back(static_cast<int>(r + 1));
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in);
}

enum class Coding { numeric, adjacent, dummy };

struct CovariateSpec {
  std::string column;
  Coding coding = Coding::numeric;
};

/// Parses "time:adjacent,trt,baseline:adjacent,age". Codings: numeric (default),
/// adjacent (cumulative indicators I(v >= level) for every level above the
/// lowest), dummy (indicators I(v == level) against the lowest level).
inline std::vector<CovariateSpec> parse_covariate_spec(const std::string& text) {
  std::vector<CovariateSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    CovariateSpec spec;
    const auto colon = item.find(':');
    spec.column = item.substr(0, colon);
    if (colon != std::string::npos) {
      const std::string coding = item.substr(colon + 1);
      if (coding == "numeric") spec.coding = Coding::numeric;
      else if (coding == "adjacent") spec.coding = Coding::adjacent;
      else if (coding == "dummy") spec.coding = Coding::dummy;
      else throw InputError("unknown coding '" + coding + "' for covariate '" + spec.column + "'");
    }
    out.push_back(spec);
  }
  return out;
}

struct IngestSpec {
  std::string id_col = "id";
  std::string time_col;  ///< empty: within-cluster order of appearance
  std::string y_col = "y";
  std::vector<CovariateSpec> covariates;
};

struct IngestResult {
  OrdinalDataset data;
  std::vector<std::string> response_levels;  ///< original value of category k at position k-1
  std::vector<double> time_levels;           ///< original time of within index k at position k-1
  std::vector<std::string> warnings;
};

namespace detail {

inline bool is_missing(const std::string& s) {
  std::string t = s;
  t.erase(0, t.find_first_not_of(" \t"));
  t.erase(t.find_last_not_of(" \t") + 1);
  return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == ".";
}

inline bool parse_number(std::string s, double& out) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string format_level(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

}  // namespace detail

/// Builds the clustered dataset. Rows with a missing response are dropped with
/// a warning; the response is relabeled to 1..K in increasing order; clusters
/// are ordered by id so that the row order of the file does not matter.
inline IngestResult ingest(const CsvTable& table, const IngestSpec& spec) {
  IngestResult out;
  const int id_c = table.column(spec.id_col);
  const int y_c = table.column(spec.y_col);
  const int t_c = spec.time_col.empty() ? -1 : table.column(spec.time_col);
  std::vector<int> cov_c;
  for (const auto& cs : spec.covariates) cov_c.push_back(table.column(cs.column));

  struct Row {
    std::string id;
    double time = 0.0;
    double y = 0.0;
    std::vector<double> x;
    int line = 0;
  };
  std::vector<Row> rows;
  int dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    const int line = table.line[r];
    if (detail::is_missing(rec[y_c])) {
      ++dropped;
      continue;
    }
    Row row;
    row.line = line;
    row.id = rec[id_c];
    if (detail::is_missing(row.id)) throw InputError("row " + std::to_string(line) + ": missing cluster id");
    if (!detail::parse_number(rec[y_c], row.y) || row.y != std::floor(row.y))
      throw InputError("row " + std::to_string(line) + ": response '" + rec[y_c] + "' is not an integer");
    if (t_c >= 0 && !detail::parse_number(rec[t_c], row.time))
      throw InputError("row " + std::to_string(line) + ": time '" + rec[t_c] + "' is not numeric");
    for (std::size_t k = 0; k < cov_c.size(); ++k) {
      double v = 0.0;
      if (!detail::parse_number(rec[cov_c[k]], v))
        throw InputError("row " + std::to_string(line) + ": covariate '" + spec.covariates[k].column + "' value '" +
                         rec[cov_c[k]] + "' is missing or not numeric");
      row.x.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (dropped > 0)
    out.warnings.push_back("dropped " + std::to_string(dropped) + " row(s) with a missing response");
  if (rows.empty()) throw InputError("no usable rows");

  // Response relabeling.
  std::set<double> ylev;
  for (const auto& r : rows) ylev.insert(r.y);
  std::map<double, int> ymap;
  for (double v : ylev) {
    ymap[v] = static_cast<int>(ymap.size()) + 1;
    out.response_levels.push_back(detail::format_level(v));
  }
  if (ylev.size() < 2) throw IdentifiabilityError("the response has fewer than two distinct categories");

  // Within-cluster index: rank of the time among all distinct times, or order of appearance.
  std::map<double, int> tmap;
  if (t_c >= 0) {
    std::set<double> tlev;
    for (const auto& r : rows) tlev.insert(r.time);
    for (double v : tlev) {
      tmap[v] = static_cast<int>(tmap.size()) + 1;
      out.time_levels.push_back(v);
    }
  }

  // Covariate expansion.
  std::vector<std::string> names;
  std::vector<std::vector<double>> levels(spec.covariates.size());
  for (std::size_t k = 0; k < spec.covariates.size(); ++k) {
    const auto& cs = spec.covariates[k];
    if (cs.coding == Coding::numeric) {
      names.push_back(cs.column);
      continue;
    }
    std::set<double> lev;
    for (const auto& r : rows) lev.insert(r.x[k]);
    levels[k].assign(lev.begin(), lev.end());
    if (levels[k].size() < 2) throw IdentifiabilityError("covariate '" + cs.column + "' takes a single value");
    for (std::size_t l = 1; l < levels[k].size(); ++l)
      names.push_back(cs.column + (cs.coding == Coding::adjacent ? ">=" : "=") + detail::format_level(levels[k][l]));
  }
  auto expand = [&](const Row& r) {
    std::vector<double> v;
    for (std::size_t k = 0; k < spec.covariates.size(); ++k) {
      const auto coding = spec.covariates[k].coding;
      if (coding == Coding::numeric) {
        v.push_back(r.x[k]);
        continue;
      }
      for (std::size_t l = 1; l < levels[k].size(); ++l)
        v.push_back(coding == Coding::adjacent ? (r.x[k] >= levels[k][l] ? 1.0 : 0.0)
                                               : (r.x[k] == levels[k][l] ? 1.0 : 0.0));
    }
    return v;
  };

  // Group rows by cluster id.
  std::map<std::string, std::vector<const Row*>> groups;
  for (const auto& r : rows) groups[r.id].push_back(&r);
  out.data.covariate_names = names;
  out.data.categories = static_cast<int>(ylev.size());
  for (auto& [id, members] : groups) {
    std::vector<std::pair<int, const Row*>> indexed;
    for (std::size_t k = 0; k < members.size(); ++k)
      indexed.emplace_back(t_c >= 0 ? tmap.at(members[k]->time) : static_cast<int>(k) + 1, members[k]);
    std::stable_sort(indexed.begin(), indexed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < indexed.size(); ++k)
      if (indexed[k].first == indexed[k - 1].first)
        throw InputError("duplicate (id, time) = (" + id + ", " + detail::format_level(indexed[k].second->time) +
                         ") at rows " + std::to_string(indexed[k - 1].second->line) + " and " +
                         std::to_string(indexed[k].second->line));
    Cluster c;
    c.id = id;
    c.x.resize(static_cast<Eigen::Index>(indexed.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < indexed.size(); ++k) {
      c.index.push_back(indexed[k].first);
      c.y.push_back(ymap.at(indexed[k].second->y));
      const auto v = expand(*indexed[k].second);
      for (std::size_t col = 0; col < v.size(); ++col) c.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(col)) = v[col];
    }
    out.data.clusters.push_back(std::move(c));
  }
  if (out.data.clusters.size() < 2)
    out.warnings.push_back("only one cluster; correlation and sandwich estimates need more clusters");
  out.data.validate();
  return out;
}

/// Expanded covariate names generated from the given source columns
/// ("baseline" -> baseline>=2, ..., "trt" -> trt), in dataset order.
inline std::vector<std::string> expanded_columns(const std::vector<std::string>& expanded,
                                                 const std::vector<std::string>& sources) {
  std::vector<std::string> out;
  for (const auto& src : sources) {
    bool found = false;
    for (const auto& name : expanded) {
      const bool match = name == src || name.rfind(src + ">=", 0) == 0 || name.rfind(src + "=", 0) == 0;
      if (match) {
        found = true;
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
      }
    }
    if (!found) throw InputError("covariate column '" + src + "' is not among the ingested covariates");
  }
  std::vector<std::string> ordered;
  for (const auto& name : expanded)
    if (std::find(out.begin(), out.end(), name) != out.end()) ordered.push_back(name);
  return ordered;
}

inline IngestResult ingest_csv(const std::string& path, const IngestSpec& spec) { return ingest(read_csv(path), spec); }

}  // namespace wscore

#endif  // WSCORE_CSV_HPP
