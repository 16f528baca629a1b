#include "spconv/weights_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace spconv {

WeightFormat parse_weight_format(std::string_view text) {
  if (text == "gal" || text == "GAL") return WeightFormat::Gal;
  if (text == "gwt" || text == "GWT") return WeightFormat::Gwt;
  throw DataError("unknown weight format '" + std::string(text) + "' (expected gal or gwt)");
}

WeightFormat weight_format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) throw DataError("cannot infer weight format from '" + path + "'");
  return parse_weight_format(path.substr(dot + 1));
}

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!blank(line)) return true;
    }
    return false;
  }

  // Next physical line, blank or not.
  bool raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }

  int peek() { return in_.peek(); }
  std::size_t line_no() const { return line_no_; }

private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

// Maps region ids to indices; either fixed up front or grown on first use.
class IdTable {
public:
  IdTable(const std::vector<std::string>& ids, Index n) : fixed_(!ids.empty()), n_(n) {
    if (fixed_ && static_cast<Index>(ids.size()) != n)
      throw ParseError("header declares " + std::to_string(n) + " regions but " +
                           std::to_string(ids.size()) + " ids were supplied",
                       1);
    for (const auto& id : ids) add(id);
  }

  Index lookup(const std::string& id, std::size_t line) {
    const auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    if (fixed_) throw ParseError("unknown region id '" + id + "'", line);
    if (static_cast<Index>(order_.size()) == n_)
      throw ParseError("more distinct ids than the " + std::to_string(n_) + " declared", line);
    return add(id);
  }

  const std::vector<std::string>& order() const { return order_; }

private:
  Index add(const std::string& id) {
    const Index k = static_cast<Index>(order_.size());
    index_.emplace(id, k);
    order_.push_back(id);
    return k;
  }

  bool fixed_;
  Index n_;
  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> order_;
};

Index parse_header(LineReader& reader) {
  std::string line;
  if (!reader.next(line)) throw ParseError("empty weights file", 1);
  const auto t = tokens(line);
  std::string count;
  if (t.size() == 1) {
    count = t[0];
  } else if (t.size() == 4 && t[0] == "0") {
    count = t[1];
  } else {
    throw ParseError("malformed header, expected '0 <n> <dataset-name> <id-column>'", reader.line_no());
  }
  const auto value = parse_double(count);
  if (!value || *value < 1 || *value != std::floor(*value))
    throw ParseError("malformed header: region count '" + count + "'", reader.line_no());
  return static_cast<Index>(*value);
}

bool rows_sum_to_one(const WeightMatrixd::Sparse& m) {
  for (Index i = 0; i < m.outerSize(); ++i) {
    double sum = 0.0;
    Index count = 0;
    for (WeightMatrixd::Sparse::InnerIterator it(m, i); it; ++it) {
      sum += it.value();
      ++count;
    }
    if (count > 0 && std::abs(sum - 1.0) > 1e-12) return false;
  }
  return true;
}

WeightMatrixd finish(Index n, IdTable& table, std::vector<Eigen::Triplet<double>>& triplets,
                     std::size_t last_line) {
  if (static_cast<Index>(table.order().size()) != n)
    throw ParseError("header declares " + std::to_string(n) + " regions but only " +
                         std::to_string(table.order().size()) +
                         " appear; supply the region id list",
                     last_line);
  WeightMatrixd::Sparse m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  const bool standardized = rows_sum_to_one(m);
  try {
    return WeightMatrixd(std::move(m), table.order(), standardized);
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(e.what(), last_line);
  }
}

struct GalBlock {
  std::string id;
  std::size_t head_line = 0;
  std::vector<std::string> neighbors;
  std::size_t list_line = 0;
};

WeightMatrixd read_gal(LineReader& reader, const std::vector<std::string>& ids) {
  const Index n = parse_header(reader);
  std::vector<GalBlock> blocks;
  std::string line;
  for (Index b = 0; b < n; ++b) {
    if (!reader.next(line))
      throw ParseError("expected " + std::to_string(n) + " neighbor blocks, found " + std::to_string(b),
                       reader.line_no());
    const auto head = tokens(line);
    if (head.size() != 2) throw ParseError("expected '<id> <neighbor count>'", reader.line_no());
    GalBlock block{head[0], reader.line_no(), {}, reader.line_no()};
    const auto k = parse_double(head[1]);
    if (!k || *k < 0 || *k != std::floor(*k))
      throw ParseError("invalid neighbor count '" + head[1] + "'", reader.line_no());
    if (*k > 0) {
      if (!reader.next(line)) throw ParseError("missing neighbor list", reader.line_no());
      block.neighbors = tokens(line);
      block.list_line = reader.line_no();
    } else if (reader.peek() == '\n' || reader.peek() == '\r') {
      reader.raw(line);
    }
    if (static_cast<double>(block.neighbors.size()) != *k)
      throw ParseError("neighbor count " + head[1] + " does not match " +
                           std::to_string(block.neighbors.size()) + " listed ids",
                       reader.line_no());
    blocks.push_back(std::move(block));
  }
  if (reader.next(line)) throw ParseError("unexpected content after last block", reader.line_no());

  // Block ids fix the region order before any neighbor id is resolved.
  IdTable table(ids, n);
  std::vector<Index> rows;
  std::set<Index> seen_rows;
  for (const auto& block : blocks) {
    const Index row = table.lookup(block.id, block.head_line);
    if (!seen_rows.insert(row).second)
      throw ParseError("region '" + block.id + "' listed twice", block.head_line);
    rows.push_back(row);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::set<Index> row_cols;
    for (const auto& id : blocks[b].neighbors) {
      const Index col = table.lookup(id, blocks[b].list_line);
      if (col == rows[b]) throw ParseError("region '" + id + "' lists itself", blocks[b].list_line);
      if (!row_cols.insert(col).second)
        throw ParseError("duplicate pair " + blocks[b].id + " " + id, blocks[b].list_line);
      triplets.emplace_back(rows[b], col, 1.0);
    }
  }
  return finish(n, table, triplets, reader.line_no());
}

WeightMatrixd read_gwt(LineReader& reader, const std::vector<std::string>& ids) {
  const Index n = parse_header(reader);
  IdTable table(ids, n);
  std::vector<Eigen::Triplet<double>> triplets;
  std::set<std::pair<Index, Index>> pairs;
  std::string line;
  while (reader.next(line)) {
    const auto t = tokens(line);
    if (t.size() != 3) throw ParseError("expected '<id_i> <id_j> <weight>'", reader.line_no());
    const Index i = table.lookup(t[0], reader.line_no());
    const Index j = table.lookup(t[1], reader.line_no());
    const auto value = parse_double(t[2]);
    if (!value || !std::isfinite(*value) || *value < 0)
      throw ParseError("invalid weight '" + t[2] + "'", reader.line_no());
    if (i == j) throw ParseError("self pair for region '" + t[0] + "'", reader.line_no());
    if (!pairs.emplace(i, j).second)
      throw ParseError("duplicate pair " + t[0] + " " + t[1], reader.line_no());
    if (*value > 0) triplets.emplace_back(i, j, *value);
  }
  return finish(n, table, triplets, reader.line_no());
}

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos)
    throw DataError(std::string(what) + " '" + s + "' cannot be written: contains whitespace");
}

}  // namespace

WeightMatrixd read_weights(std::istream& in, WeightFormat format, const std::vector<std::string>& ids) {
  LineReader reader(in);
  return format == WeightFormat::Gal ? read_gal(reader, ids) : read_gwt(reader, ids);
}

WeightMatrixd read_weights_file(const std::string& path, WeightFormat format,
                                const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file '" + path + "'");
  return read_weights(in, format, ids);
}

void write_weights(std::ostream& out, const WeightMatrixd& w, WeightFormat format,
                   const WeightFileHeader& header) {
  check_token(header.dataset_name, "dataset name");
  check_token(header.id_column, "id column");
  for (const auto& id : w.ids()) check_token(id, "region id");
  const auto& m = w.matrix();
  const auto& ids = w.ids();
  out << "0 " << w.size() << ' ' << header.dataset_name << ' ' << header.id_column << '\n';
  if (format == WeightFormat::Gal) {
    for (Index i = 0; i < m.outerSize(); ++i)
      for (WeightMatrixd::Sparse::InnerIterator it(m, i); it; ++it)
        if (it.value() != 1.0)
          throw DataError("GAL stores binary weights only; use GWT for weighted matrices");
    for (Index i = 0; i < m.outerSize(); ++i) {
      out << ids[i] << ' ' << w.neighbor_count(i) << '\n';
      bool first = true;
      for (WeightMatrixd::Sparse::InnerIterator it(m, i); it; ++it) {
        if (!first) out << ' ';
        out << ids[it.col()];
        first = false;
      }
      out << '\n';
    }
  } else {
    for (Index i = 0; i < m.outerSize(); ++i)
      for (WeightMatrixd::Sparse::InnerIterator it(m, i); it; ++it)
        out << ids[i] << ' ' << ids[it.col()] << ' ' << format_double(it.value()) << '\n';
  }
}

void write_weights_file(const std::string& path, const WeightMatrixd& w, WeightFormat format,
                        const WeightFileHeader& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write weights file '" + path + "'");
  write_weights(out, w, format, header);
}

}  // namespace spconv
