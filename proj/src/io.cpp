#include "lgc/io.hpp"

#include <fmt/format.h>

#include <sstream>

namespace lgc {

std::string format_real(double x) { return fmt::format("{:.17g}", x); }

namespace {

void write_header(std::ostream& os, const FieldHeader& h) {
  os << "lgc-field 1\n";
  os << "kind " << h.kind << '\n';
  os << "n " << h.n << '\n';
  if (h.kind == "section") os << "components " << h.components << '\n';
  os << "grid " << h.grid.width << ' ' << h.grid.height << '\n';
  for (const auto& [k, v] : h.meta) os << "meta " << k << ' ' << v << '\n';
  os << "records " << h.records << '\n';
}

void write_matrix(std::ostream& os, const Matrix& m) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) os << ' ' << format_real(m(r, c));
}

FieldHeader read_header(std::istream& is, const std::string& expected_kind) {
  FieldHeader h;
  std::string line;
  if (!std::getline(is, line) || line.rfind("lgc-field", 0) != 0) {
    throw FormatError("field file: missing 'lgc-field' magic line");
  }
  bool have_grid = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "kind") {
      ls >> h.kind;
    } else if (tag == "n") {
      ls >> h.n;
    } else if (tag == "components") {
      ls >> h.components;
    } else if (tag == "grid") {
      ls >> h.grid.width >> h.grid.height;
      have_grid = true;
    } else if (tag == "meta") {
      std::string k;
      std::string v;
      ls >> k;
      std::getline(ls >> std::ws, v);
      h.meta.emplace_back(k, v);
    } else if (tag == "records") {
      ls >> h.records;
      break;
    } else {
      throw FormatError("field file: unknown header record '" + tag + "'");
    }
    if (ls.fail()) throw FormatError("field file: bad header record '" + line + "'");
  }
  if (h.kind != expected_kind) {
    throw FormatError("field file: expected kind '" + expected_kind + "', found '" + h.kind + "'");
  }
  if (h.n < 2 || !have_grid || h.grid.width < 1 || h.grid.height < 1 || h.records < 0) {
    throw FormatError("field file: incomplete or invalid header");
  }
  if (h.kind == "section" && h.components < 1) throw FormatError("field file: bad component count");
  return h;
}

Matrix read_matrix(std::istringstream& ls, int n) {
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (!(ls >> m(r, c))) throw FormatError("field file: truncated matrix record");
  return m;
}

}  // namespace

void write_section(std::ostream& os, const GridLayout& grid, const Section& y, const MetaList& meta) {
  FieldHeader h{"section", y.signature().n, y.signature().components, grid, meta, 0};
  for (VertexId v = 0; v < y.num_vertices(); ++v) h.records += y.has(v) ? 1 : 0;
  write_header(os, h);
  for (VertexId v = 0; v < y.num_vertices(); ++v) {
    if (!y.has(v)) continue;
    const auto [i, j] = grid.vertex_index(v);
    os << v << ' ' << i << ' ' << j;
    for (const auto& g : y.at(v)) write_matrix(os, g.matrix());
    os << '\n';
  }
}

Section read_section(std::istream& is, FieldHeader* header) {
  const FieldHeader h = read_header(is, "section");
  Section y(FiberSignature{h.components, h.n}, h.grid.num_vertices());
  std::string line;
  int count = 0;
  while (count < h.records && std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    VertexId v = -1;
    int i = -1;
    int j = -1;
    if (!(ls >> v >> i >> j) || !h.grid.has_vertex(i, j) || h.grid.vertex(i, j) != v) {
      throw FormatError("field file: bad vertex record '" + line.substr(0, 40) + "'");
    }
    Fiber fiber;
    for (int k = 0; k < h.components; ++k) {
      try {
        // Validate, then keep the stored bits so write/read round trips exactly.
        Matrix m = read_matrix(ls, h.n);
        GroupElement::from_matrix(m);
        fiber.push_back(GroupElement::trusted(std::move(m)));
      } catch (const FormatError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw FormatError("field file: vertex " + std::to_string(v) + ": " + e.what());
      }
    }
    y.set(v, std::move(fiber));
    ++count;
  }
  if (count != h.records) throw FormatError("field file: fewer records than announced");
  if (header) *header = h;
  return y;
}

void write_multiplier(std::ostream& os, const GridLayout& grid, const Multiplier& lambda,
                      const MetaList& meta) {
  FieldHeader h{"multiplier", lambda.n(), 1, grid, meta, 0};
  for (FaceId f = 0; f < lambda.num_faces(); ++f) h.records += lambda.has(f) ? 1 : 0;
  write_header(os, h);
  for (FaceId f = 0; f < lambda.num_faces(); ++f) {
    if (!lambda.has(f)) continue;
    const auto [i, j] = grid.face_index(f);
    os << f << ' ' << i << ' ' << j;
    write_matrix(os, lambda.at(f).matrix());
    os << '\n';
  }
}

Multiplier read_multiplier(std::istream& is, FieldHeader* header) {
  const FieldHeader h = read_header(is, "multiplier");
  Multiplier lambda(h.n, h.grid.num_faces());
  std::string line;
  int count = 0;
  while (count < h.records && std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FaceId f = -1;
    int i = -1;
    int j = -1;
    if (!(ls >> f >> i >> j) || !h.grid.has_face(i, j) || h.grid.face(i, j) != f) {
      throw FormatError("multiplier file: bad face record");
    }
    lambda.set(f, CoAlgebraElement(read_matrix(ls, h.n)));
    ++count;
  }
  if (count != h.records) throw FormatError("multiplier file: fewer records than announced");
  if (header) *header = h;
  return lambda;
}

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, format_real(value)); }
void Report::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Report::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

void Report::add_table(std::string name, std::vector<std::string> columns,
                       std::vector<std::vector<std::string>> rows) {
  tables_.push_back({std::move(name), std::move(columns), std::move(rows)});
}

std::string Report::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return {};
}

void Report::write(std::ostream& os) const {
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  for (const auto& t : tables_) {
    os << "\n[table " << t.name << "]\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
      os << '\n';
    }
  }
}

}  // namespace lgc
