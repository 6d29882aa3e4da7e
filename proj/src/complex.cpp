#include "lgc/complex.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lgc {

VertexId GridLayout::vertex(int i, int j) const {
  if (!has_vertex(i, j)) {
    throw std::invalid_argument("grid vertex (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is outside the window");
  }
  return j * (width + 1) + i;
}

FaceId GridLayout::face(int i, int j) const {
  if (!has_face(i, j)) {
    throw std::invalid_argument("grid face (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is outside the window");
  }
  return j * width + i;
}

CellComplex::CellComplex(int num_vertices, std::vector<std::vector<VertexId>> adherence,
                         std::vector<VertexId> truncated)
    : num_vertices_(num_vertices),
      adherence_(std::move(adherence)),
      star_(num_vertices > 0 ? num_vertices : 0),
      truncated_(num_vertices > 0 ? num_vertices : 0, false) {
  if (num_vertices < 0) throw std::invalid_argument("CellComplex: negative vertex count");
  for (FaceId f = 0; f < num_faces(); ++f) {
    auto& adh = adherence_[f];
    if (adh.empty()) {
      throw std::invalid_argument("CellComplex: face " + std::to_string(f) +
                                  " has no adherent vertex");
    }
    std::vector<VertexId> sorted = adh;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("CellComplex: face " + std::to_string(f) +
                                  " lists a vertex twice");
    }
    for (VertexId v : adh) {
      if (v < 0 || v >= num_vertices) {
        throw std::invalid_argument("CellComplex: face " + std::to_string(f) +
                                    " references unknown vertex " + std::to_string(v));
      }
      star_[v].push_back(f);
    }
  }
  for (VertexId v : truncated) {
    if (v < 0 || v >= num_vertices) throw std::invalid_argument("CellComplex: bad truncated id");
    truncated_[v] = true;
  }
}

std::span<const VertexId> CellComplex::adherence(FaceId f) const {
  if (f < 0 || f >= num_faces()) {
    throw std::invalid_argument("unknown face id " + std::to_string(f));
  }
  return adherence_[f];
}

std::span<const FaceId> CellComplex::star(VertexId v) const {
  if (v < 0 || v >= num_vertices_) {
    throw std::invalid_argument("unknown vertex id " + std::to_string(v));
  }
  return star_[v];
}

bool CellComplex::star_truncated(VertexId v) const {
  if (v < 0 || v >= num_vertices_) {
    throw std::invalid_argument("unknown vertex id " + std::to_string(v));
  }
  return truncated_[v];
}

int CellComplex::slot(FaceId f, VertexId v) const {
  const auto adh = adherence(f);
  const auto it = std::find(adh.begin(), adh.end(), v);
  return it == adh.end() ? -1 : static_cast<int>(it - adh.begin());
}

void CellComplex::write(std::ostream& os) const {
  os << "complex " << num_vertices_ << ' ' << num_faces() << '\n';
  for (FaceId f = 0; f < num_faces(); ++f) {
    os << "face " << f;
    for (VertexId v : adherence_[f]) os << ' ' << v;
    os << '\n';
  }
  os << "truncated";
  for (VertexId v = 0; v < num_vertices_; ++v)
    if (truncated_[v]) os << ' ' << v;
  os << '\n';
}

CellComplex CellComplex::read(std::istream& is) {
  std::string line;
  std::string tag;
  int nv = 0;
  int nf = 0;
  if (!std::getline(is, line)) throw std::invalid_argument("complex file: empty");
  {
    std::istringstream hs(line);
    if (!(hs >> tag >> nv >> nf) || tag != "complex") {
      throw std::invalid_argument("complex file: bad header");
    }
  }
  std::vector<std::vector<VertexId>> adherence(nf);
  std::vector<VertexId> truncated;
  std::vector<bool> seen(nf, false);
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ls >> tag;
    if (tag == "face") {
      FaceId f = -1;
      if (!(ls >> f) || f < 0 || f >= nf || seen[f]) {
        throw std::invalid_argument("complex file: bad face record");
      }
      seen[f] = true;
      VertexId v;
      while (ls >> v) adherence[f].push_back(v);
    } else if (tag == "truncated") {
      VertexId v;
      while (ls >> v) truncated.push_back(v);
    } else {
      throw std::invalid_argument("complex file: unknown record '" + tag + "'");
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::invalid_argument("complex file: missing face records");
  }
  return CellComplex(nv, std::move(adherence), std::move(truncated));
}

CellComplex build_triangulated_grid(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("build_triangulated_grid: dimensions must be positive");
  }
  const GridLayout layout{width, height};
  std::vector<std::vector<VertexId>> adherence(layout.num_faces());
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i)
      adherence[layout.face(i, j)] = {layout.vertex(i, j), layout.vertex(i + 1, j),
                                      layout.vertex(i, j + 1)};
  std::vector<VertexId> truncated;
  for (int j = 0; j <= height; ++j)
    for (int i = 0; i <= width; ++i)
      if (i == 0 || j == 0 || i == width || j == height) truncated.push_back(layout.vertex(i, j));
  CellComplex complex(layout.num_vertices(), std::move(adherence), std::move(truncated));
  complex.grid_ = layout;
  return complex;
}

FaceSet::FaceSet(const CellComplex& complex, std::vector<FaceId> faces) : faces_(std::move(faces)) {
  std::sort(faces_.begin(), faces_.end());
  faces_.erase(std::unique(faces_.begin(), faces_.end()), faces_.end());
  for (FaceId f : faces_) {
    const auto adh = complex.adherence(f);  // throws on unknown ids
    adherent_.insert(adherent_.end(), adh.begin(), adh.end());
  }
  std::sort(adherent_.begin(), adherent_.end());
  adherent_.erase(std::unique(adherent_.begin(), adherent_.end()), adherent_.end());
}

FaceSet FaceSet::all(const CellComplex& complex) {
  std::vector<FaceId> faces(complex.num_faces());
  for (FaceId f = 0; f < complex.num_faces(); ++f) faces[f] = f;
  return FaceSet(complex, std::move(faces));
}

bool FaceSet::contains(FaceId f) const {
  return std::binary_search(faces_.begin(), faces_.end(), f);
}

bool VertexClass::is_interior(VertexId v) const {
  return std::binary_search(interior.begin(), interior.end(), v);
}

bool VertexClass::is_frontier(VertexId v) const {
  return std::binary_search(frontier.begin(), frontier.end(), v);
}

VertexClass classify_vertices(const CellComplex& complex, const FaceSet& faces) {
  VertexClass out;
  for (VertexId v : faces.adherent_vertices()) {
    const auto star = complex.star(v);
    const bool inside = !complex.star_truncated(v) &&
                        std::all_of(star.begin(), star.end(),
                                    [&](FaceId f) { return faces.contains(f); });
    (inside ? out.interior : out.frontier).push_back(v);
  }
  return out;
}

}  // namespace lgc
