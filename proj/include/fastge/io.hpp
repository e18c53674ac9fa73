#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/merge.hpp"
#include "fastge/metrics.hpp"

namespace fastge::io {

namespace detail {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] inline void fail(const std::string& what, std::size_t line, const std::string& msg) {
  throw InputError(what + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view tok, const std::string& what, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(what, line, "cannot parse '" + std::string(tok) + "'");
  }
  return value;
}

/// Calls f(tokens, line_number) for every non-blank, non-comment line.
/// Comment lines are passed to on_comment when given.
template <class F, class C>
void for_each_record(std::istream& in, F&& f, C&& on_comment) {
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    auto toks = split(line);
    if (toks.empty()) continue;
    if (toks[0].front() == '#') {
      on_comment(toks, no);
      continue;
    }
    // Trailing "# ..." is a comment too.
    const auto hash = std::find_if(toks.begin(), toks.end(), [](auto t) { return t.front() == '#'; });
    toks.erase(hash, toks.end());
    f(toks, no);
  }
}

template <class F>
void for_each_record(std::istream& in, F&& f) {
  for_each_record(in, std::forward<F>(f), [](const auto&, std::size_t) {});
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Edge lists: optional "# vertices N" header, then one "u v w" per line.
// ---------------------------------------------------------------------------

inline WeightedGraph read_edge_list(std::istream& in, const std::string& name = "edge list") {
  std::vector<Edge> edges;
  Index declared = -1;
  Index max_id = -1;
  detail::for_each_record(
      in,
      [&](const auto& t, std::size_t no) {
        if (t.size() != 3) detail::fail(name, no, "expected 'u v w'");
        const auto u = detail::parse_number<Index>(t[0], name, no);
        const auto v = detail::parse_number<Index>(t[1], name, no);
        const auto w = detail::parse_number<double>(t[2], name, no);
        if (u < 0 || v < 0) detail::fail(name, no, "negative vertex id");
        max_id = std::max({max_id, u, v});
        edges.push_back({u, v, w});
      },
      [&](const auto& t, std::size_t no) {
        if (t.size() == 3 && t[0] == "#" && t[1] == "vertices") {
          declared = detail::parse_number<Index>(t[2], name, no);
        }
      });
  const Index n = declared >= 0 ? declared : max_id + 1;
  if (max_id >= n) {
    throw InputError(name + ": vertex " + std::to_string(max_id) + " exceeds declared count " +
                     std::to_string(n));
  }
  return WeightedGraph(n, std::move(edges));
}

inline void write_edge_list(std::ostream& out, const WeightedGraph& g) {
  out << "# vertices " << g.num_vertices() << '\n';
  g.for_each_edge([&](Index u, Index v, double w) {
    out << u << ' ' << v << ' ' << detail::format_double(w) << '\n';
  });
}

inline WeightedGraph read_edge_list(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_edge_list(in, path.string());
}

inline void write_edge_list(const std::filesystem::path& path, const WeightedGraph& g) {
  auto out = detail::open_out(path);
  write_edge_list(out, g);
}

// ---------------------------------------------------------------------------
// Constraints: "ML u v [w]" or "CL u v [w]".
// ---------------------------------------------------------------------------

inline ConstraintSet read_constraints(std::istream& in, const std::string& name = "constraints") {
  ConstraintSet out;
  detail::for_each_record(in, [&](const auto& t, std::size_t no) {
    if (t.size() != 3 && t.size() != 4) detail::fail(name, no, "expected 'ML|CL u v [w]'");
    Constraint c;
    c.u = detail::parse_number<Index>(t[1], name, no);
    c.v = detail::parse_number<Index>(t[2], name, no);
    if (t.size() == 4) c.weight = detail::parse_number<double>(t[3], name, no);
    if (t[0] == "ML") {
      out.ml.push_back(c);
    } else if (t[0] == "CL") {
      out.cl.push_back(c);
    } else {
      detail::fail(name, no, "unknown constraint kind '" + std::string(t[0]) + "'");
    }
  });
  return out;
}

inline void write_constraints(std::ostream& out, const ConstraintSet& c) {
  auto emit = [&](const char* kind, const Constraint& k) {
    out << kind << ' ' << k.u << ' ' << k.v;
    if (k.weight) out << ' ' << detail::format_double(*k.weight);
    out << '\n';
  };
  for (const auto& k : c.ml) emit("ML", k);
  for (const auto& k : c.cl) emit("CL", k);
}

inline ConstraintSet read_constraints(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_constraints(in, path.string());
}

inline void write_constraints(const std::filesystem::path& path, const ConstraintSet& c) {
  auto out = detail::open_out(path);
  write_constraints(out, c);
}

// ---------------------------------------------------------------------------
// Labels: one integer per line.
// ---------------------------------------------------------------------------

inline Labels read_labels(std::istream& in, const std::string& name = "labels") {
  Labels out;
  detail::for_each_record(in, [&](const auto& t, std::size_t no) {
    if (t.size() != 1) detail::fail(name, no, "expected one label per line");
    out.push_back(detail::parse_number<Index>(t[0], name, no));
  });
  return out;
}

inline void write_labels(std::ostream& out, std::span<const Index> labels) {
  for (Index l : labels) out << l << '\n';
}

inline Labels read_labels(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_labels(in, path.string());
}

inline void write_labels(const std::filesystem::path& path, std::span<const Index> labels) {
  auto out = detail::open_out(path);
  write_labels(out, labels);
}

// ---------------------------------------------------------------------------
// Point clouds: "x y label" per line.
// ---------------------------------------------------------------------------

struct PointCloud {
  Matrix points;
  Labels labels;
};

inline PointCloud read_point_cloud(std::istream& in, const std::string& name = "point cloud") {
  std::vector<double> xs, ys;
  PointCloud out;
  detail::for_each_record(in, [&](const auto& t, std::size_t no) {
    if (t.size() != 3) detail::fail(name, no, "expected 'x y label'");
    xs.push_back(detail::parse_number<double>(t[0], name, no));
    ys.push_back(detail::parse_number<double>(t[1], name, no));
    out.labels.push_back(detail::parse_number<Index>(t[2], name, no));
  });
  out.points.resize(static_cast<Index>(xs.size()), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.points(static_cast<Index>(i), 0) = xs[i];
    out.points(static_cast<Index>(i), 1) = ys[i];
  }
  return out;
}

inline void write_point_cloud(std::ostream& out, const Matrix& points, std::span<const Index> labels) {
  fastge::detail::check_size(points.rows(), static_cast<Index>(labels.size()), "write_point_cloud");
  for (Index i = 0; i < points.rows(); ++i) {
    out << detail::format_double(points(i, 0)) << ' ' << detail::format_double(points(i, 1)) << ' '
        << labels[i] << '\n';
  }
}

inline PointCloud read_point_cloud(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_point_cloud(in, path.string());
}

inline void write_point_cloud(const std::filesystem::path& path, const Matrix& points,
                              std::span<const Index> labels) {
  auto out = detail::open_out(path);
  write_point_cloud(out, points, labels);
}

// ---------------------------------------------------------------------------
// Grayscale PGM images (P2 plain and P5 raw).
// ---------------------------------------------------------------------------

struct GrayImage {
  Index rows = 0;
  Index cols = 0;
  int maxval = 255;
  /// Row-major gray levels in [0, maxval].
  std::vector<std::uint16_t> pixels;

  Index size() const noexcept { return rows * cols; }
  std::uint16_t at(Index r, Index c) const { return pixels[r * cols + c]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline long pgm_int(std::istream& in, const char* field) {
  const std::string tok = pgm_token(in);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw InputError(std::string("pgm: bad ") + field + " '" + tok + "'");
  }
  return v;
}

}  // namespace detail

inline GrayImage read_pgm(std::istream& in) {
  const std::string magic = detail::pgm_token(in);
  if (magic != "P2" && magic != "P5") {
    throw InputError("unsupported image format '" + magic + "' (expected PGM P2 or P5)");
  }
  GrayImage img;
  img.cols = detail::pgm_int(in, "width");
  img.rows = detail::pgm_int(in, "height");
  const long maxval = detail::pgm_int(in, "maxval");
  if (img.cols <= 0 || img.rows <= 0) throw InputError("pgm: empty image");
  if (maxval < 1 || maxval > 65535) throw InputError("pgm: maxval out of range");
  img.maxval = static_cast<int>(maxval);
  img.pixels.resize(static_cast<std::size_t>(img.size()));
  if (magic == "P2") {
    for (auto& p : img.pixels) {
      const long v = detail::pgm_int(in, "pixel");
      if (v < 0 || v > maxval) throw InputError("pgm: pixel exceeds maxval");
      p = static_cast<std::uint16_t>(v);
    }
    return img;
  }
  const int bytes = maxval > 255 ? 2 : 1;
  for (auto& p : img.pixels) {
    unsigned char b[2] = {0, 0};
    if (!in.read(reinterpret_cast<char*>(b), bytes)) throw InputError("pgm: truncated pixel data");
    const unsigned v = bytes == 2 ? (unsigned{b[0]} << 8) | b[1] : b[0];
    if (v > static_cast<unsigned>(maxval)) throw InputError("pgm: pixel exceeds maxval");
    p = static_cast<std::uint16_t>(v);
  }
  return img;
}

inline void write_pgm(std::ostream& out, const GrayImage& img, bool binary = true) {
  if (static_cast<Index>(img.pixels.size()) != img.size()) {
    throw DimensionError("write_pgm: pixel count does not match dimensions");
  }
  out << (binary ? "P5" : "P2") << '\n' << img.cols << ' ' << img.rows << '\n' << img.maxval << '\n';
  if (!binary) {
    for (Index r = 0; r < img.rows; ++r) {
      for (Index c = 0; c < img.cols; ++c) out << (c ? " " : "") << img.at(r, c);
      out << '\n';
    }
    return;
  }
  for (auto p : img.pixels) {
    if (img.maxval > 255) out.put(static_cast<char>(p >> 8));
    out.put(static_cast<char>(p & 0xff));
  }
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = detail::open_in(path, true);
  return read_pgm(in);
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img, bool binary = true) {
  auto out = detail::open_out(path, true);
  write_pgm(out, img, binary);
}

/// Labels rendered as gray levels spread evenly over [0, 255].
inline GrayImage label_image(std::span<const Index> labels, Index rows, Index cols) {
  if (static_cast<Index>(labels.size()) != rows * cols) {
    throw DimensionError("label_image: " + std::to_string(labels.size()) + " labels for a " +
                         std::to_string(rows) + "x" + std::to_string(cols) + " image");
  }
  const Index k = cluster_count(labels);
  GrayImage img;
  img.rows = rows;
  img.cols = cols;
  img.maxval = 255;
  img.pixels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint16_t>(k > 1 ? labels[i] * 255 / (k - 1) : 0);
  }
  return img;
}

/// One vertex per pixel (id = row * cols + col), edges between grid neighbours
/// weighted exp(-(g_i - g_j)^2 / (2 sigma^2)) with gray levels scaled to [0, 1].
inline WeightedGraph image_to_graph(const GrayImage& img, double sigma, int connectivity = 4) {
  if (img.size() == 0) throw InputError("image_to_graph: empty image");
  if (!(sigma > 0.0)) throw InputError("image_to_graph: sigma must be positive");
  if (connectivity != 4 && connectivity != 8) {
    throw InputError("image_to_graph: connectivity must be 4 or 8");
  }
  const double scale = 1.0 / img.maxval;
  const double denom = 2.0 * sigma * sigma;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(img.size()) * (connectivity == 4 ? 2 : 4));
  auto link = [&](Index r0, Index c0, Index r1, Index c1) {
    if (r1 < 0 || r1 >= img.rows || c1 < 0 || c1 >= img.cols) return;
    const double diff = (img.at(r0, c0) - img.at(r1, c1)) * scale;
    edges.push_back({r0 * img.cols + c0, r1 * img.cols + c1,
                     std::max(std::exp(-diff * diff / denom), kMinEdgeWeight)});
  };
  for (Index r = 0; r < img.rows; ++r) {
    for (Index c = 0; c < img.cols; ++c) {
      link(r, c, r, c + 1);
      link(r, c, r + 1, c);
      if (connectivity == 8) {
        link(r, c, r + 1, c + 1);
        link(r, c, r + 1, c - 1);
      }
    }
  }
  return WeightedGraph(img.size(), std::move(edges));
}

// ---------------------------------------------------------------------------
// Scribbles: "row col label" per line, one labelled pixel each.
// ---------------------------------------------------------------------------

struct Scribble {
  Index row = 0;
  Index col = 0;
  Index label = 0;
  friend bool operator==(const Scribble&, const Scribble&) = default;
};

inline std::vector<Scribble> read_scribbles(std::istream& in, const std::string& name = "scribbles") {
  std::vector<Scribble> out;
  detail::for_each_record(in, [&](const auto& t, std::size_t no) {
    if (t.size() != 3) detail::fail(name, no, "expected 'row col label'");
    out.push_back({detail::parse_number<Index>(t[0], name, no),
                   detail::parse_number<Index>(t[1], name, no),
                   detail::parse_number<Index>(t[2], name, no)});
  });
  return out;
}

inline void write_scribbles(std::ostream& out, std::span<const Scribble> s) {
  for (const auto& x : s) out << x.row << ' ' << x.col << ' ' << x.label << '\n';
}

inline std::vector<Scribble> read_scribbles(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_scribbles(in, path.string());
}

/// Every pair of scribbled pixels becomes a constraint: must-link when the
/// scribble labels agree, cannot-link otherwise.
inline ConstraintSet scribble_constraints(std::span<const Scribble> s, Index rows, Index cols) {
  std::vector<Index> ids;
  for (const auto& x : s) {
    if (x.row < 0 || x.row >= rows || x.col < 0 || x.col >= cols) {
      throw InputError("scribble at (" + std::to_string(x.row) + "," + std::to_string(x.col) +
                       ") lies outside the image");
    }
    ids.push_back(x.row * cols + x.col);
  }
  ConstraintSet out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (ids[i] == ids[j]) {
        if (s[i].label != s[j].label) {
          throw InputError("pixel scribbled with two different labels");
        }
        continue;
      }
      (s[i].label == s[j].label ? out.ml : out.cl).push_back({ids[i], ids[j], std::nullopt});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Giant-component extraction.
// ---------------------------------------------------------------------------

struct ComponentExtraction {
  WeightedGraph graph;
  /// original id of each vertex of `graph`, increasing.
  std::vector<Index> original;
  Index dropped_vertices = 0;
};

/// Largest connected component (ties: the one holding the smallest vertex id).
inline ComponentExtraction largest_component(const WeightedGraph& g) {
  Index count = 0;
  const auto comp = connected_components(g, &count);
  std::vector<Index> sizes(static_cast<std::size_t>(count), 0);
  for (Index c : comp) ++sizes[c];
  const auto best = static_cast<Index>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  ComponentExtraction out;
  for (Index v = 0; v < g.num_vertices(); ++v) {
    if (comp[v] == best) out.original.push_back(v);
  }
  out.graph = induced_subgraph(g, out.original);
  out.dropped_vertices = g.num_vertices() - static_cast<Index>(out.original.size());
  return out;
}

/// Re-indexes constraints onto an extracted component, dropping those that
/// touch removed vertices. Returns the number dropped through `dropped`.
inline ConstraintSet restrict_constraints(const ConstraintSet& c, std::span<const Index> original,
                                          Index n_original, Index* dropped = nullptr) {
  std::vector<Index> local(static_cast<std::size_t>(n_original), -1);
  for (std::size_t i = 0; i < original.size(); ++i) local[original[i]] = static_cast<Index>(i);
  ConstraintSet out;
  Index lost = 0;
  auto move = [&](const std::vector<Constraint>& from, std::vector<Constraint>& to) {
    for (const auto& k : from) {
      if (k.u < 0 || k.u >= n_original || k.v < 0 || k.v >= n_original) {
        throw InputError("constraint (" + std::to_string(k.u) + "," + std::to_string(k.v) +
                         ") out of vertex range");
      }
      if (local[k.u] < 0 || local[k.v] < 0) {
        ++lost;
        continue;
      }
      to.push_back({local[k.u], local[k.v], k.weight});
    }
  };
  move(c.ml, out.ml);
  move(c.cl, out.cl);
  if (dropped) *dropped = lost;
  return out;
}

/// "new_id original_id" per line.
inline void write_mapping(std::ostream& out, std::span<const Index> original) {
  for (std::size_t i = 0; i < original.size(); ++i) out << i << ' ' << original[i] << '\n';
}

/// Lifts labels on an extracted component back to the original ids; removed
/// vertices get `fill`.
inline Labels expand_labels(std::span<const Index> labels, std::span<const Index> original,
                            Index n_original, Index fill = -1) {
  Labels out(static_cast<std::size_t>(n_original), fill);
  for (std::size_t i = 0; i < original.size(); ++i) out[original[i]] = labels[i];
  return out;
}

}  // namespace fastge::io
