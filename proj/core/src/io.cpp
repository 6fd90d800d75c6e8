#include "eit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace eit::io {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// Next line that is neither blank nor a comment.
bool next_record(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

template <typename T>
T parse_count(std::istream& is, const char* what) {
  std::string line;
  if (!next_record(is, line)) {
    throw FormatError(std::string("missing ") + what + " count");
  }
  std::istringstream ls(line);
  long long v = -1;
  if (!(ls >> v) || v < 0) {
    throw FormatError(std::string("bad ") + what + " count: '" + line + "'");
  }
  return static_cast<T>(v);
}

Vec2 parse_vec2(const std::string& text, const std::string& key) {
  std::istringstream ls(text);
  double x = 0.0;
  double y = 0.0;
  if (!(ls >> x >> y)) {
    throw FormatError("phantom key '" + key + "' needs two numbers, got '" +
                      text + "'");
  }
  return {x, y};
}

}  // namespace

void write_mesh(std::ostream& os, const TriMesh& mesh,
                const ElectrodeLayout& layout) {
  os << mesh.num_nodes() << '\n';
  for (const auto& p : mesh.nodes()) {
    os << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
  }
  os << mesh.num_elements() << '\n';
  for (const auto& t : mesh.triangles()) {
    os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  os << layout.node_ids.size() << '\n';
  for (int n : layout.node_ids) os << n << '\n';
}

std::pair<TriMesh, ElectrodeLayout> read_mesh(std::istream& is) {
  std::string line;
  const auto n_nodes = parse_count<std::size_t>(is, "node");
  std::vector<Vec2> nodes(n_nodes);
  for (auto& p : nodes) {
    if (!next_record(is, line)) throw FormatError("mesh: truncated node list");
    std::istringstream ls(line);
    if (!(ls >> p.x() >> p.y())) throw FormatError("mesh: bad node '" + line + "'");
  }
  const auto n_tri = parse_count<std::size_t>(is, "triangle");
  std::vector<Triangle> tris(n_tri);
  for (auto& t : tris) {
    if (!next_record(is, line)) throw FormatError("mesh: truncated triangle list");
    std::istringstream ls(line);
    if (!(ls >> t[0] >> t[1] >> t[2])) {
      throw FormatError("mesh: bad triangle '" + line + "'");
    }
  }
  const auto n_el = parse_count<std::size_t>(is, "electrode");
  ElectrodeLayout layout;
  for (std::size_t e = 0; e < n_el; ++e) {
    if (!next_record(is, line)) throw FormatError("mesh: truncated electrode list");
    std::istringstream ls(line);
    int node = -1;
    if (!(ls >> node) || node < 0 || static_cast<std::size_t>(node) >= n_nodes) {
      throw FormatError("mesh: bad electrode node '" + line + "'");
    }
    layout.node_ids.push_back(node);
  }
  TriMesh mesh;
  try {
    mesh = TriMesh::from_geometry(std::move(nodes), std::move(tris));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("mesh: ") + e.what());
  }
  for (int node : layout.node_ids) {
    const Vec2& p = mesh.nodes()[node];
    double a = std::atan2(p.y(), p.x());
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    layout.angles.push_back(a);
  }
  return {std::move(mesh), std::move(layout)};
}

void write_frames(std::ostream& os, const std::vector<VoltageFrame>& frames) {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    f.validate();
    os << "# frame " << t << '\n';
    const auto pairs = neighbouring_protocol(f.electrodes);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      os << pairs[p].first << ' ' << pairs[p].second << ' '
         << format_double(f.data[static_cast<Eigen::Index>(p)]) << '\n';
    }
  }
}

std::vector<VoltageFrame> read_frames(std::istream& is) {
  struct Entry {
    int drive;
    int measure;
    double value;
  };
  std::vector<std::vector<Entry>> raw;
  std::string line;
  bool open = false;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (line.find("frame", first) != std::string::npos) {
        raw.emplace_back();
        open = true;
      }
      continue;
    }
    if (!open) {
      raw.emplace_back();
      open = true;
    }
    std::istringstream ls(line);
    Entry e{};
    if (!(ls >> e.drive >> e.measure >> e.value)) {
      throw FormatError("voltage file: bad record '" + line + "'");
    }
    raw.back().push_back(e);
  }
  std::vector<VoltageFrame> frames;
  for (const auto& entries : raw) {
    if (entries.empty()) continue;
    // Solve E(E-3) = n for E.
    const double n = static_cast<double>(entries.size());
    const int e = static_cast<int>(std::lround((3.0 + std::sqrt(9.0 + 4.0 * n)) / 2.0));
    if (e < 4 || static_cast<std::size_t>(e * (e - 3)) != entries.size()) {
      throw FormatError("voltage frame with " + std::to_string(entries.size()) +
                        " entries is not a full neighbouring-protocol scan");
    }
    VoltageFrame frame;
    frame.electrodes = e;
    frame.data = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(entries.size()),
                                           std::numeric_limits<double>::quiet_NaN());
    for (const auto& entry : entries) {
      const int p = protocol_index(e, entry.drive, entry.measure);
      if (p < 0) {
        throw FormatError("voltage frame: pair (" + std::to_string(entry.drive) +
                          ", " + std::to_string(entry.measure) +
                          ") is not in the protocol");
      }
      if (!std::isnan(frame.data[p])) {
        throw FormatError("voltage frame: duplicate pair (" +
                          std::to_string(entry.drive) + ", " +
                          std::to_string(entry.measure) + ")");
      }
      frame.data[p] = entry.value;
    }
    frames.push_back(std::move(frame));
  }
  if (frames.empty()) throw FormatError("voltage file holds no frames");
  return frames;
}

void write_element_values(std::ostream& os, const Eigen::VectorXd& values) {
  os << values.size() << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    os << format_double(values[i]) << '\n';
  }
}

Eigen::VectorXd read_element_values(std::istream& is) {
  const auto n = parse_count<Eigen::Index>(is, "element value");
  Eigen::VectorXd v(n);
  std::string line;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!next_record(is, line)) throw FormatError("element values: truncated");
    std::istringstream ls(line);
    if (!(ls >> v[i])) throw FormatError("element values: bad value '" + line + "'");
  }
  return v;
}

void write_phantom(std::ostream& os, const PhantomSpec& spec) {
  os << "background = " << format_double(spec.background) << '\n';
  for (std::size_t i = 0; i < spec.inclusions.size(); ++i) {
    const auto& inc = spec.inclusions[i];
    os << "\n[inclusion" << i << "]\n";
    os << "center = " << format_double(inc.center.x()) << ' '
       << format_double(inc.center.y()) << '\n';
    os << "axis_a = " << format_double(inc.axis_a.x()) << ' '
       << format_double(inc.axis_a.y()) << '\n';
    os << "axis_b = " << format_double(inc.axis_b.x()) << ' '
       << format_double(inc.axis_b.y()) << '\n';
    os << "value = " << format_double(inc.value) << '\n';
  }
}

PhantomSpec read_phantom(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("phantom: ") + e.what());
  }
  PhantomSpec spec;
  try {
    spec.background = tree.get<double>("background");
    // Sections named inclusion<N>, taken in numeric order.
    std::vector<std::pair<int, const pt::ptree*>> sections;
    for (const auto& [name, child] : tree) {
      if (name.rfind("inclusion", 0) != 0) continue;
      sections.emplace_back(std::stoi(name.substr(9)), &child);
    }
    std::sort(sections.begin(), sections.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [index, child] : sections) {
      EllipseInclusion inc;
      inc.center = parse_vec2(child->get<std::string>("center"), "center");
      inc.axis_a = parse_vec2(child->get<std::string>("axis_a"), "axis_a");
      inc.axis_b = parse_vec2(child->get<std::string>("axis_b"), "axis_b");
      inc.value = child->get<double>("value");
      spec.inclusions.push_back(inc);
    }
  } catch (const pt::ptree_error& e) {
    throw FormatError(std::string("phantom: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("phantom: ") + e.what());
  }
  return spec;
}

void write_iterations_csv(std::ostream& os, const ReconResult& result) {
  os << "iteration,data_residual,step_norm,wall_ms\n";
  for (const auto& d : result.diagnostics) {
    os << d.iteration << ',' << format_double(d.data_residual) << ','
       << format_double(d.step_norm) << ',' << format_double(d.wall_ms) << '\n';
  }
}

void write_eval_csv(std::ostream& os, const EvalReport& report) {
  os << "iteration,re,psnr";
  const std::size_t rows = report.re_per_iter.size();
  os << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    os << i + 1 << ',' << format_double(report.re_per_iter[i]) << ',';
    if (i < report.psnr_per_iter.size()) {
      const double v = report.psnr_per_iter[i];
      os << (std::isinf(v) ? std::string("inf") : format_double(v));
    }
    os << '\n';
  }
}

std::pair<double, double> write_pgm(std::ostream& os, const Image& image) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : image.pixels) {
    if (!Image::in_domain(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::string row(static_cast<std::size_t>(image.width), '\0');
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const double v = image.at(r, c);
      const long g = Image::in_domain(v) ? std::lround(255.0 * (v - lo) / span) : 0;
      row[static_cast<std::size_t>(c)] = static_cast<char>(std::clamp(g, 0L, 255L));
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  return {lo, hi};
}

void write_pgm_sidecar(std::ostream& os, double lo, double hi) {
  os << "# conductivity (S/m) = gray_min_value + gray / 255 * (gray_max_value - "
        "gray_min_value); gray 0 also marks pixels outside the domain\n";
  os << "gray_min_value " << format_double(lo) << '\n';
  os << "gray_max_value " << format_double(hi) << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

}  // namespace eit::io
