#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eit/io.hpp"
#include "eit/pipeline.hpp"

namespace eit {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

// strtod so that "inf" is accepted for snr_db.
double to_double(const std::string& field, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (end == begin || *end != '\0' || errno == ERANGE) {
    fail(field, "expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& field, const std::string& text) {
  const double v = to_double(field, text);
  if (!std::isfinite(v) || v != std::floor(v)) {
    fail(field, "expected an integer, got '" + text + "'");
  }
  return static_cast<long long>(v);
}

bool to_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(field, "expected true/false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (ss >> item) {
    if (!item.empty() && item.back() == ',') item.pop_back();
    if (item.empty()) continue;
    out.push_back(to_double(field, item));
  }
  return out;
}

// "x0 y0 x1 y1 samples; ..."
std::vector<ProfileLine> to_profiles(const std::string& field,
                                     const std::string& text) {
  std::vector<ProfileLine> out;
  std::stringstream ss(text);
  std::string chunk;
  while (std::getline(ss, chunk, ';')) {
    const auto v = to_list(field, chunk);
    if (v.empty()) continue;
    if (v.size() != 5) fail(field, "each line needs 'x0 y0 x1 y1 samples'");
    ProfileLine line;
    line.start = Vec2(v[0], v[1]);
    line.end = Vec2(v[2], v[3]);
    line.samples = static_cast<int>(v[4]);
    out.push_back(line);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) fail("mesh.radius", "must be > 0");
  if (inverse_elements < 64) fail("mesh.inverse_elements", "must be >= 64");
  if (forward_elements < inverse_elements) {
    fail("mesh.forward_elements", "must be at least mesh.inverse_elements");
  }
  if (electrodes < 4) fail("electrodes.count", "must be >= 4");
  if (!(current_ma > 0.0) || !std::isfinite(current_ma)) {
    fail("electrodes.current_ma", "must be > 0");
  }
  if (!phantom_file && (phantom_model < 1 || phantom_model > 10)) {
    fail("phantom.model", "must be in 1..10");
  }
  if (phantom_file && !std::filesystem::exists(*phantom_file)) {
    fail("phantom.file", "file not found: " + phantom_file->string());
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) fail("phantom.sigma0", "must be > 0");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    fail("noise.snr_db", "must be a number or inf");
  }
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    fail("solver", e.what());
  }
  if (method == Regularizer::kTikhonov && !(solver.lambda > 0.0)) {
    fail("solver.lambda", "tikhonov needs lambda > 0");
  }
  if (mask_radius < 0.0) fail("solver.mask_radius", "must be >= 0");
  if (resolution < 1) fail("output.resolution", "must be >= 1");
  for (double r : sweep_lambda_over_rho) {
    if (!(r >= 0.0)) fail("sweep.lambda_over_rho", "entries must be >= 0");
  }
  for (double d : sweep_delta) {
    if (!(d > 0.0)) fail("sweep.delta", "entries must be > 0");
  }
}

PipelineConfig parse_config(const std::string& text,
                            const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  PipelineConfig c;
  auto opt = [&](const std::string& key) { return tree.get_optional<std::string>(key); };
  auto path_of = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  if (auto v = opt("mesh.radius")) c.radius = to_double("mesh.radius", *v);
  if (auto v = opt("mesh.forward_elements")) {
    c.forward_elements = static_cast<std::size_t>(to_integer("mesh.forward_elements", *v));
  }
  if (auto v = opt("mesh.inverse_elements")) {
    c.inverse_elements = static_cast<std::size_t>(to_integer("mesh.inverse_elements", *v));
  }
  if (auto v = opt("electrodes.count")) {
    c.electrodes = static_cast<int>(to_integer("electrodes.count", *v));
  }
  if (auto v = opt("electrodes.current_ma")) c.current_ma = to_double("electrodes.current_ma", *v);
  if (auto v = opt("phantom.model")) c.phantom_model = static_cast<int>(to_integer("phantom.model", *v));
  if (auto v = opt("phantom.file"); v && !v->empty()) c.phantom_file = path_of(*v);
  if (auto v = opt("phantom.sigma0")) c.sigma0 = to_double("phantom.sigma0", *v);
  if (auto v = opt("noise.snr_db")) c.snr_db = to_double("noise.snr_db", *v);
  if (auto v = opt("noise.seed")) {
    const long long s = to_integer("noise.seed", *v);
    if (s < 0) fail("noise.seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = opt("solver.method")) {
    try {
      c.method = parse_regularizer(*v);
    } catch (const std::invalid_argument& e) {
      fail("solver.method", e.what());
    }
  }
  if (auto v = opt("solver.lambda")) c.solver.lambda = to_double("solver.lambda", *v);
  if (auto v = opt("solver.rho")) c.solver.rho = to_double("solver.rho", *v);
  if (auto v = opt("solver.delta")) c.solver.delta = to_double("solver.delta", *v);
  if (auto v = opt("solver.max_iters")) {
    c.solver.max_iters = static_cast<int>(to_integer("solver.max_iters", *v));
  }
  if (auto v = opt("solver.tol")) c.solver.tol = to_double("solver.tol", *v);
  if (auto v = opt("solver.lambda_b")) c.solver.lambda_b = to_double("solver.lambda_b", *v);
  if (auto v = opt("solver.preprocess")) c.solver.enable_preprocess = to_bool("solver.preprocess", *v);
  if (auto v = opt("solver.mask_radius")) c.mask_radius = to_double("solver.mask_radius", *v);
  if (auto v = opt("output.dir")) c.output_dir = path_of(*v);
  if (auto v = opt("output.resolution")) {
    c.resolution = static_cast<int>(to_integer("output.resolution", *v));
  }
  if (auto v = opt("output.profiles")) c.profiles = to_profiles("output.profiles", *v);
  if (auto v = opt("sweep.lambda_over_rho")) {
    c.sweep_lambda_over_rho = to_list("sweep.lambda_over_rho", *v);
  }
  if (auto v = opt("sweep.delta")) c.sweep_delta = to_list("sweep.delta", *v);
  if (auto v = opt("sweep.workers")) {
    const long long w = to_integer("sweep.workers", *v);
    if (w < 0) fail("sweep.workers", "must be >= 0");
    c.workers = static_cast<unsigned>(w);
  }

  // Preprocessing needs boundary elements; they are filled in from the mesh
  // at run time, so validate the rest with a placeholder.
  PipelineConfig check = c;
  if (check.solver.enable_preprocess) check.solver.boundary_elements = {0};
  check.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const io::FormatError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text, path.parent_path());
}

std::string format_config(const PipelineConfig& c) {
  using io::format_double;
  std::ostringstream os;
  os << "[mesh]\n"
     << "radius = " << format_double(c.radius) << '\n'
     << "forward_elements = " << c.forward_elements << '\n'
     << "inverse_elements = " << c.inverse_elements << '\n'
     << "\n[electrodes]\n"
     << "count = " << c.electrodes << '\n'
     << "current_ma = " << format_double(c.current_ma) << '\n'
     << "\n[phantom]\n"
     << "model = " << c.phantom_model << '\n';
  if (c.phantom_file) os << "file = " << c.phantom_file->string() << '\n';
  os << "sigma0 = " << format_double(c.sigma0) << '\n'
     << "\n[noise]\n"
     << "snr_db = " << (std::isinf(c.snr_db) ? std::string("inf") : format_double(c.snr_db)) << '\n'
     << "seed = " << c.seed << '\n'
     << "\n[solver]\n"
     << "method = " << to_string(c.method) << '\n'
     << "lambda = " << format_double(c.solver.lambda) << '\n'
     << "rho = " << format_double(c.solver.rho) << '\n'
     << "delta = " << format_double(c.solver.delta) << '\n'
     << "max_iters = " << c.solver.max_iters << '\n'
     << "tol = " << format_double(c.solver.tol) << '\n'
     << "lambda_b = " << format_double(c.solver.lambda_b) << '\n'
     << "preprocess = " << (c.solver.enable_preprocess ? "true" : "false") << '\n'
     << "mask_radius = " << format_double(c.mask_radius) << '\n'
     << "\n[output]\n"
     << "dir = " << c.output_dir.string() << '\n'
     << "resolution = " << c.resolution << '\n';
  if (!c.profiles.empty()) {
    os << "profiles = ";
    for (std::size_t i = 0; i < c.profiles.size(); ++i) {
      const auto& l = c.profiles[i];
      if (i) os << "; ";
      os << format_double(l.start.x()) << ' ' << format_double(l.start.y()) << ' '
         << format_double(l.end.x()) << ' ' << format_double(l.end.y()) << ' '
         << l.samples;
    }
    os << '\n';
  }
  if (!c.sweep_lambda_over_rho.empty() || !c.sweep_delta.empty()) {
    os << "\n[sweep]\nlambda_over_rho =";
    for (double v : c.sweep_lambda_over_rho) os << ' ' << format_double(v);
    os << "\ndelta =";
    for (double v : c.sweep_delta) os << ' ' << format_double(v);
    os << "\nworkers = " << c.workers << '\n';
  }
  return os.str();
}

}  // namespace eit
