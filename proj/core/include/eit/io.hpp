#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eit/forward.hpp"
#include "eit/inverse.hpp"
#include "eit/mesh.hpp"
#include "eit/metrics.hpp"
#include "eit/phantom.hpp"

namespace eit::io {

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mesh text format, one record per line:
//   <node count>
//   x y                      (per node)
//   <triangle count>
//   a b c                    (per triangle, 0-based)
//   <electrode count>
//   node                     (per electrode)
void write_mesh(std::ostream& os, const TriMesh& mesh,
                const ElectrodeLayout& layout);
/// Reads a mesh; the electrode angles are recomputed from node positions.
std::pair<TriMesh, ElectrodeLayout> read_mesh(std::istream& is);

// Voltage frames: "j i value" per line, frames separated by "# frame <t>".
void write_frames(std::ostream& os, const std::vector<VoltageFrame>& frames);
/// Frames must list every protocol pair exactly once; the electrode count is
/// inferred from the entry count.
std::vector<VoltageFrame> read_frames(std::istream& is);

// Per-element values: count line, then one value per line.
void write_element_values(std::ostream& os, const Eigen::VectorXd& values);
Eigen::VectorXd read_element_values(std::istream& is);

// Phantom spec (INI):
//   background = 1.0
//   [inclusion0]
//   center = x y
//   axis_a = x y
//   axis_b = x y
//   value = 1.1
void write_phantom(std::ostream& os, const PhantomSpec& spec);
PhantomSpec read_phantom(std::istream& is);

// Iteration diagnostics CSV: iteration,data_residual,step_norm,wall_ms
void write_iterations_csv(std::ostream& os, const ReconResult& result);

// EvalReport CSV: iteration,re,psnr then profile columns if any.
void write_eval_csv(std::ostream& os, const EvalReport& report);

/// 8-bit binary PGM with gray = round(255 (v - lo) / (hi - lo)); outside
/// pixels are written as 0. Returns the (lo, hi) mapping used.
std::pair<double, double> write_pgm(std::ostream& os, const Image& image);
/// Sidecar text for a PGM: "gray_min conductivity", "gray_max conductivity",
/// and the linear map between them.
void write_pgm_sidecar(std::ostream& os, double lo, double hi);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Full-precision decimal text for a double.
std::string format_double(double v);

}  // namespace eit::io
