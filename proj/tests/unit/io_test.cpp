#include <sstream>

#include <gtest/gtest.h>

#include "eit/io.hpp"

namespace eit {
namespace {

TEST(MeshIo, RoundTrip) {
  const TriMesh mesh = generate_disk_mesh(0.1, 1024);
  const auto layout = place_electrodes(mesh, 16);
  std::stringstream ss;
  io::write_mesh(ss, mesh, layout);
  const auto [back, back_layout] = io::read_mesh(ss);
  ASSERT_EQ(back.num_nodes(), mesh.num_nodes());
  ASSERT_EQ(back.num_elements(), mesh.num_elements());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) EXPECT_EQ(back.nodes()[i], mesh.nodes()[i]);
  EXPECT_EQ(back.triangles(), mesh.triangles());
  EXPECT_EQ(back_layout.node_ids, layout.node_ids);
  for (int e = 0; e < 16; ++e) EXPECT_NEAR(back_layout.angles[e], layout.angles[e], 1e-12);
}

TEST(MeshIo, RejectsMalformedInput) {
  std::istringstream truncated("3\n0 0\n1 0\n");
  EXPECT_THROW(io::read_mesh(truncated), io::FormatError);
  std::istringstream bad_node("3\n0 0\n1 zero\n0 1\n1\n0 1 2\n0\n");
  EXPECT_THROW(io::read_mesh(bad_node), io::FormatError);
  std::istringstream bad_index("3\n0 0\n1 0\n0 1\n1\n0 1 7\n0\n");
  EXPECT_THROW(io::read_mesh(bad_index), io::FormatError);
  std::istringstream bad_electrode("3\n0 0\n1 0\n0 1\n1\n0 1 2\n1\n5\n");
  EXPECT_THROW(io::read_mesh(bad_electrode), io::FormatError);
}

TEST(FrameIo, MultiFrameRoundTrip) {
  std::vector<VoltageFrame> frames(3);
  for (int t = 0; t < 3; ++t) {
    frames[t].electrodes = 16;
    frames[t].data = Eigen::VectorXd::LinSpaced(208, -1.0, 1.0) * (t + 1) + Eigen::VectorXd::Constant(208, 1e-17);
  }
  std::stringstream ss;
  io::write_frames(ss, frames);
  const auto back = io::read_frames(ss);
  ASSERT_EQ(back.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(back[t].electrodes, 16);
    EXPECT_EQ(back[t].data, frames[t].data);
  }
}

TEST(FrameIo, AnyOrderWithinFrame) {
  VoltageFrame f;
  f.electrodes = 4;
  f.data = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
  std::stringstream ss;
  io::write_frames(ss, {f});
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  std::string reversed;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) reversed += *it + "\n";
  std::istringstream in(reversed);
  const auto back = io::read_frames(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].data, f.data);
}

TEST(FrameIo, RejectsBadFrames) {
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(io::read_frames(empty), io::FormatError);
  std::istringstream short_frame("0 2 1.0\n0 3 1.0\n");
  EXPECT_THROW(io::read_frames(short_frame), io::FormatError);
  std::istringstream excluded("0 0 1\n1 3 1\n2 0 1\n3 1 1\n");
  EXPECT_THROW(io::read_frames(excluded), io::FormatError);
  std::istringstream dup("0 2 1\n0 2 1\n2 0 1\n3 1 1\n");
  EXPECT_THROW(io::read_frames(dup), io::FormatError);
  std::istringstream junk("0 2 volts\n");
  EXPECT_THROW(io::read_frames(junk), io::FormatError);
}

TEST(ElementIo, RoundTripIsExact) {
  Eigen::VectorXd v(5);
  v << 1.0, 0.1, -1e-300, 3.141592653589793, 1.0 / 3.0;
  std::stringstream ss;
  io::write_element_values(ss, v);
  EXPECT_EQ(io::read_element_values(ss), v);
  std::istringstream truncated("3\n1\n2\n");
  EXPECT_THROW(io::read_element_values(truncated), io::FormatError);
}

TEST(PhantomIo, RoundTrip) {
  const PhantomSpec spec = lung_model(4);
  std::stringstream ss;
  io::write_phantom(ss, spec);
  const PhantomSpec back = io::read_phantom(ss);
  EXPECT_EQ(back.background, spec.background);
  EXPECT_EQ(back.inclusions, spec.inclusions);
}

TEST(PhantomIo, RejectsMissingKeys) {
  std::istringstream no_bg("[inclusion0]\ncenter = 0 0\n");
  EXPECT_THROW(io::read_phantom(no_bg), io::FormatError);
  std::istringstream bad_vec("background = 1\n[inclusion0]\ncenter = 0\naxis_a = 1 0\naxis_b = 0 1\nvalue = 2\n");
  EXPECT_THROW(io::read_phantom(bad_vec), io::FormatError);
}

TEST(CsvIo, Headers) {
  ReconResult r;
  r.diagnostics.push_back({1, 0.5, 0.25, 3.0});
  std::ostringstream a;
  io::write_iterations_csv(a, r);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "iteration,data_residual,step_norm,wall_ms");
  EXPECT_NE(a.str().find("\n1,0.5,0.25,3\n"), std::string::npos);
  EvalReport rep;
  rep.re_per_iter = {0.5};
  rep.psnr_per_iter = {kPsnrIdentical};
  std::ostringstream b;
  io::write_eval_csv(b, rep);
  EXPECT_EQ(b.str(), "iteration,re,psnr\n1,0.5,inf\n");
}

TEST(PgmIo, HeaderAndMapping) {
  Image im;
  im.width = 3;
  im.height = 2;
  im.extent = 1.0;
  im.pixels = {1.0, 1.05, 1.1, kOutsideDomain, 1.0, 1.1};
  std::ostringstream os;
  const auto [lo, hi] = io::write_pgm(os, im);
  EXPECT_EQ(lo, 1.0);
  EXPECT_EQ(hi, 1.1);
  const std::string s = os.str();
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(s.size(), header.size() + 6);
  EXPECT_EQ(s.substr(0, header.size()), header);
  const auto* px = reinterpret_cast<const unsigned char*>(s.data() + header.size());
  EXPECT_EQ(px[0], 0);
  EXPECT_EQ(px[1], 128);
  EXPECT_EQ(px[2], 255);
  EXPECT_EQ(px[3], 0);
  std::ostringstream side;
  io::write_pgm_sidecar(side, lo, hi);
  EXPECT_NE(side.str().find("gray_max_value 1.1"), std::string::npos);
}

TEST(FileIo, MissingFileIsFormatError) {
  EXPECT_THROW(io::read_file("/nonexistent/definitely/missing.txt"), io::FormatError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1e-13, 5e-13, 2.0 / 3.0, -123456.789}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

}  // namespace
}  // namespace eit
