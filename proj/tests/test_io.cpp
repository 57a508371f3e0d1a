#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "revq/io/image.hpp"
#include "revq/io/video_io.hpp"
#include "revq/io/y4m.hpp"
#include "revq/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace revq;

namespace {

const std::filesystem::path kFixtures = REVQ_FIXTURE_DIR;

std::vector<double> read_doubles(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<double> out;
  double v;
  while (in.read(reinterpret_cast<char*>(&v), sizeof v)) out.push_back(v);
  return out;
}

// Quantised to 8 bits so PNG/PPM round trips are exact.
Video eight_bit_video(int w, int h, int frames, std::uint64_t seed) {
  Rng rng(seed);
  Video v;
  for (int t = 0; t < frames; ++t) {
    Frame f(w, h);
    for (double& x : f.data()) x = static_cast<double>(rng.uniform_int(0, 255)) / 255.0;
    v.frames.push_back(std::move(f));
  }
  return v;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

}  // namespace

TEST(ImageSequence, FiveIdenticalImages) {
  TempDir dir;
  Video v = eight_bit_video(64, 64, 1, 1);
  for (int i = 0; i < 5; ++i) io::write_png(v.frames[0], dir / ("f" + std::to_string(i) + ".png"));
  const Video loaded = io::load_video(dir.path());
  EXPECT_EQ(loaded.frame_count(), 5u);
  EXPECT_EQ(loaded.width(), 64);
  EXPECT_EQ(loaded.fps, 60.0);
}

TEST(ImageSequence, PngRoundTripIsBitExact) {
  TempDir dir;
  Video v = eight_bit_video(33, 17, 4, 2);
  v.fps = 30;
  v.scene_id = "hall";
  v.display_class = DisplayClass::desktop2k;
  io::write_image_sequence(v, dir.path());
  EXPECT_EQ(io::load_video(dir.path()), v);
}

TEST(ImageSequence, PpmRoundTripIsBitExact) {
  TempDir dir;
  const Video v = eight_bit_video(9, 12, 3, 3);
  io::write_image_sequence(v, dir.path(), io::ImageFormat::ppm);
  EXPECT_EQ(io::load_video(dir.path()).frames, v.frames);
}

TEST(ImageSequence, LoadsInLexicographicOrder) {
  TempDir dir;
  const Video v = eight_bit_video(4, 4, 3, 4);
  io::write_png(v.frames[0], dir / "b.png");
  io::write_png(v.frames[1], dir / "a.png");
  io::write_png(v.frames[2], dir / "c.png");
  const Video loaded = io::load_video(dir.path());
  EXPECT_EQ(loaded.frames[0], v.frames[1]);
  EXPECT_EQ(loaded.frames[1], v.frames[0]);
  EXPECT_EQ(loaded.frames[2], v.frames[2]);
}

TEST(ImageSequence, MixedSizesAreRejected) {
  TempDir dir;
  io::write_png(eight_bit_video(8, 8, 1, 5).frames[0], dir / "0.png");
  io::write_png(eight_bit_video(8, 9, 1, 6).frames[0], dir / "1.png");
  EXPECT_EQ(code_of([&] { io::load_video(dir.path()); }), ErrorCode::DimensionMismatch);
}

TEST(ImageSequence, EmptyDirectoryIsEmptyInput) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { io::load_video(dir.path()); }), ErrorCode::EmptyInput);
}

TEST(ImageSequence, LoadIsDeterministic) {
  TempDir dir;
  io::write_image_sequence(eight_bit_video(16, 8, 3, 7), dir.path());
  EXPECT_EQ(io::load_video(dir.path()), io::load_video(dir.path()));
}

TEST(Png, CorruptFileIsRejected) {
  TempDir dir;
  std::ofstream(dir / "bad.png") << "not a png";
  EXPECT_THROW(io::read_png(dir / "bad.png"), Error);
}

TEST(Y4m, ThirdPartyStreamHeaderAndFrames) {
  const Video v = io::load_video(kFixtures / "gradient_420.y4m");
  EXPECT_EQ(v.frame_count(), 10u);
  EXPECT_EQ(v.width(), 320);
  EXPECT_EQ(v.height(), 240);
  EXPECT_EQ(v.fps, 60.0);
}

TEST(Y4m, GreyContentRoundTripsWithinQuantisation) {
  const Video v = io::load_video(kFixtures / "gradient_420.y4m");
  const auto source = read_doubles(kFixtures / "gradient_420.rgb");
  ASSERT_EQ(source.size(), 10u * 320 * 240 * 3);
  double worst = 0;
  std::size_t i = 0;
  for (const auto& f : v.frames) {
    for (double x : f.data()) worst = std::max(worst, std::abs(x - source[i++]));
  }
  // One luma code (1/219) plus one chroma code, which the writer's rounding
  // produces for grey (Cb = Cr = 127), scaled by the largest matrix gain 1.8556.
  EXPECT_LE(worst, 1.0 / 219.0 + 1.8556 / 224.0 + 1e-12);
}

TEST(Y4m, ColourMatchesBt709Oracle) {
  const Video v = io::load_video(kFixtures / "colour_420.y4m");
  const auto expected = read_doubles(kFixtures / "colour_420.rgb");
  EXPECT_EQ(v.fps, 30.0);
  ASSERT_EQ(expected.size(), v.frame_count() * 64 * 48 * 3);
  std::size_t i = 0;
  for (const auto& f : v.frames) {
    for (double x : f.data()) EXPECT_NEAR(x, expected[i++], 1e-12);
  }
}

TEST(Y4m, HeaderParsing) {
  const auto h = io::parse_y4m_header("YUV4MPEG2 W320 H240 F30000:1001 Ip A1:1 C444 XCOLORRANGE=FULL");
  EXPECT_EQ(h.width, 320);
  EXPECT_EQ(h.height, 240);
  EXPECT_NEAR(h.fps, 29.97002997, 1e-6);
  EXPECT_EQ(h.chroma, io::ChromaLayout::yuv444);
  EXPECT_TRUE(h.full_range);
  EXPECT_EQ(io::parse_y4m_header("YUV4MPEG2 W2 H2").fps, 60.0);
  EXPECT_EQ(code_of([] { io::parse_y4m_header("YUV4MPEG W2 H2"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { io::parse_y4m_header("YUV4MPEG2 W2"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { io::parse_y4m_header("YUV4MPEG2 W2 H2 C420p10"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { io::parse_y4m_header("YUV4MPEG2 Wx H2"); }), ErrorCode::MalformedHeader);
}

TEST(Y4m, HandWrittenFullRange444) {
  TempDir dir;
  {
    std::ofstream out(dir / "v.y4m", std::ios::binary);
    out << "YUV4MPEG2 W2 H1 F60:1 C444 XCOLORRANGE=FULL\nFRAME\n";
    const unsigned char planes[] = {255, 0, 128, 128, 128, 128};
    out.write(reinterpret_cast<const char*>(planes), sizeof planes);
  }
  const Video v = io::load_video(dir / "v.y4m");
  ASSERT_EQ(v.frame_count(), 1u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(v.frames[0].at(0, 0, c), 1.0, 1e-12);
    EXPECT_NEAR(v.frames[0].at(1, 0, c), 0.0, 1e-12);
  }
}

TEST(Y4m, TruncatedFrameIsMalformed) {
  TempDir dir;
  std::ofstream(dir / "t.y4m", std::ios::binary) << "YUV4MPEG2 W4 H4 F60:1 C420jpeg\nFRAME\nabc";
  EXPECT_EQ(code_of([&] { io::load_video(dir / "t.y4m"); }), ErrorCode::MalformedHeader);
}

TEST(Y4m, SidecarSuppliesSceneAndClass) {
  TempDir dir;
  std::filesystem::copy_file(kFixtures / "colour_420.y4m", dir / "clip.y4m");
  std::ofstream(dir / "clip.meta.json") << R"({"scene_id": "forest", "display_class": "smartphone"})";
  const Video v = io::load_video(dir / "clip.y4m");
  EXPECT_EQ(v.scene_id, "forest");
  EXPECT_EQ(v.display_class, DisplayClass::smartphone);
  EXPECT_EQ(v.fps, 30.0);
}
