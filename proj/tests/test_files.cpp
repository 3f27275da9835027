#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "circcal/error.hpp"
#include "circcal/files.hpp"

namespace circcal {
namespace {

class FilesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("circcal_files_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  void WriteFile(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  std::filesystem::path dir_;
};

TEST_F(FilesTest, ModelRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Rgb> a, b;
    for (int i = 0; i < 20; ++i) {
      a.emplace_back(u(rng), u(rng), u(rng));
      b.emplace_back(u(rng), u(rng) * 0.1, u(rng));
    }
    ColorModelFile m{{FitGaussian(a), FitGaussian(b)}, a.size(), b.size() + 7};
    WriteModel(dir_ / "m.txt", m);
    const ColorModelFile back = ReadModel(dir_ / "m.txt");
    EXPECT_EQ(back.models.foreground.mean(), m.models.foreground.mean());
    EXPECT_EQ(back.models.foreground.covariance(), m.models.foreground.covariance());
    EXPECT_EQ(back.models.background.mean(), m.models.background.mean());
    EXPECT_EQ(back.models.background.covariance(), m.models.background.covariance());
    EXPECT_EQ(back.foreground_samples, 20u);
    EXPECT_EQ(back.background_samples, 27u);
  }
}

TEST_F(FilesTest, ThetaRoundTripIsBitExact) {
  RigParams t;
  t.yaw = 0.1 + 0.2;
  t.pitch = -1e-300;
  t.trans = 1.0 / 3.0;
  t.rolls = {0.17453292519943295, 3.141592653589793, -2.9999999999999996};
  WriteTheta(dir_ / "t.txt", t);
  const RigParams back = ReadTheta(dir_ / "t.txt");
  EXPECT_EQ(back.yaw, t.yaw);
  EXPECT_EQ(back.pitch, t.pitch);
  EXPECT_EQ(back.trans, t.trans);
  EXPECT_EQ(back.rolls, t.rolls);
}

TEST_F(FilesTest, ReadersRejectBadContent) {
  auto kind = [this](const std::string& text, bool model) {
    WriteFile("f.txt", text);
    try {
      if (model) ReadModel(dir_ / "f.txt");
      else ReadTheta(dir_ / "f.txt");
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidParameter;
  };
  EXPECT_EQ(kind("views = 2\n", false), ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-theta/9\nviews = 2\n", false), ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-theta/1\nviews = 3\nyaw_rad = 0\npitch_rad = 0\ntrans_mm = 0\nrolls_rad = 1\n", false),
            ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-theta/1\nviews = 2\nyaw_rad = x\npitch_rad = 0\ntrans_mm = 0\nrolls_rad = 1\n", false),
            ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-theta/1\nviews = 2\nyaw_rad = inf\npitch_rad = 0\ntrans_mm = 0\nrolls_rad = 1\n",
                 false),
            ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-model/1\nforeground.samples = 4\n", true), ErrorKind::kIo);
  EXPECT_EQ(kind("format = circcal-model/1\n"
                 "foreground.samples = 4\nforeground.mean = 0 0 0\nforeground.covariance = 1 0 0 0 -1 0 0 0 1\n"
                 "background.samples = 4\nbackground.mean = 0 0 0\nbackground.covariance = 1 0 0 0 1 0 0 0 1\n",
                 true),
            ErrorKind::kIo);
  try {
    ReadTheta(dir_ / "absent.txt");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST_F(FilesTest, ReportPayloadExcludesTimestamp) {
  Report r;
  r.Section("result");
  r.Add("loglik", -12.5);
  r.Add("generations", 7);
  r.Add("name", std::string("x"));
  r.AddText("[raw]\nk = v");
  const std::string expected = "format = circcal-report/1\n\n[result]\nloglik = -12.5\ngenerations = 7\nname = x\n[raw]\nk = v\n";
  EXPECT_EQ(r.Payload(), expected);
  WriteReport(dir_ / "r.txt", r);
  EXPECT_EQ(ReadReportPayload(dir_ / "r.txt"), expected);
  std::ifstream in(dir_ / "r.txt");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("# written ", 0), 0u);
}

TEST_F(FilesTest, AppendAddsSectionsWithoutSecondFormatLine) {
  Report a, b;
  a.Section("one");
  a.Add("x", 1);
  b.Section("two");
  b.Add("y", 2);
  WriteReport(dir_ / "r.txt", a);
  AppendReport(dir_ / "r.txt", b);
  EXPECT_EQ(ReadReportPayload(dir_ / "r.txt"), "format = circcal-report/1\n\n[one]\nx = 1\n\n[two]\ny = 2\n");
  AppendReport(dir_ / "fresh.txt", b);
  EXPECT_EQ(ReadReportPayload(dir_ / "fresh.txt"), b.Payload());
}

TEST_F(FilesTest, EnsureDirectoryFailsOnFile) {
  WriteFile("plain", "x");
  EXPECT_NO_THROW(EnsureDirectory(dir_ / "a" / "b"));
  EXPECT_TRUE(std::filesystem::is_directory(dir_ / "a" / "b"));
  try {
    EnsureDirectory(dir_ / "plain" / "sub");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

}  // namespace
}  // namespace circcal
