#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mns/cli.hpp"
#include "test_support.hpp"

namespace mns {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mns_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_pgm(const std::string& name, const GrayImage& img) const {
    cli::write_file_atomic(path(name), save_pgm(img));
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, ConstantImagePipelineIsLossless) {
  write_pgm("flat.pgm", test::constant_image(40, 24, 42));
  ASSERT_EQ(run({"encode", "--in", path("flat.pgm"), "--out", path("flat.mns"), "--mode", "mns"}), 0)
      << err_.str();
  ASSERT_EQ(run({"decode", "--in", path("flat.mns"), "--out", path("back.pgm")}), 0) << err_.str();
  ASSERT_EQ(run({"metrics", "--a", path("flat.pgm"), "--b", path("back.pgm")}), 0);
  EXPECT_NE(out_.str().find("PSNR: inf"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("MSE: 0"), std::string::npos);
}

TEST_F(CliTest, TechniqueTwoShrinksNoiseStream) {
  write_pgm("noise.pgm", test::noise_image(64, 64, 9));
  ASSERT_EQ(run({"encode", "--in", path("noise.pgm"), "--out", path("on.mns"), "--mode", "mns",
                 "--technique2", "on"}), 0);
  ASSERT_EQ(run({"encode", "--in", path("noise.pgm"), "--out", path("off.mns"), "--mode", "mns",
                 "--technique2", "off"}), 0);
  EXPECT_LT(fs::file_size(path("on.mns")), fs::file_size(path("off.mns")));
}

TEST_F(CliTest, EncodeIsByteReproducible) {
  write_pgm("img.pgm", test::load_corpus("coins_crop100x90.pgm"));
  const std::vector<std::string> flags{"--mode", "ns", "--e1", "5", "--e2", "7", "--e3", "9", "--tmean", "10"};
  std::vector<std::string> a{"encode", "--in", path("img.pgm"), "--out", path("a.mns")};
  std::vector<std::string> b{"encode", "--in", path("img.pgm"), "--out", path("b.mns")};
  a.insert(a.end(), flags.begin(), flags.end());
  b.insert(b.end(), flags.begin(), flags.end());
  ASSERT_EQ(run(a), 0);
  ASSERT_EQ(run(b), 0);
  EXPECT_EQ(cli::read_file(path("a.mns")), cli::read_file(path("b.mns")));
}

TEST_F(CliTest, UsageErrorsWriteNothing) {
  EXPECT_EQ(run({"encode", "--out", path("x.mns")}), cli::kUsage);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_FALSE(fs::exists(path("x.mns")));

  write_pgm("img.pgm", test::constant_image(16, 16, 1));
  EXPECT_EQ(run({"encode", "--in", path("img.pgm"), "--out", path("x.mns"), "--bogus", "1"}), cli::kUsage);
  EXPECT_EQ(run({"encode", "--in", path("img.pgm"), "--out", path("x.mns"), "--mode", "full"}), cli::kUsage);
  EXPECT_EQ(run({"encode", "--in", path("img.pgm"), "--out", path("x.mns"), "--e1", "-1"}), cli::kUsage);
  EXPECT_EQ(run({"decode", "--in", path("a.mns"), "--out", path("y.pgm"), "--iters", "0"}), cli::kUsage);
  EXPECT_EQ(run({}), cli::kUsage);
  EXPECT_FALSE(fs::exists(path("x.mns")));
  EXPECT_FALSE(fs::exists(path("y.pgm")));
}

TEST_F(CliTest, DataErrorsAreDistinct) {
  EXPECT_EQ(run({"encode", "--in", path("missing.pgm"), "--out", path("x.mns")}), cli::kData);
  cli::write_text_atomic(path("junk.mns"), "not a stream at all");
  EXPECT_EQ(run({"decode", "--in", path("junk.mns"), "--out", path("y.pgm")}), cli::kData);
  EXPECT_NE(err_.str().find("bad magic"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("y.pgm")));
  EXPECT_FALSE(fs::exists(path("y.pgm.tmp")));
}

TEST_F(CliTest, BenchWritesCsv) {
  write_pgm("img.pgm", test::load_corpus("camera_crop64.pgm"));
  ASSERT_EQ(run({"bench", "rd", "--in", path("img.pgm"), "--modes", "ns,mns", "--e-grid", "4,6,8,12",
                 "--csv", path("rd.csv"), "--no-timing"}), 0)
      << err_.str();
  const auto bytes = cli::read_file(path("rd.csv"));
  const std::string csv(bytes.begin(), bytes.end());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(csv.rfind(rd_csv_header(), 0), 0u);
  EXPECT_EQ(run({"bench", "rd", "--in", path("img.pgm"), "--e-grid", "4,x", "--csv", path("bad.csv")}), cli::kUsage);
  EXPECT_FALSE(fs::exists(path("bad.csv")));
}

TEST_F(CliTest, AnalyzeOffsetsWritesBothTables) {
  write_pgm("img.pgm", test::load_corpus("camera_crop64.pgm"));
  ASSERT_EQ(run({"analyze", "offsets", "--in", path("img.pgm"), "--range-size", "8", "--stride", "2",
                 "--csv", path("hist.csv")}), 0)
      << err_.str();
  EXPECT_TRUE(fs::exists(path("hist.csv")));
  EXPECT_TRUE(fs::exists(path("hist_joint.csv")));
  EXPECT_NE(out_.str().find("ranges 64"), std::string::npos);
  EXPECT_EQ(run({"analyze", "offsets", "--in", path("img.pgm"), "--range-size", "5", "--csv",
                 path("h2.csv")}), cli::kUsage);
}

}  // namespace
}  // namespace mns
