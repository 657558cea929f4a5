#include <gtest/gtest.h>

#include <json.hpp>

#include "cli_support.hpp"
#include "ordkit/retrieval.hpp"

using namespace testing_support;

namespace {

const char* kReadPapers = "(S (NP (PRP I)) (VP (VBD read) (NP (CD two) (NNS papers))))\n";

}  // namespace

TEST(Cli, TransformReadTwoPapersWithProvenance) {
  Scratch dir("cli_transform");
  write_file(dir / "in.ptb", kReadPapers);
  const auto in = (dir / "in.ptb").string(), out = (dir / "out.txt").string();
  ASSERT_EQ(run_cli("transform -i " + in + " -o " + out + " --chain reorder:83A --stats " +
                    (dir / "stats.tsv").string()),
            0);
  EXPECT_EQ(read_file(out), "I two papers read\n");
  const auto prov = nlohmann::json::parse(read_file(out + ".provenance.json"));
  EXPECT_EQ(prov["command"], "transform");
  EXPECT_EQ(prov["config"]["chain"], "reorder:83A");
  EXPECT_EQ(prov["inputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_FALSE(prov["config"].contains("workers"));
  EXPECT_NE(read_file(dir / "stats.tsv").find("reorder:83A\t33.33\t"), std::string::npos);
}

TEST(Cli, TreeFormatAndUsageErrors) {
  Scratch dir("cli_usage");
  write_file(dir / "in.ptb", kReadPapers);
  const auto in = (dir / "in.ptb").string(), out = (dir / "out.ptb").string();
  ASSERT_EQ(run_cli("transform -i " + in + " -o " + out + " --chain reorder:87A,reorder:85A --format tree"), 0);
  EXPECT_EQ(read_file(out), kReadPapers);
  EXPECT_EQ(run_cli("transform -i " + in + " -o " + out + " --chain ''"), 2);
  EXPECT_EQ(run_cli("transform -i " + in + " -o " + out + " --chain word_shuffle --format tree"), 2);
  EXPECT_EQ(run_cli("transform -i " + in + " -o " + out), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("--version"), 0);
}

TEST(Cli, MalformedInputNamesFileAndLine) {
  Scratch dir("cli_bad");
  write_file(dir / "in.ptb", std::string(kReadPapers) + "(S (NP\n");
  const auto in = (dir / "in.ptb").string();
  EXPECT_EQ(run_cli("transform -i " + in + " -o " + (dir / "o").string() + " --chain word_shuffle",
                    dir / "err.txt"),
            1);
  EXPECT_NE(read_file(dir / "err.txt").find("in.ptb:2"), std::string::npos) << read_file(dir / "err.txt");
  EXPECT_EQ(run_cli("transform -i " + in + " -o " + (dir / "o").string() + " --chain word_shuffle --skip-bad"), 0);
}

TEST(Cli, StatsOnItselfAndOnReversal) {
  Scratch dir("cli_stats");
  write_file(dir / "a.txt", "w x y z\nthe cat\n");
  write_file(dir / "r.txt", "z y x w\ncat the\n");
  const auto a = (dir / "a.txt").string();
  ASSERT_EQ(run_cli("stats --original " + a + " --modified " + a + " -o " + (dir / "s.tsv").string()), 0);
  EXPECT_NE(read_file(dir / "s.tsv").find("\t0.00\t0.00\t2\t6\t0"), std::string::npos);
  ASSERT_EQ(run_cli("stats --original " + a + " --modified " + (dir / "r.txt").string() + " -o " +
                    (dir / "r.tsv").string()),
            0);
  EXPECT_NE(read_file(dir / "r.tsv").find("\t100.00\t"), std::string::npos);
  write_file(dir / "short.txt", "w x y z\n");
  EXPECT_EQ(run_cli("stats --original " + a + " --modified " + (dir / "short.txt").string()), 1);
}

TEST(Cli, BpeLearnApplyDecodeMask) {
  Scratch dir("cli_bpe");
  write_file(dir / "c.txt", "the cat sat on the mat\nthe dog sat on the log\n");
  const auto c = (dir / "c.txt").string(), m = (dir / "m.bpe").string();
  ASSERT_EQ(run_cli("bpe learn -i " + c + " -o " + m + " --vocab-size 60 --language en"), 0);
  ASSERT_EQ(run_cli("bpe apply --model " + m + " -i " + c + " -o " + (dir / "ids.txt").string()), 0);
  ASSERT_EQ(run_cli("bpe decode --model " + m + " -i " + (dir / "ids.txt").string() + " -o " +
                    (dir / "back.txt").string()),
            0);
  EXPECT_EQ(read_file(dir / "back.txt"), read_file(c));
  ASSERT_EQ(run_cli("mask --model " + m + " -i " + (dir / "ids.txt").string() + " -o " +
                    (dir / "masked.txt").string() + " --seed 3"),
            0);
  EXPECT_NE(read_file(dir / "masked.txt").find('\t'), std::string::npos);
  EXPECT_EQ(run_cli("bpe learn -i " + c + " -o " + m + " --vocab-size 5"), 1);
}

TEST(Cli, SynthGenerateThenRetrievalJson) {
  Scratch dir("cli_synth");
  ASSERT_EQ(run_cli("synth generate -n 20 --seed 4 -o " + dir.path().string()), 0);
  const auto en = read_file(dir / "en.ptb");
  const auto art = read_file(dir / "art.ptb");
  EXPECT_EQ(std::count(en.begin(), en.end(), '\n'), 20);
  EXPECT_EQ(std::count(art.begin(), art.end(), '\n'), 20);
  EXPECT_TRUE(fs::exists(dir / "art.ptb.provenance.json"));
  EXPECT_EQ(run_cli("synth generate -n 0 -o " + dir.path().string()), 2);

  {
    std::ofstream src(dir / "s.okem", std::ios::binary), tgt(dir / "t.okem", std::ios::binary);
    ordkit::write_pooled(src, {{1, 0}, {0, 1}, {1, 1}}, "8");
    ordkit::write_pooled(tgt, {{2, 0.1}, {0.1, 3}, {1, 1.2}}, "8");
  }
  ASSERT_EQ(run_cli("retrieval --source " + (dir / "s.okem").string() + " --target " + (dir / "t.okem").string() +
                    " -o " + (dir / "r.json").string()),
            0);
  const auto r = nlohmann::json::parse(read_file(dir / "r.json"));
  EXPECT_EQ(r["top1_accuracy"], 1.0);
  EXPECT_EQ(r["nearest"], nlohmann::json::array({0, 1, 2}));
  EXPECT_EQ(r["source_layer"], "8");
}

TEST(Cli, ConfigFileAndEnvironmentPrecedence) {
  Scratch dir("cli_config");
  write_file(dir / "in.ptb", "(S (A a) (B b) (C c) (D d) (E e) (F f) (G g))\n");
  const auto in = (dir / "in.ptb").string();
  auto shuffled = [&](const std::string& prefix, const std::string& suffix) {
    const auto out = (dir / "o.txt").string();
    EXPECT_EQ(run_cli(prefix + "transform -i " + in + " -o " + out + suffix), 0);
    return read_file(out);
  };
  const auto seed2 = shuffled("", " --chain word_shuffle --seed 2");
  const auto seed9 = shuffled("", " --chain word_shuffle --seed 9");
  ASSERT_NE(seed2, seed9);
  write_file(dir / "c.ini", "[transform]\nseed = 2\nchain = \"word_shuffle\"\n");
  const auto cfg = "--config " + (dir / "c.ini").string() + " ";
  EXPECT_EQ(shuffled(cfg, ""), seed2);
  EXPECT_EQ(shuffled(cfg, " --seed 9"), seed9);
  EXPECT_EQ(shuffled("", " --chain word_shuffle --seed 0"), shuffled("", " --chain word_shuffle"));
  ::setenv("ORDKIT_SEED", "9", 1);
  EXPECT_EQ(shuffled("", " --chain word_shuffle"), seed9);
  ::unsetenv("ORDKIT_SEED");
}
