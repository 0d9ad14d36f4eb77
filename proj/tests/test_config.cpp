#include <gtest/gtest.h>

#include "scp/config.hpp"
#include "scp/error.hpp"

namespace scp {
namespace {

TEST(Ini, ParsesSectionsAndComments) {
  const auto entries = parse_ini("# top\n[train]\n  k = 7 \n; note\nalpha=0.5\n\n[data]\nfeatures = a b.scpf\n", "x.ini");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].section, "train");
  EXPECT_EQ(entries[0].key, "k");
  EXPECT_EQ(entries[0].value, "7");
  EXPECT_EQ(entries[0].line, 3u);
  EXPECT_EQ(entries[2].value, "a b.scpf");
}

TEST(Ini, MalformedLinesNameTheLocation) {
  for (const char* text : {"[train\n", "[train]\nk 7\n", "[train]\n= 7\n"}) {
    try {
      parse_ini(text, "bad.ini");
      FAIL() << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("bad.ini:"), std::string::npos);
    }
  }
}

TEST(Ini, AppliesEveryTrainKey) {
  RunConfig rc;
  apply_ini(rc,
            "[train]\nk = 4\nalpha = 2.5\nepochs = 3\nbatch_size = 64\nlr_init = 0.01\nlr_min = 0.001\n"
            "seed = 9\nactivation = tanh\nsymmetrize_le = yes\nle_reduction = sum\nl2_normalize = on\n"
            "log_every = 2\neval_every_epochs = 1\nhidden = 8, 9,10,11\nclip_norm = 5\n"
            "[data]\nfeatures = f.scpf\nmix = g.scpf\n[output]\nout = dir\n",
            "t.ini");
  const auto& t = rc.train;
  EXPECT_EQ(t.k, 4u);
  EXPECT_EQ(t.alpha, 2.5);
  EXPECT_EQ(t.epochs, 3u);
  EXPECT_EQ(t.batch_size, 64u);
  EXPECT_EQ(t.lr_init, 0.01);
  EXPECT_EQ(t.lr_min, 0.001);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_EQ(t.activation, Activation::tanh);
  EXPECT_TRUE(t.symmetrize_le);
  EXPECT_EQ(t.le_reduction, Reduction::sum);
  EXPECT_TRUE(t.l2_normalize);
  EXPECT_EQ(t.log_every, 2u);
  EXPECT_EQ(t.eval_every_epochs, 1u);
  EXPECT_EQ(t.hidden, (HiddenDims{8, 9, 10, 11}));
  EXPECT_EQ(t.clip_norm, 5.0);
  EXPECT_EQ(rc.features, "f.scpf");
  EXPECT_EQ(rc.mix, "g.scpf");
  EXPECT_EQ(rc.out, "dir");
}

TEST(Ini, RejectsUnknownAndBadValues) {
  RunConfig rc;
  EXPECT_THROW(apply_ini(rc, "[train]\nlearning_rate = 1\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[model]\nk = 1\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "k = 3\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nk = three\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nk = 3x\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nl2_normalize = maybe\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nhidden = 1,2,3\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nhidden = 1,2,3,4,5\n", "t"), ConfigError);
  EXPECT_THROW(apply_ini(rc, "[train]\nle_reduction = max\n", "t"), ConfigError);
  EXPECT_THROW(load_config_file(rc, "/nonexistent/run.ini"), ConfigError);
}

TEST(Ini, RenderRoundTrips) {
  RunConfig rc;
  rc.train.alpha = 0.1 + 0.2;
  rc.train.lr_init = 3e-4;
  rc.train.activation = Activation::gelu;
  rc.train.hidden = {5, 6, 7, 8};
  rc.features = "x.scpf";
  rc.mix = "y.scpf";
  RunConfig back;
  apply_ini(back, render_ini(rc), "rendered");
  EXPECT_EQ(back, rc);

  rc.mix.clear();
  RunConfig back2;
  apply_ini(back2, render_ini(rc), "rendered");
  EXPECT_EQ(back2, rc);
}

TEST(Preset, ClusterCountsAndAlpha) {
  const std::pair<const char*, std::pair<std::size_t, double>> table[] = {
      {"cifar10", {10, 1.0}}, {"cifar20", {20, 2.0}}, {"cifar100", {100, 3.0}}, {"imagenet-dogs", {15, 2.0}}};
  for (const auto& [name, want] : table) {
    TrainConfig cfg;
    apply_preset(cfg, name);
    EXPECT_EQ(cfg.k, want.first) << name;
    EXPECT_EQ(cfg.alpha, want.second) << name;
  }
  TrainConfig cfg;
  EXPECT_THROW(apply_preset(cfg, "stl10"), ConfigError);
}

}  // namespace
}  // namespace scp
