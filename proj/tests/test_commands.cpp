#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sceneloc/checkpoint.hpp"
#include "sceneloc/commands.hpp"
#include "sceneloc/dataset.hpp"
#include "sceneloc/errors.hpp"

using namespace sceneloc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Commands, SplitList) {
    EXPECT_EQ(split_list("a, b,,c "), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(split_list("").empty());
}

TEST(Commands, SimulateTrainEvalCompare) {
    const fs::path root = fs::temp_directory_path() / "sceneloc_commands";
    fs::remove_all(root);

    Config sim;
    sim.set("world.length", "60");
    run_simulate(sim, root / "data");
    EXPECT_TRUE(fs::exists(root / "data" / "frames.csv"));
    EXPECT_EQ(Config::load(root / "data" / "config.txt").entries(), sim.entries());

    Config tr;
    tr.set("train.T", "10");
    tr.set("train.epochs", "2");
    tr.set("train.learning_rate", "0.01");
    const TrainResult res = run_train(tr, root / "data", root / "train");
    EXPECT_EQ(count_lines(slurp(root / "train" / "train_log.csv")), 4);
    EXPECT_TRUE(fs::exists(root / "train" / "checkpoints" / "epoch_000.bin"));
    EXPECT_TRUE(fs::exists(root / "train" / "checkpoints" / "epoch_002.bin"));
    EXPECT_EQ(load_checkpoint(root / "train" / "model.bin").theta, res.params.theta);
    EXPECT_EQ(Config::load(root / "train" / "config.txt").require("input.data"), (root / "data").string());

    // Resuming from a checkpoint with zero epochs reproduces it.
    Config resume;
    resume.set("train.T", "10");
    resume.set("train.epochs", "0");
    resume.set("model.init", (root / "train" / "model.bin").string());
    EXPECT_EQ(run_train(resume, root / "data", root / "resume").params.theta, res.params.theta);

    Config ev;
    ev.set("eval.seg_len", "20");
    const CompareResult e = run_eval(ev, root / "data", root / "train" / "model.bin", root / "eval");
    ASSERT_EQ(e.rows.size(), 3u);
    EXPECT_EQ(e.rows[2].method, "fused_learned");
    EXPECT_EQ(count_lines(slurp(root / "eval" / "metrics.csv")), 4);

    Config cmp;
    cmp.set("eval.seg_len", "20");
    cmp.set("compare.methods", "dr_only,fused_fixed");
    const CompareResult c = run_compare(cmp, root / "data", root / "data", std::nullopt, root / "cmp");
    ASSERT_EQ(c.rows.size(), 2u);
    Config cmp2;
    cmp2.set("compare.methods", "fused_learned");
    EXPECT_THROW(run_compare(cmp2, root / "data", std::nullopt, std::nullopt, root / "cmp2"), DataError);
    Config none;
    EXPECT_THROW(run_train(none, root / "missing", root / "x"), DataError);
    fs::remove_all(root);
}
