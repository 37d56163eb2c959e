#include "hypro/hypro.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace hypro;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = HYPRO_CLI_PATH;
const fs::path kConfigs = fs::path(HYPRO_SOURCE_DIR) / "configs";

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / (std::string("hypro_cli_") +
                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] fs::path operator/(const std::string& name) const { return path_ / name; }
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Runs the CLI with stdout/stderr discarded and returns its exit status.
int run(const std::string& args) {
    const std::string cmd = "'" + kCli.string() + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A pipeline small enough for a unit test: two Poisson types, short training.
const char* kTinyConfig = R"({
  "seed": 3,
  "num_types": 2,
  "synth": {"generator": "poisson", "rates": [1.0, 2.0], "horizon": 4.0,
            "counts": {"train": 40, "dev": 10, "test": 10}},
  "horizon": {"policy": "length", "length": 2.0},
  "base": {"family": "poisson", "optimizer": {"learning_rate": 0.05, "max_epochs": 5}},
  "energy": {"hidden": [8]},
  "train": {"optimizer": {"max_epochs": 3}},
  "infer": {"num_proposals": 4}
})";

} // namespace

TEST(Cli, UsageErrorsExitWithConfigCode) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("pipeline --out /tmp/x"), 2);  // --config missing
    EXPECT_EQ(run("fit-energy --config a --base b --out c --objective ranking"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, BadConfigExitsWithConfigCode) {
    TempDir dir;
    EXPECT_EQ(run("pipeline --config '" + (dir / "missing.json").string() + "' --out '" + (dir / "o").string() + "'"), 2);
    write_text(dir / "broken.json", "{\"num_types\": ");
    EXPECT_EQ(run("pipeline --config '" + (dir / "broken.json").string() + "' --out '" + (dir / "o").string() + "'"), 2);
    write_text(dir / "nodata.json", R"({"num_types": 2, "data": {"train": "nope.jsonl", "test": "nope.jsonl"}})");
    EXPECT_EQ(run("fit-base --config '" + (dir / "nodata.json").string() + "' --out '" + (dir / "o").string() + "'"), 2);
}

TEST(Cli, BadDataExitsWithDataCode) {
    TempDir dir;
    write_text(dir / "truth.jsonl", "{\"seq_id\": \"a\", \"t_end\": 1.0, \"events\": [\n");
    write_text(dir / "pred.jsonl", "");
    EXPECT_EQ(run("evaluate --pred '" + (dir / "pred.jsonl").string() + "' --truth '" + (dir / "truth.jsonl").string() +
                  "' --out '" + (dir / "o").string() + "'"),
              3);
    write_text(dir / "model.bin", "not a model");
    EXPECT_EQ(run("fit-energy --config '" + (kConfigs / "synthetic_acceptance.json").string() + "' --base '" +
                  (dir / "model.bin").string() + "' --out '" + (dir / "o").string() + "'"),
              3);
}

TEST(Cli, SynthWritesTheSpecifiedDataset) {
    TempDir dir;
    const fs::path out = dir / "synth.jsonl";
    ASSERT_EQ(run("synth --spec '" + (kConfigs / "synth_spec.json").string() + "' --out '" + out.string() + "'"), 0);
    const Dataset d = load_dataset(out);
    const SynthSpec spec = parse_synth_spec(read_json_file(kConfigs / "synth_spec.json"));
    EXPECT_EQ(d.size(), spec.num_seqs);
    EXPECT_EQ(d.num_types, 2u);
    EXPECT_EQ(d.sequences, generate(spec).sequences);
}

TEST(Cli, EvaluateIdenticalPredictionAndTruthIsZero) {
    TempDir dir;
    SynthSpec spec;
    spec.generator = Generator::kPoisson;
    spec.rates = {1.0, 0.5};
    spec.num_seqs = 12;
    spec.horizon = 6.0;
    spec.seed = 4;
    const Dataset truth = generate(spec);
    save_dataset(dir / "truth.jsonl", truth);
    std::vector<PredictionRecord> preds;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        PredictionRecord p;
        p.prefix_id = truth.id(i);
        p.T = 3.0;
        p.T_prime = 6.0;
        p.chosen = slice(truth.sequences[i], 3.0, 6.0);
        p.proposals.push_back({p.chosen, 1.0, 0.0});
        preds.push_back(p);
    }
    save_predictions(dir / "pred.jsonl", preds);
    ASSERT_EQ(run("evaluate --pred '" + (dir / "pred.jsonl").string() + "' --truth '" + (dir / "truth.jsonl").string() +
                  "' --out '" + (dir / "eval").string() + "'"),
              0);
    const json report = read_json_file(dir / "eval" / "report.json");
    EXPECT_EQ(report["rmse"].get<double>(), 0.0);
    EXPECT_EQ(report["otd_mean"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(dir / "eval" / "energy_histograms.csv"));
}

TEST(Cli, StepwiseCommandsReproducePipeline) {
    TempDir dir;
    write_text(dir / "tiny.json", kTinyConfig);
    const std::string cfg = "--config '" + (dir / "tiny.json").string() + "'";
    const fs::path full = dir / "full";
    ASSERT_EQ(run("pipeline " + cfg + " --out '" + full.string() + "'"), 0);
    for (const char* f : {"config.resolved.json", "base.model", "base_train_log.jsonl", "energy.model",
                          "energy_train_log.jsonl", "predictions.jsonl", "predictions_base.jsonl", "metrics.json",
                          "eval/report.json", "eval_base/report.json", "data/test.jsonl"}) {
        EXPECT_TRUE(fs::exists(full / f)) << f;
    }
    const json metrics = read_json_file(full / "metrics.json");
    EXPECT_TRUE(metrics.contains("hypro"));
    EXPECT_TRUE(metrics.contains("base"));

    const fs::path step = dir / "step";
    ASSERT_EQ(run("fit-base " + cfg + " --out '" + step.string() + "'"), 0);
    ASSERT_EQ(run("fit-energy " + cfg + " --base '" + (step / "base.model").string() + "' --out '" + step.string() + "'"), 0);
    ASSERT_EQ(run("predict " + cfg + " --base '" + (step / "base.model").string() + "' --energy '" +
                  (step / "energy.model").string() + "' --out '" + step.string() + "'"),
              0);
    EXPECT_EQ(read_text(step / "base.model"), read_text(full / "base.model"));
    EXPECT_EQ(read_text(step / "energy.model"), read_text(full / "energy.model"));
    EXPECT_EQ(read_text(step / "predictions.jsonl"), read_text(full / "predictions.jsonl"));

    // Overrides change the outcome and are validated.
    ASSERT_EQ(run("predict " + cfg + " --base '" + (step / "base.model").string() + "' --energy '" +
                  (step / "energy.model").string() + "' --out '" + (dir / "m7").string() + "' --m-proposals 7"),
              0);
    EXPECT_EQ(load_predictions(dir / "m7" / "predictions.jsonl").front().proposals.size(), 7u);
    EXPECT_EQ(run("predict " + cfg + " --base '" + (step / "base.model").string() + "' --energy '" +
                  (step / "energy.model").string() + "' --out '" + (dir / "m0").string() + "' --m-proposals 0"),
              2);
    EXPECT_EQ(run("fit-energy " + cfg + " --base '" + (step / "base.model").string() + "' --out '" +
                  (dir / "bin").string() + "' --objective binary --regularize --n-noise 3"),
              0);
    EXPECT_NE(read_text(dir / "bin" / "energy.model"), read_text(full / "energy.model"));
}
