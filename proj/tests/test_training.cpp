#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "sicl/graph_io.hpp"
#include "sicl/metrics.hpp"
#include "sicl/train.hpp"

using namespace sicl;
namespace fs = std::filesystem;

namespace {

int cli_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    args.insert(args.begin(), "sicl");
    const int rc = cli::run(args, out, err);
    INFO(err.str());
    return rc;
}

}  // namespace

TEST_CASE("skeleton network smoke run through the command line") {
    const fs::path dir = fs::temp_directory_path() / "sicl_training_smoke";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text_file(dir / "spn.json.cfg",
                    R"({"target": "spn", "stream": {"d": 5, "n": 50, "graph_model": {"type": "er", "expected_degree": 1}},)"
                    R"( "steps": 2000, "lr": 0.003, "lr_final": 0.05, "eval_every": 250, "seed": 3})");
    REQUIRE(cli_run({"train", "--config", (dir / "spn.json.cfg").string(), "--out", (dir / "spn.json").string(), "--quiet"}) == 0);

    const auto manifest = nlohmann::json::parse(read_text_file(dir / "spn.json"));
    const double before = manifest["training"]["initial_validation_loss"].get<double>();
    const double after = manifest["training"]["final_validation_loss"].get<double>();
    INFO("validation loss " << before << " -> " << after);
    CHECK(after <= 0.5 * before);

    // Skeleton AUC on fresh 5-node instances.
    const nn::Network spn = nn::load_checkpoint(dir / "spn.json");
    const nn::DataStream stream = nn::train_config_from_json(manifest["training"]["config"]).stream;
    REQUIRE(stream.d == 5);
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (int k = 0; k < 40; ++k) {
        const auto inst = nn::draw_instance(stream, derive_seed(99, "smoke.eval", k));
        const auto S = nn::skeleton_probs(spn, inst.data);
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j) {
                scores.push_back(std::max(S[i * 5 + j], S[j * 5 + i]));
                labels.push_back(inst.dag.adjacent(i, j) ? 1 : 0);
            }
    }
    const auto auc = roc_auc(scores, labels);
    REQUIRE(auc.has_value());
    INFO("s-AUC " << *auc);
    CHECK(*auc >= 90.0);

    // The v-structure network starts from the skeleton network's encoders.
    REQUIRE(cli_run({"train", "--target", "vpn", "--config", (dir / "spn.json.cfg").string(), "--spn", (dir / "spn.json").string(),
                     "--steps", "0", "--out", (dir / "vpn.json").string(), "--quiet"}) == 0);
    const nn::Network vpn = nn::load_checkpoint(dir / "vpn.json");
    int shared = 0;
    for (const auto& [name, t] : vpn.params().items()) {
        if (name.rfind("vstruct_head", 0) == 0) continue;
        CHECK(t->value == spn.params().get(name)->value);
        ++shared;
    }
    CHECK(shared > 0);
    CHECK(cli_run({"train", "--target", "vpn", "--config", (dir / "spn.json.cfg").string(), "--out", (dir / "x.json").string()}) ==
          cli::kExitUsage);

    // Continuing from a checkpoint of the same target starts from its weights.
    REQUIRE(cli_run({"train", "--config", (dir / "spn.json.cfg").string(), "--init", (dir / "spn.json").string(), "--steps", "0",
                     "--out", (dir / "spn2.json").string(), "--quiet"}) == 0);
    const nn::Network spn2 = nn::load_checkpoint(dir / "spn2.json");
    for (const auto& [name, t] : spn.params().items()) CHECK(spn2.params().get(name)->value == t->value);
    CHECK(cli_run({"train", "--config", (dir / "spn.json.cfg").string(), "--init", (dir / "vpn.json").string(), "--out",
                   (dir / "x.json").string()}) == cli::kExitUsage);
    fs::remove_all(dir);
}
