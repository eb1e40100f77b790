#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsreject/runner.hpp"
#include "tsreject/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Approx;

namespace {

const char* cli_path() { return TSREJECT_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + cli_path() + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string run_cli_capture(const std::string& args, const fs::path& scratch) {
    const fs::path out = scratch / "stdout.txt";
    const std::string cmd =
        std::string("\"") + cli_path() + "\" " + args + " > " + out.string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() /
              ("tsreject_cli_test_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

json small_config(const fs::path& out_dir) {
    return json{
        {"dataset", "synthetic"},
        {"lookback", 12},
        {"horizon", 4},
        {"vae", {{"latent_dim", 6}, {"hidden_dim", 24}, {"epochs", 4}}},
        {"synthetic", {{"length", 1200}, {"variables", 2}}},
        {"rejection", {{"target_rate", 0.10}}},
        {"sweep_rates", {0.0, 0.05, 0.1}},
        {"output_dir", out_dir.string()},
    };
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2);
}

}  // namespace

TEST_CASE("cli pipeline end to end on the synthetic dataset", "[cli][slow]") {
    Scratch scratch;
    const fs::path cfg_path = scratch.dir / "config.json";
    const fs::path out_dir = scratch.dir / "run";
    write_json(cfg_path, small_config(out_dir));
    const std::string base = "-c " + cfg_path.string();

    REQUIRE(run_cli("prepare " + base) == 0);
    REQUIRE(fs::exists(out_dir / "prepared_split.txt"));
    REQUIRE(fs::exists(out_dir / "manifest.json"));

    SECTION("prepare is idempotent and seed-independent") {
        const std::string manifest_before = slurp(out_dir / "manifest.json");
        const std::string split_before = slurp(out_dir / "prepared_split.txt");
        REQUIRE(run_cli("prepare " + base) == 0);
        CHECK(slurp(out_dir / "manifest.json") == manifest_before);

        REQUIRE(run_cli("prepare " + base + " --seed 777") == 0);
        CHECK(slurp(out_dir / "prepared_split.txt") == split_before);
        const json manifest = json::parse(slurp(out_dir / "manifest.json"));
        const json manifest_old = json::parse(manifest_before);
        CHECK(manifest["prepare_hash"] == manifest_old["prepare_hash"]);

        REQUIRE(run_cli("prepare " + base) == 0);  // restore the original seed
    }

    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(fs::exists(out_dir / "forecaster.txt"));
    REQUIRE(fs::exists(out_dir / "vae.txt"));
    REQUIRE(fs::exists(out_dir / "error_model.txt"));

    SECTION("train log shows the vae mean loss never ends above its start") {
        std::ifstream log(out_dir / "train_log.csv");
        std::string line;
        std::getline(log, line);  // header
        double first = -1.0, last = -1.0;
        while (std::getline(log, line)) {
            if (line.rfind("vae,", 0) == 0) {
                const double loss = std::stod(line.substr(line.rfind(',') + 1));
                if (first < 0.0) first = loss;
                last = loss;
            }
        }
        REQUIRE(first >= 0.0);
        CHECK(last <= first);
    }

    SECTION("retraining with the same seed is byte-identical") {
        const std::string model_before = slurp(out_dir / "forecaster.txt");
        const std::string vae_before = slurp(out_dir / "vae.txt");
        REQUIRE(run_cli("train " + base) == 0);
        CHECK(slurp(out_dir / "forecaster.txt") == model_before);
        CHECK(slurp(out_dir / "vae.txt") == vae_before);
    }

    REQUIRE(run_cli("calibrate " + base) == 0);
    REQUIRE(fs::exists(out_dir / "rejector.txt"));

    SECTION("calibrated validation rates honor the quantile guarantee") {
        const std::string rejector = slurp(out_dir / "rejector.txt");
        double amb_rate = -1.0, nov_rate = -1.0;
        std::istringstream ss(rejector);
        std::string line;
        while (std::getline(ss, line)) {
            std::istringstream ls(line);
            std::string tag, name;
            double value;
            if (ls >> tag >> name >> value) {
                if (name == "ambiguity_realized_val_rate") amb_rate = value;
                if (name == "novelty_realized_val_rate") nov_rate = value;
            }
        }
        // Dual mode splits the 10% target evenly; each side honors the
        // quantile guarantee on its validation scores (118 windows here).
        CHECK(std::fabs(amb_rate - 0.05) <= 1.0 / 118 + 1e-12);
        CHECK(std::fabs(nov_rate - 0.05) <= 1.0 / 118 + 1e-12);
    }

    REQUIRE(run_cli("evaluate " + base) == 0);
    const json report = json::parse(slurp(out_dir / "report.json"));
    CHECK(report["n_windows"].get<int>() > 0);
    CHECK(report["epsilon"].get<double>() >= 0.0);
    CHECK(report["bound_ideal"].get<double>() <=
          report["bound_random"].get<double>() + 1e-12);

    SECTION("evaluate with mode none reproduces the plain forecaster loss") {
        REQUIRE(run_cli("evaluate " + base + " --mode none") == 0);
        const json plain = json::parse(slurp(out_dir / "report.json"));
        CHECK(plain["epsilon"].get<double>() == 0.0);
        CHECK(plain["risk"].get<double>() == Approx(plain["L_all"].get<double>()));
        REQUIRE(run_cli("calibrate " + base) == 0);  // restore dual rejector
    }

    SECTION("calibrating with mode none persists and reloads inf sentinels") {
        REQUIRE(run_cli("calibrate " + base + " --mode none") == 0);
        REQUIRE(run_cli("evaluate " + base + " --mode none") == 0);
        const json plain = json::parse(slurp(out_dir / "report.json"));
        CHECK(plain["epsilon"].get<double>() == 0.0);
        REQUIRE(run_cli("calibrate " + base) == 0);
    }

    REQUIRE(run_cli("sweep " + base) == 0);
    REQUIRE(fs::exists(out_dir / "sweep.csv"));

    SECTION("sweep CSV is byte-identical across reruns") {
        const std::string sweep_before = slurp(out_dir / "sweep.csv");
        REQUIRE(run_cli("sweep " + base) == 0);
        CHECK(slurp(out_dir / "sweep.csv") == sweep_before);
    }

    REQUIRE(run_cli("ablate " + base) == 0);
    SECTION("ablation table lists the four modes in order") {
        std::ifstream in(out_dir / "ablation.csv");
        std::string line;
        std::getline(in, line);
        std::vector<std::string> labels;
        while (std::getline(in, line)) labels.push_back(line.substr(0, line.find(',')));
        CHECK(labels == std::vector<std::string>{"Base", "NRO", "ARO", "DRM"});
    }

    SECTION("predict scores a raw window file") {
        // Build a 12-row window from the synthetic generator's own scale.
        const fs::path window_csv = scratch.dir / "window.csv";
        std::ofstream win(window_csv);
        for (int r = 0; r < 12; ++r) win << 0.5 << "," << -0.25 << "\n";
        win.close();
        const std::string out =
            run_cli_capture("predict " + base + " --window " + window_csv.string(), scratch.dir);
        const json decision = json::parse(out);
        CHECK((decision["decision"] == 0 || decision["decision"] == 1));
        CHECK(decision.contains("novelty_score"));
        CHECK(decision.contains("variance_score"));
        if (decision["decision"] == 0) {
            REQUIRE(decision["prediction"].is_array());
            CHECK(decision["prediction"].size() == 4);
        }
    }
}

TEST_CASE("cli exit codes", "[cli]") {
    Scratch scratch;

    SECTION("unknown config key is a config error (2)") {
        const fs::path cfg = scratch.dir / "bad.json";
        write_json(cfg, json{{"datset", "typo.csv"}});
        CHECK(run_cli("prepare -c " + cfg.string()) == 2);
    }

    SECTION("missing dataset file is a data error (3)") {
        const fs::path cfg = scratch.dir / "cfg.json";
        write_json(cfg, json{{"dataset", (scratch.dir / "absent.csv").string()},
                             {"output_dir", (scratch.dir / "out").string()}});
        CHECK(run_cli("prepare -c " + cfg.string()) == 3);
    }

    SECTION("missing prepare artifacts are a data error naming the file") {
        const fs::path cfg = scratch.dir / "cfg.json";
        write_json(cfg, small_config(scratch.dir / "never_prepared"));
        CHECK(run_cli("train -c " + cfg.string()) == 3);
    }

    SECTION("bad override is a config error") {
        const fs::path cfg = scratch.dir / "cfg.json";
        write_json(cfg, small_config(scratch.dir / "out"));
        CHECK(run_cli("prepare -c " + cfg.string() + " --set rejection.mode=bogus") == 2);
    }
}

TEST_CASE("cli config precedence", "[cli]") {
    Scratch scratch;
    const fs::path cfg = scratch.dir / "cfg.json";
    const fs::path out_a = scratch.dir / "out_a";
    const fs::path out_b = scratch.dir / "out_b";
    json j = small_config(out_a);
    write_json(cfg, j);

    SECTION("flags win over the file") {
        REQUIRE(run_cli("prepare -c " + cfg.string() + " --output-dir " + out_b.string()) == 0);
        CHECK(fs::exists(out_b / "manifest.json"));
        CHECK_FALSE(fs::exists(out_a / "manifest.json"));
    }

    SECTION("--set overrides nested keys and lands in the manifest") {
        REQUIRE(run_cli("prepare -c " + cfg.string() +
                        " --set rejection.target_rate=0.25 --set lookback=10") == 0);
        const json manifest = json::parse(slurp(out_a / "manifest.json"));
        CHECK(manifest["config"]["rejection"]["target_rate"].get<double>() == 0.25);
        CHECK(manifest["config"]["lookback"].get<int>() == 10);
    }

    SECTION("a manifest can reproduce its own run") {
        REQUIRE(run_cli("prepare -c " + cfg.string()) == 0);
        const std::string manifest_before = slurp(out_a / "manifest.json");
        REQUIRE(run_cli("prepare -c " + (out_a / "manifest.json").string()) == 0);
        CHECK(slurp(out_a / "manifest.json") == manifest_before);
    }
}

TEST_CASE("cli env var output-dir override", "[cli]") {
    Scratch scratch;
    const fs::path cfg = scratch.dir / "cfg.json";
    const fs::path out_file = scratch.dir / "out_file";
    const fs::path out_env = scratch.dir / "out_env";
    write_json(cfg, small_config(out_file));

    const std::string cmd = std::string("TSREJECT_OUTPUT_DIR=") + out_env.string() + " \"" +
                            cli_path() + "\" prepare -c " + cfg.string() + " > /dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(out_env / "manifest.json"));
    CHECK_FALSE(fs::exists(out_file / "manifest.json"));

    SECTION("explicit flag still beats the env var") {
        const fs::path out_flag = scratch.dir / "out_flag";
        const std::string cmd2 = std::string("TSREJECT_OUTPUT_DIR=") + out_env.string() + " \"" +
                                 cli_path() + "\" prepare -c " + cfg.string() + " --output-dir " +
                                 out_flag.string() + " > /dev/null 2>&1";
        REQUIRE(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
        CHECK(fs::exists(out_flag / "manifest.json"));
    }
}

TEST_CASE("cli mlp forecaster path", "[cli][slow]") {
    Scratch scratch;
    const fs::path cfg_path = scratch.dir / "config.json";
    const fs::path out_dir = scratch.dir / "run";
    json j = small_config(out_dir);
    j["forecaster"] = {{"kind", "mlp"}, {"hidden_dim", 16}, {"epochs", 3}};
    write_json(cfg_path, j);
    const std::string base = "-c " + cfg_path.string();

    REQUIRE(run_cli("prepare " + base) == 0);
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("calibrate " + base) == 0);
    REQUIRE(run_cli("evaluate " + base) == 0);
    const json report = json::parse(slurp(out_dir / "report.json"));
    CHECK(report["L_all"].get<double>() > 0.0);

    // The training log now carries forecaster epochs too.
    const std::string log = slurp(out_dir / "train_log.csv");
    CHECK(log.find("forecaster,0,") != std::string::npos);
    CHECK(log.find("forecaster,3,") != std::string::npos);
}

TEST_CASE("cli prediction-file plug-in", "[cli][slow]") {
    Scratch scratch;
    const fs::path cfg_path = scratch.dir / "config.json";
    const fs::path out_dir = scratch.dir / "run";
    write_json(cfg_path, small_config(out_dir));
    const std::string base = "-c " + cfg_path.string();

    // First a normal run whose per-window report gives us real origins.
    REQUIRE(run_cli("prepare " + base) == 0);
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("calibrate " + base) == 0);
    REQUIRE(run_cli("evaluate " + base) == 0);
    const json live_report = json::parse(slurp(out_dir / "report.json"));

    // Build an external prediction file: perfect predictions (the targets
    // themselves) for every window in the prepared split.
    const fs::path pred_csv = scratch.dir / "external_predictions.csv";
    {
        // Reconstruct the normalized windows exactly as the runner does.
        auto cfg = tsreject::config::load(cfg_path.string());
        auto data = tsreject::runner::load_prepared(cfg);
        std::ofstream out(pred_csv);
        auto dump = [&out](const std::vector<tsreject::tsio::WindowPair>& windows) {
            for (const auto& w : windows) {
                out << w.origin_index;
                const tsreject::Vector flat = tsreject::flatten(w.target);
                for (tsreject::Index i = 0; i < flat.size(); ++i) {
                    out << "," << tsreject::serialize::format_double(flat(i));
                }
                out << "\n";
            }
        };
        dump(data.validation);
        dump(data.test);
    }

    const std::string with_pred = base + " --predictions " + pred_csv.string();
    REQUIRE(run_cli("train " + with_pred) == 0);
    // No live forecaster is fitted in prediction-file mode.
    CHECK(slurp(out_dir / "train_log.csv").find("forecaster,") == std::string::npos);
    REQUIRE(run_cli("calibrate " + with_pred) == 0);
    REQUIRE(run_cli("evaluate " + with_pred) == 0);
    const json perfect = json::parse(slurp(out_dir / "report.json"));
    CHECK(perfect["L_all"].get<double>() == 0.0);
    CHECK(perfect["L_all"].get<double>() <= live_report["L_all"].get<double>());
}

TEST_CASE("cli chi novelty calibration", "[cli][slow]") {
    Scratch scratch;
    const fs::path cfg_path = scratch.dir / "config.json";
    const fs::path out_dir = scratch.dir / "run";
    json j = small_config(out_dir);
    j["rejection"]["novelty_calibration"] = "chi";
    j["rejection"]["mode"] = "novelty_only";
    write_json(cfg_path, j);
    const std::string base = "-c " + cfg_path.string();

    REQUIRE(run_cli("prepare " + base) == 0);
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("calibrate " + base) == 0);

    double d_threshold = -1.0;
    std::istringstream ss(slurp(out_dir / "rejector.txt"));
    std::string line;
    while (std::getline(ss, line)) {
        std::istringstream ls(line);
        std::string tag, name, value;
        if (ls >> tag >> name >> value && name == "d_threshold") {
            d_threshold = std::stod(value);
        }
    }
    // latent_dim 6, novelty-only at 10%: the 0.9 chi quantile.
    const double expected = tsreject::stats::chi_quantile(0.90, 6);
    CHECK(d_threshold == Approx(expected).epsilon(1e-12));
}

TEST_CASE("interval calibration matches the closed form", "[cli][slow]") {
    Scratch scratch;
    const fs::path cfg_path = scratch.dir / "config.json";
    const fs::path out_dir = scratch.dir / "run";
    json j = small_config(out_dir);
    j["rejection"]["calibration"] = "interval";
    j["rejection"]["alpha"] = 0.05;
    j["rejection"]["interval_width"] = 1.0;
    write_json(cfg_path, j);
    const std::string base = "-c " + cfg_path.string();

    REQUIRE(run_cli("prepare " + base) == 0);
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("calibrate " + base) == 0);

    double var_threshold = -1.0;
    long long dof = -1;
    std::istringstream ss(slurp(out_dir / "rejector.txt"));
    std::string line;
    while (std::getline(ss, line)) {
        std::istringstream ls(line);
        std::string tag, name, value;
        if (ls >> tag >> name >> value) {
            if (name == "var_threshold") var_threshold = std::stod(value);
            if (name == "dof") dof = std::stoll(value);
        }
    }
    REQUIRE(dof > 0);
    const double expected = tsreject::stats::variance_threshold(1.0, {0.05, dof});
    CHECK(var_threshold == Approx(expected).epsilon(1e-12));
}
