#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_path = dir / "stdout.txt";
    const fs::path err_path = dir / "stderr.txt";
    const std::string command = std::string(PDECTRL_BIN) + " " + args + " > " +
                                out_path.string() + " 2> " + err_path.string();
    const int status = std::system(command.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// A hyperbolic setup small enough that every stage finishes in well under a
// second: 3 coefficients x 2 inits x 2 records = 12 samples.
std::string micro_config(const fs::path& dir) {
    return "benchmark = hyperbolic\n"
           "[env]\n"
           "n_points = 11\n"
           "dt = 0.025\n"
           "horizon = 0.5\n"
           "steps_per_action = 4\n"
           "gamma = 5.5\n"
           "[dataset]\n"
           "record_every = 10\n"
           "n_coeffs = 3\n"
           "n_inits = 2\n"
           "gamma_lo = 5.0\n"
           "gamma_hi = 6.0\n"
           "seed = 42\n"
           "threads = 1\n"
           "train_fraction = 0.9\n"
           "[paths]\n"
           "dataset_train = " + (dir / "train.pdds").string() + "\n"
           "dataset_test = " + (dir / "test.pdds").string() + "\n"
           "out_dir = " + (dir / "out").string() + "\n";
}

// Drops volatile header lines so deterministic output can be byte-compared.
std::string without_timestamp(const std::string& text) {
    std::stringstream in(text);
    std::string line;
    std::string kept;
    while (std::getline(in, line)) {
        if (line.rfind("# generated_at=", 0) == 0) continue;
        kept += line;
        kept += '\n';
    }
    return kept;
}

}  // namespace

TEST_CASE("help and usage errors use the documented exit codes") {
    const fs::path dir = fresh_dir("pdectrl_cli_usage");

    RunResult help = run_cli("--help", dir);
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("gen-data") != std::string::npos);
    CHECK(help.out.find("train-rl") != std::string::npos);

    CHECK(run_cli("", dir).exit_code == 2);               // a subcommand is required
    CHECK(run_cli("frobnicate", dir).exit_code == 2);     // unknown subcommand
    CHECK(run_cli("gen-data", dir).exit_code == 2);       // --config is required

    RunResult missing = run_cli("gen-data --config " + (dir / "nope.ini").string(), dir);
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("config error") != std::string::npos);
}

TEST_CASE("train-rl rejects bad variants and a missing pretrained checkpoint") {
    const fs::path dir = fresh_dir("pdectrl_cli_variant");
    const fs::path config_path = dir / "exp.ini";
    const fs::path fake_op = dir / "does_not_exist.nncp";
    write_file(config_path, micro_config(dir) +
                                "deeponet = " + fake_op.string() + "\n"
                                "agent_sac = " + (dir / "sac.nncp").string() + "\n"
                                "agent_nosac_training = " + (dir / "nt.nncp").string() + "\n");

    RunResult bad = run_cli("train-rl --config " + config_path.string() + " --variant bogus", dir);
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("unknown variant") != std::string::npos);

    RunResult no_op = run_cli(
        "train-rl --config " + config_path.string() + " --variant nosac_training", dir);
    CHECK(no_op.exit_code == 2);
    CHECK(no_op.err.find("pretrained checkpoint not found") != std::string::npos);
    CHECK(no_op.err.find(fake_op.string()) != std::string::npos);
}

TEST_CASE("gen-data --dry-run reports the plan without writing datasets") {
    const fs::path dir = fresh_dir("pdectrl_cli_dryrun");
    const fs::path config_path = dir / "exp.ini";
    write_file(config_path, micro_config(dir));

    RunResult r = run_cli("gen-data --config " + config_path.string() + " --dry-run", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("planned rollouts: 6") != std::string::npos);
    CHECK(r.out.find("planned samples: 12") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "train.pdds"));
    CHECK_FALSE(fs::exists(dir / "test.pdds"));
}

TEST_CASE("gen-data writes byte-identical datasets on reruns") {
    const fs::path dir_a = fresh_dir("pdectrl_cli_gen_a");
    const fs::path dir_b = fresh_dir("pdectrl_cli_gen_b");
    for (const fs::path* dir : {&dir_a, &dir_b}) {
        const fs::path config_path = *dir / "exp.ini";
        write_file(config_path, micro_config(*dir));
        RunResult r = run_cli("gen-data --config " + config_path.string(), *dir);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("total_samples=12") != std::string::npos);
        CHECK(r.out.find("train_samples=11") != std::string::npos);
        CHECK(r.out.find("test_samples=1") != std::string::npos);
        CHECK(fs::exists(*dir / "train.pdds"));
        CHECK(fs::exists(*dir / "test.pdds"));
    }
    CHECK(slurp(dir_a / "train.pdds") == slurp(dir_b / "train.pdds"));
    CHECK(slurp(dir_a / "test.pdds") == slurp(dir_b / "test.pdds"));
    CHECK(slurp(dir_a / "out" / "gen_report.txt") == slurp(dir_b / "out" / "gen_report.txt"));
    CHECK(!slurp(dir_a / "train.pdds").empty());
}

TEST_CASE("simulate-backstepping output is deterministic modulo the timestamp") {
    const fs::path dir_a = fresh_dir("pdectrl_cli_sim_a");
    const fs::path dir_b = fresh_dir("pdectrl_cli_sim_b");
    for (const fs::path* dir : {&dir_a, &dir_b}) {
        const fs::path config_path = *dir / "exp.ini";
        write_file(config_path, micro_config(*dir));
        RunResult r = run_cli("simulate-backstepping --config " + config_path.string(), *dir);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("final_norm=") != std::string::npos);
    }
    const fs::path rel = fs::path("out") / "sim_hyperbolic_u09_backstepping.csv";
    const std::string a = slurp(dir_a / rel);
    const std::string b = slurp(dir_b / rel);
    REQUIRE(!a.empty());
    CHECK(a.find("# generated_at=") != std::string::npos);
    CHECK(without_timestamp(a) == without_timestamp(b));
}
