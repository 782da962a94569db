// Command-line front end: exit codes, configuration overlay, and the
// byte-reproducibility contract for emitted artifacts.
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twistlab/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"twistlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return twistlab::cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// the only artifact subdirectory beneath an out-dir
fs::path only_dir(const fs::path& out) {
    fs::path found;
    int n = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.is_directory()) {
            found = e.path();
            ++n;
        }
    REQUIRE(n == 1);
    return found;
}

fs::path fresh_out(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("twistlab-test-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// config.json with its timestamp line blanked, for comparisons
std::string strip_timestamp(std::string s) {
    auto pos = s.find("\"timestamp\"");
    if (pos == std::string::npos) return s;
    auto end = s.find('\n', pos);
    return s.erase(pos, end - pos);
}

}  // namespace

TEST_CASE("cli rejects bad invocations with exit code 2", "[cli]") {
    fs::path out = fresh_out("reject");
    std::string o = "--out=" + out.string();
    // missing required option
    CHECK(run({"profile", "--x", "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", o}) == 2);
    // weights must satisfy i + j = 1
    CHECK(run({"profile", "--x", "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", "--i", "1/2",
               "--j", "1/3", "--Q", "50", o}) == 2);
    // unknown subcommand
    CHECK(run({"frobnicate"}) == 2);
    // malformed real descriptor
    CHECK(run({"profile", "--x", "wat:12", "--j", "1/2", "--Q", "50", o}) == 2);
    fs::remove_all(out);
}

TEST_CASE("cli profile emits a self-consistent report", "[cli]") {
    fs::path out = fresh_out("profile");
    int rc = run({"profile", "--x", "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", "--j", "1/2",
                  "--Q", "100", "--out", out.string()});
    CHECK(rc == 0);
    fs::path dir = only_dir(out);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "records.csv"));

    auto rep = twistlab::cli::njson::parse(slurp(dir / "report.json"));
    CHECK(rep["experiment"] == "profile");
    CHECK(rep["argmin"] == "41");  // frozen scan result for this pair at Q=100
    CHECK(rep["rational_degenerate"] == false);

    // records.csv has a header and one line per record
    std::string csv = slurp(dir / "records.csv");
    CHECK(csv.rfind("q,", 0) == 0);
    fs::remove_all(out);
}

TEST_CASE("cli reports are byte-identical across reruns", "[cli]") {
    fs::path out1 = fresh_out("det1"), out2 = fresh_out("det2");
    std::vector<std::string> base{"metric", "--family", "interval", "--psi", "pow:C=1/4,s=1",
                                  "--N", "2000", "--Q", "200", "--seed", "7"};
    auto with_out = [&](const fs::path& o) {
        auto v = base;
        v.push_back("--out");
        v.push_back(o.string());
        return v;
    };
    REQUIRE(run(with_out(out1)) == 0);
    REQUIRE(run(with_out(out2)) == 0);
    fs::path d1 = only_dir(out1), d2 = only_dir(out2);
    CHECK(d1.filename() == d2.filename());  // same config, same hash
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    CHECK(slurp(d1 / "counts.csv") == slurp(d2 / "counts.csv"));
    // config.json may differ only in its timestamp line
    CHECK(strip_timestamp(slurp(d1 / "config.json")) ==
          strip_timestamp(slurp(d2 / "config.json")));
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("cli config files overlay and flags win", "[cli]") {
    fs::path out = fresh_out("config");
    fs::path cfg = out / "run.conf";
    {
        std::ofstream os(cfg);
        os << "# profile options\n"
           << "x=quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1\n"
           << "j=1/2\n"
           << "Q=40\n";
    }
    // config alone
    REQUIRE(run({"profile", "--config", cfg.string(), "--out", out.string()}) == 0);
    auto rep = twistlab::cli::njson::parse(slurp(only_dir(out) / "report.json"));
    CHECK(rep["Q"] == 40);
    fs::remove_all(only_dir(out));

    // a flag overrides the file value
    REQUIRE(run({"profile", "--config", cfg.string(), "--Q", "60", "--out", out.string()}) == 0);
    rep = twistlab::cli::njson::parse(slurp(only_dir(out) / "report.json"));
    CHECK(rep["Q"] == 60);
    fs::remove_all(only_dir(out));

    // unknown keys in the file are a configuration error
    {
        std::ofstream os(cfg, std::ios::app);
        os << "bogus_key=1\n";
    }
    CHECK(run({"profile", "--config", cfg.string(), "--out", out.string()}) == 2);
    fs::remove_all(out);
}

TEST_CASE("cli adversary and density happy paths", "[cli]") {
    fs::path out = fresh_out("adv");
    CHECK(run({"adversary", "--source", "engineered", "--K", "2", "--out", out.string()}) == 0);
    fs::path dir = only_dir(out);
    auto rep = twistlab::cli::njson::parse(slurp(dir / "report.json"));
    CHECK(rep["bound_ok"] == true);
    CHECK(rep["all_covered"] == true);
    CHECK(fs::exists(dir / "blocks.csv"));
    fs::remove_all(out);

    fs::path dout = fresh_out("dens");
    CHECK(run({"density", "--x", "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", "--k", "8",
               "--t0", "1", "--T", "3", "--C", "1/62500", "--c", "1/100", "--out",
               dout.string()}) == 0);
    fs::path ddir = only_dir(dout);
    auto drep = twistlab::cli::njson::parse(slurp(ddir / "report.json"));
    CHECK(drep["experiment"] == "density");
    CHECK(fs::exists(ddir / "levels.csv"));
    fs::remove_all(dout);
}

TEST_CASE("cli cantor emits the tree and certificates", "[cli]") {
    fs::path out = fresh_out("cantor");
    CHECK(run({"cantor", "--x", "quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", "--k", "64",
               "--depth", "3", "--c", "1/100", "--points", "2", "--out", out.string()}) == 0);
    fs::path dir = only_dir(out);
    auto rep = twistlab::cli::njson::parse(slurp(dir / "report.json"));
    CHECK(rep["min_survivors"] == 16);
    CHECK(rep["ok"] == true);
    // tree.jsonl holds one JSON object per line
    std::string jsonl = slurp(dir / "tree.jsonl");
    std::istringstream is(jsonl);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto node = twistlab::cli::njson::parse(line);
        CHECK(node.contains("level"));
        ++lines;
    }
    CHECK(lines == rep["nodes_emitted"]);
    fs::remove_all(out);
}
