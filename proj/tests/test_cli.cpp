#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;
using Catch::Approx;

namespace {

struct Workspace {
    fs::path dir;

    Workspace()
    {
        dir = fs::temp_directory_path() / ("phaselattice_cli_" + std::to_string(::getpid()) + "_" +
                                           std::to_string(counter()++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    static int& counter()
    {
        static int c = 0;
        return c;
    }

    std::string write(const std::string& name, const std::string& contents) const
    {
        const fs::path p = dir / name;
        std::ofstream(p) << contents;
        return p.string();
    }

    std::string prefix(const std::string& name) const { return (dir / name).string(); }

    std::size_t file_count() const
    {
        return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
    }
};

int run(const std::string& args)
{
    const std::string cmd = std::string(PHASELATTICE_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json summary(const std::string& prefix)
{
    return json::parse(slurp(prefix + ".json"));
}

bool assertion_passed(const json& s, const std::string& name)
{
    for (const auto& a : s["assertions"])
        if (a["name"] == name)
            return a["pass"].get<bool>();
    FAIL("no assertion named " << name);
    return false;
}

std::string config_path(const std::string& name)
{
    return std::string(PHASELATTICE_CONFIGS) + "/" + name;
}

}  // namespace

TEST_CASE("Projector experiment reports the trace", "[cli]")
{
    Workspace w;
    const std::string cfg = w.write("p.json", R"({"lattice": {"N": 3, "n_min": 0, "n_max": 0, "first_block": 0, "m_blocks": 1}})");
    const std::string out = w.prefix("proj");
    REQUIRE(run("projector --config " + cfg + " --out " + out) == 0);
    const json s = summary(out);
    CHECK(s["experiment"] == "projector");
    CHECK(s["results"]["trace"].get<double>() == 7.0);
    CHECK(s["results"]["idempotency_defect"].get<double>() < 1e-10);
    CHECK(s["pass"] == true);
    CHECK(assertion_passed(s, "trace"));
}

TEST_CASE("Closeness experiment on a broad Gaussian", "[cli]")
{
    Workspace w;
    const std::string out = w.prefix("close");
    REQUIRE(run("closeness --config " + config_path("closeness.json") + " --out " + out) == 0);
    const json s = summary(out);
    CHECK(s["results"]["completeness_sum"].get<double>() == Approx(0.875).margin(0.01));
    CHECK(s["results"]["expected_completeness"].get<double>() == 0.875);
    CHECK(assertion_passed(s, "completeness"));
    CHECK(fs::exists(out + ".csv"));
}

TEST_CASE("Closeness product assertion fails with the report written", "[cli]")
{
    Workspace w;
    const std::string cfg = w.write("c.json", R"({
      "lattice": {"N": 2, "n_min": -60, "n_max": 60, "first_block": -15, "m_blocks": 31},
      "state": {"q0": 0, "p0": 0, "sigma_x": 4, "sigma_p": 25.1327412287},
      "closeness": {"assert_product": true}})");
    const std::string out = w.prefix("prod");
    CHECK(run("closeness --config " + cfg + " --out " + out) == 1);
    const json s = summary(out);
    CHECK(s["pass"] == false);
    CHECK_FALSE(assertion_passed(s, "closeness_product"));
    CHECK(assertion_passed(s, "completeness"));
    CHECK(fs::exists(out + ".csv"));
}

TEST_CASE("Schema violations exit with status 2 and write nothing", "[cli]")
{
    Workspace w;
    const std::string out = w.prefix("bad");
    const std::string malformed = w.write("m.json", R"({"lattice": {"N": 3,)");
    const std::string unknown_tol = w.write("t.json", R"({"lattice": {"N": 3}, "tolerances": {"nonsense": 1}})");
    const std::string negative_tol = w.write("n.json", R"({"lattice": {"N": 3}, "tolerances": {"idempotency": -1}})");
    const std::string mismatch = w.write("x.json", R"({"experiment": "sweep", "lattice": {"N": 3}})");
    const std::string unknown_key = w.write("k.json", R"({"lattice": {"N": 3, "colour": 1}})");
    const std::size_t before = w.file_count();
    CHECK(run("projector --config " + malformed + " --out " + out) == 2);
    CHECK(run("projector --config " + unknown_tol + " --out " + out) == 2);
    CHECK(run("projector --config " + negative_tol + " --out " + out) == 2);
    CHECK(run("projector --config " + mismatch + " --out " + out) == 2);
    CHECK(run("projector --config " + unknown_key + " --out " + out) == 2);
    CHECK(run("projector --config " + w.prefix("missing.json") + " --out " + out) == 2);
    CHECK(run("teleport --config " + unknown_key + " --out " + out) == 2);
    CHECK(run("projector --out " + out) == 2);
    CHECK(w.file_count() == before);
    CHECK_FALSE(fs::exists(out + ".json"));
}

TEST_CASE("Sweep aggregates one row per configuration deterministically", "[cli]")
{
    Workspace w;
    const std::string a = w.prefix("a"), b = w.prefix("b");
    REQUIRE(run("sweep --config " + config_path("sweep.json") + " --out " + a) == 0);
    REQUIRE(run("sweep --config " + config_path("sweep.json") + " --out " + b) == 0);
    const std::string csv = slurp(a + ".csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9);
    CHECK(csv.rfind("N,breadth,", 0) == 0);
    CHECK(csv == slurp(b + ".csv"));
    CHECK(slurp(a + ".json") == slurp(b + ".json"));
    const json s = summary(a);
    CHECK(s["results"]["rows"] == 9);
    CHECK(assertion_passed(s, "deficit"));
    CHECK(assertion_passed(s, "error_decreasing_in_breadth"));

    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::vector<double> v;
        std::istringstream f(line);
        std::string cell;
        while (std::getline(f, cell, ','))
            v.push_back(std::stod(cell));
        REQUIRE(v.size() == 11);
        CHECK(v[5] == Approx(std::ldexp(1.0, -static_cast<int>(v[0]))).margin(0.01));
    }

    const std::string empty = w.write("empty_cfg.json", R"({"sweep": {"N": [], "breadth": [10]}})");
    CHECK(run("sweep --config " + empty + " --out " + w.prefix("e")) == 2);
    const std::string unsorted = w.write("unsorted_cfg.json", R"({"sweep": {"N": [2, 1], "breadth": [10]}})");
    CHECK(run("sweep --config " + unsorted + " --out " + w.prefix("u")) == 2);
    CHECK_FALSE(fs::exists(w.prefix("e") + ".json"));
}

TEST_CASE("Summaries embed the resolved config, version and seed", "[cli]")
{
    Workspace w;
    const std::string out = w.prefix("h");
    REQUIRE(run("histories --config " + config_path("histories_commuting.json") + " --out " + out + " --seed 99") == 0);
    const json s = summary(out);
    CHECK(s["seed"] == 99);
    CHECK(s["version"].is_string());
    CHECK_FALSE(s["version"].get<std::string>().empty());
    CHECK(s["config"]["lattice"]["N"] == 2);
    CHECK(s["config"].contains("tolerances"));
    CHECK(s["config"]["tolerances"]["offdiagonal"].get<double>() == 1e-12);
    CHECK(s["results"]["summary"]["max_offdiagonal"].get<double>() < 1e-12);
    CHECK(assertion_passed(s, "offdiagonal"));
    CHECK(assertion_passed(s, "additivity"));

    // A different seed changes the state but not the verdict; the same seed reproduces the bytes.
    const std::string again = w.prefix("h2"), other = w.prefix("h3");
    REQUIRE(run("histories --config " + config_path("histories_commuting.json") + " --out " + again + " --seed 99") == 0);
    REQUIRE(run("histories --config " + config_path("histories_commuting.json") + " --out " + other + " --seed 5") == 0);
    CHECK(slurp(out + ".csv") == slurp(again + ".csv"));
    CHECK(slurp(out + ".csv") != slurp(other + ".csv"));
}

TEST_CASE("Position histories report decreasing interference", "[cli]")
{
    Workspace w;
    const std::string out = w.prefix("pos");
    REQUIRE(run("histories --config " + config_path("histories_position.json") + " --out " + out) == 0);
    const json s = summary(out);
    const json& decay = s["results"]["decay"];
    REQUIRE(decay.size() == 3);
    CHECK(decay[0]["max_offdiagonal_real"].get<double>() > 0.01);
    CHECK(decay[1]["max_offdiagonal"].get<double>() < decay[0]["max_offdiagonal"].get<double>());
    CHECK(decay[2]["max_offdiagonal"].get<double>() < decay[1]["max_offdiagonal"].get<double>());
    for (const auto& pt : decay)
        CHECK(pt["diagonal_sum_defect"].get<double>() < 1e-10);
    CHECK(assertion_passed(s, "monotone_decrease"));
    CHECK(slurp(out + ".csv").rfind("diffusion,max_offdiagonal,max_offdiagonal_real,diagonal_sum_defect\n", 0) == 0);
}

TEST_CASE("Every shipped config runs and passes", "[cli]")
{
    Workspace w;
    for (const char* e : {"states", "moments", "pair", "evolve", "probabilities"}) {
        INFO(e);
        const std::string out = w.prefix(e);
        CHECK(run(std::string(e) + " --config " + config_path(std::string(e) + ".json") + " --out " + out) == 0);
        const json s = summary(out);
        CHECK(s["pass"] == true);
        CHECK(s["experiment"] == e);
        CHECK_FALSE(s["assertions"].empty());
    }
}
