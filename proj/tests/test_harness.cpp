#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "decoseed/harness/config.hpp"
#include "decoseed/harness/run.hpp"

using namespace decoseed;
using namespace decoseed::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("decoseed_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* minimal = "[scenario]\nmodel = araki_zurek\n[system]\ndim = 2\nV_S_diagonal = -0.5, 0.5\n";

} // namespace

TEST(Config, MinimalDocumentFillsDefaults) {
    const auto c = parse_scenario(minimal);
    EXPECT_EQ(c.model, ModelKind::araki_zurek);
    EXPECT_EQ(c.grid_points, 2048);
    EXPECT_EQ(c.oracle_tolerance, 1e-10);
    EXPECT_EQ(c.cluster_tol, tol::cluster);
    EXPECT_EQ(c.n_steps, 801);
    EXPECT_EQ(c.formats, (std::vector<std::string>{"csv", "svg"}));
}

TEST(Config, NegativeTimeIsValidationError) {
    try {
        parse_scenario(std::string(minimal) + "[time]\nt_max = -1\n");
        FAIL();
    } catch (const ValidationError& e) {
        ASSERT_FALSE(e.errors().empty());
        EXPECT_NE(e.errors().front().find("t_max"), std::string::npos);
    }
}

TEST(Config, MixtureWeightsMustBeNormalized) {
    try {
        parse_scenario(std::string(minimal) + "[initial]\nmixture_weights = 0.5, 0.4\nmixture_sigmas = 1, 2\n");
        FAIL();
    } catch (const ValidationError& e) {
        bool named = false;
        for (const auto& m : e.errors()) named = named || m.find("normalization of the mixed initial state") != std::string::npos;
        EXPECT_TRUE(named);
    }
}

TEST(Config, AllErrorsReported) {
    try {
        parse_scenario(std::string(minimal) + "[time]\nt_max = 0\nn_steps = 1\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_GE(e.errors().size(), 2u);
    }
}

TEST(Config, ParseErrorsCarryLineNumbers) {
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"[scenario]\nmodel = araki_zurek\n[bogus]\n", 3},
        {"[scenario]\nnope = 1\n", 2},
        {"model = vanhove\n", 1},
        {"[scenario]\nmodel araki_zurek\n", 2},
        {"[scenario]\nseed = 1\nseed = 2\n", 3},
        {"[scenario]\nmodel = heat_bath\n", 2},
        {"[system]\nH_S = [[1, 0],\n [0, 1]\n", 2},
    };
    for (const auto& [text, line] : cases) {
        try {
            parse_scenario(text);
            ADD_FAILURE() << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << text;
        }
    }
}

TEST(Config, MatricesAndComplexLiterals) {
    const auto c = parse_scenario(std::string(minimal) +
                                  "H_S = [[0.5, 0], # comment\n       [0, -0.5]]\n"
                                  "[initial]\nrho0 = entries\nrho0_entries = [[0.5, 0.25-0.25i], [0.25+0.25i, 0.5]]\n");
    EXPECT_EQ(to_matrix(c.H_S)(1, 1), cplx(-0.5, 0.0));
    EXPECT_EQ(to_matrix(c.rho0_entries)(0, 1), cplx(0.25, -0.25));
    EXPECT_EQ(parse_scenario(serialize_scenario(c)), c);
}

TEST(Config, PresetsRoundTrip) {
    for (const auto& name : preset_names()) {
        const auto c = preset(name);
        EXPECT_EQ(c.name, name);
        EXPECT_EQ(parse_scenario(serialize_scenario(c)), c) << name;
    }
}

TEST(Run, CsvSchemaAndManifest) {
    const fs::path dir = scratch_dir("csv");
    auto c = preset("az_gaussian");
    c.n_steps = 81;
    c.definition_one_draws = 0;
    RunOptions opt;
    opt.output_dir = dir.string();
    const auto r = run_scenario(c, opt);
    EXPECT_EQ(r.status, 0);
    const std::string csv = slurp(dir / "az_gaussian.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,pair_m,pair_n,re_chi,im_chi,abs_chi,block_tn,block_hs");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 81 * 4);
    ASSERT_TRUE(fs::exists(dir / "az_gaussian_pair_0_1.svg"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    for (const auto& f : r.files) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
        if (f != "manifest.json") {
            bool listed = false;
            for (const auto& m : manifest["files"]) listed = listed || m == f;
            EXPECT_TRUE(listed) << f;
        }
    }
    EXPECT_EQ(manifest["input_hash"].get<std::string>().size(), 16u);
    EXPECT_LE(manifest["oracle_deviation"].get<double>(), 1e-10);
    fs::remove_all(dir);
}

TEST(Run, DeterministicCsvAcrossThreadCounts) {
    auto c = preset("vanhove_ir_regular");
    c.n_steps = 257;
    RunOptions opt;
    opt.write_files = false;
    setenv("DECOSEED_THREADS", "1", 1);
    const auto a = render_csv(run_scenario(c, opt).curve);
    setenv("DECOSEED_THREADS", "3", 1);
    const auto b = render_csv(run_scenario(c, opt).curve);
    unsetenv("DECOSEED_THREADS");
    EXPECT_EQ(a, b);
}

TEST(Run, SingleModeReportsRecurrence) {
    auto c = preset("single_mode");
    RunOptions opt;
    opt.write_files = false;
    const auto r = run_scenario(c, opt);
    EXPECT_EQ(r.status, 0);
    EXPECT_NEAR(r.report["recurrence_time"].get<double>(), 2.0 * std::numbers::pi / c.energy, 1e-14);
    EXPECT_LE(r.report["periodicity_defect"].get<double>(), 1e-12);
}

TEST(Run, UnwritableDirectoryLeavesNoFiles) {
    const fs::path base = scratch_dir("io");
    fs::create_directories(base);
    std::ofstream(base / "blocker") << "x";
    auto c = preset("single_mode");
    c.n_steps = 65;
    RunOptions opt;
    opt.output_dir = (base / "blocker" / "out").string();
    try {
        run_scenario(c, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io_error);
    }
    // a write that fails midway removes what was already written
    const fs::path dir = base / "partial";
    fs::create_directories(dir / "single_mode_pair_0_1.svg");
    opt.output_dir = dir.string();
    EXPECT_THROW(run_scenario(c, opt), Error);
    EXPECT_FALSE(fs::exists(dir / "single_mode.csv"));
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    fs::remove_all(base);
}

TEST(Run, OracleMismatchStatus) {
    auto c = preset("az_gaussian");
    c.n_steps = 81;
    c.definition_one_draws = 0;
    c.oracle_tolerance = 1e-30;
    RunOptions opt;
    opt.write_files = false;
    const auto r = run_scenario(c, opt);
    EXPECT_EQ(r.status, 3);
    opt.oracle = false;
    EXPECT_EQ(run_scenario(c, opt).status, 0);
}

TEST(Config, ShippedScenarioFilesMatchPresets) {
    for (const auto& name : preset_names()) {
        const fs::path p = fs::path(DECOSEED_SCENARIO_DIR) / (name + ".conf");
        ASSERT_TRUE(fs::exists(p)) << p;
        EXPECT_EQ(parse_scenario(slurp(p)), preset(name)) << name;
    }
    EXPECT_NO_THROW(parse_scenario(slurp(fs::path(DECOSEED_SCENARIO_DIR) / "az_mixture.conf")));
}
