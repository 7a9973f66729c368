#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ftls/io/reproduce.hpp"
#include "ftls/io/runner.hpp"
#include "ftls/io/spec.hpp"
#include "ftls/io/table.hpp"

using namespace ftls;
using namespace ftls::io;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("ftls_test_io_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json base_doc(const char* kind) {
    return {{"kind", kind},
            {"model", {{"ell", "0.05"}, {"h", "0.5"}, {"v_minus", "2"}, {"v_plus", "1"}}},
            {"asymptotes", {{"fbar", "3/16"}, {"subcase", "1B"}}}};
}

std::vector<SpecIssue> issues_of(const json& doc) {
    try {
        spec_from_json(doc);
    } catch (const SpecError& e) {
        return e.issues();
    }
    return {};
}

}  // namespace

TEST(Spec, ReferenceConfigParses) {
    const auto s = parse_spec(fs::path(FTLS_CONFIG_DIR) / "paper-1B.json");
    EXPECT_EQ(s.kind, Kind::Simulate);
    EXPECT_DOUBLE_EQ(s.params.ell, 0.05);
    EXPECT_DOUBLE_EQ(s.params.h(), 0.5);
    EXPECT_DOUBLE_EQ(s.grid.dz, 0.0002);
    EXPECT_DOUBLE_EQ(s.params.road.v_minus, 2.0);
    EXPECT_DOUBLE_EQ(s.params.road.v_plus, 1.0);
    EXPECT_DOUBLE_EQ(resolve_fbar(s), 3.0 / 16.0);
    const auto [rm, rp] = resolve_asymptotes(s);
    EXPECT_NEAR(rm, (1.0 - std::sqrt(5.0 / 8.0)) / 2.0, 1e-10);
    EXPECT_NEAR(rp, 0.75, 1e-10);
    EXPECT_EQ(s.simulation.shifts.size(), 4u);
    EXPECT_TRUE(s.simulation.shift_in_headways);
    EXPECT_DOUBLE_EQ(s.simulation.T, 4.0);
}

TEST(Spec, MissingEllIsTheOnlyIssue) {
    json d = base_doc("classify");
    d["model"].erase("ell");
    const auto is = issues_of(d);
    ASSERT_EQ(is.size(), 1u);
    EXPECT_EQ(is[0].key, "model.ell");
}

TEST(Spec, FbarAboveBound) {
    json d = base_doc("classify");
    d["asymptotes"]["fbar"] = "0.3";
    const auto is = issues_of(d);
    ASSERT_EQ(is.size(), 1u);
    EXPECT_EQ(is[0].key, "asymptotes.fbar");
    EXPECT_NE(is[0].message.find("0.25"), std::string::npos) << is[0].message;
}

TEST(Spec, CollectsSeveralIssuesAndUnknownKeys) {
    json d = base_doc("profile");
    d["model"]["h"] = -1;
    d["grid"] = {{"dz", "0.1"}, {"spacing", 2}};
    d["output"] = {{"stride", 0}};
    const auto is = issues_of(d);
    EXPECT_GE(is.size(), 3u);
    bool unknown = false;
    for (const auto& i : is) unknown = unknown || i.key == "grid.spacing";
    EXPECT_TRUE(unknown);
}

TEST(Spec, SyntaxErrorPosition) {
    try {
        parse_json_text("{\n  \"kind\": \"classify\",\n  \"model\": {\"ell\": ,}\n}", "broken.json");
        FAIL() << "no exception";
    } catch (const SpecSyntaxError& e) {
        EXPECT_EQ(e.line, 3u);
        EXPECT_GT(e.column, 10u);
        EXPECT_NE(std::string(e.what()).find("broken.json:3:"), std::string::npos);
    }
}

TEST(Spec, NumberForms) {
    EXPECT_DOUBLE_EQ(*parse_number(json("3/16")), 0.1875);
    EXPECT_DOUBLE_EQ(*parse_number(json("0.0002")), 0.0002);
    EXPECT_DOUBLE_EQ(*parse_number(json("-1e-3")), -0.001);
    EXPECT_DOUBLE_EQ(*parse_number(json(0.5)), 0.5);
    EXPECT_DOUBLE_EQ(*parse_number(json(2)), 2.0);
    EXPECT_FALSE(parse_number(json("abc")).has_value());
    EXPECT_FALSE(parse_number(json("1/0")).has_value());
    EXPECT_FALSE(parse_number(json::array()).has_value());
}

TEST(Spec, KindNamesRoundTrip) {
    for (Kind k : {Kind::Simulate, Kind::Profile, Kind::LimitsMicroMacro, Kind::LimitsNonlocalLocal, Kind::Classify,
                   Kind::ReproduceFigure}) {
        EXPECT_EQ(kind_from_string(to_string(k)), k);
    }
    EXPECT_FALSE(kind_from_string("plot").has_value());
}

TEST(Spec, SchemaAgreesWithParser) {
    const json schema = json::parse(slurp(FTLS_SCHEMA_PATH));
    for (const auto& k : schema["properties"]["kind"]["enum"]) EXPECT_TRUE(kind_from_string(k.get<std::string>()));
    for (const auto& t : figure_targets()) EXPECT_TRUE(is_figure_target(t.name));
    EXPECT_FALSE(is_figure_target("fig-11"));
    const auto& top = schema["properties"];
    json d = base_doc("classify");
    for (auto it = d.begin(); it != d.end(); ++it) EXPECT_TRUE(top.contains(it.key())) << it.key();
}

TEST(Table, CsvRoundTripAndShortestForm) {
    ResultTable t({"a", "b"});
    t.add_row({0.1, 1.0 / 3.0});
    t.add_row({-2.5e-12, 7.0});
    EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
    EXPECT_EQ(format_number(0.1), "0.1");
    const fs::path d = scratch("table");
    t.write_csv(d / "t.csv");
    const auto back = ResultTable::read_csv(d / "t.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.columns(), t.columns());
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(back.rows()[r][c], t.rows()[r][c]);
    }
}

TEST(Table, Sha256KnownDigest) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Runner, ProfileRunIsByteDeterministic) {
    json d = base_doc("profile");
    d["grid"] = {{"dz", "0.001"}, {"x_min", "-10"}, {"x_max", "10"}};
    d["anchors"] = {"0.5", "0.75"};
    const fs::path dir = scratch("determinism");
    d["output"] = {{"dir", dir.string()}, {"stride", 4}};
    const auto ra = run(spec_from_json(d));
    ASSERT_EQ(ra.exit_code, kExitOk) << ra.message;
    const std::string first = slurp(dir / "profiles.csv");
    const auto rb = run(spec_from_json(d));
    ASSERT_EQ(rb.exit_code, kExitOk) << rb.message;
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, slurp(dir / "profiles.csv"));
    EXPECT_EQ(ra.manifest.spec_digest, rb.manifest.spec_digest);
    const json m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["exit_code"], 0);
    EXPECT_EQ(m["spec_digest"].get<std::string>().size(), 64u);
}

TEST(Runner, ClassifyNoProfileExitsTwo) {
    json d = base_doc("classify");
    d["asymptotes"]["subcase"] = "1D";
    const fs::path dir = scratch("classify_1d");
    d["output"] = {{"dir", dir.string()}};
    const auto r = run(spec_from_json(d));
    EXPECT_EQ(r.exit_code, kExitNoProfile);
    const json c = json::parse(slurp(dir / "classification.json"));
    EXPECT_EQ(c["verdict"], "no-profile");
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Runner, IncompatibleAsymptotesExitTwo) {
    json d = base_doc("classify");
    d["asymptotes"] = {{"rho_minus", "0.3"}, {"rho_plus", "0.5"}};
    const fs::path dir = scratch("classify_incompatible");
    d["output"] = {{"dir", dir.string()}};
    const auto r = run(spec_from_json(d));
    EXPECT_EQ(r.exit_code, kExitNoProfile);
    EXPECT_EQ(json::parse(slurp(dir / "classification.json"))["reason"], "flux-incompatible");
}

TEST(Runner, ProfileOfNoProfileSubcaseExitsTwo) {
    json d = base_doc("profile");
    d["asymptotes"]["subcase"] = "2C";
    d["model"]["v_minus"] = "1";
    d["model"]["v_plus"] = "2";
    d["output"] = {{"dir", scratch("profile_2c").string()}};
    EXPECT_EQ(run(spec_from_json(d)).exit_code, kExitNoProfile);
}

TEST(Runner, BatchKeepsOrderAndCombinesExitCodes) {
    json ok = base_doc("classify");
    ok["output"] = {{"dir", scratch("batch_ok").string()}};
    json bad = base_doc("classify");
    bad["asymptotes"]["subcase"] = "1C";
    bad["output"] = {{"dir", scratch("batch_bad").string()}};
    const auto res = run_all({spec_from_json(ok), spec_from_json(bad)}, 2);
    ASSERT_EQ(res.size(), 2u);
    EXPECT_EQ(res[0].exit_code, kExitOk);
    EXPECT_EQ(res[1].exit_code, kExitNoProfile);
    EXPECT_EQ(combined_exit(res), kExitNoProfile);
}

TEST(Reproduce, ProfilesPanelOneB) {
    json d = base_doc("reproduce-figure");
    d["asymptotes"] = {{"fbar", "3/16"}};
    d["figure"] = "fig-1b-left";
    const fs::path dir = scratch("fig1b_left");
    d["output"] = {{"dir", dir.string()}};
    const auto r = run(spec_from_json(d));
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    const auto t = ResultTable::read_csv(dir / "profiles_1b.csv");
    EXPECT_EQ(t.columns(), (std::vector<std::string>{"anchor", "x", "P"}));
    EXPECT_GT(t.size(), 1000u);
    for (const auto& row : t.rows()) {
        EXPECT_GT(row[2], 0.0);
        EXPECT_LT(row[2], 1.0);
    }
}

TEST(Reproduce, CrashesExceedJamDensity) {
    json d = base_doc("reproduce-figure");
    d["asymptotes"] = {{"fbar", "3/16"}};
    d["figure"] = "fig-crashes";
    const fs::path dir = scratch("fig_crashes");
    d["output"] = {{"dir", dir.string()}};
    const auto r = run(spec_from_json(d));
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    for (const char* panel : {"crash_left", "crash_right"}) {
        const auto& s = r.manifest.summary[panel];
        EXPECT_GT(s["alternative"]["max_rho"].get<double>(), 1.0) << panel;
        EXPECT_LE(s["main"]["max_rho"].get<double>(), 1.0 + 1e-9) << panel;
        EXPECT_TRUE(fs::exists(dir / (std::string(panel) + "_events.csv")));
    }
}

TEST(Reproduce, FluxTargetCriticalDensities) {
    json d = base_doc("reproduce-figure");
    d["asymptotes"] = {{"fbar", "3/16"}};
    d["figure"] = "fig-flux";
    const fs::path dir = scratch("fig_flux");
    d["output"] = {{"dir", dir.string()}};
    ASSERT_EQ(run(spec_from_json(d)).exit_code, kExitOk);
    const json c = json::parse(slurp(dir / "critical_densities.json"));
    EXPECT_NEAR(c["case1"]["rho2"].get<double>(), 0.25, 1e-10);
    EXPECT_NEAR(c["case1"]["rho3"].get<double>(), 0.75, 1e-10);
    EXPECT_EQ(ResultTable::read_csv(dir / "flux.csv").size(), 1001u);
}
