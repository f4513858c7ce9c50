#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pqpan::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pqpan_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"estimate"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--scheme", "ML-KEM-512", "--ll-pdu", "300"}).code, 2);
  EXPECT_EQ(invoke({"estimate", "--scheme", "ML-KEM-512", "--gamma-keygen", "1,2"}).code, 2);
  EXPECT_EQ(invoke({"sweep", "--compare", "--totals"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, ModelErrors) {
  const auto r = invoke({"estimate", "--scheme", "ecdsa-p256"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("signature"), std::string::npos);
  EXPECT_EQ(invoke({"estimate", "--scheme", "Kyber-9000"}).code, 3);
  EXPECT_EQ(invoke({"simulate", "--backend", "real"}).code, 3);
}

TEST(Cli, IoErrors) {
  EXPECT_EQ(invoke({"estimate", "--scheme", "ML-KEM-512", "--config", "/nonexistent/p.toml"}).code,
            4);
  EXPECT_EQ(invoke({"fit", "--reference", "/nonexistent/t.csv"}).code, 4);
  EXPECT_EQ(invoke({"sweep", "--out", "/nonexistent/dir/x.csv"}).code, 4);
}

TEST(Cli, EstimateJson) {
  const auto r = invoke({"estimate", "--scheme", "ml-kem-1024", "--att-mtu", "204", "--ll-pdu",
                        "208", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const double notify = j["raw"]["notify_pk_uJ"], write = j["raw"]["write_ct_uJ"];
  EXPECT_NEAR(notify, 293.46, 0.02 * 293.46);
  EXPECT_NEAR(write, 287.63, 0.02 * 287.63);
  EXPECT_NEAR(j["adjusted"]["notify_pk_uJ"].get<double>(), 1.15 * notify, 1e-9);
}

TEST(Cli, IdentityCommCalibration) {
  const auto r = invoke({"estimate", "--scheme", "ML-KEM-768", "--gamma-comm", "1.0", "--format",
                        "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["raw"]["notify_pk_uJ"], j["adjusted"]["notify_pk_uJ"]);
  EXPECT_EQ(j["raw"]["write_ct_uJ"], j["adjusted"]["write_ct_uJ"]);
}

TEST(Cli, SweepMatchesEstimate) {
  const auto s = invoke({"sweep", "--schemes", "ML-KEM-768", "--att-mtus", "104", "--ll-pdus",
                        "108", "--format", "json"});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto rows = json::parse(s.out)["rows"];
  ASSERT_EQ(rows.size(), 2u);
  const auto e = json::parse(invoke({"estimate", "--scheme", "ML-KEM-768", "--att-mtu", "104",
                                    "--ll-pdu", "108", "--format", "json"})
                                 .out);
  EXPECT_EQ(rows[0]["op"], "Notify_PK");
  EXPECT_EQ(rows[0]["e_theor_uJ"], e["raw"]["notify_pk_uJ"]);
  EXPECT_EQ(rows[1]["e_theor_uJ"], e["raw"]["write_ct_uJ"]);
}

TEST(Cli, SweepCsvHeaderMirrorsReference) {
  const auto r = invoke({"sweep"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "scheme,att_mtu,ll_pdu,op,e_theor_uJ,e_emp_uJ,delta_pct");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 49);
}

TEST(Cli, SweepCompare) {
  const auto r = invoke({"sweep", "--compare", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_LE(j["max_abs_rel_err"].get<double>(), 0.02);
  EXPECT_NE(r.err.find("compared 48 rows"), std::string::npos);
}

TEST(Cli, FitWritesLoadableProfile) {
  const auto path = scratch("fit.json");
  const auto r = invoke({"fit", "--out", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("chosen ifs_slots 2"), std::string::npos);
  const auto j = json::parse(slurp(path));
  EXPECT_LE(j["max_abs_rel_residual"].get<double>(), 0.02);
  EXPECT_EQ(j["residuals"].size(), 48u);
  const auto e = invoke({"estimate", "--scheme", "ML-KEM-512", "--config", path.string()});
  EXPECT_EQ(e.code, 0) << e.err;
}

TEST(Cli, FitSlotComparison) {
  const auto one = json::parse(invoke({"fit", "--ifs-slots", "1"}).out);
  const auto two = json::parse(invoke({"fit", "--ifs-slots", "2"}).out);
  EXPECT_EQ(one["ifs_slots"], 1);
  EXPECT_EQ(two["ifs_slots"], 2);
  EXPECT_NEAR(one["max_abs_rel_residual"].get<double>(),
              two["max_abs_rel_residual"].get<double>(), 1e-9);
  const auto both = json::parse(invoke({"fit"}).out);
  EXPECT_EQ(both["candidates"].size(), 2u);
  EXPECT_FALSE(both["slots_distinguishable"].get<bool>());
}

TEST(Cli, SimulateTraceCountsAndDeterminism) {
  const auto t1 = scratch("t1.jsonl"), t2 = scratch("t2.jsonl");
  const auto l1 = scratch("l1.json"), l2 = scratch("l2.json");
  const auto a = invoke({"simulate", "--scheme", "ml-kem-512", "--att-mtu", "65", "--ll-pdu", "27",
                        "--seed", "7", "--trace", t1.string(), "--ledger", l1.string()});
  const auto b = invoke({"simulate", "--scheme", "ml-kem-512", "--att-mtu", "65", "--ll-pdu", "27",
                        "--seed", "7", "--trace", t2.string(), "--ledger", l2.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(t1), slurp(t2));
  EXPECT_EQ(slurp(l1), slurp(l2));

  std::istringstream lines(slurp(t1));
  std::string line;
  int data = 0, acks = 0;
  while (std::getline(lines, line)) {
    (json::parse(line)["is_ack"].get<bool>() ? acks : data)++;
  }
  EXPECT_EQ(data, 77);
  EXPECT_EQ(acks, 77);
}

TEST(Cli, SimulatePayloadSession) {
  const auto r = invoke({"simulate", "--scheme", "ml-kem-512", "--payload", "1024", "--format",
                        "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GT(j["pairing_share"].get<double>(), 0.5);
  EXPECT_NEAR(j["session_total_uJ"].get<double>(),
              j["pqke_total_uJ"].get<double>() + j["payload_uJ"].get<double>(), 1e-9);
}

TEST(Cli, ReportJson) {
  const auto r = invoke({"report", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["cells"].size(), 24u);
  EXPECT_EQ(j["sessions"].size(), 5u);
  EXPECT_FALSE(j["meta"].contains("time"));
}
