#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "singlim/io.hpp"
#include "test_util.hpp"

using namespace singlim;
using namespace singlim::testutil;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_config_error(const std::string& text, const std::string& needle) {
  try {
    (void)parse_config_text(text);
    FAIL_CHECK("expected a config error mentioning '" << needle << "'");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::path("io_test_tmp") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string simulate_config(const std::string& out_dir) {
  json j;
  j["n"] = 16;
  j["T"] = 0.1;
  j["dt"] = 0.01;
  j["master_seed"] = 7;
  j["output_dir"] = out_dir;
  j["simulate"] = {{"model", "ChAcHomotopy"},
                   {"eps", 0.2},
                   {"sigma_schedule",
                    {{"kind", "LogInverse"}, {"amplitude", 0.5}}},
                   {"snapshot_stride", 2}};
  return j.dump();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int c = 0;
  std::string line;
  while (std::getline(in, line)) ++c;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("cli_io");

TEST_CASE("config parse, serialize, reparse identity") {
  const std::string text = simulate_config("some/dir");
  auto cfg = parse_config_text(text);
  CHECK(cfg.n == 16);
  CHECK(cfg.T == 0.1);
  CHECK(cfg.dt == 0.01);
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.output_dir == "some/dir");
  REQUIRE(cfg.simulate.has_value());
  CHECK(cfg.simulate->model == Model::ChAcHomotopy);
  CHECK(cfg.simulate->eps == 0.2);
  CHECK(cfg.simulate->schedule.kind == SigmaSchedule::Kind::LogInverse);
  CHECK(cfg.simulate->schedule.amplitude == 0.5);
  CHECK(cfg.simulate->snapshot_stride == 2);
  CHECK(!cfg.study.has_value());
  CHECK(!cfg.renorm.has_value());

  const std::string s1 = serialize_config(cfg);
  const std::string s2 = serialize_config(parse_config_text(s1));
  CHECK(s1 == s2);
  CHECK(json::parse(s1) == json::parse(s2));

  // the serialized form carries everything the original specified
  auto round = json::parse(s1);
  CHECK(round["simulate"]["model"] == "ChAcHomotopy");
  CHECK(round["simulate"]["eps"] == 0.2);
}

TEST_CASE("study and renorm blocks parse") {
  json j;
  j["n"] = 16;
  j["T"] = 0.2;
  j["dt"] = 0.01;
  j["master_seed"] = 1;
  j["output_dir"] = "d";
  j["study"] = {{"mode", "theorem"},
                {"model", "AcBilaplacian"},
                {"eps_grid", {0.2, 0.1}},
                {"sigma_schedule", {{"kind", "Constant"}, {"amplitude", 0.3}}},
                {"samples", 4},
                {"gamma", 0.25},
                {"p", 6.0}};
  auto cfg = parse_config_text(j.dump());
  REQUIRE(cfg.study.has_value());
  CHECK(cfg.study->mode == "theorem");
  CHECK(cfg.study->study.model == Model::AcBilaplacian);
  CHECK(cfg.study->study.eps_grid == std::vector<double>{0.2, 0.1});
  CHECK(cfg.study->study.samples == 4);
  CHECK(cfg.study->study.gamma == 0.25);
  CHECK(cfg.study->study.p == 6.0);
  CHECK(cfg.study->study.n == 16);      // common block flows through
  CHECK(cfg.study->study.T == 0.2);
  CHECK(cfg.study->study.master_seed == 1);

  json r;
  r["n"] = 8;
  r["T"] = 0.5;
  r["dt"] = 0.001;
  r["master_seed"] = 0;
  r["output_dir"] = "d";
  r["renorm"] = {{"model", "ChAcHomotopy"},
                 {"eps_grid", {0.5, 0.25}},
                 {"sigma_schedule", {{"kind", "Constant"}, {"amplitude", 1.0}}},
                 {"deltas", {0.0, 1.0}},
                 {"estimate_c_zero", true}};
  auto rc = parse_config_text(r.dump());
  REQUIRE(rc.renorm.has_value());
  CHECK(rc.renorm->eps_grid == std::vector<double>{0.5, 0.25});
  CHECK(rc.renorm->cutoffs == std::vector<int>{8, 16, 32});  // default
  CHECK(rc.renorm->deltas == std::vector<double>{0.0, 1.0});
  CHECK(rc.renorm->c_zero_request);
}

TEST_CASE("unknown keys are rejected by name") {
  json j = json::parse(simulate_config("d"));
  j["typo_key"] = 1;
  expect_config_error(j.dump(), "typo_key");

  json k = json::parse(simulate_config("d"));
  k["simulate"]["bogus"] = true;
  expect_config_error(k.dump(), "bogus");

  json s = json::parse(simulate_config("d"));
  s["simulate"]["sigma_schedule"]["extra"] = 2;
  expect_config_error(s.dump(), "extra");
}

TEST_CASE("config validation errors") {
  auto base = [] { return json::parse(simulate_config("d")); };

  auto odd = base();
  odd["n"] = 15;
  expect_config_error(odd.dump(), "n");

  auto tiny = base();
  tiny["n"] = 4;
  expect_config_error(tiny.dump(), "n");

  auto badT = base();
  badT["T"] = -1.0;
  expect_config_error(badT.dump(), "T");

  auto badmodel = base();
  badmodel["simulate"]["model"] = "Nope";
  CHECK_THROWS_AS(parse_config_text(badmodel.dump()), ConfigError);

  auto badeps = base();
  badeps["simulate"]["eps"] = 0.6;  // out of range for ChAcHomotopy
  CHECK_THROWS_AS(parse_config_text(badeps.dump()), ConfigError);

  auto nomodel = base();
  nomodel["simulate"].erase("model");
  expect_config_error(nomodel.dump(), "model");

  auto badsnap = base();
  badsnap["simulate"]["snapshots"] = {0.05, 0.2};  // 0.2 > T
  CHECK_THROWS_AS(parse_config_text(badsnap.dump()), ConfigError);

  auto badmoll = base();
  badmoll["simulate"]["mollifier"] = "Exponential";  // ChAc takes none
  CHECK_THROWS_AS(parse_config_text(badmoll.dump()), ConfigError);

  auto badmode = base();
  badmode.erase("simulate");
  badmode["study"] = {{"mode", "wat"},
                      {"model", "ChAcHomotopy"},
                      {"eps_grid", {0.2}},
                      {"sigma_schedule",
                       {{"kind", "Constant"}, {"amplitude", 1.0}}}};
  expect_config_error(badmode.dump(), "mode");

  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_file("no_such_config.json"), ConfigError);
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
}

TEST_CASE("ndjson writer flushes, counts and checksums") {
  auto dir = fresh_dir("ndjson");
  const auto path = (dir / "rows.ndjson").string();
  NdjsonWriter w(path);
  w.write_line("{\"a\":1}");
  w.write_line("{\"b\":2}");

  // visible on disk immediately, one object per line
  CHECK(count_lines(dir / "rows.ndjson") == 2);
  CHECK(w.lines() == 2);

  const std::string bytes = "{\"a\":1}\n{\"b\":2}\n";
  CHECK(w.checksum() == fnv1a64(bytes.data(), bytes.size()));
  CHECK(slurp(dir / "rows.ndjson") == bytes);
}

TEST_CASE("field dump, load and csv export") {
  auto dir = fresh_dir("fields");
  auto g = make_grid(8);
  auto f = random_real_field(g, 5);
  const auto base = (dir / "snap").string();
  dump_field(f, base, 0.25, "AcBilaplacian", 0.3, 12);
  CHECK(fs::exists(dir / "snap.f64"));
  CHECK(fs::exists(dir / "snap.meta"));
  CHECK(fs::file_size(dir / "snap.f64") == 64 * sizeof(double));

  auto back = load_field(base, g);
  CHECK(back.values == f.values);  // bitwise

  const std::string meta = slurp(dir / "snap.meta");
  CHECK(meta.find("AcBilaplacian") != std::string::npos);

  auto g16 = make_grid(16);
  CHECK_THROWS(load_field(base, g16));
  CHECK_THROWS(load_field((dir / "missing").string(), g));

  export_csv(f, (dir / "snap.csv").string());
  CHECK(count_lines(dir / "snap.csv") == 65);  // header + 64 samples
}

TEST_CASE("manifest write is atomic and json-parseable") {
  auto dir = fresh_dir("manifest");
  Manifest m;
  m.version = "0.1.0";
  m.command = "renorm";
  m.status = "complete";
  m.started = "2026-01-01T00:00:00Z";
  m.finished = "2026-01-01T00:00:05Z";
  m.resolved_config_json = "{\"n\":8}";
  m.workers = 2;
  m.workers_source = "env";
  m.outputs.push_back({"c_eps.ndjson", "00000000deadbeef", 3});
  write_manifest(dir.string(), m);

  CHECK(fs::exists(dir / "manifest.json"));
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().filename() == "manifest.json");  // no temp leftovers
  }
  auto j = json::parse(slurp(dir / "manifest.json"));
  CHECK(j["version"] == "0.1.0");
  CHECK(j["command"] == "renorm");
  CHECK(j["status"] == "complete");
  CHECK(j["workers"] == 2);
  CHECK(j["workers_source"] == "env");
  REQUIRE(j["outputs"].size() == 1);
  CHECK(j["outputs"][0]["path"] == "c_eps.ndjson");
  CHECK(j["outputs"][0]["lines"] == 3);
  CHECK(j["resolved_config"]["n"] == 8);
}

TEST_CASE("worker resolution precedence") {
  unsetenv("SINGLIM_WORKERS");
  CmdOptions flag;
  flag.workers = 5;
  resolve_workers(flag);
  CHECK(flag.workers == 5);
  CHECK(flag.workers_source == "flag");

  setenv("SINGLIM_WORKERS", "3", 1);
  CmdOptions env;
  resolve_workers(env);
  CHECK(env.workers == 3);
  CHECK(env.workers_source == "env");

  setenv("SINGLIM_WORKERS", "3", 1);
  CmdOptions both;
  both.workers = 2;
  resolve_workers(both);
  CHECK(both.workers == 2);
  CHECK(both.workers_source == "flag");

  unsetenv("SINGLIM_WORKERS");
  CmdOptions def;
  resolve_workers(def);
  CHECK(def.workers >= 1);
  CHECK(def.workers_source == "default");
}

TEST_CASE("cmd_renorm end to end") {
  auto dir = fresh_dir("cmd_renorm");
  auto cfgdir = fresh_dir("cmd_renorm_cfg");
  json j;
  j["n"] = 8;
  j["T"] = 0.5;
  j["dt"] = 0.001;
  j["master_seed"] = 0;
  j["output_dir"] = dir.string();
  j["renorm"] = {{"model", "ChAcHomotopy"},
                 {"eps_grid", {0.5}},
                 {"sigma_schedule", {{"kind", "Constant"}, {"amplitude", 1.0}}},
                 {"cutoffs", {1, 8}},
                 {"deltas", json::array()},
                 {"estimate_c_zero", false}};
  const auto cfg_path = (cfgdir / "cfg.json").string();
  std::ofstream(cfg_path) << j.dump();

  CmdOptions opts;
  opts.config_path = cfg_path;
  opts.workers = 1;
  opts.workers_source = "flag";
  CHECK(cmd_renorm(opts) == 0);

  REQUIRE(fs::exists(dir / "c_eps.ndjson"));
  bool found = false;
  std::ifstream rows(dir / "c_eps.ndjson");
  std::string line;
  while (std::getline(rows, line)) {
    auto row = json::parse(line);
    if (row["K"] == 1) {
      CHECK(std::abs(double(row["c_eps"]) - 8.0 / 3.0) <= 1e-12);
      CHECK(row["model"] == "ChAcHomotopy");
      CHECK(row["eps"] == 0.5);
      found = true;
    }
  }
  CHECK(found);

  auto man = json::parse(slurp(dir / "manifest.json"));
  CHECK(man["status"] == "complete");
  CHECK(man["command"] == "renorm");
  bool listed = false;
  for (const auto& out : man["outputs"]) {
    if (out["path"] == "c_eps.ndjson") {
      listed = true;
      const std::string bytes = slurp(dir / "c_eps.ndjson");
      char hex[32];
      snprintf(hex, sizeof hex, "%016llx",
               (unsigned long long)fnv1a64(bytes.data(), bytes.size()));
      CHECK(out["checksum_fnv1a64"] == std::string(hex));
      CHECK(int(out["lines"]) == count_lines(dir / "c_eps.ndjson"));
    }
  }
  CHECK(listed);

  // an existing manifest refuses to be clobbered without force
  CHECK(cmd_renorm(opts) == 2);
  opts.force = true;
  CHECK(cmd_renorm(opts) == 0);
}

TEST_CASE("cmd_simulate determinism and refusal paths") {
  auto d1 = fresh_dir("sim1");
  auto d2 = fresh_dir("sim2");
  auto cfgdir = fresh_dir("sim_cfg");

  auto write_cfg = [&](const fs::path& dir, const std::string& name) {
    const auto p = (cfgdir / name).string();
    std::ofstream(p) << simulate_config(dir.string());
    return p;
  };

  CmdOptions o1;
  o1.config_path = write_cfg(d1, "a.json");
  o1.workers = 1;
  CHECK(cmd_simulate(o1) == 0);
  CmdOptions o2;
  o2.config_path = write_cfg(d2, "b.json");
  o2.workers = 1;
  CHECK(cmd_simulate(o2) == 0);

  REQUIRE(fs::exists(d1 / "norms_u.ndjson"));
  REQUIRE(fs::exists(d1 / "norms_z.ndjson"));
  CHECK(slurp(d1 / "norms_u.ndjson") == slurp(d2 / "norms_u.ndjson"));
  CHECK(slurp(d1 / "norms_z.ndjson") == slurp(d2 / "norms_z.ndjson"));

  // rows carry the advertised norm columns
  std::ifstream rows(d1 / "norms_u.ndjson");
  std::string line;
  int nrows = 0;
  double prev_t = -1.0;
  while (std::getline(rows, line)) {
    auto row = json::parse(line);
    CHECK(row.contains("t"));
    CHECK(row.contains("l2"));
    CHECK(row.contains("h_minus1"));
    CHECK(row.contains("sup"));
    CHECK(double(row["t"]) > prev_t);
    prev_t = row["t"];
    ++nrows;
  }
  CHECK(nrows == 6);  // T = 0.1, dt = 0.01, stride 2 plus endpoints

  auto man = json::parse(slurp(d1 / "manifest.json"));
  CHECK(man["status"] == "complete");
  CHECK(man["workers"] == 1);

  // missing block
  json bad = json::parse(simulate_config(d1.string()));
  bad.erase("simulate");
  const auto badp = (cfgdir / "bad.json").string();
  std::ofstream(badp) << bad.dump();
  CmdOptions ob;
  ob.config_path = badp;
  ob.workers = 1;
  ob.force = true;
  CHECK(cmd_simulate(ob) == 2);
}

TEST_CASE("cmd_simulate field dumps at requested times") {
  auto dir = fresh_dir("sim_dump");
  auto cfgdir = fresh_dir("sim_dump_cfg");
  json j = json::parse(simulate_config(dir.string()));
  j["simulate"]["dump_fields"] = true;
  j["simulate"]["snapshots"] = {0.05, 0.1};
  const auto p = (cfgdir / "c.json").string();
  std::ofstream(p) << j.dump();

  CmdOptions o;
  o.config_path = p;
  o.workers = 1;
  REQUIRE(cmd_simulate(o) == 0);

  int f64 = 0, meta = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    f64 += ext == ".f64";
    meta += ext == ".meta";
  }
  CHECK(f64 == 4);  // u and z at two times
  CHECK(meta == 4);
}

TEST_CASE("cmd_study produces records, residuals and summaries") {
  auto dir = fresh_dir("studyd");
  auto cfgdir = fresh_dir("study_cfg");
  json j;
  j["n"] = 16;
  j["T"] = 0.1;
  j["dt"] = 0.01;
  j["master_seed"] = 2;
  j["output_dir"] = dir.string();
  j["study"] = {{"mode", "convergence"},
                {"model", "ChAcHomotopy"},
                {"eps_grid", {0.2, 0.1}},
                {"sigma_schedule",
                 {{"kind", "LogInverse"}, {"amplitude", 0.5}}},
                {"samples", 3},
                {"c_zero", 0.05}};
  const auto p = (cfgdir / "s.json").string();
  std::ofstream(p) << j.dump();

  CmdOptions o;
  o.config_path = p;
  o.workers = 1;
  REQUIRE(cmd_study(o) == 0);

  CHECK(count_lines(dir / "records.ndjson") == 6);
  CHECK(count_lines(dir / "residuals.ndjson") == 6);
  CHECK(count_lines(dir / "summary.csv") == 3);  // header + one row per eps

  std::ifstream rows(dir / "residuals.ndjson");
  std::string line;
  while (std::getline(rows, line)) {
    auto row = json::parse(line);
    CHECK(row.contains("model"));
    CHECK(row.contains("eps"));
    CHECK(row.contains("seed"));
    CHECK(row.contains("term1"));
    CHECK(row.contains("term2"));
    CHECK(row.contains("term3"));
    CHECK(row["term3_parts"].contains("z"));
    CHECK(row["term3_parts"].contains("u2z"));
    CHECK(row["term3_parts"].contains("u_wick"));
    CHECK(row["term3_parts"].contains("z3"));
    CHECK(row.contains("sup_error"));
    const double se = row["sup_error"];
    CHECK(se >= 0.0);
  }

  // duplicate directory refusal without --force
  CHECK(cmd_study(o) == 2);
  o.force = true;
  CHECK(cmd_study(o) == 0);

  // theorem mode emits its report
  auto tdir = fresh_dir("studyt");
  json t = j;
  t["output_dir"] = tdir.string();
  t["study"]["mode"] = "theorem";
  t["study"]["samples"] = 3;
  const auto tp = (cfgdir / "t.json").string();
  std::ofstream(tp) << t.dump();
  CmdOptions ot;
  ot.config_path = tp;
  ot.workers = 1;
  REQUIRE(cmd_study(ot) == 0);
  auto trep = json::parse(slurp(tdir / "theorem_report.json"));
  CHECK(trep.contains("big_k"));
  CHECK(trep.contains("per_eps"));
  CHECK(trep.contains("implication_rate"));

  // regimes mode emits report and csv
  auto rdir = fresh_dir("studyr");
  json r = j;
  r["output_dir"] = rdir.string();
  r["study"]["mode"] = "regimes";
  r["study"]["samples"] = 8;
  const auto rp = (cfgdir / "r.json").string();
  std::ofstream(rp) << r.dump();
  CmdOptions orr;
  orr.config_path = rp;
  orr.workers = 1;
  REQUIRE(cmd_study(orr) == 0);
  CHECK(fs::exists(rdir / "regimes_report.json"));
  CHECK(fs::exists(rdir / "regimes.csv"));
  auto rrep = json::parse(slurp(rdir / "regimes_report.json"));
  CHECK(rrep["entries"].size() == 3);
}

TEST_CASE("out dir flag overrides the config") {
  auto dir = fresh_dir("override_ignored");
  auto real_dir = fresh_dir("override_used");
  fs::remove_all(real_dir);
  auto cfgdir = fresh_dir("override_cfg");
  const auto p = (cfgdir / "c.json").string();
  std::ofstream(p) << simulate_config(dir.string());

  CmdOptions o;
  o.config_path = p;
  o.out_dir = real_dir.string();
  o.workers = 1;
  REQUIRE(cmd_simulate(o) == 0);
  CHECK(fs::exists(real_dir / "manifest.json"));
  CHECK(!fs::exists(dir / "manifest.json"));
}

TEST_SUITE_END();
