#include "singlim/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "singlim/analysis.hpp"
#include "singlim/renorm.hpp"
#include "singlim/rng.hpp"
#include "singlim/solver.hpp"
#include "singlim/version.hpp"

namespace singlim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail("unknown key '" + it.key() + "' in " + where);
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_num(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where + " must be an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where + " must be a boolean");
  return v.get<bool>();
}

std::string as_str(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where + " must be a string");
  return v.get<std::string>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return std::uint64_t(v.get<long long>());
  fail(where + " must be a nonnegative integer");
}

std::vector<double> as_num_array(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_num(e, where + " entries"));
  return out;
}

double opt_num(const json& o, const char* key, double dflt,
               const std::string& where) {
  const json* v = find(o, key);
  return v ? as_num(*v, where + "." + key) : dflt;
}

int opt_int(const json& o, const char* key, int dflt,
            const std::string& where) {
  const json* v = find(o, key);
  return v ? as_int(*v, where + "." + key) : dflt;
}

bool opt_bool(const json& o, const char* key, bool dflt,
              const std::string& where) {
  const json* v = find(o, key);
  return v ? as_bool(*v, where + "." + key) : dflt;
}

Model parse_model(const json& o, const std::string& where) {
  const json* v = find(o, "model");
  if (!v) fail(where + " needs a model");
  try {
    return model_from_name(as_str(*v, where + ".model"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

SigmaSchedule parse_schedule(const json& o, const std::string& where) {
  check_keys(o, where, {"kind", "amplitude", "exponent"});
  SigmaSchedule s;
  if (const json* v = find(o, "kind")) {
    try {
      s.kind = schedule_kind_from_name(as_str(*v, where + ".kind"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(where + ": " + e.what());
    }
  }
  s.amplitude = opt_num(o, "amplitude", s.amplitude, where);
  if (s.amplitude < 0) fail(where + ".amplitude must be >= 0");
  s.exponent = opt_num(o, "exponent", s.exponent, where);
  return s;
}

Mollifier parse_mollifier(const json& v, const std::string& where) {
  try {
    return mollifier_from_name(as_str(v, where));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

Scheme parse_scheme(const json& v, const std::string& where) {
  try {
    return scheme_from_name(as_str(v, where));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

const char* initial_kind_name(InitialData::Kind k) {
  switch (k) {
    case InitialData::Kind::Cosine: return "Cosine";
    case InitialData::Kind::Constant: return "Constant";
    case InitialData::Kind::Zero: return "Zero";
    case InitialData::Kind::File: return "File";
  }
  return "Cosine";
}

InitialData parse_initial(const json& o, const std::string& where) {
  check_keys(o, where, {"kind", "a1", "a2", "value", "path"});
  InitialData init;
  if (const json* v = find(o, "kind")) {
    const std::string s = as_str(*v, where + ".kind");
    if (s == "Cosine") init.kind = InitialData::Kind::Cosine;
    else if (s == "Constant") init.kind = InitialData::Kind::Constant;
    else if (s == "Zero") init.kind = InitialData::Kind::Zero;
    else if (s == "File") init.kind = InitialData::Kind::File;
    else fail(where + ".kind: unknown initial kind '" + s + "'");
  }
  init.a1 = opt_num(o, "a1", init.a1, where);
  init.a2 = opt_num(o, "a2", init.a2, where);
  init.value = opt_num(o, "value", init.value, where);
  if (const json* v = find(o, "path")) init.path = as_str(*v, where + ".path");
  if (init.kind == InitialData::Kind::File && init.path.empty())
    fail(where + ": a File initial needs a path");
  return init;
}

void validate_spec(Model model, double eps, const SigmaSchedule& schedule,
                   Mollifier moll, double c_zero, bool zero_k0,
                   const std::string& where) {
  try {
    (void)make_spec(model, eps, schedule(eps), moll, c_zero, zero_k0);
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

SimulateBlock parse_simulate(const json& o, const RunConfigFile& cfg) {
  check_keys(o, "simulate",
             {"model", "eps", "sigma_schedule", "mollifier", "c_zero",
              "initial", "scheme", "snapshot_stride", "snapshots",
              "dump_fields", "zero_k0"});
  SimulateBlock b;
  b.model = parse_model(o, "simulate");
  b.eps = opt_num(o, "eps", b.eps, "simulate");
  if (const json* v = find(o, "sigma_schedule"))
    b.schedule = parse_schedule(*v, "simulate.sigma_schedule");
  if (const json* v = find(o, "mollifier"))
    b.mollifier = parse_mollifier(*v, "simulate.mollifier");
  b.c_zero = opt_num(o, "c_zero", b.c_zero, "simulate");
  if (const json* v = find(o, "initial"))
    b.initial = parse_initial(*v, "simulate.initial");
  if (const json* v = find(o, "scheme"))
    b.scheme = parse_scheme(*v, "simulate.scheme");
  b.snapshot_stride = opt_int(o, "snapshot_stride", b.snapshot_stride,
                              "simulate");
  if (b.snapshot_stride < 1) fail("simulate.snapshot_stride must be >= 1");
  if (const json* v = find(o, "snapshots")) {
    b.snapshots = as_num_array(*v, "simulate.snapshots");
    for (double t : b.snapshots) {
      if (t < 0.0 || t > cfg.T)
        fail("simulate.snapshots must lie inside [0, T]");
      const double q = t / cfg.dt;
      if (std::abs(q - std::llround(q)) > 1e-9 * std::max(1.0, q))
        fail("simulate.snapshots must be multiples of dt");
    }
  }
  b.dump_fields = opt_bool(o, "dump_fields", b.dump_fields, "simulate");
  b.zero_k0 = opt_bool(o, "zero_k0", b.zero_k0, "simulate");
  validate_spec(b.model, b.eps, b.schedule, b.mollifier, b.c_zero, b.zero_k0,
                "simulate");
  return b;
}

StudyBlock parse_study(const json& o, const RunConfigFile& cfg) {
  check_keys(o, "study",
             {"mode", "model", "eps_grid", "sigma_schedule", "mollifier",
              "c_zero", "samples", "gamma", "big_k", "p", "initial", "scheme",
              "snapshot_stride", "zero_k0"});
  StudyBlock b;
  if (const json* v = find(o, "mode")) b.mode = as_str(*v, "study.mode");
  if (b.mode != "convergence" && b.mode != "theorem" && b.mode != "regimes")
    fail("study.mode must be one of convergence, theorem, regimes");
  StudyConfig& s = b.study;
  s.n = cfg.n;
  s.T = cfg.T;
  s.dt = cfg.dt;
  s.master_seed = cfg.master_seed;
  s.model = parse_model(o, "study");
  if (const json* v = find(o, "eps_grid"))
    s.eps_grid = as_num_array(*v, "study.eps_grid");
  if (s.eps_grid.empty()) fail("study needs a nonempty eps_grid");
  for (std::size_t i = 1; i < s.eps_grid.size(); ++i)
    if (!(s.eps_grid[i] < s.eps_grid[i - 1]))
      fail("study.eps_grid must be strictly decreasing");
  if (const json* v = find(o, "sigma_schedule"))
    s.schedule = parse_schedule(*v, "study.sigma_schedule");
  if (const json* v = find(o, "mollifier"))
    s.mollifier = parse_mollifier(*v, "study.mollifier");
  if (const json* v = find(o, "c_zero")) {
    const double c = as_num(*v, "study.c_zero");
    if (c < 0) fail("study.c_zero must be >= 0");
    s.c_zero = c;
  }
  s.samples = opt_int(o, "samples", s.samples, "study");
  if (s.samples < 1) fail("study.samples must be >= 1");
  s.gamma = opt_num(o, "gamma", s.gamma, "study");
  if (s.gamma < 0) fail("study.gamma must be >= 0");
  s.big_k = opt_num(o, "big_k", s.big_k, "study");
  if (s.big_k < 0) fail("study.big_k must be >= 0");
  s.p = opt_num(o, "p", s.p, "study");
  if (s.p < 1) fail("study.p must be >= 1");
  if (const json* v = find(o, "initial"))
    s.initial = parse_initial(*v, "study.initial");
  if (const json* v = find(o, "scheme"))
    s.scheme = parse_scheme(*v, "study.scheme");
  s.snapshot_stride = opt_int(o, "snapshot_stride", s.snapshot_stride,
                              "study");
  if (s.snapshot_stride < 1) fail("study.snapshot_stride must be >= 1");
  s.zero_k0 = opt_bool(o, "zero_k0", s.zero_k0, "study");
  for (double eps : s.eps_grid)
    validate_spec(s.model, eps, s.schedule, s.mollifier, s.c_zero.value_or(0.0),
                  s.zero_k0, "study");
  return b;
}

RenormBlock parse_renorm(const json& o) {
  check_keys(o, "renorm",
             {"model", "eps_grid", "sigma_schedule", "cutoffs", "deltas",
              "estimate_c_zero"});
  RenormBlock b;
  b.model = parse_model(o, "renorm");
  if (const json* v = find(o, "eps_grid"))
    b.eps_grid = as_num_array(*v, "renorm.eps_grid");
  if (b.eps_grid.empty()) fail("renorm needs a nonempty eps_grid");
  for (double eps : b.eps_grid)
    if (!(eps > 0.0) || eps > 1.0)
      fail("renorm.eps_grid entries must lie in (0, 1]");
  if (const json* v = find(o, "sigma_schedule"))
    b.schedule = parse_schedule(*v, "renorm.sigma_schedule");
  if (const json* v = find(o, "cutoffs")) {
    if (!v->is_array()) fail("renorm.cutoffs must be an array of integers");
    for (const auto& e : *v) b.cutoffs.push_back(as_int(e, "renorm.cutoffs"));
  } else {
    b.cutoffs = {8, 16, 32};
  }
  for (int k : b.cutoffs)
    if (k < 0) fail("renorm.cutoffs must be >= 0");
  if (const json* v = find(o, "deltas"))
    b.deltas = as_num_array(*v, "renorm.deltas");
  for (double d : b.deltas)
    if (d < 0.0 || d >= 2.0) fail("renorm.deltas must lie in [0, 2)");
  b.c_zero_request = opt_bool(o, "estimate_c_zero", false, "renorm");
  if (b.model == Model::AcMollifiedNoise &&
      (!b.deltas.empty() || b.c_zero_request))
    fail("renorm: deltas and estimate_c_zero need eps-dissipation "
         "(ChAcHomotopy or AcBilaplacian)");
  if (!b.deltas.empty() && b.eps_grid.size() < 2)
    fail("renorm.deltas need at least two eps_grid points");
  if (b.c_zero_request)
    for (std::size_t i = 1; i < b.eps_grid.size(); ++i)
      if (!(b.eps_grid[i] < b.eps_grid[i - 1]))
        fail("renorm.estimate_c_zero needs a strictly decreasing eps_grid");
  return b;
}

RunConfigFile parse_config_json(const json& j) {
  if (!j.is_object()) fail("config root must be a JSON object");
  check_keys(j, "config",
             {"n", "T", "dt", "master_seed", "output_dir", "simulate", "study",
              "renorm"});
  RunConfigFile cfg;
  cfg.n = opt_int(j, "n", cfg.n, "config");
  if (cfg.n < 8 || cfg.n % 2 != 0)
    fail("n must be an even integer of at least 8");
  cfg.T = opt_num(j, "T", cfg.T, "config");
  if (!(cfg.T > 0)) fail("T must be positive");
  cfg.dt = opt_num(j, "dt", cfg.dt, "config");
  const double q = cfg.T / cfg.dt;
  if (!(cfg.dt > 0) || cfg.dt > cfg.T ||
      std::abs(q - double(std::llround(q))) > 1e-9 * std::max(1.0, q))
    fail("dt must be positive, at most T, and divide T into whole steps");
  if (const json* v = find(j, "master_seed"))
    cfg.master_seed = as_u64(*v, "master_seed");
  if (const json* v = find(j, "output_dir"))
    cfg.output_dir = as_str(*v, "output_dir");
  if (cfg.output_dir.empty()) fail("output_dir must be a nonempty string");

  const json* sim = find(j, "simulate");
  const json* study = find(j, "study");
  const json* renorm = find(j, "renorm");
  const int blocks = (sim != nullptr) + (study != nullptr) + (renorm != nullptr);
  if (blocks != 1)
    fail("config needs exactly one of the simulate, study or renorm blocks");
  if (sim) cfg.simulate = parse_simulate(*sim, cfg);
  if (study) cfg.study = parse_study(*study, cfg);
  if (renorm) cfg.renorm = parse_renorm(*renorm);
  return cfg;
}

json schedule_json(const SigmaSchedule& s) {
  json j;
  j["kind"] = schedule_kind_name(s.kind);
  j["amplitude"] = s.amplitude;
  j["exponent"] = s.exponent;
  return j;
}

json initial_json(const InitialData& i) {
  json j;
  j["kind"] = initial_kind_name(i.kind);
  j["a1"] = i.a1;
  j["a2"] = i.a2;
  j["value"] = i.value;
  j["path"] = i.path;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int report_error(const char* kind, const std::string& msg, int code) {
  json j;
  j["error"] = kind;
  j["message"] = msg;
  std::cerr << j.dump() << std::endl;
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return report_error("config", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 1);
  }
}

RunConfigFile load_config(const CmdOptions& opts) {
  if (opts.config_path.empty()) fail("a --config file is required");
  return parse_config_file(opts.config_path);
}

fs::path prepare_run_dir(RunConfigFile& cfg, const CmdOptions& opts) {
  const fs::path dir =
      opts.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opts.out_dir);
  cfg.output_dir = dir.string();
  if (fs::exists(dir / "manifest.json") && !opts.force)
    fail("output directory '" + dir.string() +
         "' already holds a manifest.json (pass --force to overwrite)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail("cannot create output directory '" + dir.string() +
         "': " + ec.message());
  return dir;
}

Manifest start_manifest(const std::string& command, const RunConfigFile& cfg,
                        const CmdOptions& opts) {
  Manifest m;
  m.version = kVersion;
  m.command = command;
  m.status = "incomplete";
  m.started = iso_utc_now();
  m.resolved_config_json = serialize_config(cfg);
  m.workers = opts.workers;
  m.workers_source = opts.workers_source;
  return m;
}

void finish_manifest(const fs::path& dir, Manifest& m) {
  m.status = "complete";
  m.finished = iso_utc_now();
  write_manifest(dir.string(), m);
}

ManifestOutput writer_output(const NdjsonWriter& w, const std::string& name) {
  ManifestOutput o;
  o.path = name;
  o.checksum_fnv1a64 = hex64(w.checksum());
  o.lines = w.lines();
  return o;
}

ManifestOutput write_text_file(const fs::path& dir, const std::string& name,
                               const std::string& content) {
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + name + "' for writing");
  out << content;
  ManifestOutput o;
  o.path = name;
  o.checksum_fnv1a64 = hex64(fnv1a64(content.data(), content.size()));
  o.lines = std::size_t(std::count(content.begin(), content.end(), '\n'));
  return o;
}

CmdOptions resolved(const CmdOptions& opts) {
  CmdOptions local = opts;
  if (local.workers <= 0) resolve_workers(local);
  return local;
}

std::string norm_row(double t, const SpectralField& u) {
  json j;
  j["t"] = t;
  j["l2"] = l2_norm(u);
  j["h_minus1"] = sobolev_norm(u, -1.0);
  j["sup"] = sup_norm(u);
  return j.dump();
}

json wilson_json(const WilsonInterval& w) {
  json j;
  j["p_hat"] = w.p_hat;
  j["lo"] = w.lo;
  j["hi"] = w.hi;
  j["successes"] = w.successes;
  j["trials"] = w.trials;
  return j;
}

json record_json(const RunRecord& r) {
  json j;
  j["model"] = model_name(r.model);
  j["eps"] = r.eps;
  j["seed"] = r.seed;
  j["sup_error_sq"] = r.sup_error_sq;
  j["term1"] = r.term1;
  j["term2"] = r.term2;
  j["term3"] = r.term3;
  j["res_total"] = r.res_total;
  j["part_z"] = r.part_z;
  j["part_u2z"] = r.part_u2z;
  j["part_u_wick"] = r.part_u_wick;
  j["part_z3"] = r.part_z3;
  j["z_sup_c0"] = r.z_sup_c0;
  j["z_lp_hm1_sq"] = r.z_lp_hm1_sq;
  j["wick_lp_hm1_sq"] = r.wick_lp_hm1_sq;
  j["z3_l2_hm1_sq"] = r.z3_l2_hm1_sq;
  j["z_l6_6"] = r.z_l6_6;
  j["gamma"] = r.gamma;
  j["big_k"] = r.big_k;
  json ev;
  ev["err"] = r.events.err;
  ev["z_c0"] = r.events.z_c0;
  ev["z_wick"] = r.events.z_wick;
  ev["z_lp"] = r.events.z_lp;
  ev["z_cube"] = r.events.z_cube;
  ev["z_l6"] = r.events.z_l6;
  ev["res"] = r.events.res;
  ev["eps_small_ok"] = r.events.eps_small_ok;
  j["events"] = ev;
  return j;
}

json residual_json(const RunRecord& r) {
  json j;
  j["model"] = model_name(r.model);
  j["eps"] = r.eps;
  j["seed"] = r.seed;
  j["term1"] = r.term1;
  j["term2"] = r.term2;
  j["term3"] = r.term3;
  json parts;
  parts["z"] = r.part_z;
  parts["u2z"] = r.part_u2z;
  parts["u_wick"] = r.part_u_wick;
  parts["z3"] = r.part_z3;
  j["term3_parts"] = parts;
  j["sup_error"] = std::sqrt(r.sup_error_sq);
  return j;
}

std::string summary_csv(const StudyResult& res) {
  std::ostringstream out;
  out << "eps,sigma,gamma,median_sup_error,q90_sup_error,p_err,p_err_lo,"
         "p_err_hi,p_z_c0,p_z_wick,p_z_lp,p_z_cube,p_z_l6,p_res\n";
  for (const auto& s : res.summary) {
    out << g17(s.eps) << ',' << g17(s.sigma) << ',' << g17(s.gamma) << ','
        << g17(s.median_sup_error) << ',' << g17(s.q90_sup_error) << ','
        << g17(s.p_err.p_hat) << ',' << g17(s.p_err.lo) << ','
        << g17(s.p_err.hi) << ',' << g17(s.p_z_c0.p_hat) << ','
        << g17(s.p_z_wick.p_hat) << ',' << g17(s.p_z_lp.p_hat) << ','
        << g17(s.p_z_cube.p_hat) << ',' << g17(s.p_z_l6.p_hat) << ','
        << g17(s.p_res.p_hat) << '\n';
  }
  return out.str();
}

json theorem_json(const TheoremReport& r) {
  json j;
  j["big_k"] = r.big_k;
  j["c_implication"] = r.c_implication;
  j["implication_rate"] = r.implication_rate;
  j["implication_quiet"] = r.implication_quiet;
  j["holds"] = r.holds;
  j["per_eps"] = json::array();
  for (const auto& e : r.per_eps) {
    json p;
    p["eps"] = e.eps;
    p["gamma"] = e.gamma;
    p["lhs"] = wilson_json(e.lhs);
    p["rhs_z_c0"] = wilson_json(e.rhs_z_c0);
    p["rhs_init"] = wilson_json(e.rhs_init);
    p["rhs_res"] = wilson_json(e.rhs_res);
    p["rhs_sum"] = e.rhs_sum;
    p["joint_width"] = e.joint_width;
    p["holds"] = e.holds;
    p["eps_small_ok"] = e.eps_small_ok;
    j["per_eps"].push_back(p);
  }
  return j;
}

json regime_report_json(const RegimeReport& r) {
  json j;
  j["entries"] = json::array();
  for (const auto& e : r.entries) {
    json entry;
    entry["schedule"] = schedule_json(e.schedule);
    entry["c_zero_tag"] = c_zero_tag_name(e.c_zero_tag);
    entry["c_zero_value"] = e.c_zero_value;
    entry["points"] = json::array();
    for (const auto& p : e.points) {
      json pt;
      pt["eps"] = p.eps;
      pt["sigma"] = p.sigma;
      pt["l2_exact"] = p.l2_exact;
      pt["l2_mc"] = p.l2_mc;
      pt["l2_se"] = p.l2_se;
      pt["hm1_exact"] = p.hm1_exact;
      pt["hm1_mc"] = p.hm1_mc;
      pt["hm1_se"] = p.hm1_se;
      entry["points"].push_back(pt);
    }
    entry["hm1_bound"] = e.hm1_bound;
    entry["l2_increasing"] = e.l2_increasing;
    entry["hm1_bounded"] = e.hm1_bounded;
    entry["error_medians"] = e.error_medians;
    entry["error_decreasing"] = e.error_decreasing;
    j["entries"].push_back(entry);
  }
  return j;
}

std::string regimes_csv(const RegimeReport& r) {
  std::ostringstream out;
  out << "schedule,eps,sigma,l2_exact,l2_mc,l2_se,hm1_exact,hm1_mc,hm1_se\n";
  for (const auto& e : r.entries)
    for (const auto& p : e.points)
      out << schedule_kind_name(e.schedule.kind) << ',' << g17(p.eps) << ','
          << g17(p.sigma) << ',' << g17(p.l2_exact) << ',' << g17(p.l2_mc)
          << ',' << g17(p.l2_se) << ',' << g17(p.hm1_exact) << ','
          << g17(p.hm1_mc) << ',' << g17(p.hm1_se) << '\n';
  return out.str();
}

}  // namespace

RunConfigFile parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j);
}

RunConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfigFile& cfg) {
  json j;
  j["n"] = cfg.n;
  j["T"] = cfg.T;
  j["dt"] = cfg.dt;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  if (cfg.simulate) {
    const SimulateBlock& b = *cfg.simulate;
    json s;
    s["model"] = model_name(b.model);
    s["eps"] = b.eps;
    s["sigma_schedule"] = schedule_json(b.schedule);
    s["mollifier"] = mollifier_name(b.mollifier);
    s["c_zero"] = b.c_zero;
    s["initial"] = initial_json(b.initial);
    s["scheme"] = scheme_name(b.scheme);
    s["snapshot_stride"] = b.snapshot_stride;
    s["snapshots"] = b.snapshots;
    s["dump_fields"] = b.dump_fields;
    s["zero_k0"] = b.zero_k0;
    j["simulate"] = s;
  }
  if (cfg.study) {
    const StudyBlock& b = *cfg.study;
    json s;
    s["mode"] = b.mode;
    s["model"] = model_name(b.study.model);
    s["eps_grid"] = b.study.eps_grid;
    s["sigma_schedule"] = schedule_json(b.study.schedule);
    s["mollifier"] = mollifier_name(b.study.mollifier);
    if (b.study.c_zero) s["c_zero"] = *b.study.c_zero;
    s["samples"] = b.study.samples;
    s["gamma"] = b.study.gamma;
    s["big_k"] = b.study.big_k;
    s["p"] = b.study.p;
    s["initial"] = initial_json(b.study.initial);
    s["scheme"] = scheme_name(b.study.scheme);
    s["snapshot_stride"] = b.study.snapshot_stride;
    s["zero_k0"] = b.study.zero_k0;
    j["study"] = s;
  }
  if (cfg.renorm) {
    const RenormBlock& b = *cfg.renorm;
    json s;
    s["model"] = model_name(b.model);
    s["eps_grid"] = b.eps_grid;
    s["sigma_schedule"] = schedule_json(b.schedule);
    s["cutoffs"] = b.cutoffs;
    s["deltas"] = b.deltas;
    s["estimate_c_zero"] = b.c_zero_request;
    j["renorm"] = s;
  }
  return j.dump();
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

NdjsonWriter::NdjsonWriter(const std::string& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_)
    throw std::runtime_error("cannot open '" + path + "' for writing");
}

void NdjsonWriter::write_line(const std::string& json_object) {
  std::lock_guard<std::mutex> lock(mu_);
  out_ << json_object << '\n';
  out_.flush();
  checksum_ = fnv1a64(json_object.data(), json_object.size(), checksum_);
  const char nl = '\n';
  checksum_ = fnv1a64(&nl, 1, checksum_);
  ++lines_;
}

void write_manifest(const std::string& dir, const Manifest& m) {
  json j;
  j["version"] = m.version;
  j["command"] = m.command;
  j["status"] = m.status;
  j["started"] = m.started;
  j["finished"] = m.finished;
  json rc = json::object();
  if (!m.resolved_config_json.empty()) {
    try {
      rc = json::parse(m.resolved_config_json);
    } catch (const json::exception&) {
      rc = m.resolved_config_json;
    }
  }
  j["resolved_config"] = rc;
  j["workers"] = m.workers;
  j["workers_source"] = m.workers_source;
  j["outputs"] = json::array();
  for (const auto& o : m.outputs) {
    json e;
    e["path"] = o.path;
    e["checksum_fnv1a64"] = o.checksum_fnv1a64;
    e["lines"] = o.lines;
    j["outputs"].push_back(e);
  }
  const fs::path target = fs::path(dir) / "manifest.json";
  const fs::path tmp = fs::path(dir) / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write manifest in '" + dir + "'");
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, target);
}

void resolve_workers(CmdOptions& opts) {
  if (opts.workers > 0) {
    opts.workers_source = "flag";
    return;
  }
  if (const char* env = std::getenv("SINGLIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) {
      opts.workers = int(v);
      opts.workers_source = "env";
      return;
    }
  }
  const unsigned hc = std::thread::hardware_concurrency();
  opts.workers = hc > 0 ? int(hc) : 1;
  opts.workers_source = "default";
}

int cmd_simulate(const CmdOptions& opts) {
  return guarded([&] {
    const CmdOptions local = resolved(opts);
    RunConfigFile cfg = load_config(local);
    if (!cfg.simulate)
      fail("the simulate command needs a simulate block in the config");
    const SimulateBlock& b = *cfg.simulate;
    const fs::path dir = prepare_run_dir(cfg, local);
    Manifest man = start_manifest("simulate", cfg, local);
    write_manifest(dir.string(), man);

    auto grid = make_grid(cfg.n);
    const ModelSpec spec = make_spec(b.model, b.eps, b.schedule(b.eps),
                                     b.mollifier, b.c_zero, b.zero_k0);
    if (b.initial.kind == InitialData::Kind::File &&
        !fs::exists(b.initial.path + ".f64"))
      fail("initial field dump '" + b.initial.path + ".f64' does not exist");
    const SpectralField u0 = make_initial(b.initial, grid);
    if (auto warn = dt_warning(spec, *grid, u0, cfg.dt))
      std::cerr << *warn << "\n";

    SolveConfig sc;
    sc.T = cfg.T;
    sc.dt = cfg.dt;
    sc.scheme = b.scheme;
    sc.snapshot_stride = 1;
    const CoupledResult res =
        solve_coupled(spec, grid, u0, sc, NoiseSeed{cfg.master_seed, 0});

    const auto steps = std::size_t(std::llround(cfg.T / cfg.dt));
    NdjsonWriter wu((dir / "norms_u.ndjson").string());
    NdjsonWriter wz((dir / "norms_z.ndjson").string());
    for (std::size_t jdx = 0; jdx < res.u.times.size(); ++jdx) {
      if (jdx % std::size_t(b.snapshot_stride) != 0 && jdx != steps) continue;
      wu.write_line(norm_row(res.u.times[jdx], res.u.snapshots[jdx]));
      wz.write_line(norm_row(res.z.times[jdx], res.z.snapshots[jdx]));
    }

    if (b.dump_fields) {
      for (std::size_t s = 0; s < b.snapshots.size(); ++s) {
        const auto jdx = std::min(
            steps, std::size_t(std::llround(b.snapshots[s] / cfg.dt)));
        char tag[24];
        std::snprintf(tag, sizeof tag, "%04zu", s);
        dump_field(inverse(res.u.snapshots[jdx]),
                   (dir / (std::string("u_") + tag)).string(),
                   res.u.times[jdx], model_name(b.model), b.eps,
                   cfg.master_seed);
        dump_field(inverse(res.z.snapshots[jdx]),
                   (dir / (std::string("z_") + tag)).string(),
                   res.z.times[jdx], model_name(b.model), b.eps,
                   cfg.master_seed);
      }
    }

    man.outputs.push_back(writer_output(wu, "norms_u.ndjson"));
    man.outputs.push_back(writer_output(wz, "norms_z.ndjson"));
    finish_manifest(dir, man);
    return 0;
  });
}

int cmd_study(const CmdOptions& opts) {
  return guarded([&] {
    const CmdOptions local = resolved(opts);
    RunConfigFile cfg = load_config(local);
    if (!cfg.study)
      fail("the study command needs a study block in the config");
    StudyBlock sb = *cfg.study;
    sb.study.workers = local.workers;
    const fs::path dir = prepare_run_dir(cfg, local);
    Manifest man = start_manifest("study", cfg, local);
    write_manifest(dir.string(), man);

    if (sb.mode == "regimes") {
      const SigmaSchedule& base = sb.study.schedule;
      std::vector<SigmaSchedule> schedules;
      schedules.push_back(
          {SigmaSchedule::Kind::Constant, base.amplitude, 1.0});
      schedules.push_back(
          {SigmaSchedule::Kind::Power, base.amplitude, base.exponent});
      schedules.push_back(
          {SigmaSchedule::Kind::LogInverse, base.amplitude, 1.0});
      const RegimeReport rep = regime_scan(sb.study, schedules);
      man.outputs.push_back(write_text_file(
          dir, "regimes_report.json", regime_report_json(rep).dump(2) + "\n"));
      man.outputs.push_back(write_text_file(dir, "regimes.csv",
                                            regimes_csv(rep)));
      finish_manifest(dir, man);
      return 0;
    }

    NdjsonWriter records((dir / "records.ndjson").string());
    NdjsonWriter residuals((dir / "residuals.ndjson").string());
    const RecordSink sink = [&](const RunRecord& r) {
      records.write_line(record_json(r).dump());
      residuals.write_line(residual_json(r).dump());
    };

    if (sb.mode == "theorem") {
      const TheoremReport rep = theorem_inequality_check(sb.study, sink);
      man.outputs.push_back(write_text_file(
          dir, "theorem_report.json", theorem_json(rep).dump(2) + "\n"));
    } else {
      const StudyResult res = run_convergence_study(sb.study, sink);
      man.outputs.push_back(write_text_file(dir, "summary.csv",
                                            summary_csv(res)));
    }
    man.outputs.push_back(writer_output(records, "records.ndjson"));
    man.outputs.push_back(writer_output(residuals, "residuals.ndjson"));
    finish_manifest(dir, man);
    return 0;
  });
}

int cmd_renorm(const CmdOptions& opts) {
  return guarded([&] {
    const CmdOptions local = resolved(opts);
    RunConfigFile cfg = load_config(local);
    if (!cfg.renorm)
      fail("the renorm command needs a renorm block in the config");
    const RenormBlock& b = *cfg.renorm;
    const fs::path dir = prepare_run_dir(cfg, local);
    Manifest man = start_manifest("renorm", cfg, local);
    write_manifest(dir.string(), man);

    NdjsonWriter rows((dir / "c_eps.ndjson").string());
    for (double eps : b.eps_grid) {
      const double sigma = b.schedule(eps);
      for (int K : b.cutoffs) {
        json j;
        j["model"] = model_name(b.model);
        j["eps"] = eps;
        j["K"] = K;
        j["sigma"] = sigma;
        j["c_eps"] = c_eps_cutoff(b.model, eps, sigma, K);
        rows.write_line(j.dump());
      }
    }
    man.outputs.push_back(writer_output(rows, "c_eps.ndjson"));

    if (!b.deltas.empty()) {
      NdjsonWriter series((dir / "series.ndjson").string());
      for (double delta : b.deltas) {
        const SeriesReport rep = series_asymptotics(b.model, b.eps_grid, delta);
        json j;
        j["model"] = model_name(b.model);
        j["delta"] = delta;
        j["eps_grid"] = rep.eps_grid;
        j["cutoffs"] = rep.cutoffs;
        j["values"] = rep.values;
        if (delta > 0) {
          j["slope"] = rep.slope;
        } else {
          j["log_ratios"] = rep.log_ratios;
          j["ratio_spread"] = rep.ratio_spread;
        }
        series.write_line(j.dump());
      }
      man.outputs.push_back(writer_output(series, "series.ndjson"));
    }

    if (b.c_zero_request) {
      const CZeroEstimate est = c_zero_estimate(b.model, b.schedule,
                                                b.eps_grid);
      json j;
      j["tag"] = c_zero_tag_name(est.tag);
      j["value"] = est.value;
      j["eps_grid"] = est.eps_grid;
      j["cutoffs"] = est.cutoffs;
      j["values"] = est.values;
      j["diffs"] = est.diffs;
      man.outputs.push_back(
          write_text_file(dir, "c_zero.json", j.dump(2) + "\n"));
    }
    finish_manifest(dir, man);
    return 0;
  });
}

int cmd_check() {
  const char* env = std::getenv("SINGLIM_CHECK_FLIP_LAMBDA");
  const bool flip = env != nullptr && std::strcmp(env, "1") == 0;

  struct Probe {
    const char* name;
    std::function<std::string()> run;  // empty result means pass
  };
  std::vector<Probe> probes;

  probes.push_back({"transform_roundtrip", []() -> std::string {
    auto g = make_grid(16);
    RealField f{g, std::vector<double>(g->size())};
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    for (auto& v : f.values) v = nd(rng);
    const SpectralField c = forward(f);
    const RealField back = inverse(c);
    double err = 0, mean_sq = 0, coeff_sq = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      err = std::max(err, std::abs(back.values[i] - f.values[i]));
      mean_sq += f.values[i] * f.values[i];
    }
    mean_sq /= double(f.values.size());
    for (const auto& z : c.coeffs) coeff_sq += std::norm(z);
    if (err > 1e-12) return "roundtrip error " + g17(err);
    if (std::abs(coeff_sq - mean_sq) > 1e-12 * mean_sq)
      return "energy identity violated by " + g17(coeff_sq - mean_sq);
    return {};
  }});

  probes.push_back({"cubic_gap", []() -> std::string {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ud(-8.0, 8.0);
    for (int i = 0; i < 20000; ++i) {
      const double phi = ud(rng), psi = ud(rng);
      const double gap = cubic_gap(phi, psi);
      if (gap < -1e-12)
        return "gap " + g17(gap) + " at phi=" + g17(phi) + " psi=" + g17(psi);
    }
    return {};
  }});

  probes.push_back({"ou_moments", []() -> std::string {
    const double lambda = 2.0, h = 0.05;
    const double var_target = ou_variance(lambda, h);
    const int n = 40000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < n; ++i) {
      const auto z = ou_step(0.0, lambda, h,
                             gaussian_pair(417, std::uint64_t(i), 0, 0).g0);
      sum += z.real();
      sum_sq += z.real() * z.real();
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double mean_tol = 4.0 * std::sqrt(var_target / n);
    const double var_tol = 4.0 * var_target * std::sqrt(2.0 / n);
    if (std::abs(mean) > mean_tol)
      return "mean " + g17(mean) + " exceeds " + g17(mean_tol);
    if (std::abs(var - var_target) > var_tol)
      return "variance " + g17(var) + " vs target " + g17(var_target);
    if (ou_variance(0.0, 0.25) != 0.25) return "lambda=0 variance is not t";
    return {};
  }});

  probes.push_back({"lambda_coercivity", [flip]() -> std::string {
    struct Case {
      Model m;
      double eps;
      double kappa;
    };
    const Case cases[] = {{Model::ChAcHomotopy, 0.25, 0.75},
                          {Model::AcBilaplacian, 0.5, 1.0},
                          {Model::AcMollifiedNoise, 0.5, 1.0}};
    for (const auto& c : cases) {
      for (int mu = 0; mu <= 256; ++mu) {
        double lam = lambda_eps(c.m, c.eps, double(mu));
        if (flip) lam = -lam;
        if (mu == 0) {
          if (lam != 0.0) return model_name(c.m) + ": lambda(0) != 0";
          continue;
        }
        if (!(lam >= c.kappa * double(mu)))
          return model_name(c.m) + ": lambda(" + g17(double(mu)) + ") = " +
                 g17(lam) + " below " + g17(c.kappa * mu);
      }
    }
    return {};
  }});

  probes.push_back({"operator_bound", []() -> std::string {
    auto g = make_grid(128);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      const double b = operator_bound_check(Model::ChAcHomotopy, eps, *g);
      if (!(b * std::sqrt(eps) <= 2.0))
        return "bound " + g17(b) + " at eps " + g17(eps);
    }
    return {};
  }});

  bool all_ok = true;
  for (const auto& p : probes) {
    std::string msg;
    try {
      msg = p.run();
    } catch (const std::exception& e) {
      msg = e.what();
    }
    if (msg.empty()) {
      std::cout << "[ok] " << p.name << "\n";
    } else {
      all_ok = false;
      std::cerr << "[fail] " << p.name << ": " << msg << "\n";
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace singlim
