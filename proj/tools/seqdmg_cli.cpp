// Command-line front end. Talks to the library only through the C API.
//
// Exit codes: 0 success, 2 data or usage error, 3 model or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "seqdmg/seqdmg.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitData = 2;
constexpr int kExitModel = 3;

struct Failure {
  int code;
};

int exit_code(seqdmg_status st) { return st == SEQDMG_MODEL_ERROR ? kExitModel : kExitData; }

void check(seqdmg_status st) {
  if (st == SEQDMG_OK) return;
  std::cerr << "error: " << seqdmg_last_error() << "\n";
  throw Failure{exit_code(st)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  throw Failure{kExitData};
}

struct CString {
  char* p = nullptr;
  ~CString() { seqdmg_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ModelHandle {
  seqdmg_model* p = nullptr;
  ~ModelHandle() { seqdmg_model_free(p); }
};

struct SessionHandle {
  seqdmg_session* p = nullptr;
  ~SessionHandle() { seqdmg_session_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) usage_error("cannot write '" + path + "'");
}

std::string default_out_dir() {
  const char* env = std::getenv("SEQDMG_OUT_DIR");
  return env && *env ? env : ".";
}

std::string resolve_out(const std::string& out, const std::string& default_name) {
  if (!out.empty()) return out;
  return (std::filesystem::path(default_out_dir()) / default_name).string();
}

int parse_window(const std::string& w) {
  if (w == "none") return 0;
  try {
    size_t used = 0;
    const int v = std::stoi(w, &used);
    if (used == w.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  usage_error("--window must be a positive integer or 'none', got '" + w + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void echo_config(const Json& config) { std::cout << "# config: " << config.dump() << "\n"; }

struct Options {
  std::string model, data, out, rule = "min:1", window = "none", order = "7", coeffs = "1", method = "mp";
  std::string planted, kl;
  double alpha = 1e-2, ridge = -1.0, rho = 0.0;
  std::vector<double> alpha_grid{0.5, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
  std::uint64_t seed = 1;
  size_t chunk = 400;
  int sensor = 1, local_sensor = 0, replications = 200, length = 0;
  unsigned threads = 0;
};

int cmd_extract(const Options& o) {
  const std::string out_dir = o.out.empty() ? default_out_dir() : o.out;
  const Json config{{"command", "extract"}, {"data", o.data},    {"chunk", o.chunk},     {"order", o.order},
                    {"coeffs", o.coeffs},   {"sensor", o.sensor}, {"out", out_dir}};
  echo_config(config);
  CString summary;
  check(seqdmg_extract(o.data.c_str(), o.chunk, o.order.c_str(), o.coeffs.c_str(), o.sensor, out_dir.c_str(),
                       ("config: " + config.dump()).c_str(), &summary.p));
  std::cout << summary.str();
  return 0;
}

int cmd_fit(const Options& o) {
  const std::string out = resolve_out(o.out, "model.json");
  const Json config{{"command", "fit"}, {"model", o.model}, {"data", o.data}, {"ridge", o.ridge}, {"out", out}};
  echo_config(config);
  nlohmann::json skeleton;
  try {
    skeleton = nlohmann::json::parse(read_file(o.model));
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: model skeleton is not valid JSON: " << e.what() << "\n";
    return kExitModel;
  }
  skeleton["provenance"] = nlohmann::json::parse(config.dump());
  CString model, table;
  check(seqdmg_fit_model(skeleton.dump().c_str(), o.data.c_str(), o.ridge, &model.p, &table.p));
  write_file(out, model.str());
  std::cout << table.str() << "wrote " << out << "\n";
  return 0;
}

int cmd_validate(const Options& o) {
  echo_config(Json{{"command", "validate"}, {"model", o.model}});
  CString report;
  const seqdmg_status st = seqdmg_validate_file(o.model.c_str(), &report.p);
  if (st == SEQDMG_OK) {
    std::cout << report.str();
    return 0;
  }
  std::cerr << "error: " << seqdmg_last_error() << (report.p ? "" : "\n");
  return exit_code(st);
}

int cmd_bound(const Options& o) {
  if (!o.model.empty()) {
    echo_config(Json{{"command", "bound"}, {"model", o.model}, {"rule", o.rule}, {"alpha", o.alpha}});
    ModelHandle model;
    check(seqdmg_model_load(o.model.c_str(), &model.p));
    std::string rules = o.rule;
    for (char& c : rules)
      if (c == '|' || c == ' ') c = ';';
    std::stringstream ss(rules);
    std::string rule;
    while (std::getline(ss, rule, ';')) {
      if (rule.empty()) continue;
      double b = 0.0;
      check(seqdmg_bound_rule(model.p, rule.c_str(), o.alpha, &b));
      std::printf("%s %.2f\n", rule.c_str(), b);
    }
    return 0;
  }
  if (o.rho <= 0.0) usage_error("bound needs --model or --rho with --kl");
  echo_config(Json{{"command", "bound"}, {"rho", o.rho}, {"kl", o.kl}, {"alpha", o.alpha}});
  std::vector<double> kls;
  std::stringstream ss(o.kl);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      kls.push_back(std::stod(item));
    } catch (const std::exception&) {
      usage_error("bad --kl value '" + item + "'");
    }
  }
  double b = 0.0;
  check(seqdmg_bound_single(o.rho, kls.data(), kls.size(), o.alpha, &b));
  std::printf("%.2f\n", b);
  return 0;
}

int cmd_detect(const Options& o) {
  const std::string out = resolve_out(o.out, "session.jsonl");
  const int window = parse_window(o.window);
  if (o.method != "mp" && o.method != "local") usage_error("--method must be mp or local");
  Json config{{"command", "detect"}, {"model", o.model}, {"data", o.data},     {"alpha", o.alpha},
              {"rule", o.rule},      {"window", o.window}, {"method", o.method}, {"out", out}};
  if (o.method == "local") config["local_sensor"] = o.local_sensor;
  echo_config(config);

  ModelHandle model;
  check(seqdmg_model_load(o.model.c_str(), &model.p));
  SessionHandle session;
  if (o.method == "mp") {
    check(seqdmg_session_create(model.p, o.rule.c_str(), o.alpha, window, &session.p));
  } else {
    if (o.local_sensor <= 0) usage_error("--method local needs --local-sensor");
    check(seqdmg_session_create_local(model.p, o.local_sensor, o.rule.c_str(), o.alpha, window, &session.p));
  }
  check(seqdmg_session_run_dir(session.p, o.data.c_str()));

  CString log;
  check(seqdmg_session_log(session.p, config.dump().c_str(), &log.p));
  write_file(out, log.str());

  const size_t rules = seqdmg_session_rule_count(session.p);
  std::vector<std::string> labels(rules);
  std::cout << "n";
  for (size_t r = 0; r < rules; ++r) {
    CString label;
    check(seqdmg_session_rule(session.p, r, &label.p, nullptr, nullptr, nullptr));
    labels[r] = label.str();
    std::cout << ",ccdf[" << labels[r] << "]";
  }
  std::cout << "\n";
  for (long n = 1; n <= seqdmg_session_horizon(session.p); ++n) {
    std::cout << n;
    for (size_t r = 0; r < rules; ++r) {
      double ccdf = 0.0;
      check(seqdmg_session_value(session.p, n, r, nullptr, &ccdf));
      std::cout << "," << fmt(ccdf);
    }
    std::cout << "\n";
  }
  for (size_t r = 0; r < rules; ++r) {
    int at = 0, stopped = 0;
    long tau = 0;
    check(seqdmg_session_rule(session.p, r, nullptr, &at, &stopped, &tau));
    std::cout << "rule " << labels[r] << " alpha " << fmt(o.alpha) << " sensor " << at << " tau "
              << (stopped ? std::to_string(tau) : std::string("none")) << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  const std::string out = resolve_out(o.out, "curve.csv");
  if (o.length <= 0) usage_error("--length must be positive");
  Json planted = Json::object();
  if (!o.planted.empty()) {
    std::stringstream ss(o.planted);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) usage_error("--planted expects var=time pairs, got '" + item + "'");
      try {
        planted[std::to_string(std::stoi(item.substr(0, eq)))] = std::stol(item.substr(eq + 1));
      } catch (const std::exception&) {
        usage_error("bad --planted entry '" + item + "'");
      }
    }
  }
  const int window = parse_window(o.window);
  const Json scenario{{"planted", planted},
                      {"length", o.length},
                      {"replications", o.replications},
                      {"seed", o.seed},
                      {"window", window ? Json(window) : Json(nullptr)},
                      {"threads", o.threads},
                      {"rules", o.rule},
                      {"alpha_grid", o.alpha_grid},
                      {"local_sensor", o.local_sensor}};
  // Thread count does not change results, so it stays out of the provenance record.
  Json config{{"command", "simulate"}, {"model", o.model}, {"scenario", scenario}, {"out", out}};
  config["scenario"].erase("threads");
  echo_config(config);

  ModelHandle model;
  check(seqdmg_model_load(o.model.c_str(), &model.p));
  CString csv;
  check(seqdmg_simulate(model.p, scenario.dump().c_str(), ("config: " + config.dump()).c_str(), &csv.p));
  write_file(out, csv.str());
  std::cout << csv.str() << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential multi-damage change-point detection over sensor trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", seqdmg_version());
  Options o;

  auto* extract = app.add_subcommand("extract", "Extract AR-coefficient feature streams from a signal CSV");
  extract->add_option("--data", o.data, "Signal CSV (t,value or t,sensor_1,...)")->required();
  extract->add_option("--chunk", o.chunk, "Samples per chunk")->capture_default_str();
  extract->add_option("--order", o.order, "AR order p or aic:<max>")->capture_default_str();
  extract->add_option("--coeffs", o.coeffs, "1-based AR coefficient indices, comma-separated")->capture_default_str();
  extract->add_option("--sensor", o.sensor, "Sensor id of a single-column signal")->capture_default_str();
  extract->add_option("--out", o.out, "Output directory (default $SEQDMG_OUT_DIR or .)");

  auto* fit = app.add_subcommand("fit", "Fit pre/post-change Gaussians from labelled feature files");
  fit->add_option("--model", o.model, "Model skeleton JSON (variables, sensors, edges)")->required();
  fit->add_option("--data", o.data, "Directory of s<id>_pre.csv and s<id>_post_<vars>.csv files")->required();
  fit->add_option("--ridge", o.ridge, "Covariance ridge (negative: default)");
  fit->add_option("--out", o.out, "Output model JSON");

  auto* detect = app.add_subcommand("detect", "Run a detection session over aligned feature streams");
  detect->add_option("--model", o.model, "Model JSON")->required();
  detect->add_option("--data", o.data, "Directory of s<id>.csv feature streams")->required();
  detect->add_option("--alpha", o.alpha, "False-alarm level")->capture_default_str();
  detect->add_option("--rule", o.rule, "Rules, e.g. min:1,3;max:1,3;single:3")->capture_default_str();
  detect->add_option("--window", o.window, "Window length or none")->capture_default_str();
  detect->add_option("--method", o.method, "mp or local")->capture_default_str();
  detect->add_option("--local-sensor", o.local_sensor, "Sensor used by --method local");
  detect->add_option("--seed", o.seed, "Accepted for uniformity; detection is deterministic");
  detect->add_option("--out", o.out, "Session log (JSON lines)");

  auto* bound = app.add_subcommand("bound", "Asymptotic detection-delay bounds");
  bound->add_option("--model", o.model, "Model JSON (per-rule bounds)");
  bound->add_option("--rule", o.rule, "Rules for --model")->capture_default_str();
  bound->add_option("--rho", o.rho, "Geometric prior parameter (single-variable form)");
  bound->add_option("--kl", o.kl, "Comma-separated KL divergences (single-variable form)");
  bound->add_option("--alpha", o.alpha, "False-alarm level")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo MP vs LOCAL delay and false-alarm curves");
  simulate->add_option("--model", o.model, "Model JSON")->required();
  simulate->add_option("--rule", o.rule, "Rules")->capture_default_str();
  simulate->add_option("--alpha-grid", o.alpha_grid, "False-alarm levels")->delimiter(',')->capture_default_str();
  simulate->add_option("--planted", o.planted, "Planted change times, e.g. 1=20,3=20 (absent: never)");
  simulate->add_option("--length", o.length, "Steps per replication")->required();
  simulate->add_option("--reps", o.replications, "Replications")->capture_default_str();
  simulate->add_option("--seed", o.seed, "Base seed")->capture_default_str();
  simulate->add_option("--window", o.window, "Window length or none")->capture_default_str();
  simulate->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  simulate->add_option("--local-sensor", o.local_sensor, "LOCAL sensor (0: lowest id covering all targets)");
  simulate->add_option("--out", o.out, "Curve CSV");

  auto* validate = app.add_subcommand("validate", "Check the sensor tree and model consistency");
  validate->add_option("--model", o.model, "Model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitData;
  }

  try {
    if (*extract) return cmd_extract(o);
    if (*fit) return cmd_fit(o);
    if (*detect) return cmd_detect(o);
    if (*bound) return cmd_bound(o);
    if (*simulate) return cmd_simulate(o);
    if (*validate) return cmd_validate(o);
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitData;
}
