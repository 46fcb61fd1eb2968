#include "seqdmg/seqdmg.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "io.hpp"
#include "shiryaev.hpp"

struct seqdmg_model {
  seqdmg::DamageModel model;
};

struct seqdmg_session {
  std::unique_ptr<seqdmg::Session> session;
  seqdmg::SensorId local_sensor = 0;  // nonzero for a LOCAL session
};

namespace {

using namespace seqdmg;

thread_local std::string g_last_error;

seqdmg_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return SEQDMG_INVALID_ARGUMENT;
    case ErrorKind::Data:
      return SEQDMG_DATA_ERROR;
    case ErrorKind::Model:
      return SEQDMG_MODEL_ERROR;
    case ErrorKind::Numeric:
      return SEQDMG_NUMERIC_ERROR;
    case ErrorKind::Io:
      return SEQDMG_IO_ERROR;
  }
  return SEQDMG_INTERNAL_ERROR;
}

template <typename F>
seqdmg_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SEQDMG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const Json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return SEQDMG_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SEQDMG_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SEQDMG_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return SEQDMG_INTERNAL_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorKind::InvalidArgument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<int> window_of(int window) {
  if (window <= 0) return std::nullopt;
  return window;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, std::string("bad ") + what + " list '" + text + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

const StepRecord& step_record(const seqdmg_session* s, long n) {
  const auto& steps = s->session->log().steps;
  if (n < 1 || static_cast<size_t>(n) > steps.size())
    fail(ErrorKind::InvalidArgument, "step " + std::to_string(n) + " out of range");
  return steps[static_cast<size_t>(n) - 1];
}

}  // namespace

extern "C" {

const char* seqdmg_version(void) { return "1.0.0"; }

const char* seqdmg_status_name(seqdmg_status status) {
  switch (status) {
    case SEQDMG_OK:
      return "ok";
    case SEQDMG_INVALID_ARGUMENT:
      return "invalid argument";
    case SEQDMG_DATA_ERROR:
      return "data error";
    case SEQDMG_MODEL_ERROR:
      return "model error";
    case SEQDMG_IO_ERROR:
      return "i/o error";
    case SEQDMG_NUMERIC_ERROR:
      return "numeric error";
    case SEQDMG_INTERNAL_ERROR:
      return "internal error";
  }
  return "unknown status";
}

const char* seqdmg_last_error(void) { return g_last_error.c_str(); }

void seqdmg_string_free(char* s) { std::free(s); }

seqdmg_status seqdmg_model_load(const char* path, seqdmg_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new seqdmg_model{model_from_json(read_json_file(path))};
  });
}

seqdmg_status seqdmg_model_from_json(const char* json_text, seqdmg_model** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    Json doc;
    try {
      doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
      fail(ErrorKind::Model, std::string("model is not valid JSON: ") + e.what());
    }
    *out = new seqdmg_model{model_from_json(doc)};
  });
}

seqdmg_status seqdmg_model_to_json(const seqdmg_model* model, char** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = copy_string(model_to_json(model->model).dump(2) + "\n");
  });
}

void seqdmg_model_free(seqdmg_model* model) { delete model; }

size_t seqdmg_model_sensor_count(const seqdmg_model* model) { return model ? model->model.sensors.size() : 0; }
size_t seqdmg_model_variable_count(const seqdmg_model* model) { return model ? model->model.variables.size() : 0; }
size_t seqdmg_model_edge_count(const seqdmg_model* model) { return model ? model->model.tree.edges.size() : 0; }

seqdmg_status seqdmg_validate_file(const char* path, char** report) {
  std::string text;
  const seqdmg_status st = guarded([&] {
    require(path && report, "null argument");
    const DamageModel draft = model_draft_from_json(read_json_file(path));
    const auto violations = validate_tree(draft);
    if (violations.empty()) {
      text = "OK, " + std::to_string(draft.sensors.size()) + " sensors, " + std::to_string(draft.tree.edges.size()) +
             " edges, RIP satisfied\n";
      return;
    }
    bool rip = true;
    for (const auto& v : violations) {
      text += "INVALID " + v.kind + ": " + v.message + "\n";
      if (v.kind == "running-intersection") rip = false;
    }
    text += rip ? "RIP satisfied\n" : "RIP violated\n";
    fail(ErrorKind::Model, text);
  });
  if (report && (st == SEQDMG_OK || !text.empty())) *report = copy_string(text);
  return st;
}

seqdmg_status seqdmg_extract(const char* signal_csv, size_t chunk_size, const char* order_spec, const char* coeffs,
                             int default_sensor, const char* out_dir, const char* provenance, char** summary) {
  return guarded([&] {
    require(signal_csv && order_spec && coeffs && out_dir && summary, "null argument");
    const std::vector<int> indices = parse_int_list(coeffs, "coefficient");
    int max_index = 0;
    for (int k : indices) max_index = std::max(max_index, k);
    const std::string spec = order_spec;
    std::optional<int> fixed_order, aic_max;
    try {
      size_t used = 0;
      if (spec.rfind("aic:", 0) == 0) {
        aic_max = std::stoi(spec.substr(4), &used);
        if (used != spec.size() - 4 || *aic_max < 1) throw std::invalid_argument(spec);
      } else {
        fixed_order = std::stoi(spec, &used);
        if (used != spec.size() || *fixed_order < 1) throw std::invalid_argument(spec);
      }
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "order must be a positive integer or aic:<max>, got '" + spec + "'");
    }

    std::string text;
    for (const RawSignal& signal : read_signal_csv(signal_csv, default_sensor)) {
      int order = fixed_order.value_or(0);
      if (aic_max) order = select_signal_order_aic(chunk_and_normalize(signal, chunk_size), *aic_max, max_index);
      const DsfStream stream = extract_dsf_stream(signal, chunk_size, order, indices);
      const auto path = (std::filesystem::path(out_dir) / dsf_file_name(signal.sensor_id)).string();
      write_text_file(path, dsf_csv(stream, provenance ? provenance : ""));
      text += path + ": sensor " + std::to_string(signal.sensor_id) + ", " + std::to_string(stream.length()) +
              " rows, AR order " + std::to_string(order) + "\n";
    }
    *summary = copy_string(text);
  });
}

seqdmg_status seqdmg_fit_model(const char* skeleton_json, const char* data_dir, double ridge, char** model_json,
                               char** kl_table) {
  return guarded([&] {
    require(skeleton_json && data_dir && model_json && kl_table, "null argument");
    Json skeleton;
    try {
      skeleton = Json::parse(skeleton_json);
    } catch (const Json::exception& e) {
      fail(ErrorKind::Model, std::string("model skeleton is not valid JSON: ") + e.what());
    }
    const FitResult fit = fit_model_from_dir(skeleton, data_dir, ridge);
    Json doc = model_to_json(fit.model);
    if (skeleton.contains("provenance")) doc["provenance"] = skeleton["provenance"];
    char* m = copy_string(doc.dump(2) + "\n");
    try {
      *kl_table = copy_string(fit.kl_table);
    } catch (...) {
      std::free(m);
      throw;
    }
    *model_json = m;
  });
}

seqdmg_status seqdmg_session_create(const seqdmg_model* model, const char* rules, double alpha, int window,
                                    seqdmg_session** out) {
  return guarded([&] {
    require(model && rules && out, "null argument");
    auto s = std::make_unique<seqdmg_session>();
    s->session = std::make_unique<Session>(model->model, parse_rules(rules, alpha), window_of(window));
    *out = s.release();
  });
}

seqdmg_status seqdmg_session_create_local(const seqdmg_model* model, int sensor, const char* rules, double alpha,
                                          int window, seqdmg_session** out) {
  return guarded([&] {
    require(model && rules && out, "null argument");
    const auto parsed = parse_rules(rules, alpha);
    const auto& node = model->model.sensor(sensor);
    for (const auto& r : parsed)
      if (!is_subset(r.targets, node.domain))
        fail(ErrorKind::Model, "rule " + r.label() + " targets variables outside the local domain of sensor " +
                                   std::to_string(sensor));
    auto s = std::make_unique<seqdmg_session>();
    s->session = std::make_unique<Session>(local_submodel(model->model, sensor), parsed, window_of(window), "LOCAL");
    s->local_sensor = sensor;
    *out = s.release();
  });
}

void seqdmg_session_free(seqdmg_session* session) { delete session; }

seqdmg_status seqdmg_session_step(seqdmg_session* session, const int* sensors, const double* features, size_t count) {
  return guarded([&] {
    require(session && sensors && features, "null argument");
    const DamageModel& model = session->session->model();
    std::map<SensorId, Eigen::VectorXd> x;
    size_t offset = 0;
    for (size_t k = 0; k < count; ++k) {
      if (!model.has_sensor(sensors[k])) {
        if (session->local_sensor)
          fail(ErrorKind::InvalidArgument,
               "a LOCAL session takes only the features of sensor " + std::to_string(session->local_sensor));
        fail(ErrorKind::Data, "unknown sensor " + std::to_string(sensors[k]));
      }
      const int dim = model.sensor(sensors[k]).dim;
      x[sensors[k]] = Eigen::Map<const Eigen::VectorXd>(features + offset, dim);
      offset += static_cast<size_t>(dim);
    }
    session->session->step(x);
  });
}

seqdmg_status seqdmg_session_run_dir(seqdmg_session* session, const char* data_dir) {
  return guarded([&] {
    require(session && data_dir, "null argument");
    Session& s = *session->session;
    const StreamSet streams = read_stream_dir(s.model(), data_dir);
    std::optional<size_t> length;
    for (const auto& [id, stream] : streams) {
      if (stream.dim != s.model().sensor(id).dim)
        fail(ErrorKind::Data, "stream of sensor " + std::to_string(id) + " has dimension " +
                                  std::to_string(stream.dim) + ", model expects " +
                                  std::to_string(s.model().sensor(id).dim));
      if (length && *length != stream.length())
        fail(ErrorKind::Data, "misaligned streams: sensor " + std::to_string(id) + " has " +
                                  std::to_string(stream.length()) + " steps, others " + std::to_string(*length));
      length = stream.length();
    }
    for (size_t n = static_cast<size_t>(s.horizon()); n < length.value_or(0) && !s.done(); ++n) {
      std::map<SensorId, Eigen::VectorXd> x;
      for (const auto& [id, stream] : streams) x[id] = stream.features[n];
      s.step(x);
    }
  });
}

int seqdmg_session_done(const seqdmg_session* session) { return session && session->session->done() ? 1 : 0; }

long seqdmg_session_horizon(const seqdmg_session* session) { return session ? session->session->horizon() : 0; }

size_t seqdmg_session_rule_count(const seqdmg_session* session) {
  return session ? session->session->log().verdicts.size() : 0;
}

seqdmg_status seqdmg_session_rule(const seqdmg_session* session, size_t rule, char** label, int* evaluated_at,
                                  int* stopped, long* tau) {
  return guarded([&] {
    require(session != nullptr, "null argument");
    const auto& verdicts = session->session->log().verdicts;
    if (rule >= verdicts.size()) fail(ErrorKind::InvalidArgument, "rule index out of range");
    const auto& v = verdicts[rule];
    if (evaluated_at) *evaluated_at = v.evaluated_at;
    if (stopped) *stopped = v.stopped ? 1 : 0;
    if (tau) *tau = v.tau.value_or(0);
    if (label) *label = copy_string(v.rule.label());
  });
}

seqdmg_status seqdmg_session_value(const seqdmg_session* session, long n, size_t rule, double* posterior,
                                   double* ccdf) {
  return guarded([&] {
    require(session != nullptr, "null argument");
    const StepRecord& rec = step_record(session, n);
    if (rule >= rec.posterior.size()) fail(ErrorKind::InvalidArgument, "rule index out of range");
    if (posterior) *posterior = rec.posterior[rule];
    if (ccdf) *ccdf = rec.ccdf[rule];
  });
}

seqdmg_status seqdmg_session_log(const seqdmg_session* session, const char* config_json, char** out) {
  return guarded([&] {
    require(session && out, "null argument");
    Json config = nullptr;
    if (config_json) config = Json::parse(config_json);
    *out = copy_string(session_log_jsonl(session->session->log(), config));
  });
}

seqdmg_status seqdmg_session_traffic(const seqdmg_session* session, char** out) {
  return guarded([&] {
    require(session && out, "null argument");
    *out = copy_string(traffic_to_json(measure_traffic(session->session->log())).dump() + "\n");
  });
}

seqdmg_status seqdmg_bound_single(double rho, const double* kl, size_t count, double alpha, double* out) {
  return guarded([&] {
    require(out && (kl || count == 0), "null argument");
    *out = delay_bound_single(rho, std::vector<double>(kl, kl + count), alpha);
  });
}

seqdmg_status seqdmg_bound_rule(const seqdmg_model* model, const char* rule, double alpha, double* out) {
  return guarded([&] {
    require(model && rule && out, "null argument");
    *out = delay_bound_rule(model->model, parse_rule(rule, alpha));
  });
}

seqdmg_status seqdmg_simulate(const seqdmg_model* model, const char* scenario_json, const char* provenance,
                              char** curve_csv) {
  return guarded([&] {
    require(model && scenario_json && curve_csv, "null argument");
    const Json doc = Json::parse(scenario_json);
    ScenarioSpec scenario;
    if (doc.contains("planted"))
      for (const auto& [key, val] : doc["planted"].items()) {
        const auto ids = parse_int_list(key, "variable");
        if (ids.size() != 1) fail(ErrorKind::InvalidArgument, "planted keys must be single variable ids");
        scenario.planted[ids[0]] = val.get<long>();
      }
    scenario.length = doc.value("length", 0L);
    scenario.replications = doc.value("replications", 200);
    scenario.seed = doc.value("seed", std::uint64_t{1});
    if (doc.contains("window") && !doc["window"].is_null()) scenario.window = window_of(doc["window"].get<int>());
    scenario.threads = doc.value("threads", 0u);
    const std::vector<double> grid =
        doc.value("alpha_grid", std::vector<double>{0.5, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10});
    const auto rules = parse_rules(doc.value("rules", std::string("min:1")), grid.empty() ? 0.5 : grid.front());
    const Comparison cmp = compare_mp_local(model->model, scenario, rules, grid, doc.value("local_sensor", 0));
    *curve_csv = copy_string(seqdmg::curve_csv(cmp, provenance ? provenance : ""));
  });
}

}  // extern "C"
