#include "io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace seqdmg {

namespace {

std::string fmt_double(double v, int digits = 17) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& where) {
  const char* b = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(b, &end);
  if (cell.empty() || end != b + cell.size()) fail(ErrorKind::Data, "bad number '" + cell + "' " + where);
  return v;
}

// Non-comment, non-blank lines.
std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(t);
  }
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ErrorKind::Model, std::string(what) + " must be a number or nonempty array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) fail(ErrorKind::Model, std::string(what) + " must contain numbers");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& j, Eigen::Index m) {
  if (j.is_number()) {
    if (m != 1) fail(ErrorKind::Model, "scalar covariance given for a " + std::to_string(m) + "-D model");
    return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  }
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m)
    fail(ErrorKind::Model, "covariance must be a " + std::to_string(m) + "x" + std::to_string(m) + " array");
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Json& row = j[static_cast<size_t>(r)];
    if (row.is_number() && m == 1) {
      c(0, 0) = row.get<double>();
      continue;
    }
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
      fail(ErrorKind::Model, "covariance row has the wrong length");
    for (Eigen::Index k = 0; k < m; ++k) c(r, k) = row[static_cast<size_t>(k)].get<double>();
  }
  return c;
}

template <typename T>
T required(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorKind::Model, where + " lacks '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Model, where + " has a malformed '" + key + "': " + e.what());
  }
}

}  // namespace

GaussianModel gaussian_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("cov"))
    fail(ErrorKind::Model, "Gaussian entries need 'mean' and 'cov'");
  Eigen::VectorXd mean = vector_from_json(j.at("mean"), "mean");
  Eigen::MatrixXd cov = matrix_from_json(j.at("cov"), mean.size());
  try {
    return GaussianModel(std::move(mean), std::move(cov));
  } catch (const Error& e) {
    fail(ErrorKind::Model, e.what());
  }
}

Json gaussian_to_json(const GaussianModel& g) {
  Json mean = Json::array(), cov = Json::array();
  for (Eigen::Index k = 0; k < g.mean().size(); ++k) mean.push_back(g.mean()(k));
  for (Eigen::Index r = 0; r < g.cov().rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < g.cov().cols(); ++c) row.push_back(g.cov()(r, c));
    cov.push_back(row);
  }
  return {{"mean", mean}, {"cov", cov}};
}

DamageModel model_draft_from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorKind::Model, "model document must be a JSON object");
  DamageModel model;
  if (!doc.contains("variables") || !doc["variables"].is_array())
    fail(ErrorKind::Model, "model lacks a 'variables' array");
  for (const auto& v : doc["variables"]) {
    const int id = required<int>(v, "id", "variable");
    const double rho = required<double>(v, "rho", "variable " + std::to_string(id));
    try {
      model.variables.push_back({id, GeometricPrior(rho)});
    } catch (const Error& e) {
      fail(ErrorKind::Model, "variable " + std::to_string(id) + ": " + e.what());
    }
  }
  if (!doc.contains("sensors") || !doc["sensors"].is_array()) fail(ErrorKind::Model, "model lacks a 'sensors' array");
  for (const auto& s : doc["sensors"]) {
    SensorNode node;
    node.id = required<int>(s, "id", "sensor");
    const std::string where = "sensor " + std::to_string(node.id);
    node.domain = required<std::vector<int>>(s, "domain", where);
    if (s.contains("owns")) node.owned_priors = required<std::vector<int>>(s, "owns", where);
    SensorDensities dens;
    dens.pre = gaussian_from_json(s.contains("g") ? s["g"] : Json());
    node.dim = s.contains("dim") ? required<int>(s, "dim", where) : dens.pre.dim();
    if (s.contains("f")) {
      if (!s["f"].is_object()) fail(ErrorKind::Model, where + " 'f' must be an object keyed by subsets");
      for (const auto& [key, val] : s["f"].items()) {
        VarSet subset;
        try {
          subset = parse_set_key(key);
        } catch (const Error& e) {
          fail(ErrorKind::Model, where + ": " + e.what());
        }
        if (subset.empty()) fail(ErrorKind::Model, where + " has an empty subset key");
        dens.post[subset] = gaussian_from_json(val);
      }
    }
    model.registry.set_sensor(node.id, std::move(dens));
    model.sensors.push_back(std::move(node));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) fail(ErrorKind::Model, "'edges' must be an array of pairs");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        fail(ErrorKind::Model, "each edge must be a pair of sensor ids");
      model.tree.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  }
  if (doc.contains("root")) model.tree.root = required<int>(doc, "root", "model");
  cross_reference(model);
  return model;
}

DamageModel model_from_json(const Json& doc) { return build_model(model_draft_from_json(doc)); }

Json model_to_json(const DamageModel& model) {
  Json doc;
  doc["variables"] = Json::array();
  for (const auto& v : model.variables) doc["variables"].push_back({{"id", v.id}, {"rho", v.prior.rho()}});
  doc["sensors"] = Json::array();
  for (const auto& s : model.sensors) {
    const auto& dens = model.registry.sensor(s.id);
    Json f = Json::object();
    for (const auto& [subset, g] : dens.post) f[set_key(subset)] = gaussian_to_json(g);
    doc["sensors"].push_back({{"id", s.id},
                              {"domain", s.domain},
                              {"owns", s.owned_priors},
                              {"dim", s.dim},
                              {"g", gaussian_to_json(dens.pre)},
                              {"f", f}});
  }
  doc["edges"] = Json::array();
  for (const auto& [a, b] : model.tree.edges) doc["edges"].push_back({a, b});
  doc["root"] = model.tree.root;
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Model, "'" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<RawSignal> read_signal_csv(const std::string& path, SensorId default_sensor) {
  const auto lines = data_lines(read_text_file(path));
  if (lines.empty()) fail(ErrorKind::Data, "'" + path + "' is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "t")
    fail(ErrorKind::Data, "'" + path + "' must start with a 't,value' or 't,sensor_1,...' header");
  std::vector<RawSignal> signals;
  if (header.size() == 2 && header[1] == "value") {
    signals.push_back({default_sensor, {}, 1.0});
  } else {
    for (size_t c = 1; c < header.size(); ++c) {
      const std::string& h = header[c];
      if (h.rfind("sensor_", 0) != 0) fail(ErrorKind::Data, "'" + path + "': bad column name '" + h + "'");
      try {
        size_t used = 0;
        const int id = std::stoi(h.substr(7), &used);
        if (used != h.size() - 7 || id <= 0) throw std::invalid_argument(h);
        signals.push_back({id, {}, 1.0});
      } catch (const std::exception&) {
        fail(ErrorKind::Data, "'" + path + "': bad column name '" + h + "'");
      }
    }
  }
  std::vector<double> times;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    const std::string where = "at '" + path + "' line " + std::to_string(r + 1);
    if (cells.size() != header.size()) fail(ErrorKind::Data, "wrong column count " + where);
    times.push_back(parse_number(cells[0], where));
    for (size_t c = 1; c < cells.size(); ++c) signals[c - 1].samples.push_back(parse_number(cells[c], where));
  }
  if (times.empty()) fail(ErrorKind::Data, "'" + path + "' has no samples");
  if (times.size() >= 2 && times[1] > times[0])
    for (auto& s : signals) s.sample_rate_hz = 1.0 / (times[1] - times[0]);
  return signals;
}

std::string dsf_csv(const DsfStream& stream, const std::string& provenance) {
  std::string out;
  if (!provenance.empty()) out += "# " + provenance + "\n";
  out += "n";
  for (int k = 1; k <= stream.dim; ++k) out += ",x_" + std::to_string(k);
  out += "\n";
  for (size_t n = 0; n < stream.features.size(); ++n) {
    out += std::to_string(n + 1);
    for (int k = 0; k < stream.dim; ++k) out += "," + fmt_double(stream.features[n](k));
    out += "\n";
  }
  return out;
}

DsfStream parse_dsf_csv(const std::string& text, SensorId sensor, const std::string& origin) {
  const auto lines = data_lines(text);
  if (lines.empty()) fail(ErrorKind::Data, "'" + origin + "' is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "n") fail(ErrorKind::Data, "'" + origin + "' must start with 'n,x_1,...'");
  for (size_t c = 1; c < header.size(); ++c)
    if (header[c] != "x_" + std::to_string(c)) fail(ErrorKind::Data, "'" + origin + "': bad column '" + header[c] + "'");
  DsfStream stream{sensor, static_cast<int>(header.size() - 1), {}};
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    const std::string where = "at '" + origin + "' line " + std::to_string(r + 1);
    if (cells.size() != header.size()) fail(ErrorKind::Data, "wrong column count " + where);
    if (parse_number(cells[0], where) != static_cast<double>(r))
      fail(ErrorKind::Data, "row index must be contiguous from 1 " + where);
    Eigen::VectorXd x(stream.dim);
    for (int k = 0; k < stream.dim; ++k) x(k) = parse_number(cells[static_cast<size_t>(k) + 1], where);
    if (!x.allFinite()) fail(ErrorKind::Data, "non-finite feature " + where);
    stream.features.push_back(std::move(x));
  }
  return stream;
}

DsfStream read_dsf_csv(const std::string& path, SensorId sensor) {
  return parse_dsf_csv(read_text_file(path), sensor, path);
}

std::string dsf_file_name(SensorId sensor) { return "s" + std::to_string(sensor) + ".csv"; }

StreamSet read_stream_dir(const DamageModel& model, const std::string& dir) {
  StreamSet out;
  for (SensorId id : model.sensor_ids())
    out[id] = read_dsf_csv((std::filesystem::path(dir) / dsf_file_name(id)).string(), id);
  return out;
}

Json traffic_to_json(const TrafficSummary& t) {
  Json edges = Json::array();
  for (const auto& [e, n] : t.entries_per_edge) edges.push_back({{"from", e.first}, {"to", e.second}, {"entries", n}});
  Json sensors = Json::array();
  std::map<SensorId, std::pair<size_t, size_t>> per;
  for (const auto& [s, b] : t.bytes_sent) per[s].first = b;
  for (const auto& [s, b] : t.bytes_received) per[s].second = b;
  for (const auto& [s, p] : per) sensors.push_back({{"sensor", s}, {"bytes_sent", p.first}, {"bytes_received", p.second}});
  return {{"steps", t.steps},          {"messages", t.messages}, {"entries", t.entries},
          {"bytes", t.bytes},          {"per_edge", edges},      {"per_sensor", sensors}};
}

std::string session_log_jsonl(const SessionLog& log, const Json& provenance) {
  std::string out;
  if (!provenance.is_null()) out += Json{{"type", "config"}, {"config", provenance}}.dump() + "\n";
  for (const auto& step : log.steps) {
    Json rules = Json::array();
    for (size_t r = 0; r < log.verdicts.size(); ++r)
      rules.push_back({{"rule", log.verdicts[r].rule.label()},
                       {"alpha", log.verdicts[r].rule.alpha},
                       {"sensor", log.verdicts[r].evaluated_at},
                       {"posterior", step.posterior[r]},
                       {"ccdf", step.ccdf[r]},
                       {"stopped", static_cast<bool>(step.stopped[r])}});
    out += Json{{"type", "step"},
                {"n", step.n},
                {"messages", step.messages},
                {"entries", step.entries},
                {"rules", rules}}
               .dump() +
           "\n";
  }
  Json verdicts = Json::array();
  for (const auto& v : log.verdicts)
    verdicts.push_back({{"rule", v.rule.label()},
                        {"alpha", v.rule.alpha},
                        {"sensor", v.evaluated_at},
                        {"stopped", v.stopped},
                        {"tau", v.tau ? Json(*v.tau) : Json(nullptr)},
                        {"posterior_at_stop", v.stopped ? Json(v.posterior_at_stop) : Json(nullptr)}});
  out += Json{{"type", "summary"},
              {"method", log.method},
              {"window", log.window ? Json(*log.window) : Json(nullptr)},
              {"steps", log.steps.size()},
              {"verdicts", verdicts},
              {"traffic", traffic_to_json(measure_traffic(log))}}
             .dump() +
         "\n";
  return out;
}

std::string curve_csv(const Comparison& cmp, const std::string& provenance) {
  std::string out;
  if (!provenance.empty()) out += "# " + provenance + "\n";
  out += "alpha,log_alpha_abs,rule,method,mean_delay,delay_slope,fa_rate,censored,bound\n";
  for (const auto& row : cmp.rows) {
    const auto& p = row.point;
    out += fmt_double(p.alpha, 10) + "," + fmt_double(std::abs(std::log(p.alpha)), 10) + ",\"" + row.rule + "\"," +
           row.method + "," + fmt_double(p.mean_delay, 10) + "," + fmt_double(p.delay_slope(), 10) + "," +
           fmt_double(p.fa_rate, 10) + "," + std::to_string(p.censored) + "," + fmt_double(p.bound, 10) + "\n";
  }
  return out;
}

std::string training_file_name(SensorId sensor, const VarSet& subset) {
  if (subset.empty()) return "s" + std::to_string(sensor) + "_pre.csv";
  std::string name = "s" + std::to_string(sensor) + "_post_";
  for (size_t k = 0; k < subset.size(); ++k) name += (k ? "-" : "") + std::to_string(subset[k]);
  return name + ".csv";
}

FitResult fit_model_from_dir(const Json& skeleton, const std::string& dir, double ridge) {
  if (!skeleton.is_object() || !skeleton.contains("sensors") || !skeleton["sensors"].is_array())
    fail(ErrorKind::Model, "model skeleton lacks a 'sensors' array");
  Json doc = skeleton;
  std::vector<std::string> missing;
  std::string table = "sensor,subset,kl\n";
  std::map<std::string, DsfStream> loaded;

  for (auto& s : doc["sensors"]) {
    const int id = required<int>(s, "id", "sensor");
    VarSet domain = required<std::vector<int>>(s, "domain", "sensor " + std::to_string(id));
    std::sort(domain.begin(), domain.end());
    std::vector<VarSet> subsets{VarSet{}};
    for (auto& sub : nonempty_subsets(domain)) subsets.push_back(sub);
    for (const auto& sub : subsets) {
      const auto path = (std::filesystem::path(dir) / training_file_name(id, sub)).string();
      if (!std::filesystem::exists(path)) {
        missing.push_back(sub.empty() ? "sensor " + std::to_string(id) + ", pre-change"
                                      : "sensor " + std::to_string(id) + ", subset " + format_set(sub));
        continue;
      }
      loaded[path] = read_dsf_csv(path, id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "model incomplete, missing training data for:";
    for (const auto& m : missing) msg += " " + m + ";";
    msg.pop_back();
    fail(ErrorKind::Model, msg);
  }

  for (auto& s : doc["sensors"]) {
    const int id = s["id"].get<int>();
    VarSet domain = s["domain"].get<std::vector<int>>();
    std::sort(domain.begin(), domain.end());
    const auto fit = [&](const VarSet& sub) {
      const auto& stream = loaded.at((std::filesystem::path(dir) / training_file_name(id, sub)).string());
      return fit_gaussian(stream.features, ridge);
    };
    const GaussianModel g = fit({});
    if (s.contains("dim") && s["dim"].get<int>() != g.dim())
      fail(ErrorKind::Model, "sensor " + std::to_string(id) + " training data has dimension " +
                                 std::to_string(g.dim()) + ", skeleton says " + std::to_string(s["dim"].get<int>()));
    s["dim"] = g.dim();
    s["g"] = gaussian_to_json(g);
    s["f"] = Json::object();
    for (const auto& sub : nonempty_subsets(domain)) {
      const GaussianModel f = fit(sub);
      if (f.dim() != g.dim())
        fail(ErrorKind::Model, "sensor " + std::to_string(id) + " subset " + format_set(sub) + " has dimension " +
                                   std::to_string(f.dim()) + ", pre-change data has " + std::to_string(g.dim()));
      s["f"][set_key(sub)] = gaussian_to_json(f);
      table += std::to_string(id) + ",\"" + set_key(sub) + "\"," + fmt_double(kl_divergence(f, g), 6) + "\n";
    }
  }
  return {model_from_json(doc), table};
}

}  // namespace seqdmg
