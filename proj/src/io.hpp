#pragma once

// File formats: model JSON, signal and DSF CSV, session JSON lines and curve CSV.

#include <json.hpp>

#include <string>
#include <vector>

#include "eval.hpp"

namespace seqdmg {

using Json = nlohmann::json;

/// Parses the model document without tree validation (ids, ownership,
/// dimensions and registry completeness are still checked).
DamageModel model_draft_from_json(const Json& doc);
/// Parses and fully validates.
DamageModel model_from_json(const Json& doc);
Json model_to_json(const DamageModel& model);
Json gaussian_to_json(const GaussianModel& g);
GaussianModel gaussian_from_json(const Json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
Json read_json_file(const std::string& path);

/// `t,value` (one sensor, id `default_sensor`) or `t,sensor_1,...,sensor_M`.
/// Lines starting with '#' are ignored.
std::vector<RawSignal> read_signal_csv(const std::string& path, SensorId default_sensor = 1);

/// `n,x_1,...,x_m`. A non-empty `provenance` is written as a leading '#' line.
std::string dsf_csv(const DsfStream& stream, const std::string& provenance = "");
DsfStream parse_dsf_csv(const std::string& text, SensorId sensor, const std::string& origin = "<memory>");
DsfStream read_dsf_csv(const std::string& path, SensorId sensor);
/// File name of a sensor's DSF stream inside a data directory.
std::string dsf_file_name(SensorId sensor);
StreamSet read_stream_dir(const DamageModel& model, const std::string& dir);

/// One JSON record per step plus a final summary record; a non-null
/// provenance becomes a leading "config" record.
std::string session_log_jsonl(const SessionLog& log, const Json& provenance = nullptr);
Json traffic_to_json(const TrafficSummary& t);

/// `alpha,log_alpha_abs,rule,method,mean_delay,delay_slope,fa_rate,censored,bound`.
std::string curve_csv(const Comparison& cmp, const std::string& provenance = "");

struct FitResult {
  DamageModel model;
  std::string kl_table;
};

/// Fits g_i from `s<id>_pre.csv` and f_i^A from `s<id>_post_<j1>-<j2>...csv`
/// (DSF CSV files) in `dir` for every nonempty subset A of every local domain.
/// The skeleton is a model document without densities. Missing training files
/// raise a Model error naming each sensor and subset.
FitResult fit_model_from_dir(const Json& skeleton, const std::string& dir, double ridge = -1.0);
std::string training_file_name(SensorId sensor, const VarSet& subset);

}  // namespace seqdmg
