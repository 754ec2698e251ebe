#include "hybrid/core/report.hpp"

#include <istream>
#include <ostream>

#include "hybrid/core/types.hpp"

namespace hybrid {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string ExperimentReport::cell() const {
  return problem + "|" + scheme + "|" + model + "|" + (filtered ? "filtered" : "unfiltered") + "|" +
         std::to_string(n_train);
}

json to_json(const ExperimentReport& r) {
  json j;
  j["problem"] = r.problem;
  j["scheme"] = r.scheme;
  j["model"] = r.model;
  j["filtered"] = r.filtered;
  j["n_train"] = r.n_train;
  j["seed"] = r.seed;
  j["d_hat"] = opt(r.d_hat);
  j["dk_hat"] = opt(r.dk_hat);
  j["rmae"] = opt(r.rmae);
  j["log_d_hat"] = opt(r.log_d_hat);
  j["wall_time_s"] = r.wall_time_s;
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  j["config"] = r.config;
  j["extra"] = r.extra;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  try {
    ExperimentReport r;
    r.problem = j.value("problem", "");
    r.scheme = j.at("scheme").get<std::string>();
    r.model = j.value("model", "");
    r.filtered = j.value("filtered", false);
    r.n_train = j.value("n_train", 0L);
    r.seed = j.at("seed").get<unsigned long long>();
    r.d_hat = opt_double(j, "d_hat");
    r.dk_hat = opt_double(j, "dk_hat");
    r.rmae = opt_double(j, "rmae");
    r.log_d_hat = opt_double(j, "log_d_hat");
    r.wall_time_s = j.value("wall_time_s", 0.0);
    if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    if (j.contains("config")) r.config = j.at("config");
    if (j.contains("extra")) r.extra = j.at("extra").get<std::map<std::string, double>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report record: ") + e.what());
  }
}

void write_jsonl(std::ostream& out, const ExperimentReport& r) { out << to_json(r).dump(-1, ' ', false) << '\n'; }

std::vector<ExperimentReport> read_jsonl(std::istream& in) {
  std::vector<ExperimentReport> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(report_from_json(j));
  }
  return out;
}

}  // namespace hybrid
