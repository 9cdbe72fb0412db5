#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "camel/harness.hpp"

namespace camel {

using nlohmann::json;

std::string to_string(RecordKind kind) { return kind == RecordKind::kTrain ? "train" : "eval"; }

void write_record(std::ostream& out, const RunRecord& record) {
  for (const RecordRow& r : record.rows) {
    json j;
    j["t"] = r.t;
    j["kind"] = to_string(r.kind);
    j["return"] = r.episodic_return;
    j["epsilon"] = r.epsilon;
    j["masked"] = r.masked;
    out << j.dump() << '\n';
  }
}

void write_record_file(const std::string& path, const RunRecord& record) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_record(f, record);
}

RunRecord read_record(std::istream& in, const std::string& source) {
  RunRecord record;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
      RecordRow r;
      r.t = j.at("t").get<std::int64_t>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "train") {
        r.kind = RecordKind::kTrain;
      } else if (kind == "eval") {
        r.kind = RecordKind::kEval;
      } else {
        throw std::runtime_error("unknown kind '" + kind + "'");
      }
      r.episodic_return = j.at("return").get<double>();
      r.epsilon = j.at("epsilon").get<double>();
      r.masked = j.at("masked").get<double>();
      record.rows.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": bad record line: " + e.what());
    }
  }
  return record;
}

RunRecord read_record_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return read_record(f, path);
}

std::optional<std::int64_t> steps_to_threshold(const RunRecord& record, double threshold) {
  for (const RecordRow& r : record.rows) {
    if (r.kind == RecordKind::kEval && r.episodic_return >= threshold) return r.t;
  }
  return std::nullopt;
}

double final_eval_return(const RunRecord& record) {
  for (auto it = record.rows.rbegin(); it != record.rows.rend(); ++it) {
    if (it->kind == RecordKind::kEval) return it->episodic_return;
  }
  throw UsageError("record has no eval rows");
}

std::vector<double> rolling_mean(std::span<const double> values, std::size_t window) {
  if (window == 0) throw UsageError("rolling window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

AggregateCurve aggregate(std::span<const RunRecord> records, RecordKind kind, std::size_t window) {
  if (records.empty()) throw UsageError("aggregate: no records");

  struct Series {
    std::vector<std::int64_t> t;
    std::vector<double> v;
  };
  std::vector<Series> series;
  for (const RunRecord& rec : records) {
    Series s;
    for (const RecordRow& r : rec.of_kind(kind)) {
      s.t.push_back(r.t);
      s.v.push_back(r.episodic_return);
    }
    if (kind == RecordKind::kTrain) s.v = rolling_mean(s.v, window);
    series.push_back(std::move(s));
  }

  AggregateCurve curve;
  curve.t = series.front().t;
  if (kind == RecordKind::kEval) {
    for (const Series& s : series) {
      if (s.t != curve.t) throw UsageError("aggregate: misaligned eval grids");
    }
  }

  std::vector<std::size_t> cursor(series.size(), 0);
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    const std::int64_t t = curve.t[k];
    std::vector<double> values;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const Series& s = series[i];
      if (s.v.empty()) continue;
      if (kind == RecordKind::kEval) {
        values.push_back(s.v[k]);
        continue;
      }
      std::size_t& c = cursor[i];
      while (c + 1 < s.t.size() && s.t[c + 1] <= t) ++c;
      values.push_back(s.v[c]);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    curve.mean.push_back(mean);
    curve.stddev.push_back(std::sqrt(var));
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const AggregateCurve& curve) {
  out << "t,mean,std\n";
  char buf[96];
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g\n", static_cast<long long>(curve.t[k]),
                  curve.mean[k], curve.stddev[k]);
    out << buf;
  }
}

}  // namespace camel
