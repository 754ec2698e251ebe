#include "hybrid/runner/summary.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

namespace hybrid::runner {

namespace {

using Key = std::tuple<std::string, std::string, std::string, bool, long>;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void put(std::ostream& out, const std::optional<Stat>& s) {
  if (s) {
    out << ',' << fmt(s->mean) << ',' << fmt(s->sd);
  } else {
    out << ",,";
  }
}

}  // namespace

std::optional<Stat> stat_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  Stat s;
  s.count = static_cast<int>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / s.count);
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentReport>& records) {
  struct Acc {
    int records = 0;
    int failed = 0;
    // Keyed by seed so the accumulation order does not depend on record order.
    std::map<unsigned long long, std::vector<const ExperimentReport*>> by_seed;
  };
  std::map<Key, Acc> cells;
  for (const auto& r : records) {
    Acc& a = cells[{r.problem, r.scheme, r.model, r.filtered, r.n_train}];
    ++a.records;
    if (!r.ok()) {
      ++a.failed;
      continue;
    }
    a.by_seed[r.seed].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : cells) {
    SummaryRow row;
    std::tie(row.problem, row.scheme, row.model, row.filtered, row.n_train) = key;
    row.records = acc.records;
    row.failed = acc.failed;
    std::vector<double> d, dk, rm, ld;
    for (const auto& [seed, reps] : acc.by_seed) {
      for (const ExperimentReport* r : reps) {
        if (r->d_hat) d.push_back(*r->d_hat);
        if (r->dk_hat) dk.push_back(*r->dk_hat);
        if (r->rmae) rm.push_back(*r->rmae);
        if (r->log_d_hat) ld.push_back(*r->log_d_hat);
      }
    }
    row.d_hat = stat_of(d);
    row.dk_hat = stat_of(dk);
    row.rmae = stat_of(rm);
    row.log_d_hat = stat_of(ld);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "problem,scheme,model,filtered,n_train,records,failed,status,"
         "d_hat_mean,d_hat_sd,dk_hat_mean,dk_hat_sd,rmae_mean,rmae_sd,log_d_hat_mean,log_d_hat_sd\n";
  for (const auto& r : rows) {
    const char* status = r.all_failed() ? "all_failed" : (r.failed > 0 ? "partial" : "ok");
    out << r.problem << ',' << r.scheme << ',' << r.model << ',' << (r.filtered ? "filtered" : "unfiltered") << ','
        << r.n_train << ',' << r.records << ',' << r.failed << ',' << status;
    put(out, r.d_hat);
    put(out, r.dk_hat);
    put(out, r.rmae);
    put(out, r.log_d_hat);
    out << '\n';
  }
}

}  // namespace hybrid::runner
