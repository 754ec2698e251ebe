#include "hybrid/problems/real.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

#include <boost/tokenizer.hpp>

#include "hybrid/core/random.hpp"

namespace hybrid::problems {

namespace {

constexpr int kTrainRows = 100;
constexpr int kValRows = 100;

std::string normalize(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

struct Column {
  std::string name;
  std::vector<std::string> prefixes;  // normalized header prefixes accepted
};

// Features in output order (the prior's feature first), then the target.
struct Schema {
  std::vector<Column> inputs;
  Column target;
  bool cement_water_ratio = false;
};

Schema schema_for(const std::string& dataset) {
  if (dataset == "ccpp") {
    return {{{"T", {"at", "t"}}, {"AP", {"ap"}}, {"RH", {"rh"}}, {"V", {"v"}}}, {"PE", {"pe", "ep"}}, false};
  }
  if (dataset == "ccs") {
    return {{{"Cement", {"cement"}},
             {"Blast Furnace Slag", {"blastfurnaceslag", "slag"}},
             {"Fly Ash", {"flyash"}},
             {"Water", {"water"}},
             {"Superplasticizer", {"superplasticizer"}},
             {"Coarse Aggregate", {"coarseaggregate"}},
             {"Fine Aggregate", {"fineaggregate"}},
             {"Age", {"age"}}},
            {"Strength", {"concretecompressivestrength", "strength"}},
            true};
  }
  throw ConfigError("unknown real dataset '" + dataset + "' (expected ccpp or ccs)");
}

// An exact header match wins; otherwise a prefix of at least three characters
// may match a header that carries units.
int find_column(const std::vector<std::string>& headers, const Column& col) {
  for (const auto& p : col.prefixes) {
    const auto it = std::find(headers.begin(), headers.end(), p);
    if (it != headers.end()) return static_cast<int>(it - headers.begin());
  }
  std::optional<int> found;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const bool hit = std::any_of(col.prefixes.begin(), col.prefixes.end(), [&](const std::string& p) {
      return p.size() >= 3 && headers[i].rfind(p, 0) == 0;
    });
    if (!hit) continue;
    if (found) throw DataError("column '" + col.name + "' matches more than one header");
    found = static_cast<int>(i);
  }
  if (!found) throw DataError("missing column '" + col.name + "'");
  return *found;
}

Dataset take(const Matrix& x, const Vector& y, const std::vector<int>& rows, Split split) {
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  d.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.features.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    d.targets(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  d.known = {0};
  d.split = split;
  return d;
}

}  // namespace

RealMode parse_real_mode(const std::string& s) {
  if (s == "int" || s == "INT") return RealMode::kInt;
  if (s == "ext" || s == "EXT") return RealMode::kExt;
  throw ConfigError("unknown split mode '" + s + "' (expected int or ext)");
}

std::string to_string(RealMode mode) { return mode == RealMode::kInt ? "int" : "ext"; }

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    for (const auto& tok : Tokenizer(line)) out.push_back(tok);
    return out;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  t.header = split(line);
  std::vector<double> values;
  long n = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(n + 2) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    }
    for (const auto& f : fields) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || f.find_first_not_of(" \t", used) != std::string::npos) {
        throw DataError(path.string() + ": non-numeric value '" + f + "' on row " + std::to_string(n + 2));
      }
      values.push_back(v);
    }
    ++n;
  }
  t.rows = Eigen::Map<Matrix>(values.data(), n, static_cast<Eigen::Index>(t.header.size()));
  return t;
}

StaticProblem load_real(const std::filesystem::path& path, const std::string& dataset, RealMode mode,
                        std::uint64_t seed) {
  const Schema schema = schema_for(dataset);
  const CsvTable table = read_csv(path);
  std::vector<std::string> headers;
  for (const auto& h : table.header) headers.push_back(normalize(h));

  std::vector<int> cols;
  for (const auto& c : schema.inputs) cols.push_back(find_column(headers, c));
  const int target_col = find_column(headers, schema.target);

  const Eigen::Index n = table.rows.rows();
  const int extra = schema.cement_water_ratio ? 1 : 0;
  Matrix x(n, static_cast<Eigen::Index>(cols.size()) + extra);
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Eigen::Index>(j) + extra) = table.rows.col(cols[j]);
  if (schema.cement_water_ratio) {
    const Vector water = x.col(4);
    if ((water.array() <= 0.0).any()) throw DataError("water amount must be positive");
    x.col(0) = x.col(1).array() / water.array();
  }
  const Vector y = table.rows.col(target_col);

  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> test_rows;
  if (mode == RealMode::kExt) {
    std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return y(a) < y(b); });
    const auto quarter = static_cast<std::ptrdiff_t>(n / 4);
    test_rows.assign(pool.begin(), pool.begin() + quarter);
    pool.erase(pool.begin(), pool.begin() + quarter);
    std::sort(pool.begin(), pool.end());
  }
  if (static_cast<long>(pool.size()) < kTrainRows + kValRows + (mode == RealMode::kInt ? 1 : 0)) {
    throw DataError(path.string() + " has too few rows (" + std::to_string(n) + ")");
  }
  Rng rng(derive_seed(seed, 0));
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::vector<int> train_rows(pool.begin(), pool.begin() + kTrainRows);
  const std::vector<int> val_rows(pool.begin() + kTrainRows, pool.begin() + kTrainRows + kValRows);
  if (mode == RealMode::kInt) {
    test_rows.assign(pool.begin() + kTrainRows + kValRows, pool.end());
    std::sort(test_rows.begin(), test_rows.end());
  }

  StaticProblem p;
  p.name = dataset;
  p.train = take(x, y, train_rows, Split::kTrain);
  p.val = take(x, y, val_rows, Split::kVal);
  p.test = take(x, y, test_rows, Split::kTest);

  const Eigen::RowVectorXd mu = p.train.features.colwise().mean();
  Eigen::RowVectorXd sd = ((p.train.features.rowwise() - mu).array().square().colwise().sum() /
                           static_cast<double>(kTrainRows)).sqrt();
  const double y_mu = p.train.targets.mean();
  const double y_sd = std::sqrt((p.train.targets.array() - y_mu).square().mean());
  if ((sd.array() <= 0.0).any() || !(y_sd > 0.0)) throw DataError("a training column is constant");
  for (Dataset* d : {&p.train, &p.val, &p.test}) {
    d->features = (d->features.rowwise() - mu).array().rowwise() / sd.array();
    d->targets = (d->targets.array() - y_mu) / y_sd;
    d->validate();
  }

  std::vector<std::string> names;
  if (schema.cement_water_ratio) names.push_back("Cement/Water");
  for (const auto& c : schema.inputs) names.push_back(c.name);
  p.truth = ParametricPrior(std::make_shared<LinearForm>(static_cast<int>(x.cols()), IndexSet{0}), Vector::Zero(1));
  p.meta["features"] = names;
  p.meta["mode"] = to_string(mode);
  p.meta["rows"] = n;
  p.meta["has_truth"] = false;
  p.meta["target_mean"] = y_mu;
  p.meta["target_sd"] = y_sd;
  return p;
}

}  // namespace hybrid::problems
