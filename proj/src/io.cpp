#include "duti/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "duti/eval.hpp"
#include "json.hpp"

namespace duti {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& path, int line, const std::string& col,
                    const std::string& tok) {
  try {
    size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(path, line, "bad number '" + tok + "' in column " + col);
  }
}

int parse_label(const std::string& path, int line, const std::string& tok) {
  const double v = parse_double(path, line, "label", tok);
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9)
    fail(path, line, "label '" + tok + "' is not an integer");
  return static_cast<int>(v);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // rows[r] aligned with header
  std::vector<int> line_of_row;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ":0: cannot open file");
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      fail(path, lineno,
           "expected " + std::to_string(t.header.size()) + " columns, got " +
               std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_of_row.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path + ":0: missing header row");
  return t;
}

int find_column(const CsvTable& t, const std::string& path, const std::string& name,
                bool required) {
  for (size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == name) return static_cast<int>(j);
  if (required) fail(path, 1, "missing column " + name);
  return -1;
}

// Feature columns must be feature_0 .. feature_{d-1}; returns their positions.
std::vector<int> feature_columns(const CsvTable& t, const std::string& path) {
  int d = 0;
  for (const auto& h : t.header)
    if (h.rfind("feature_", 0) == 0) ++d;
  if (d == 0) fail(path, 1, "no feature_* columns");
  std::vector<int> cols(d);
  for (int j = 0; j < d; ++j)
    cols[j] = find_column(t, path, "feature_" + std::to_string(j), true);
  return cols;
}

std::string task_name(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

Task task_from_name(const std::string& path, const std::string& s) {
  if (s == "regression") return Task::kRegression;
  if (s == "classification") return Task::kClassification;
  throw ParseError(path + ":0: unknown task '" + s + "'");
}

json load_json(const std::string& path, const std::string& expect_kind) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ":0: cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ":0: " + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kSchemaTag)
    throw ParseError(path + ":0: expected schema " + std::string(kSchemaTag));
  if (!expect_kind.empty() && j.value("kind", "") != expect_kind)
    throw ParseError(path + ":0: expected kind " + expect_kind);
  return j;
}

void store_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ":0: cannot open file for writing");
  out << j.dump(2) << "\n";
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const std::string& path, const json& rows) {
  if (!rows.is_array()) throw ParseError(path + ":0: expected an array of rows");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd m;
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = rows[static_cast<size_t>(i)];
    if (!row.is_array()) throw ParseError(path + ":0: expected an array of rows");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(n, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(path + ":0: ragged matrix rows");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<size_t>(j)].get<double>();
  }
  if (n == 0) m.resize(0, 0);
  return m;
}

}  // namespace

Dataset read_train_csv(const std::string& path, Task task) {
  const CsvTable t = read_csv(path);
  const auto fcols = feature_columns(t, path);
  const int lcol = find_column(t, path, "label", true);
  const int n = static_cast<int>(t.rows.size());
  const int d = static_cast<int>(fcols.size());
  if (n == 0) throw ParseError(path + ":0: no data rows");

  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      x(i, j) = parse_double(path, t.line_of_row[i], t.header[fcols[j]], t.rows[i][fcols[j]]);

  if (task == Task::kRegression) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
      y[i] = parse_double(path, t.line_of_row[i], "label", t.rows[i][lcol]);
    return make_regression_dataset(std::move(x), std::move(y));
  }
  Eigen::VectorXi labels(n);
  int kmax = 1;
  for (int i = 0; i < n; ++i) {
    labels[i] = parse_label(path, t.line_of_row[i], t.rows[i][lcol]);
    if (labels[i] < 0) fail(path, t.line_of_row[i], "negative class label");
    kmax = std::max(kmax, labels[i] + 1);
  }
  return make_classification_dataset(std::move(x), std::move(labels), std::max(kmax, 2));
}

TrustedSet read_trusted_csv(const std::string& path, Task task, int num_classes) {
  const CsvTable t = read_csv(path);
  const auto fcols = feature_columns(t, path);
  const int lcol = find_column(t, path, "label", true);
  const int ccol = find_column(t, path, "confidence", false);
  const int m = static_cast<int>(t.rows.size());
  const int d = static_cast<int>(fcols.size());
  if (m == 0) throw ParseError(path + ":0: no data rows");

  Eigen::MatrixXd x(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j)
      x(i, j) = parse_double(path, t.line_of_row[i], t.header[fcols[j]], t.rows[i][fcols[j]]);

  std::optional<Eigen::VectorXd> conf;
  if (ccol >= 0) {
    conf.emplace(m);
    for (int i = 0; i < m; ++i) {
      (*conf)[i] = parse_double(path, t.line_of_row[i], "confidence", t.rows[i][ccol]);
      if (!((*conf)[i] > 0.0)) fail(path, t.line_of_row[i], "confidence must be positive");
    }
  }

  if (task == Task::kRegression) {
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i)
      y[i] = parse_double(path, t.line_of_row[i], "label", t.rows[i][lcol]);
    return make_regression_trusted(std::move(x), std::move(y), std::move(conf));
  }
  Eigen::VectorXi labels(m);
  for (int i = 0; i < m; ++i) {
    labels[i] = parse_label(path, t.line_of_row[i], t.rows[i][lcol]);
    if (labels[i] < 0 || labels[i] >= num_classes)
      fail(path, t.line_of_row[i],
           "class label " + std::to_string(labels[i]) + " outside [0, " +
               std::to_string(num_classes) + ")");
  }
  return make_classification_trusted(std::move(x), std::move(labels), std::move(conf));
}

void write_train_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ":0: cannot open file for writing");
  for (int j = 0; j < data.dim(); ++j) out << "feature_" << j << ",";
  out << "label\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << fmt_double(data.x(i, j)) << ",";
    if (data.task == Task::kRegression)
      out << fmt_double(data.y[i]) << "\n";
    else
      out << data.labels[i] << "\n";
  }
}

void write_trusted_csv(const std::string& path, const TrustedSet& trusted, Task task) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ":0: cannot open file for writing");
  const int d = static_cast<int>(trusted.x.cols());
  for (int j = 0; j < d; ++j) out << "feature_" << j << ",";
  out << "label,confidence\n";
  for (int i = 0; i < trusted.m(); ++i) {
    for (int j = 0; j < d; ++j) out << fmt_double(trusted.x(i, j)) << ",";
    if (task == Task::kRegression)
      out << fmt_double(trusted.y[i]);
    else
      out << trusted.labels[i];
    out << "," << fmt_double(trusted.confidence[i]) << "\n";
  }
}

void write_truth_json(const std::string& path, const SimulatedCorpus& corpus) {
  json j;
  j["schema"] = kSchemaTag;
  j["kind"] = "truth";
  j["task"] = task_name(corpus.train.task);
  j["n"] = corpus.train.n();
  j["generator"] = corpus.generator;
  j["seed"] = corpus.seed;
  j["bug_indices"] = corpus.bug_indices;
  if (corpus.train.task == Task::kRegression) {
    if (!corpus.train.true_y) throw std::invalid_argument("write_truth_json: missing true_y");
    j["true_y"] = std::vector<double>(corpus.train.true_y->begin(), corpus.train.true_y->end());
  } else {
    if (!corpus.train.true_labels)
      throw std::invalid_argument("write_truth_json: missing true_labels");
    j["true_labels"] =
        std::vector<int>(corpus.train.true_labels->begin(), corpus.train.true_labels->end());
  }
  store_json(path, j);
}

Truth read_truth_json(const std::string& path) {
  const json j = load_json(path, "truth");
  Truth t;
  t.task = task_from_name(path, j.at("task").get<std::string>());
  t.n = j.at("n").get<int>();
  t.bug_indices = j.at("bug_indices").get<std::vector<int>>();
  if (t.task == Task::kRegression) {
    const auto v = j.at("true_y").get<std::vector<double>>();
    t.true_y = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  } else {
    const auto v = j.at("true_labels").get<std::vector<int>>();
    t.true_labels = Eigen::Map<const Eigen::VectorXi>(v.data(), v.size());
  }
  if ((t.task == Task::kRegression ? t.true_y.size() : t.true_labels.size()) != t.n)
    throw ParseError(path + ":0: truth length disagrees with n");
  return t;
}

void write_report_json(const std::string& path, const DebugReport& report) {
  json j;
  j["schema"] = kSchemaTag;
  j["kind"] = "debug";
  j["task"] = task_name(report.task);
  j["n"] = report.n;
  j["k"] = report.k;
  j["gamma0"] = report.gamma0;
  j["budget"] = report.budget;
  j["lambda"] = report.lambda;
  j["sigma"] = report.sigma;
  j["seed"] = report.seed;
  j["all_rounds_converged"] = report.all_rounds_converged;
  json rounds = json::array();
  for (const RoundRecord& r : report.trajectory) {
    json jr;
    jr["t"] = r.t;
    jr["gamma"] = r.gamma;
    jr["converged"] = r.converged;
    jr["flags"] = r.flags;
    jr["delta"] = matrix_to_json(r.delta);
    rounds.push_back(std::move(jr));
  }
  j["trajectory"] = std::move(rounds);
  json ranking = json::array();
  for (const RankedFlag& f : report.ranking) {
    json jf;
    jf["index"] = f.index;
    jf["first_round"] = f.first_round;
    jf["deviation"] = f.deviation;
    if (report.task == Task::kRegression)
      jf["fix_value"] = f.fix_value;
    else
      jf["fix_label"] = f.fix_label;
    ranking.push_back(std::move(jf));
  }
  j["ranking"] = std::move(ranking);
  store_json(path, j);
}

DebugReport read_report_json(const std::string& path) {
  const json j = load_json(path, "debug");
  DebugReport r;
  r.task = task_from_name(path, j.at("task").get<std::string>());
  r.n = j.at("n").get<int>();
  r.k = j.at("k").get<int>();
  r.gamma0 = j.at("gamma0").get<double>();
  r.budget = j.at("budget").get<int>();
  r.lambda = j.at("lambda").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.all_rounds_converged = j.at("all_rounds_converged").get<bool>();
  for (const json& jr : j.at("trajectory")) {
    RoundRecord rec;
    rec.t = jr.at("t").get<int>();
    rec.gamma = jr.at("gamma").get<double>();
    rec.converged = jr.at("converged").get<bool>();
    rec.flags = jr.at("flags").get<std::vector<int>>();
    rec.delta = matrix_from_json(path, jr.at("delta"));
    r.trajectory.push_back(std::move(rec));
  }
  for (const json& jf : j.at("ranking")) {
    RankedFlag f;
    f.index = jf.at("index").get<int>();
    f.first_round = jf.at("first_round").get<int>();
    f.deviation = jf.at("deviation").get<double>();
    if (r.task == Task::kRegression)
      f.fix_value = jf.at("fix_value").get<double>();
    else
      f.fix_label = jf.at("fix_label").get<int>();
    r.ranking.push_back(f);
  }
  return r;
}

void write_baseline_json(const std::string& path, const BaselineRanking& ranking,
                         const std::string& method, Task task, int n) {
  json j;
  j["schema"] = kSchemaTag;
  j["kind"] = "baseline";
  j["method"] = method;
  j["task"] = task_name(task);
  j["n"] = n;
  j["order"] = ranking.order;
  j["score"] = ranking.score;
  if (!ranking.fix_value.empty()) j["fix_value"] = ranking.fix_value;
  if (!ranking.fix_label.empty()) j["fix_label"] = ranking.fix_label;
  store_json(path, j);
}

LoadedRanking read_ranking_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ":0: cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ":0: " + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kSchemaTag)
    throw ParseError(path + ":0: expected schema " + std::string(kSchemaTag));
  LoadedRanking out;
  out.kind = j.value("kind", "");
  out.task = task_from_name(path, j.at("task").get<std::string>());
  out.n = j.at("n").get<int>();
  if (out.kind == "debug") {
    for (const json& jf : j.at("ranking")) {
      out.order.push_back(jf.at("index").get<int>());
      if (out.task == Task::kRegression)
        out.fix_value.push_back(jf.at("fix_value").get<double>());
      else
        out.fix_label.push_back(jf.at("fix_label").get<int>());
    }
  } else if (out.kind == "baseline") {
    out.order = j.at("order").get<std::vector<int>>();
    if (j.contains("fix_value")) out.fix_value = j.at("fix_value").get<std::vector<double>>();
    if (j.contains("fix_label")) out.fix_label = j.at("fix_label").get<std::vector<int>>();
  } else {
    throw ParseError(path + ":0: expected kind debug or baseline");
  }
  for (int i : out.order)
    if (i < 0 || i >= out.n) throw ParseError(path + ":0: ranked index out of range");
  return out;
}

void write_pr_csv(const std::string& path, const std::vector<int>& ranked,
                  const std::vector<int>& bug_indices) {
  const PrCurve c = pr_curve(ranked, bug_indices);
  std::ofstream out(path);
  if (!out) throw ParseError(path + ":0: cannot open file for writing");
  out << "examined,recall,precision\n";
  for (size_t j = 0; j < c.recall.size(); ++j)
    out << (j + 1) << "," << fmt_double(c.recall[j]) << "," << fmt_double(c.precision[j])
        << "\n";
}

void write_fix_csv(const std::string& path, const std::vector<int>& ranked,
                   const std::vector<int>& fix_labels, const Eigen::VectorXi& true_labels,
                   const std::vector<int>& bug_indices) {
  const FixCurve c = fix_curve(ranked, fix_labels, true_labels, bug_indices);
  std::ofstream out(path);
  if (!out) throw ParseError(path + ":0: cannot open file for writing");
  out << "examined,correct\n";
  for (size_t j = 0; j < c.examined.size(); ++j)
    out << c.examined[j] << "," << c.correct[j] << "\n";
}

}  // namespace duti
