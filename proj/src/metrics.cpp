#include "fbharness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fbharness/errors.hpp"

namespace fbh {

std::string EvalRecord::key() const {
  return snapshot_id + "\t" + condition + "\t" + model;
}

json to_json(const EvalRecord& r) {
  json j{{"snapshot_id", r.snapshot_id},
         {"dataset", r.dataset},
         {"dataset_version", r.dataset_version},
         {"domain", r.domain},
         {"kind", to_string(r.kind)},
         {"policy", to_string(r.policy)},
         {"condition", r.condition},
         {"model", r.model},
         {"parsed", r.parsed},
         {"error", r.error ? json(to_string(*r.error)) : json(nullptr)},
         {"correct", r.correct}};
  if (r.positive) j["positive"] = *r.positive;
  if (r.gt_position) j["gt_position"] = *r.gt_position;
  if (r.pair_id) j["pair_id"] = *r.pair_id;
  j["transcript"] = r.transcript;
  return j;
}

namespace {

[[noreturn]] void bad(std::size_t line, const std::string& field,
                      const std::string& why) {
  throw SchemaError("line " + std::to_string(line) + ": field '" + field +
                        "' " + why,
                    line, field);
}

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) bad(line, key, "is missing");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad(line, key, "has the wrong type");
  }
}

}  // namespace

EvalRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) bad(line, "<record>", "is not an object");
  static const std::set<std::string> known = {
      "snapshot_id", "dataset", "dataset_version", "domain", "kind",
      "policy", "condition", "model", "parsed", "error", "correct",
      "positive", "gt_position", "pair_id", "transcript"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) bad(line, k, "is not a record field");
  }
  EvalRecord r;
  r.snapshot_id = field<std::string>(j, "snapshot_id", line);
  r.dataset = field<std::string>(j, "dataset", line);
  r.dataset_version = field<std::string>(j, "dataset_version", line);
  r.domain = field<std::string>(j, "domain", line);
  auto kind = parse_feedback_kind(field<std::string>(j, "kind", line));
  if (!kind) bad(line, "kind", "is not a feedback kind");
  r.kind = *kind;
  auto policy = parse_policy(field<std::string>(j, "policy", line));
  if (!policy) bad(line, "policy", "is not a sampling policy");
  r.policy = *policy;
  r.condition = field<std::string>(j, "condition", line);
  r.model = field<std::string>(j, "model", line);
  if (!j.contains("parsed")) bad(line, "parsed", "is missing");
  r.parsed = j["parsed"];
  if (!j.contains("error")) bad(line, "error", "is missing");
  if (!j["error"].is_null()) {
    auto e = parse_error_class(field<std::string>(j, "error", line));
    if (!e) bad(line, "error", "is not an error class");
    r.error = e;
  }
  if (r.error.has_value() == !r.parsed.is_null()) {
    bad(line, "parsed", "must be null exactly when an error is recorded");
  }
  r.correct = field<bool>(j, "correct", line);
  if (r.correct && r.error) bad(line, "correct", "is true on an error");
  if (j.contains("positive")) r.positive = field<bool>(j, "positive", line);
  if (j.contains("gt_position")) {
    r.gt_position = field<std::string>(j, "gt_position", line);
    if (*r.gt_position != "first" && *r.gt_position != "second") {
      bad(line, "gt_position", "must be \"first\" or \"second\"");
    }
  }
  if (j.contains("pair_id")) r.pair_id = field<std::int64_t>(j, "pair_id", line);
  if (r.kind == FeedbackKind::Binary && !r.positive) {
    bad(line, "positive", "is required for binary records");
  }
  r.transcript = field<std::string>(j, "transcript", line);
  return r;
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<EvalRecord> out;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    ++line;
    if (nl == std::string::npos) break;  // unterminated tail
    const std::string_view row(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (row.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(row);
    } catch (const json::exception&) {
      bad(line, "<record>", "is not valid JSON");
    }
    out.push_back(record_from_json(j, line));
  }
  return out;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<EvalRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Interval wilson(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / b;
}

json key_json(const CellKey& k) {
  return json{{"domain", k.domain},
              {"kind", to_string(k.kind)},
              {"policy", to_string(k.policy)},
              {"condition", k.condition},
              {"model", k.model}};
}

CellKey key_from_json(const json& j) {
  CellKey k;
  k.domain = j.at("domain").get<std::string>();
  auto kind = parse_feedback_kind(j.at("kind").get<std::string>());
  auto policy = parse_policy(j.at("policy").get<std::string>());
  if (!kind || !policy) throw ConfigError("report: bad cell key");
  k.kind = *kind;
  k.policy = *policy;
  k.condition = j.at("condition").get<std::string>();
  k.model = j.at("model").get<std::string>();
  return k;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Report aggregate(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw ConfigError("no records to aggregate");
  Report rep;
  std::set<std::string> seen;
  std::map<CellKey, Cell> cells;
  for (const auto& r : records) {
    if (!seen.insert(r.key()).second) {
      throw ConfigError("duplicate record for " + r.snapshot_id + " (" +
                        r.condition + ", " + r.model + ")");
    }
    auto [it, fresh] = rep.dataset_versions.emplace(r.dataset, r.dataset_version);
    if (!fresh && it->second != r.dataset_version) {
      throw ConfigError("records mix two versions of dataset " + r.dataset);
    }
    const CellKey key{r.domain, r.kind, r.policy, r.condition, r.model};
    Cell& c = cells[key];
    if (c.n == 0) {
      c.key = key;
      c.dataset = r.dataset;
    } else if (c.dataset != r.dataset) {
      throw ConfigError("cell " + r.domain + "/" + std::string(to_string(r.kind)) +
                        " mixes datasets " + c.dataset + " and " + r.dataset);
    }
    ++c.n;
    c.correct += r.correct;
    if (r.error == ErrorClass::Format) ++c.format_errors;
    if (r.error == ErrorClass::IllegalValue) ++c.illegal_values;
    if (r.kind == FeedbackKind::Binary) {
      if (!c.binary) c.binary.emplace();
      // Positive class: the action is optimal. An unusable answer is
      // wrong either way, so it lands on the wrong side of the matrix.
      const bool truth = r.positive.value_or(false);
      const bool predicted = r.correct ? truth : !truth;
      auto& b = *c.binary;
      if (truth && predicted) ++b.tp;
      if (truth && !predicted) ++b.fn;
      if (!truth && predicted) ++b.fp;
      if (!truth && !predicted) ++b.tn;
    }
    if (r.kind == FeedbackKind::Preference && r.gt_position) {
      if (!c.position) c.position.emplace();
      auto& p = *c.position;
      if (*r.gt_position == "first") {
        ++p.n_first;
        p.correct_first += r.correct;
      } else {
        ++p.n_second;
        p.correct_second += r.correct;
      }
    }
  }
  for (auto& [key, c] : cells) {
    c.accuracy = ratio(c.correct, c.n);
    c.ci = wilson(c.correct, c.n);
    if (c.binary) {
      auto& b = *c.binary;
      b.precision = ratio(b.tp, b.tp + b.fp);
      b.recall = ratio(b.tp, b.tp + b.fn);
      b.f1 = b.precision + b.recall == 0
                 ? 0.0
                 : 2 * b.precision * b.recall / (b.precision + b.recall);
    }
    if (c.position) {
      auto& p = *c.position;
      p.acc_first = ratio(p.correct_first, p.n_first);
      p.acc_second = ratio(p.correct_second, p.n_second);
      p.gap = p.acc_first - p.acc_second;
    }
    rep.cells.push_back(std::move(c));
  }
  return rep;
}

const Cell* Report::find(const CellKey& key) const {
  for (const auto& c : cells) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

json Report::to_json() const {
  json out{{"dataset_versions", dataset_versions}, {"cells", json::array()}};
  for (const auto& c : cells) {
    json j = key_json(c.key);
    j["dataset"] = c.dataset;
    j["n"] = c.n;
    j["correct"] = c.correct;
    j["accuracy"] = c.accuracy;
    j["wilson95"] = {c.ci.lo, c.ci.hi};
    j["errors"] = {{"format", c.format_errors},
                   {"illegal-value", c.illegal_values}};
    if (c.binary) {
      const auto& b = *c.binary;
      j["binary"] = {{"tp", b.tp}, {"fp", b.fp}, {"tn", b.tn}, {"fn", b.fn},
                     {"precision", b.precision}, {"recall", b.recall},
                     {"f1", b.f1}};
    }
    if (c.position) {
      const auto& p = *c.position;
      j["position"] = {{"n_first", p.n_first},
                       {"correct_first", p.correct_first},
                       {"n_second", p.n_second},
                       {"correct_second", p.correct_second},
                       {"accuracy_first", p.acc_first},
                       {"accuracy_second", p.acc_second},
                       {"gap", p.gap}};
    }
    out["cells"].push_back(std::move(j));
  }
  return out;
}

Report Report::from_json(const json& j) {
  try {
    Report r;
    r.dataset_versions =
        j.at("dataset_versions").get<std::map<std::string, std::string>>();
    for (const auto& cj : j.at("cells")) {
      Cell c;
      c.key = key_from_json(cj);
      c.dataset = cj.at("dataset").get<std::string>();
      c.n = cj.at("n").get<std::size_t>();
      c.correct = cj.at("correct").get<std::size_t>();
      c.accuracy = cj.at("accuracy").get<double>();
      c.ci = {cj.at("wilson95").at(0).get<double>(),
              cj.at("wilson95").at(1).get<double>()};
      c.format_errors = cj.at("errors").at("format").get<std::size_t>();
      c.illegal_values = cj.at("errors").at("illegal-value").get<std::size_t>();
      if (cj.contains("binary")) {
        const auto& b = cj["binary"];
        c.binary = BinaryStats{b.at("tp"), b.at("fp"), b.at("tn"), b.at("fn"),
                               b.at("precision"), b.at("recall"), b.at("f1")};
      }
      if (cj.contains("position")) {
        const auto& p = cj["position"];
        c.position = PositionStats{p.at("n_first"), p.at("correct_first"),
                                   p.at("n_second"), p.at("correct_second"),
                                   p.at("accuracy_first"),
                                   p.at("accuracy_second"), p.at("gap")};
      }
      r.cells.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string render_columns(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  auto display = [](const std::string& s) {
    // UTF-8 continuation bytes take no column.
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    return n;
  };
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      width[i] = std::max(width[i], display(r[i]));
    }
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) line += "  ";
      line += r[i];
      if (i + 1 < r.size()) line.append(width[i] - display(r[i]), ' ');
    }
    out += line + "\n";
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string Report::text_table() const {
  std::vector<std::vector<std::string>> rows = {
      {"domain", "kind", "policy", "condition", "model", "n", "acc",
       "wilson95", "fmt", "illegal", "P", "R", "F1", "acc1st", "acc2nd",
       "gap"}};
  for (const auto& c : cells) {
    std::vector<std::string> r = {
        c.key.domain, std::string(to_string(c.key.kind)),
        std::string(to_string(c.key.policy)), c.key.condition, c.key.model,
        std::to_string(c.n), fixed(c.accuracy),
        "[" + fixed(c.ci.lo) + ", " + fixed(c.ci.hi) + "]",
        std::to_string(c.format_errors), std::to_string(c.illegal_values)};
    if (c.binary) {
      r.insert(r.end(), {fixed(c.binary->precision), fixed(c.binary->recall),
                         fixed(c.binary->f1)});
    } else {
      r.insert(r.end(), {"-", "-", "-"});
    }
    if (c.position) {
      r.insert(r.end(), {fixed(c.position->acc_first),
                         fixed(c.position->acc_second),
                         fixed(c.position->gap)});
    } else {
      r.insert(r.end(), {"-", "-", "-"});
    }
    rows.push_back(std::move(r));
  }
  return render_columns(rows);
}

std::string Report::csv() const {
  std::string out =
      "domain,kind,policy,condition,model,n,correct,accuracy,wilson_lo,"
      "wilson_hi,format_errors,illegal_values,precision,recall,f1,"
      "accuracy_first,accuracy_second,gap\n";
  auto num = [](double v) { return fixed(v, 6); };
  for (const auto& c : cells) {
    out += csv_field(c.key.domain) + "," + std::string(to_string(c.key.kind)) +
           "," + std::string(to_string(c.key.policy)) + "," +
           csv_field(c.key.condition) + "," + csv_field(c.key.model) + "," +
           std::to_string(c.n) + "," + std::to_string(c.correct) + "," +
           num(c.accuracy) + "," + num(c.ci.lo) + "," + num(c.ci.hi) + "," +
           std::to_string(c.format_errors) + "," +
           std::to_string(c.illegal_values) + ",";
    if (c.binary) {
      out += num(c.binary->precision) + "," + num(c.binary->recall) + "," +
             num(c.binary->f1) + ",";
    } else {
      out += ",,,";
    }
    if (c.position) {
      out += num(c.position->acc_first) + "," + num(c.position->acc_second) +
             "," + num(c.position->gap);
    } else {
      out += ",,";
    }
    out += "\n";
  }
  return out;
}

std::string CellDelta::arrow() const {
  if (std::abs(delta) < 1e-12) return "=";
  return delta > 0 ? "↑" : "↓";
}

std::vector<CellDelta> diff_reports(const Report& base, const Report& variant) {
  auto index = [](const Report& r, const char* side) {
    std::map<CellKey, const Cell*> m;
    for (const auto& c : r.cells) {
      CellKey k = c.key;
      k.condition.clear();
      if (!m.emplace(k, &c).second) {
        throw ConfigError(std::string(side) + " report has several conditions "
                          "for " + k.domain + "/" + std::string(to_string(k.kind)) +
                          "/" + k.model + "; select one first");
      }
    }
    return m;
  };
  const auto b = index(base, "base");
  const auto v = index(variant, "variant");
  if (b.size() != v.size()) {
    throw ConfigError("reports do not cover the same cells");
  }
  std::vector<CellDelta> out;
  for (const auto& [k, bc] : b) {
    auto it = v.find(k);
    if (it == v.end()) {
      throw ConfigError("variant report lacks " + k.domain + "/" +
                        std::string(to_string(k.kind)) + "/" + k.model);
    }
    if (bc->dataset != it->second->dataset || bc->n != it->second->n) {
      throw ConfigError("cells for " + k.domain + "/" +
                        std::string(to_string(k.kind)) +
                        " were scored on different datasets");
    }
    CellDelta d;
    d.base = bc->key;
    d.variant_condition = it->second->key.condition;
    d.base_accuracy = bc->accuracy;
    d.variant_accuracy = it->second->accuracy;
    d.delta = d.variant_accuracy - d.base_accuracy;
    out.push_back(std::move(d));
  }
  return out;
}

Report select_condition(const Report& report, const std::string& condition) {
  Report r;
  for (const auto& c : report.cells) {
    if (c.key.condition == condition) {
      r.cells.push_back(c);
      r.dataset_versions[c.dataset] = report.dataset_versions.at(c.dataset);
    }
  }
  if (r.cells.empty()) {
    throw ConfigError("report has no cells for condition '" + condition + "'");
  }
  return r;
}

std::string diff_table(const std::vector<CellDelta>& deltas) {
  std::vector<std::vector<std::string>> rows = {
      {"domain", "kind", "policy", "model", "base", "variant", "acc", "change"}};
  for (const auto& d : deltas) {
    char change[32];
    std::snprintf(change, sizeof change, "%.3f", std::abs(d.delta));
    rows.push_back({d.base.domain, std::string(to_string(d.base.kind)),
                    std::string(to_string(d.base.policy)), d.base.model,
                    d.base.condition, d.variant_condition,
                    fixed(d.base_accuracy) + " -> " + fixed(d.variant_accuracy),
                    d.arrow() + change});
  }
  return render_columns(rows);
}

json to_json(const std::vector<CellDelta>& deltas) {
  json out = json::array();
  for (const auto& d : deltas) {
    json j = key_json(d.base);
    j.erase("condition");
    j["base_condition"] = d.base.condition;
    j["variant_condition"] = d.variant_condition;
    j["base_accuracy"] = d.base_accuracy;
    j["variant_accuracy"] = d.variant_accuracy;
    j["delta"] = d.delta;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace fbh
