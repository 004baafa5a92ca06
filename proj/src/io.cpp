#include "fistasep/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fistasep::io {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void dump_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw WriteError("failed writing " + path);
}

}  // namespace

std::vector<esp::Ellipsoid> read_esp_instance(const std::string& path) {
  const json doc = load_json(path);
  try {
    const int dim = doc.at("dim").get<int>();
    std::vector<esp::Ellipsoid> out;
    for (const auto& rec : doc.at("ellipsoids")) {
      const std::string label = rec.at("label").get<std::string>();
      if (label != "C" && label != "D") throw ParseError(path + ": label must be \"C\" or \"D\"");
      const auto& cj = rec.at("center");
      if (static_cast<int>(cj.size()) != dim) throw ParseError(path + ": center length != dim");
      Vector center(dim);
      for (int i = 0; i < dim; ++i) center[i] = cj.at(i).get<double>();
      const auto& sj = rec.at("shape");
      if (static_cast<int>(sj.size()) != dim) throw ParseError(path + ": shape row count != dim");
      Matrix shape(dim, dim);
      for (int i = 0; i < dim; ++i) {
        if (static_cast<int>(sj.at(i).size()) != dim)
          throw ParseError(path + ": shape row length != dim");
        for (int k = 0; k < dim; ++k) shape(i, k) = sj.at(i).at(k).get<double>();
      }
      out.push_back(esp::make_ellipsoid(std::move(center), std::move(shape),
                                        label == "C" ? esp::Label::ClassC : esp::Label::ClassD));
    }
    if (out.empty()) throw ParseError(path + ": no ellipsoids");
    return out;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_esp_instance(const std::string& path, const std::vector<esp::Ellipsoid>& ellipsoids) {
  if (ellipsoids.empty()) throw WriteError("write_esp_instance: no ellipsoids");
  const int dim = static_cast<int>(ellipsoids.front().center.size());
  json doc;
  doc["dim"] = dim;
  doc["ellipsoids"] = json::array();
  for (const auto& e : ellipsoids) {
    json rec;
    rec["label"] = e.label == esp::Label::ClassC ? "C" : "D";
    rec["center"] = std::vector<double>(e.center.data(), e.center.data() + e.center.size());
    json rows = json::array();
    for (int i = 0; i < dim; ++i) {
      json row = json::array();
      for (int k = 0; k < dim; ++k) row.push_back(e.shape(i, k));
      rows.push_back(std::move(row));
    }
    rec["shape"] = std::move(rows);
    doc["ellipsoids"].push_back(std::move(rec));
  }
  dump_json(path, doc);
}

namespace {

int map_libsvm_label(double raw, const std::string& path, long line_no) {
  if (raw == 1.0) return 1;
  if (raw == -1.0 || raw == 0.0 || raw == 2.0) return -1;
  throw ParseError(path + ":" + std::to_string(line_no) + ": unsupported label " +
                   std::to_string(raw));
}

}  // namespace

LabeledData read_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<int> labels;
  std::vector<std::vector<std::pair<long, double>>> rows;
  long max_index = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip comments and blank lines
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;

    double raw_label;
    try {
      size_t used = 0;
      raw_label = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad label token '" + tok + "'");
    }
    labels.push_back(map_libsvm_label(raw_label, path, line_no));

    std::vector<std::pair<long, double>> feats;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad feature token '" + tok +
                         "'");
      long idx;
      double val;
      try {
        size_t used = 0;
        idx = std::stol(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(tok);
        const std::string vs = tok.substr(colon + 1);
        val = std::stod(vs, &used);
        if (used != vs.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad feature token '" + tok +
                         "'");
      }
      if (idx < 1)
        throw ParseError(path + ":" + std::to_string(line_no) + ": indices are 1-based");
      max_index = std::max(max_index, idx);
      feats.emplace_back(idx, val);
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw ParseError(path + ": no samples");

  LabeledData data;
  data.x = Matrix::Zero(static_cast<Index>(rows.size()), max_index);
  data.y.resize(static_cast<Index>(labels.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    data.y[static_cast<Index>(i)] = labels[i];
    for (const auto& [idx, val] : rows[i]) data.x(static_cast<Index>(i), idx - 1) = val;
  }
  return data;
}

void write_libsvm(const std::string& path, const LabeledData& data) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot open " + path + " for writing");
  for (Index i = 0; i < data.x.rows(); ++i) {
    out << (data.y[i] > 0 ? "+1" : "-1");
    for (Index k = 0; k < data.x.cols(); ++k)
      if (data.x(i, k) != 0.0) out << ' ' << (k + 1) << ':' << format_g17(data.x(i, k));
    out << '\n';
  }
  if (!out) throw WriteError("failed writing " + path);
}

svm::Dataset to_dataset(const LabeledData& data) {
  const Index jc = (data.y.array() > 0).count();
  const Index lc = data.y.size() - jc;
  Matrix c(jc, data.x.cols()), d(lc, data.x.cols());
  Index ci = 0, di = 0;
  for (Index i = 0; i < data.y.size(); ++i) {
    if (data.y[i] > 0)
      c.row(ci++) = data.x.row(i);
    else
      d.row(di++) = data.x.row(i);
  }
  return svm::make_dataset(std::move(c), std::move(d));
}

void write_model(const std::string& path, const ModelFile& model) {
  json doc;
  doc["w"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
  doc["t"] = model.t;
  doc["scale"] = model.scale;
  doc["iteration"] = model.iteration;
  dump_json(path, doc);
}

ModelFile read_model(const std::string& path) {
  const json doc = load_json(path);
  try {
    ModelFile m;
    const auto& wj = doc.at("w");
    m.w.resize(static_cast<Index>(wj.size()));
    for (size_t i = 0; i < wj.size(); ++i) m.w[static_cast<Index>(i)] = wj.at(i).get<double>();
    m.t = doc.at("t").get<double>();
    m.scale = doc.at("scale").get<double>();
    m.iteration = doc.at("iteration").get<long>();
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot open " + path + " for writing");
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_g17(row[i]);
    out << '\n';
  }
  if (!out) throw WriteError("failed writing " + path);
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& artifact_path, const RunManifest& manifest) {
  json doc;
  doc["command"] = manifest.command;
  doc["parameters"] = manifest.parameters;
  doc["seed"] = manifest.seed;
  doc["versions"] = manifest.version;
  doc["started_at"] = manifest.started_at;
  doc["finished_at"] = manifest.finished_at;
  dump_json(artifact_path + ".manifest.json", doc);
}

}  // namespace fistasep::io
