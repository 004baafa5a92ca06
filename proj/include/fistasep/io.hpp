#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fistasep/esp.hpp"
#include "fistasep/svm.hpp"
#include "fistasep/types.hpp"

namespace fistasep::io {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WriteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ESP instance document: {"dim": d, "ellipsoids": [{"label": "C"|"D",
/// "center": [...], "shape": [[row], ...]}]}.  Shapes are row-major d x d.
std::vector<esp::Ellipsoid> read_esp_instance(const std::string& path);
void write_esp_instance(const std::string& path, const std::vector<esp::Ellipsoid>& ellipsoids);

/// LIBSVM sparse text: one sample per line, `label index:value ...` with
/// 1-based indices.  Labels +1/1 map to class C, -1/0/2 to class D;
/// malformed lines are hard errors reported with their line number.
struct LabeledData {
  Matrix x;
  Eigen::VectorXi y;  // +1 / -1
};

LabeledData read_libsvm(const std::string& path);
void write_libsvm(const std::string& path, const LabeledData& data);
svm::Dataset to_dataset(const LabeledData& data);

struct ModelFile {
  Vector w;
  double t = 0.0;
  double scale = 1.0;
  long iteration = 0;
};

void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

/// %.17g rendering used for every numeric CSV cell.
std::string format_g17(double v);

/// CSV with a header row; numbers carry 17 significant digits so reruns are
/// byte-identical.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  long long seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
};

std::string iso8601_utc_now();

/// Written next to each output artifact as <artifact>.manifest.json.
void write_manifest(const std::string& artifact_path, const RunManifest& manifest);

}  // namespace fistasep::io
