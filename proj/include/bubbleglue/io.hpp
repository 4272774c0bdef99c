#pragma once
// Serialization layer: JSON encodings for bubble maps, bubble types, neck
// vectors, and experiment configurations; lightweight structural schema
// validation with JSON-pointer error locations; and RFC-4180 CSV emission
// with a reproducibility header carrying the full configuration.

#include <string>
#include <vector>

#include "json.hpp"

#include "bubbleglue/convergence.hpp"

namespace bubbleglue {

using json = nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// ------------------------------------------------------------------- config
//
// Everything that influences a run's numbers.  The seed is mandatory; it
// drives every random draw.  The full config is serialized into every
// artifact so identical (config, seed) pairs reproduce byte-identical
// outputs.
struct ExperimentConfig {
  double p = 3.0;
  unsigned seed = 0;
  GridSpec grid;
  QuadratureSpec quadrature;
  double tol = 1e-7;
  int max_iter = 12;
  int threads = 1;  // capped by the BUBBLEGLUE_THREADS environment variable
};

json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);

// Reads BUBBLEGLUE_THREADS (when set) and clamps to [1, hardware threads].
int thread_cap();

// -------------------------------------------------------------------- JSON
//
// Complex numbers are encoded as [re, im] pairs; polynomial coefficients in
// ascending powers.  Node ids, mark labels, and degrees are integers.
json to_json(const BubbleMap& b);
BubbleMap bubble_map_from_json(const json& j);

json to_json(const BubbleType& t);
BubbleType bubble_type_from_json(const json& j);

json necks_to_json(const std::map<int, cplx>& v);
std::map<int, cplx> necks_from_json(const json& j);

json to_json(const ConvergenceCertificate& c);
json to_json(const CorrectionState& c);

// Structural validation against a named shipped schema ("bubble_map",
// "bubble_type", "necks", "config", "sequence").  Throws SchemaError with
// the JSON pointer of the first violation.
void validate_schema(const std::string& schema, const json& j);

// The shipped schema documents (mirrors of the files under schemas/).
json schema_document(const std::string& schema);

// --------------------------------------------------------------------- CSV
//
// RFC-4180: fields containing commas, quotes, or newlines are quoted with
// doubled inner quotes; records end in CRLF.  Floats at 17 significant
// digits.  The first record is the pair ("config", <config JSON>), then the
// column header, then the data rows.
std::string csv_field(const std::string& raw);
std::string csv_number(double x);

std::string sweep_to_csv(const SweepResult& s, const ExperimentConfig& cfg);
std::string norms_report_csv(const std::vector<PregluingReport>& rows,
                             const ExperimentConfig& cfg);

// RFC-4180 parser (the round-trip check); returns records of fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Extracts the configuration stored in a CSV reproducibility header.
ExperimentConfig config_from_csv(const std::string& text);

// ------------------------------------------------------------------- files
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
json read_json_file(const std::string& path, const std::string& schema);

}  // namespace bubbleglue
