#include "bubbleglue/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

namespace bubbleglue {

namespace {

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
  return cplx(j.at(0).get<double>(), j.at(1).get<double>());
}

}  // namespace

// ------------------------------------------------------------------- config

json to_json(const ExperimentConfig& c) {
  return json{
      {"p", c.p},
      {"seed", c.seed},
      {"grid",
       {{"ds", c.grid.ds},
        {"nt", c.grid.nt},
        {"smax", c.grid.smax},
        {"margin", c.grid.margin}}},
      {"quadrature",
       {{"radial_nodes", c.quadrature.radial_nodes},
        {"angular_nodes", c.quadrature.angular_nodes},
        {"scheme", c.quadrature.scheme}}},
      {"tol", c.tol},
      {"max_iter", c.max_iter},
      {"threads", c.threads},
  };
}

ExperimentConfig config_from_json(const json& j) {
  validate_schema("config", j);
  ExperimentConfig c;
  c.p = j.at("p").get<double>();
  c.seed = j.at("seed").get<unsigned>();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.contains("ds")) c.grid.ds = g.at("ds").get<double>();
    if (g.contains("nt")) c.grid.nt = g.at("nt").get<int>();
    if (g.contains("smax")) c.grid.smax = g.at("smax").get<double>();
    if (g.contains("margin")) c.grid.margin = g.at("margin").get<double>();
  }
  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    if (q.contains("radial_nodes"))
      c.quadrature.radial_nodes = q.at("radial_nodes").get<int>();
    if (q.contains("angular_nodes"))
      c.quadrature.angular_nodes = q.at("angular_nodes").get<int>();
    if (q.contains("scheme")) c.quadrature.scheme = q.at("scheme").get<std::string>();
  }
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

int thread_cap() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("BUBBLEGLUE_THREADS")) {
    const int req = std::atoi(env);
    if (req >= 1) return std::min(req, hw);
  }
  return hw;
}

// -------------------------------------------------------------------- JSON

json to_json(const BubbleMap& b) {
  json nodes = json::array();
  for (const int id : b.curve.tree.tree.elements) {
    json n;
    n["id"] = id;
    const auto pit = b.curve.tree.tree.parent.find(id);
    if (pit == b.curve.tree.tree.parent.end())
      n["parent"] = nullptr;
    else
      n["parent"] = pit->second;
    const auto xit = b.curve.tree.node_pos.find(id);
    if (xit != b.curve.tree.node_pos.end()) n["x"] = cplx_to_json(xit->second);
    const auto mit = b.maps.find(id);
    if (mit != b.maps.end()) {
      json coeffs = json::array();
      for (Eigen::Index i = 0; i < mit->second.coeffs.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < mit->second.coeffs.cols(); ++k)
          row.push_back(cplx_to_json(mit->second.coeffs(i, k)));
        coeffs.push_back(row);
      }
      n["map"] = json{{"degree", mit->second.degree}, {"coeffs", coeffs}};
    }
    nodes.push_back(n);
  }
  json marks = json::array();
  for (const auto& [label, mp] : b.curve.marks)
    marks.push_back(json{
        {"label", label}, {"node", mp.component}, {"y", cplx_to_json(mp.y)}});
  return json{{"nodes", nodes}, {"marks", marks}};
}

BubbleMap bubble_map_from_json(const json& j) {
  validate_schema("bubble_map", j);
  BubbleMap b;
  std::map<int, std::optional<int>> parents;
  for (const json& n : j.at("nodes")) {
    const int id = n.at("id").get<int>();
    if (n.at("parent").is_null())
      parents[id] = std::nullopt;
    else
      parents[id] = n.at("parent").get<int>();
    if (n.contains("x")) b.curve.tree.node_pos[id] = cplx_from_json(n.at("x"));
    if (n.contains("map")) {
      const json& m = n.at("map");
      RationalMap u;
      u.degree = m.at("degree").get<int>();
      const json& coeffs = m.at("coeffs");
      const auto rows = coeffs.size();
      if (rows == 0) throw SchemaError("/nodes/map/coeffs", "empty tuple");
      const auto cols = coeffs.at(0).size();
      u.coeffs.resize(static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
      for (std::size_t i = 0; i < rows; ++i) {
        if (coeffs.at(i).size() != cols)
          throw SchemaError("/nodes/map/coeffs", "ragged coefficient rows");
        for (std::size_t k = 0; k < cols; ++k)
          u.coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
              cplx_from_json(coeffs.at(i).at(k));
      }
      b.maps[id] = u;
    }
  }
  b.curve.tree.tree = RootedTree::from_parent_map(parents);
  for (const json& m : j.at("marks"))
    b.curve.marks[m.at("label").get<int>()] = {m.at("node").get<int>(),
                                               cplx_from_json(m.at("y"))};
  return b;
}

json to_json(const BubbleType& t) {
  json nodes = json::array();
  for (const int id : t.tree.elements) {
    json n;
    n["id"] = id;
    const auto pit = t.tree.parent.find(id);
    if (pit == t.tree.parent.end())
      n["parent"] = nullptr;
    else
      n["parent"] = pit->second;
    const auto dit = t.degree.find(id);
    n["degree"] = dit == t.degree.end() ? 0 : dit->second;
    nodes.push_back(n);
  }
  json marks = json::array();
  for (const auto& [label, node] : t.mark_node)
    marks.push_back(json{{"label", label}, {"node", node}});
  return json{{"nodes", nodes}, {"marks", marks}};
}

BubbleType bubble_type_from_json(const json& j) {
  validate_schema("bubble_type", j);
  BubbleType t;
  std::map<int, std::optional<int>> parents;
  for (const json& n : j.at("nodes")) {
    const int id = n.at("id").get<int>();
    if (n.at("parent").is_null())
      parents[id] = std::nullopt;
    else
      parents[id] = n.at("parent").get<int>();
    t.degree[id] = n.at("degree").get<int>();
  }
  t.tree = RootedTree::from_parent_map(parents);
  for (const json& m : j.at("marks"))
    t.mark_node[m.at("label").get<int>()] = m.at("node").get<int>();
  return t;
}

json necks_to_json(const std::map<int, cplx>& v) {
  json vv = json::object();
  for (const auto& [h, z] : v) vv[std::to_string(h)] = cplx_to_json(z);
  return json{{"v", vv}};
}

std::map<int, cplx> necks_from_json(const json& j) {
  validate_schema("necks", j);
  std::map<int, cplx> v;
  for (const auto& [key, val] : j.at("v").items())
    v[std::stoi(key)] = cplx_from_json(val);
  return v;
}

json to_json(const ConvergenceCertificate& c) {
  json entries = json::array();
  for (const auto& e : c.entries)
    entries.push_back(json{{"v_total", e.v_total},
                           {"sup_distance", e.sup_distance},
                           {"mark_error", e.mark_error},
                           {"ev_distance", e.ev_distance}});
  return json{{"entries", entries},
              {"distances_decreasing", c.distances_decreasing},
              {"marks_converge", c.marks_converge},
              {"converged", c.converged}};
}

json to_json(const CorrectionState& c) {
  return json{{"alpha_norm", c.alpha_norm},
              {"eta_norm", c.eta_norm},
              {"final_defect_norm", c.final_defect_norm},
              {"iterations", c.iterations},
              {"residual_history", c.residual_history},
              {"contraction", c.contraction}};
}

// ------------------------------------------------------------------ schemas

namespace {

json complex_schema() {
  return json{{"type", "array"},
              {"items", {{"type", "number"}}},
              {"minItems", 2},
              {"maxItems", 2}};
}

json bubble_map_schema() {
  return json{
      {"$id", "bubble_map"},
      {"type", "object"},
      {"required", {"nodes", "marks"}},
      {"properties",
       {{"nodes",
         {{"type", "array"},
          {"minItems", 1},
          {"items",
           {{"type", "object"},
            {"required", {"id", "parent"}},
            {"properties",
             {{"id", {{"type", "integer"}}},
              {"parent", {{"type", {"integer", "null"}}}},
              {"x", complex_schema()},
              {"map",
               {{"type", "object"},
                {"required", {"degree", "coeffs"}},
                {"properties",
                 {{"degree", {{"type", "integer"}}},
                  {"coeffs",
                   {{"type", "array"},
                    {"minItems", 1},
                    {"items",
                     {{"type", "array"},
                      {"minItems", 1},
                      {"items", complex_schema()}}}}}}}}}}}}}}},
        {"marks",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"label", "node", "y"}},
            {"properties",
             {{"label", {{"type", "integer"}}},
              {"node", {{"type", "integer"}}},
              {"y", complex_schema()}}}}}}}}}};
}

json bubble_type_schema() {
  return json{
      {"$id", "bubble_type"},
      {"type", "object"},
      {"required", {"nodes", "marks"}},
      {"properties",
       {{"nodes",
         {{"type", "array"},
          {"minItems", 1},
          {"items",
           {{"type", "object"},
            {"required", {"id", "parent", "degree"}},
            {"properties",
             {{"id", {{"type", "integer"}}},
              {"parent", {{"type", {"integer", "null"}}}},
              {"degree", {{"type", "integer"}}}}}}}}},
        {"marks",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"label", "node"}},
            {"properties",
             {{"label", {{"type", "integer"}}},
              {"node", {{"type", "integer"}}}}}}}}}}}};
}

json necks_schema() {
  return json{{"$id", "necks"},
              {"type", "object"},
              {"required", {"v"}},
              {"properties",
               {{"v",
                 {{"type", "object"},
                  {"patternProperties",
                   {{"^-?[0-9]+$", complex_schema()}}},
                  {"additionalProperties", false}}}}}};
}

json config_schema() {
  return json{
      {"$id", "config"},
      {"type", "object"},
      {"required", {"seed"}},
      {"properties",
       {{"p", {{"type", "number"}}},
        {"seed", {{"type", "integer"}}},
        {"tol", {{"type", "number"}}},
        {"max_iter", {{"type", "integer"}}},
        {"threads", {{"type", "integer"}}},
        {"grid",
         {{"type", "object"},
          {"properties",
           {{"ds", {{"type", "number"}}},
            {"nt", {{"type", "integer"}}},
            {"smax", {{"type", "number"}}},
            {"margin", {{"type", "number"}}}}}}},
        {"quadrature",
         {{"type", "object"},
          {"properties",
           {{"radial_nodes", {{"type", "integer"}}},
            {"angular_nodes", {{"type", "integer"}}},
            {"scheme", {{"type", "string"}}}}}}}}}};
}

json sequence_schema() {
  return json{
      {"$id", "sequence"},
      {"type", "object"},
      {"required", {"entries"}},
      {"properties",
       {{"entries",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"v"}},
            {"properties",
             {{"v",
               {{"type", "object"},
                {"patternProperties",
                 {{"^-?[0-9]+$", complex_schema()}}},
                {"additionalProperties", false}}},
              {"map", {{"type", {"object", "null"}}}}}}}}}}}}};
}

std::string json_type_name(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

bool type_matches(const std::string& want, const json& j) {
  if (want == "number") return j.is_number();
  if (want == "integer") return j.is_number_integer() || j.is_number_unsigned();
  return json_type_name(j) == want;
}

void validate_node(const json& schema, const json& inst,
                   const std::string& ptr) {
  if (schema.contains("type")) {
    const json& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(t.get<std::string>(), inst);
    } else {
      for (const json& alt : t)
        ok = ok || type_matches(alt.get<std::string>(), inst);
    }
    if (!ok)
      throw SchemaError(ptr.empty() ? "/" : ptr,
                        "expected " + t.dump() + ", got " + json_type_name(inst));
  }
  if (inst.is_object()) {
    if (schema.contains("required"))
      for (const json& key : schema.at("required"))
        if (!inst.contains(key.get<std::string>()))
          throw SchemaError(ptr.empty() ? "/" : ptr,
                            "missing required member \"" +
                                key.get<std::string>() + "\"");
    const json props =
        schema.contains("properties") ? schema.at("properties") : json::object();
    const json pats = schema.contains("patternProperties")
                          ? schema.at("patternProperties")
                          : json::object();
    const bool closed = schema.contains("additionalProperties") &&
                        schema.at("additionalProperties") == json(false);
    for (const auto& [key, val] : inst.items()) {
      const std::string cptr = ptr + "/" + key;
      if (props.contains(key)) {
        validate_node(props.at(key), val, cptr);
        continue;
      }
      bool matched = false;
      for (const auto& [pat, sub] : pats.items()) {
        if (std::regex_match(key, std::regex(pat))) {
          validate_node(sub, val, cptr);
          matched = true;
          break;
        }
      }
      if (!matched && closed)
        throw SchemaError(cptr, "unexpected member");
    }
  }
  if (inst.is_array()) {
    if (schema.contains("minItems") &&
        inst.size() < schema.at("minItems").get<std::size_t>())
      throw SchemaError(ptr.empty() ? "/" : ptr,
                        "fewer than " + schema.at("minItems").dump() + " items");
    if (schema.contains("maxItems") &&
        inst.size() > schema.at("maxItems").get<std::size_t>())
      throw SchemaError(ptr.empty() ? "/" : ptr,
                        "more than " + schema.at("maxItems").dump() + " items");
    if (schema.contains("items")) {
      const json& isch = schema.at("items");
      for (std::size_t i = 0; i < inst.size(); ++i)
        validate_node(isch, inst.at(i), ptr + "/" + std::to_string(i));
    }
  }
}

}  // namespace

json schema_document(const std::string& schema) {
  if (schema == "bubble_map") return bubble_map_schema();
  if (schema == "bubble_type") return bubble_type_schema();
  if (schema == "necks") return necks_schema();
  if (schema == "config") return config_schema();
  if (schema == "sequence") return sequence_schema();
  throw GeomError("unknown schema: " + schema);
}

void validate_schema(const std::string& schema, const json& j) {
  validate_node(schema_document(schema), j, "");
}

// --------------------------------------------------------------------- CSV

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (const char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string csv_record(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

}  // namespace

std::string sweep_to_csv(const SweepResult& s, const ExperimentConfig& cfg) {
  std::string out = csv_record({"config", to_json(cfg).dump()});
  out += csv_record({"index", "v_abs", "total_v", "dbar_norm", "du_c0",
                     "dbar_ratio", "eta_norm", "eta_ratio", "final_defect",
                     "contraction", "picard_iterations", "ok", "error"});
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const SweepRow& r = s.rows[k];
    out += csv_record(
        {std::to_string(k), csv_number(r.v_abs), csv_number(r.total_v),
         csv_number(r.dbar_norm), csv_number(r.du_c0),
         csv_number(r.dbar_ratio), csv_number(r.eta_norm),
         csv_number(r.eta_ratio), csv_number(r.final_defect),
         csv_number(r.contraction), std::to_string(r.picard_iterations),
         r.ok ? "true" : "false", r.error});
  }
  return out;
}

std::string norms_report_csv(const std::vector<PregluingReport>& rows,
                             const ExperimentConfig& cfg) {
  std::string out = csv_record({"config", to_json(cfg).dump()});
  out += csv_record({"v_total", "du_c0", "dbar_norm", "ratio", "grid_ds",
                     "grid_nt", "grid_smax", "grid_margin", "seed"});
  for (const PregluingReport& r : rows)
    out += csv_record({csv_number(r.total_v), csv_number(r.du_c0),
                       csv_number(r.dbar_norm), csv_number(r.ratio),
                       csv_number(cfg.grid.ds), std::to_string(cfg.grid.nt),
                       csv_number(cfg.grid.smax), csv_number(cfg.grid.margin),
                       std::to_string(cfg.seed)});
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(field);
      field.clear();
      any = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      rec.push_back(field);
      records.push_back(rec);
      rec.clear();
      field.clear();
      any = false;
      ++i;
    } else if (c == '\n') {
      rec.push_back(field);
      records.push_back(rec);
      rec.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty() || !rec.empty()) {
    rec.push_back(field);
    records.push_back(rec);
  }
  return records;
}

ExperimentConfig config_from_csv(const std::string& text) {
  const auto records = parse_csv(text);
  if (records.empty() || records[0].size() < 2 || records[0][0] != "config")
    throw SchemaError("/", "missing CSV configuration header");
  return config_from_json(json::parse(records[0][1]));
}

// ------------------------------------------------------------------- files

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeomError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeomError("cannot open for writing: " + path);
  out << content;
}

json read_json_file(const std::string& path, const std::string& schema) {
  json j = json::parse(read_text_file(path));
  if (!schema.empty()) validate_schema(schema, j);
  return j;
}

}  // namespace bubbleglue
