#pragma once

// Network descriptions (JSON with comments), operation counts and per-layer analysis.
//
//   {
//     "name": "alexnet",
//     "layers": [
//       {"name": "conv1", "kind": "conv", "channels": 3, "filters": 96, "kernel": 11,
//        "stride": 4, "pad": 0, "input_size": 227, "widths": [8, 8]},
//       {"name": "fc6", "kind": "fc", "channels": 256, "filters": 4096, "input_size": 6, ...}
//     ]
//   }
//
// Optional layer fields: stride (1), pad (0), groups (1), batch (1). A fully connected layer
// is a 1x1 convolution over channels * input_size^2 inputs.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nesta/costmodel.hpp"
#include "nesta/dataflow.hpp"
#include "nesta/errors.hpp"
#include "nesta/oracle.hpp"

namespace nesta::net {

enum class LayerKind { conv, fc };

inline const char* to_string(LayerKind k) { return k == LayerKind::conv ? "conv" : "fc"; }

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv;
  std::int64_t channels = 1;
  std::int64_t filters = 1;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  std::int64_t input_size = 1;
  std::int64_t groups = 1;
  std::int64_t batch = 1;
  int w_weight = 8;
  int w_data = 8;

  /// Canonical shape: padded ifmap, channels per group, fc as 1x1.
  oracle::LayerShape shape() const {
    if (kind == LayerKind::fc) return oracle::LayerShape{batch, filters, channels * input_size * input_size, 1, 1, 1};
    return oracle::LayerShape{batch, filters, channels / groups, input_size + 2 * pad, kernel, stride};
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct ParseOptions {
  bool allow_empty = false;
};

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline std::int64_t positive_int(const nlohmann::json& rec, const std::string& where, const char* field,
                                 std::int64_t fallback, bool required, std::int64_t minimum = 1) {
  if (!rec.contains(field)) {
    if (required) throw SchemaError(where + "." + field, "missing required field");
    return fallback;
  }
  const auto& v = rec[field];
  if (!v.is_number_integer()) throw SchemaError(where + "." + field, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < minimum) throw SchemaError(where + "." + field, "must be at least " + std::to_string(minimum));
  return x;
}

inline LayerSpec parse_layer(const nlohmann::json& rec, const std::string& where) {
  static const std::vector<std::string> known = {"name",  "kind", "channels",   "filters", "kernel", "stride",
                                                 "pad",   "input_size", "widths", "groups",  "batch"};
  if (!rec.is_object()) throw SchemaError(where, "expected an object");
  for (const auto& [key, _] : rec.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw SchemaError(where + "." + key, "unknown field");
  }
  LayerSpec l;
  if (!rec.contains("name") || !rec["name"].is_string()) throw SchemaError(where + ".name", "expected a string");
  l.name = rec["name"].get<std::string>();
  if (!rec.contains("kind") || !rec["kind"].is_string()) throw SchemaError(where + ".kind", "expected \"conv\" or \"fc\"");
  const auto kind = rec["kind"].get<std::string>();
  if (kind == "conv") {
    l.kind = LayerKind::conv;
  } else if (kind == "fc") {
    l.kind = LayerKind::fc;
  } else {
    throw SchemaError(where + ".kind", "expected \"conv\" or \"fc\", got \"" + kind + "\"");
  }
  l.channels = positive_int(rec, where, "channels", 1, true);
  l.filters = positive_int(rec, where, "filters", 1, true);
  l.input_size = positive_int(rec, where, "input_size", 1, true);
  l.kernel = positive_int(rec, where, "kernel", 1, l.kind == LayerKind::conv);
  l.stride = positive_int(rec, where, "stride", 1, false);
  l.pad = positive_int(rec, where, "pad", 0, false, 0);
  l.groups = positive_int(rec, where, "groups", 1, false);
  l.batch = positive_int(rec, where, "batch", 1, false);

  if (!rec.contains("widths")) throw SchemaError(where + ".widths", "missing required field");
  const auto& w = rec["widths"];
  if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer()) {
    throw SchemaError(where + ".widths", "expected [w_weight, w_data]");
  }
  l.w_weight = w[0].get<int>();
  l.w_data = w[1].get<int>();
  if (l.w_weight < 1 || l.w_data < 1) throw SchemaError(where + ".widths", "widths must be positive");

  if (l.kind == LayerKind::fc) {
    if (l.kernel != 1 || l.stride != 1 || l.pad != 0 || l.groups != 1) {
      throw SchemaError(where, "fc layers take kernel 1, stride 1, pad 0 and groups 1");
    }
  } else {
    if (l.channels % l.groups != 0) throw SchemaError(where + ".groups", "must divide channels");
    if (l.filters % l.groups != 0) throw SchemaError(where + ".groups", "must divide filters");
  }
  try {
    l.shape().validate();
  } catch (const ShapeError& e) {
    throw SchemaError(where, e.what());
  }
  return l;
}

}  // namespace detail

inline NetworkSpec parse_network(const std::string& text, ParseOptions options = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("line " + std::to_string(detail::line_of(text, e.byte)), e.what());
  }
  if (!doc.is_object()) throw SchemaError("<root>", "expected an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "layers") throw SchemaError(key, "unknown field");
  }
  NetworkSpec spec;
  if (!doc.contains("name") || !doc["name"].is_string()) throw SchemaError("name", "expected a string");
  spec.name = doc["name"].get<std::string>();
  if (!doc.contains("layers") || !doc["layers"].is_array()) throw SchemaError("layers", "expected an array");
  const auto& layers = doc["layers"];
  if (layers.empty() && !options.allow_empty) throw SchemaError("layers", "network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    spec.layers.push_back(detail::parse_layer(layers[k], "layers[" + std::to_string(k) + "]"));
  }
  return spec;
}

inline NetworkSpec load_network(const std::string& path, ParseOptions options = {}) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open network file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_network(ss.str(), options);
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.where(), e.what());
  }
}

inline std::string serialize_network(const NetworkSpec& spec) {
  nlohmann::ordered_json doc;
  doc["name"] = spec.name;
  doc["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.layers) {
    nlohmann::ordered_json rec;
    rec["name"] = l.name;
    rec["kind"] = to_string(l.kind);
    rec["channels"] = l.channels;
    rec["filters"] = l.filters;
    rec["kernel"] = l.kernel;
    rec["stride"] = l.stride;
    rec["pad"] = l.pad;
    rec["input_size"] = l.input_size;
    rec["groups"] = l.groups;
    rec["batch"] = l.batch;
    rec["widths"] = {l.w_weight, l.w_data};
    doc["layers"].push_back(rec);
  }
  return doc.dump(2);
}

struct OpCount {
  std::int64_t macs = 0;
  std::int64_t flops = 0;  // 2 * macs
  std::int64_t macs_3x3 = 0;
};

inline OpCount network_op_count(const NetworkSpec& spec) {
  OpCount n;
  for (const auto& l : spec.layers) {
    const std::int64_t m = l.shape().macs();
    n.macs += m;
    if (l.kind == LayerKind::conv && l.kernel == 3) n.macs_3x3 += m;
  }
  n.flops = 2 * n.macs;
  return n;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct AnalysisRecord {
  std::string layer;
  std::string pe_type;
  std::int64_t batches = 0;
  std::int64_t cycles = 0;
  double time_ns = 0;
  double energy_fj = 0;
  dataflow::AccessStats access;
  std::uint64_t spec_hash = 0;
  std::uint64_t params_hash = 0;
};

inline constexpr const char kCsvHeader[] = "layer,pe_type,batches,cycles,time_ns,energy_fj,ifmap_fetches,weight_fetches,psum_writes";

inline std::string csv_row(const AnalysisRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%lld,%lld,%.3f,%.3f,%lld,%lld,%lld", r.layer.c_str(), r.pe_type.c_str(),
                static_cast<long long>(r.batches), static_cast<long long>(r.cycles), r.time_ns, r.energy_fj,
                static_cast<long long>(r.access.ifmap_fetches), static_cast<long long>(r.access.weight_fetches),
                static_cast<long long>(r.access.psum_writes));
  return buf;
}

class AnalysisLog {
 public:
  void append(AnalysisRecord r) { records_.push_back(std::move(r)); }
  void append(const std::vector<AnalysisRecord>& rs) { records_.insert(records_.end(), rs.begin(), rs.end()); }
  const std::vector<AnalysisRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  void write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const auto& r : records_) out << csv_row(r) << '\n';
  }

 private:
  std::vector<AnalysisRecord> records_;
};

struct AnalysisOptions {
  int reg_size = 36;
  dataflow::Kind flow = dataflow::Kind::RS;
};

/// Throws SizingError naming the first layer whose widths can overflow the accumulator.
inline void check_network_sizing(const NetworkSpec& spec, int reg_size = 36) {
  for (const auto& l : spec.layers) {
    const auto s = l.shape();
    cost::SizingRule rule;
    rule.reg_size = reg_size;
    rule.n_ch = s.C;
    rule.window = s.R * s.R;
    rule.w_weight = l.w_weight;
    rule.w_data = l.w_data;
    const auto v = cost::check_bitwidths(rule);
    if (!v.ok) throw SizingError("layer '" + l.name + "': " + v.details);
  }
}

/// One record per layer: the layer runs output by output on a single PE.
inline std::vector<AnalysisRecord> analyze_network(const NetworkSpec& spec, const std::string& pe_type,
                                                   const cost::PpaParams& params, AnalysisOptions options = {}) {
  check_network_sizing(spec, options.reg_size);
  const cost::PeParams& pe = params.get(pe_type);
  const std::uint64_t spec_hash = fnv1a(serialize_network(spec));
  const std::uint64_t params_hash = fnv1a(cost::serialize_params(params));
  std::vector<AnalysisRecord> out;
  for (const auto& l : spec.layers) {
    const auto s = l.shape();
    const std::int64_t issue = cost::ceil_div(s.window(), pe.ops_per_cycle);
    AnalysisRecord r;
    r.layer = l.name;
    r.pe_type = pe.name;
    r.batches = s.outputs() * issue;
    r.cycles = s.outputs() * (issue + pe.final_add_cycles);
    r.time_ns = static_cast<double>(r.cycles) * pe.delay_ns;
    r.energy_fj = r.time_ns * pe.power_uw;
    r.access = dataflow::access_counts(s, dataflow::DataflowKind::make(options.flow));
    r.spec_hash = spec_hash;
    r.params_hash = params_hash;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace nesta::net
