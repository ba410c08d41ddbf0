#pragma once

// Power/performance/area arithmetic over per-PE parameter records, plus the accumulator
// sizing rule ceil(log2 n_ch) + ceil(log2 window) + w_weight + w_data <= reg_size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nesta/errors.hpp"

namespace nesta::cost {

/// One processing-element flavor. delay_ns is the cycle time; a PE issues ops_per_cycle
/// multiply-accumulates per cycle and spends final_add_cycles closing each output.
struct PeParams {
  std::string name;
  double area_um2 = 0;
  double power_uw = 0;
  double delay_ns = 0;
  int ops_per_cycle = 1;
  int final_add_cycles = 0;
  std::string source;

  /// Power-delay product per cycle, fJ.
  double pdp_fj() const { return power_uw * delay_ns; }

  friend bool operator==(const PeParams&, const PeParams&) = default;
};

class PpaParams {
 public:
  PpaParams() = default;
  explicit PpaParams(std::vector<PeParams> pe_types) : pe_types_(std::move(pe_types)) { validate(); }

  const std::vector<PeParams>& pe_types() const noexcept { return pe_types_; }

  const PeParams* find(const std::string& name) const {
    for (const auto& p : pe_types_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  const PeParams& get(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw SchemaError(name, "unknown PE type");
  }

  /// Later records replace earlier ones with the same name.
  void merge(const PpaParams& other) {
    for (const auto& p : other.pe_types_) {
      auto it = std::find_if(pe_types_.begin(), pe_types_.end(), [&](const PeParams& q) { return q.name == p.name; });
      if (it != pe_types_.end()) {
        *it = p;
      } else {
        pe_types_.push_back(p);
      }
    }
  }

  void validate() const {
    for (std::size_t k = 0; k < pe_types_.size(); ++k) {
      const auto& p = pe_types_[k];
      const std::string where = "pe_types[" + std::to_string(k) + "]";
      if (p.name.empty()) throw SchemaError(where + ".name", "must be non-empty");
      if (!(p.area_um2 > 0)) throw SchemaError(where + ".area_um2", "must be positive");
      if (!(p.power_uw > 0)) throw SchemaError(where + ".power_uw", "must be positive");
      if (!(p.delay_ns > 0)) throw SchemaError(where + ".delay_ns", "must be positive");
      if (p.ops_per_cycle < 1) throw SchemaError(where + ".ops_per_cycle", "must be positive");
      if (p.final_add_cycles < 0) throw SchemaError(where + ".final_add_cycles", "must be nonnegative");
    }
  }

  friend bool operator==(const PpaParams&, const PpaParams&) = default;

 private:
  std::vector<PeParams> pe_types_;
};

/// Parameter file: {"pe_types": [{"name", "area_um2", "power_uw", "delay_ns", "ops_per_cycle",
/// optional "final_add_cycles", optional "source"}]}. Comments are allowed.
inline PpaParams parse_params(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("byte " + std::to_string(e.byte), e.what());
  }
  if (!doc.is_object()) throw SchemaError("<root>", "expected an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "pe_types") throw SchemaError(key, "unknown field");
  }
  if (!doc.contains("pe_types") || !doc["pe_types"].is_array()) throw SchemaError("pe_types", "expected an array");

  static const std::vector<std::string> known = {"name",          "area_um2",         "power_uw", "delay_ns",
                                                 "ops_per_cycle", "final_add_cycles", "source"};
  std::vector<PeParams> out;
  const auto& arr = doc["pe_types"];
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto& rec = arr[k];
    const std::string where = "pe_types[" + std::to_string(k) + "]";
    if (!rec.is_object()) throw SchemaError(where, "expected an object");
    for (const auto& [key, _] : rec.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) throw SchemaError(where + "." + key, "unknown field");
    }
    auto number = [&](const char* field) {
      if (!rec.contains(field) || !rec[field].is_number()) throw SchemaError(where + "." + field, "expected a number");
      return rec[field].get<double>();
    };
    PeParams p;
    if (!rec.contains("name") || !rec["name"].is_string()) throw SchemaError(where + ".name", "expected a string");
    p.name = rec["name"].get<std::string>();
    p.area_um2 = number("area_um2");
    p.power_uw = number("power_uw");
    p.delay_ns = number("delay_ns");
    if (!rec.contains("ops_per_cycle") || !rec["ops_per_cycle"].is_number_integer()) {
      throw SchemaError(where + ".ops_per_cycle", "expected an integer");
    }
    p.ops_per_cycle = rec["ops_per_cycle"].get<int>();
    if (rec.contains("final_add_cycles")) {
      if (!rec["final_add_cycles"].is_number_integer()) throw SchemaError(where + ".final_add_cycles", "expected an integer");
      p.final_add_cycles = rec["final_add_cycles"].get<int>();
    }
    if (rec.contains("source")) {
      if (!rec["source"].is_string()) throw SchemaError(where + ".source", "expected a string");
      p.source = rec["source"].get<std::string>();
    }
    out.push_back(std::move(p));
  }
  return PpaParams(std::move(out));
}

inline PpaParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open parameter file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_params(ss.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.where(), e.what());
  }
}

inline std::string serialize_params(const PpaParams& params) {
  nlohmann::ordered_json doc;
  doc["pe_types"] = nlohmann::ordered_json::array();
  for (const auto& p : params.pe_types()) {
    nlohmann::ordered_json rec;
    rec["name"] = p.name;
    rec["area_um2"] = p.area_um2;
    rec["power_uw"] = p.power_uw;
    rec["delay_ns"] = p.delay_ns;
    rec["ops_per_cycle"] = p.ops_per_cycle;
    rec["final_add_cycles"] = p.final_add_cycles;
    if (!p.source.empty()) rec["source"] = p.source;
    doc["pe_types"].push_back(rec);
  }
  return doc.dump(2);
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

/// Cycles to produce one output of an R x R x C window: issue cycles plus closing add.
inline std::int64_t cycles(const PeParams& pe, std::int64_t kernel, std::int64_t channels) {
  if (kernel < 1 || channels < 1) throw DomainError("kernel and channels must be positive");
  return ceil_div(kernel * kernel * channels, pe.ops_per_cycle) + pe.final_add_cycles;
}

struct RunCost {
  std::int64_t cycles = 0;
  std::int64_t ops = 0;
  double time_ns = 0;
  double energy_fj = 0;
  double pdp_fj = 0;            // power * cycle time
  double energy_per_op_fj = 0;  // 0 when no ops were issued
};

/// `batches` issue cycles (each carrying ops_per_cycle operations) plus the closing add.
inline RunCost runtime_energy(const PeParams& pe, std::int64_t batches) {
  if (batches < 0) throw DomainError("batch count must be nonnegative");
  RunCost r;
  r.cycles = batches + pe.final_add_cycles;
  r.ops = batches * pe.ops_per_cycle;
  r.time_ns = static_cast<double>(r.cycles) * pe.delay_ns;
  r.energy_fj = r.time_ns * pe.power_uw;
  r.pdp_fj = pe.pdp_fj();
  r.energy_per_op_fj = r.ops > 0 ? r.energy_fj / static_cast<double>(r.ops) : 0.0;
  return r;
}

/// Smallest B with (B + 1) * nesta_delay < B * competitor_delay; nullopt if NESTA never wins.
inline std::optional<std::int64_t> crossover_batches(double nesta_delay, double competitor_delay) {
  if (!(nesta_delay > 0) || !(competitor_delay > 0)) throw DomainError("delays must be positive");
  if (competitor_delay <= nesta_delay) return std::nullopt;
  auto b = static_cast<std::int64_t>(std::floor(nesta_delay / (competitor_delay - nesta_delay))) + 1;
  // Guard the floor against rounding right at an integer boundary.
  while (b > 1 && static_cast<double>(b) * nesta_delay < static_cast<double>(b - 1) * competitor_delay) --b;
  while (!(static_cast<double>(b + 1) * nesta_delay < static_cast<double>(b) * competitor_delay)) ++b;
  return b;
}

/// Fewest channels for which an R x R convolution needs at least `batches` 9-pair batches.
inline std::int64_t channels_for_batches(std::int64_t kernel, std::int64_t batches) {
  std::int64_t c = 1;
  while (ceil_div(kernel * kernel * c, 9) < batches) ++c;
  return c;
}

struct ComparisonWorkload {
  std::int64_t kernel = 3;
  std::int64_t count = 1024;   // independent output convolutions
  std::int64_t channels = 64;  // depth of each convolution
};

struct ImprovementRow {
  std::string pe_type;
  std::int64_t units = 0;
  double throughput_pct = 0;  // 100 * (1 - throughput_pe / throughput_nesta)
  double energy_pct = 0;      // 100 * (1 - energy_nesta / energy_pe)
};

/// Fixed silicon budget: floor(budget / area) units of each PE type share the workload.
/// One row per non-NESTA PE type, in parameter-file order.
inline std::vector<ImprovementRow> throughput_energy_improvement(const PpaParams& params, double area_budget,
                                                                 const ComparisonWorkload& work,
                                                                 const std::string& nesta_name = "NESTA") {
  if (!(area_budget > 0)) throw DomainError("area budget must be positive");
  const PeParams& nesta = params.get(nesta_name);
  auto units_of = [&](const PeParams& pe) {
    const auto u = static_cast<std::int64_t>(std::floor(area_budget / pe.area_um2));
    if (u < 1) throw DomainError("area budget " + std::to_string(area_budget) + " is smaller than one " + pe.name);
    return u;
  };
  struct Perf {
    std::int64_t units;
    double throughput;
    double energy;
  };
  auto perf = [&](const PeParams& pe) {
    const std::int64_t units = units_of(pe);
    const double total_cycles = static_cast<double>(work.count * cycles(pe, work.kernel, work.channels));
    const double time = total_cycles * pe.delay_ns / static_cast<double>(units);
    return Perf{units, static_cast<double>(work.count) / time, total_cycles * pe.delay_ns * pe.power_uw};
  };
  const Perf base = perf(nesta);
  std::vector<ImprovementRow> rows;
  for (const auto& pe : params.pe_types()) {
    if (pe.name == nesta_name) continue;
    const Perf p = perf(pe);
    rows.push_back({pe.name, p.units, 100.0 * (1.0 - p.throughput / base.throughput),
                    100.0 * (1.0 - base.energy / p.energy)});
  }
  return rows;
}

/// ceil(log2 v) for v >= 1.
inline int ceil_log2(std::int64_t v) {
  if (v < 1) throw DomainError("ceil_log2 needs a positive argument");
  int k = 0;
  while ((std::int64_t{1} << k) < v) ++k;
  return k;
}

/// 36 -> 16 and 20 -> 8: the input register width paired with an accumulator.
inline int default_input_register_width(int reg_size) { return std::max(1, (reg_size - 4) / 2); }

struct SizingRule {
  int reg_size = 36;
  std::int64_t n_ch = 1;
  std::int64_t window = 9;
  int w_weight = 16;
  int w_data = 16;
  int input_register_width = 0;  // 0: derived from reg_size

  int register_width() const {
    return input_register_width > 0 ? input_register_width : default_input_register_width(reg_size);
  }
};

struct SizingVerdict {
  bool ok = false;
  int required_bits = 0;
  std::string details;
};

inline SizingVerdict check_bitwidths(const SizingRule& rule) {
  if (rule.reg_size < 1 || rule.n_ch < 1 || rule.window < 1 || rule.w_weight < 1 || rule.w_data < 1) {
    throw DomainError("sizing fields must be positive");
  }
  SizingVerdict v;
  v.required_bits = ceil_log2(rule.n_ch) + ceil_log2(rule.window) + rule.w_weight + rule.w_data;
  const int reg_in = rule.register_width();
  std::ostringstream why;
  if (v.required_bits > rule.reg_size) {
    why << "ceil(log2 " << rule.n_ch << ") + ceil(log2 " << rule.window << ") + " << rule.w_weight << " + "
        << rule.w_data << " = " << v.required_bits << " > " << rule.reg_size;
  } else if (rule.w_weight > reg_in || rule.w_data > reg_in) {
    why << "operand widths (" << rule.w_weight << ", " << rule.w_data << ") exceed the " << reg_in
        << "-bit input registers";
  } else {
    v.ok = true;
  }
  v.details = why.str();
  return v;
}

/// Maximal (w_weight, w_data) pairs accepted by check_bitwidths, w_weight descending.
inline std::vector<std::pair<int, int>> valid_width_pairs(int reg_size, std::int64_t n_ch, std::int64_t window,
                                                          int input_register_width = 0) {
  if (reg_size < 1 || n_ch < 1 || window < 1) throw DomainError("sizing fields must be positive");
  const int reg_in = input_register_width > 0 ? input_register_width : default_input_register_width(reg_size);
  const int budget = reg_size - ceil_log2(n_ch) - ceil_log2(window);
  std::vector<std::pair<int, int>> pairs;
  if (budget < 2) return pairs;
  if (budget >= 2 * reg_in) {
    pairs.emplace_back(reg_in, reg_in);
    return pairs;
  }
  for (int ww = reg_in; ww >= 1; --ww) {
    const int wd = budget - ww;
    if (wd >= 1 && wd <= reg_in) pairs.emplace_back(ww, wd);
  }
  return pairs;
}

}  // namespace nesta::cost
