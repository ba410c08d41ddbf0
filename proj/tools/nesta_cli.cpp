// nesta: verification and analysis front end.
//
//   nesta verify --seed 42 --trials 10000
//   nesta run-layer --kernel 11 --channels 10
//   nesta analyze-net --net data/alexnet.json --out alexnet.csv
//   nesta sizing --reg 36 --channels 32 --window 9
//   nesta crossover
//   nesta compare --kernel 3
//
// Exit status: 0 success, 1 verification failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "nesta/nesta.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;

using namespace nesta;

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct Common {
  std::vector<std::string> params;
  std::vector<std::string> pe;
  std::string out;
};

cost::PpaParams load_all(const std::vector<std::string>& files) {
  std::vector<std::string> paths = files;
  if (paths.empty()) {
    paths = {std::string(NESTA_DATA_DIR) + "/ppa_table.json", std::string(NESTA_DATA_DIR) + "/mac9_calibration.json"};
  }
  cost::PpaParams all;
  for (const auto& p : paths) all.merge(cost::load_params(p));
  return all;
}

std::vector<std::string> pe_list(const Common& c) {
  if (!c.pe.empty()) return c.pe;
  return {"NESTA", "MAC9_BRx4_HWA_KS", "MAC_BRx4_BK"};
}

// Writes to --out when given, stdout otherwise.
void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw SchemaError(c.out, "cannot open output file");
  f << text;
}

void add_common(CLI::App* cmd, Common& c, bool with_pe) {
  cmd->add_option("--params", c.params, "PE parameter file (repeatable; default: bundled tables)");
  if (with_pe) cmd->add_option("--pe", c.pe, "PE types")->delimiter(',');
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
}

struct VerifyArgs {
  std::uint64_t seed = 42;
  std::int64_t trials = 10000;
  unsigned width = 0;
  std::string variant = "standard";
  std::string mode = "mixed";
  std::int64_t fault_cycle = -1;
  std::int64_t replay = -1;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  verify::VerifyConfig cfg;
  cfg.seed = a.seed;
  cfg.trials = a.trials;
  cfg.width = a.width;
  cfg.variant = hwc::parse_variant(a.variant);
  if (a.mode == "signed") {
    cfg.signed_mode = true;
  } else if (a.mode == "unsigned") {
    cfg.signed_mode = false;
  } else if (a.mode != "mixed") {
    throw DomainError("mode must be signed, unsigned or mixed");
  }
  if (a.fault_cycle >= 0) cfg.fault = engine::Fault{a.fault_cycle};
  Common sink;
  sink.out = a.out;

  std::ostringstream os;
  if (a.replay >= 0) {
    const auto t = verify::make_trial(cfg, a.replay);
    const engine::Engine eng(engine::EngineConfig::for_width(t.width, cfg.variant, t.signed_mode), cfg.fault);
    os << "trial " << a.replay << ": width=" << t.width << " mode=" << (t.signed_mode ? "signed" : "unsigned")
       << " R=" << t.kernel << " C=" << t.channels << " widths=(" << t.w_weight << "," << t.w_data
       << ") bias=" << t.bias << "\n";
    const auto stream = t.stream();
    const auto sched = engine::batch_schedule(static_cast<std::size_t>(t.kernel), static_cast<std::size_t>(t.channels), stream);
    auto state = eng.reset(t.bias);
    std::int64_t running = t.bias;
    os << "batch,s_bits,cb_bits,partial,expected\n";
    for (std::size_t k = 0; k < sched.batches.size(); ++k) {
      state = eng.consume_batch(state, sched.batches[k]);
      for (const auto& p : sched.batches[k]) running = oracle::mac_reference(running, p.w, p.i);
      os << k << "," << state.s_bits << "," << state.cb_bits << "," << eng.partial_value(state) << "," << running << "\n";
    }
    const auto fin = eng.finalize(state);
    os << "final," << fin.sum << "," << running << "\n";
    emit(sink, os.str());
    return fin.sum == running ? kOk : kVerifyFailed;
  }

  const auto report = verify::run_verify(cfg);
  if (report.pass()) {
    os << "PASS trials=" << report.trials << " cycles=" << report.cycles_checked << " seed=" << a.seed << "\n";
  } else {
    const auto& ce = *report.first_failure;
    os << "FAIL trials=" << report.trials << " failures=" << report.failures << " cycles=" << report.cycles_checked
       << "\ncounterexample: " << ce.describe() << "\nreplay: nesta verify --seed " << ce.seed << " --replay "
       << ce.trial;
    if (a.width) os << " --width " << a.width;
    if (a.mode != "mixed") os << " --mode " << a.mode;
    if (a.variant != "standard") os << " --variant " << a.variant;
    os << "\n";
  }
  emit(sink, os.str());
  return report.pass() ? kOk : kVerifyFailed;
}

std::string records_csv(const std::vector<net::AnalysisRecord>& records) {
  net::AnalysisLog log;
  log.append(records);
  std::ostringstream os;
  log.write_csv(os);
  return os.str();
}

struct LayerArgs {
  std::int64_t kernel = 3;
  std::int64_t channels = 1;
  std::int64_t filters = 1;
  std::int64_t input_size = 0;  // 0: kernel, i.e. a single output
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  std::vector<int> widths{8, 8};
  std::string flow = "RS";
};

int cmd_run_layer(const LayerArgs& a, const Common& c) {
  net::NetworkSpec spec;
  spec.name = "layer";
  net::LayerSpec l;
  l.name = "layer";
  l.channels = a.channels;
  l.filters = a.filters;
  l.kernel = a.kernel;
  l.stride = a.stride;
  l.pad = a.pad;
  l.input_size = a.input_size > 0 ? a.input_size : a.kernel;
  l.w_weight = a.widths.at(0);
  l.w_data = a.widths.at(1);
  l.shape().validate();
  spec.layers.push_back(l);
  const auto params = load_all(c.params);
  net::AnalysisOptions opt;
  opt.flow = dataflow::parse_kind(a.flow);
  std::vector<net::AnalysisRecord> rows;
  for (const auto& pe : pe_list(c)) {
    const auto r = net::analyze_network(spec, pe, params, opt);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  emit(c, records_csv(rows));
  return kOk;
}

int cmd_analyze_net(const std::string& path, const std::string& flow, const Common& c) {
  net::ParseOptions po;
  po.allow_empty = true;
  const auto spec = net::load_network(path, po);
  const auto params = load_all(c.params);
  net::AnalysisOptions opt;
  opt.flow = dataflow::parse_kind(flow);
  std::vector<net::AnalysisRecord> rows;
  for (const auto& pe : pe_list(c)) {
    const auto r = net::analyze_network(spec, pe, params, opt);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  emit(c, records_csv(rows));
  return kOk;
}

int cmd_sizing(int reg, std::int64_t channels, std::int64_t window, int reg_in, const Common& c) {
  std::ostringstream os;
  os << "w_weight,w_data\n";
  for (const auto& [ww, wd] : cost::valid_width_pairs(reg, channels, window, reg_in)) os << ww << "," << wd << "\n";
  emit(c, os.str());
  return kOk;
}

int cmd_crossover(const Common& c) {
  const auto params = load_all(c.params);
  const auto& nesta_pe = params.get("NESTA");
  std::vector<std::string> competitors = c.pe;
  if (competitors.empty()) {
    for (const auto& p : params.pe_types()) {
      if (p.ops_per_cycle == 9 && p.name != "NESTA") competitors.push_back(p.name);
    }
  }
  std::ostringstream os;
  os << "competitor,nesta_delay_ns,competitor_delay_ns,min_batches,min_channels_1x1,min_channels_3x3,"
        "min_channels_5x5,min_channels_11x11\n";
  for (const auto& name : competitors) {
    const auto& pe = params.get(name);
    const auto b = cost::crossover_batches(nesta_pe.delay_ns, pe.delay_ns);
    os << name << "," << fixed3(nesta_pe.delay_ns) << "," << fixed3(pe.delay_ns) << ",";
    if (!b) {
      os << "none,none,none,none,none\n";
      continue;
    }
    os << *b;
    for (std::int64_t r : {1, 3, 5, 11}) os << "," << cost::channels_for_batches(r, *b);
    os << "\n";
  }
  emit(c, os.str());
  return kOk;
}

struct CompareArgs {
  double budget = 1.0e7;
  std::int64_t kernel = 3;
  std::int64_t count = 1024;
  std::int64_t channels = 64;
  bool pdp = false;
};

int cmd_compare(const CompareArgs& a, const Common& c) {
  const auto params = load_all(c.params);
  std::ostringstream os;
  if (a.pdp) {
    os << "pe_type,pdp_fj\n";
    auto ranked = params.pe_types();
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const cost::PeParams& x, const cost::PeParams& y) { return x.pdp_fj() > y.pdp_fj(); });
    for (const auto& p : ranked) os << p.name << "," << fixed3(p.pdp_fj()) << "\n";
  } else {
    os << "pe_type,units,throughput_improvement_pct,energy_improvement_pct\n";
    const auto rows = cost::throughput_energy_improvement(params, a.budget, {a.kernel, a.count, a.channels});
    for (const auto& r : rows) {
      if (!c.pe.empty() && std::find(c.pe.begin(), c.pe.end(), r.pe_type) == c.pe.end()) continue;
      os << r.pe_type << "," << r.units << "," << fixed3(r.throughput_pct) << "," << fixed3(r.energy_pct) << "\n";
    }
  }
  emit(c, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NESTA engine simulator and analysis toolkit"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Random engine-versus-oracle trials");
  verify_cmd->add_option("--seed", va.seed, "Base seed");
  verify_cmd->add_option("--trials", va.trials, "Number of trials")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--width", va.width, "Operand width (8 or 16; default: both)")->check(CLI::IsMember({8, 16}));
  verify_cmd->add_option("--variant", va.variant, "CEL variant")->check(CLI::IsMember({"standard", "star"}));
  verify_cmd->add_option("--mode", va.mode, "signed, unsigned or mixed")->check(CLI::IsMember({"signed", "unsigned", "mixed"}));
  verify_cmd->add_option("--replay", va.replay, "Replay one trial index with a per-batch trace");
  verify_cmd->add_option("--inject-fault", va.fault_cycle, "Drop carries at this cycle")->group("");
  verify_cmd->add_option("--out", va.out, "Output file (default: stdout)");

  Common layer_common;
  LayerArgs la;
  auto* layer_cmd = app.add_subcommand("run-layer", "Cycles, time and energy of one layer per PE type");
  layer_cmd->add_option("--kernel,-R", la.kernel, "Kernel size R")->check(CLI::PositiveNumber);
  layer_cmd->add_option("--channels,-C", la.channels, "Input channels C")->check(CLI::PositiveNumber);
  layer_cmd->add_option("--filters,-M", la.filters, "Filters M")->check(CLI::PositiveNumber);
  layer_cmd->add_option("--input-size,-H", la.input_size, "Ifmap size before padding (default: R)");
  layer_cmd->add_option("--stride,-S", la.stride, "Stride")->check(CLI::PositiveNumber);
  layer_cmd->add_option("--pad", la.pad, "Zero padding per side")->check(CLI::NonNegativeNumber);
  layer_cmd->add_option("--widths", la.widths, "w_weight,w_data")->delimiter(',')->expected(2);
  layer_cmd->add_option("--flow", la.flow, "Dataflow for access counts")->check(CLI::IsMember({"NLR", "WS", "IS", "OS", "RS"}));
  add_common(layer_cmd, layer_common, true);

  Common net_common;
  std::string net_path;
  std::string net_flow = "RS";
  auto* net_cmd = app.add_subcommand("analyze-net", "Per-layer analysis of a network spec");
  net_cmd->add_option("--net", net_path, "Network spec file")->required();
  net_cmd->add_option("--flow", net_flow, "Dataflow for access counts")->check(CLI::IsMember({"NLR", "WS", "IS", "OS", "RS"}));
  add_common(net_cmd, net_common, true);

  Common sizing_common;
  int reg = 36;
  std::int64_t n_ch = 1;
  std::int64_t window = 9;
  int reg_in = 0;
  auto* sizing_cmd = app.add_subcommand("sizing", "Admissible (w_weight, w_data) pairs");
  sizing_cmd->add_option("--reg", reg, "Accumulator bits")->check(CLI::PositiveNumber);
  sizing_cmd->add_option("--channels", n_ch, "Channels")->check(CLI::PositiveNumber);
  sizing_cmd->add_option("--window", window, "Kernel window size R*R")->check(CLI::PositiveNumber);
  sizing_cmd->add_option("--input-register", reg_in, "Input register bits (default: (reg - 4) / 2)");
  sizing_cmd->add_option("--out", sizing_common.out, "Output file (default: stdout)");

  Common cross_common;
  auto* cross_cmd = app.add_subcommand("crossover", "Batch count from which NESTA beats 9-input MACs");
  add_common(cross_cmd, cross_common, true);

  Common cmp_common;
  CompareArgs ca;
  auto* cmp_cmd = app.add_subcommand("compare", "Throughput and energy improvement at a fixed area budget");
  cmp_cmd->add_option("--budget", ca.budget, "Area budget in um^2")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--kernel", ca.kernel, "Kernel size")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--count", ca.count, "Number of convolutions")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--channels", ca.channels, "Channels per convolution")->check(CLI::PositiveNumber);
  cmp_cmd->add_flag("--pdp", ca.pdp, "Print the PDP ranking instead");
  add_common(cmp_cmd, cmp_common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*verify_cmd) return cmd_verify(va);
    if (*layer_cmd) return cmd_run_layer(la, layer_common);
    if (*net_cmd) return cmd_analyze_net(net_path, net_flow, net_common);
    if (*sizing_cmd) return cmd_sizing(reg, n_ch, window, reg_in, sizing_common);
    if (*cross_cmd) return cmd_crossover(cross_common);
    if (*cmp_cmd) return cmd_compare(ca, cmp_common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
