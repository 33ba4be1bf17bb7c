#include <deque>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rbergomi/rbergomi.hpp"

namespace fs = std::filesystem;
using namespace rbergomi;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kBudget = 3, kNumerical = 4 };

struct Flags {
  std::optional<std::string> config;
  std::string out = "results";
  std::deque<std::pair<std::string, std::optional<std::string>>> values;  // stable addresses for CLI11
  bool recompute_reference = false;

  std::optional<std::string>& slot(const std::string& key) {
    values.emplace_back(key, std::nullopt);
    return values.back().second;
  }
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "INI-style run file; flags override its values");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--set", f.slot("set"), "parameter set 1-4");
  cmd->add_option("--method", f.slot("method"), "mc | qmc | asgq");
  cmd->add_option("--steps", f.slot("steps"), "time steps N (coarsest grid with Richardson)");
  cmd->add_option("--richardson", f.slot("richardson"), "Richardson depth 0 | 1 | 2");
  cmd->add_option("--bridge", f.slot("bridge"), "Brownian bridge on | off");
  cmd->add_option("--tol", f.slot("tol"), "ASGQ relative tolerance");
  cmd->add_option("--samples", f.slot("samples"), "MC draws, or q * n lattice points for QMC");
  cmd->add_option("--shifts", f.slot("shifts"), "QMC random shifts q");
  cmd->add_option("--seed", f.slot("seed"), "random seed");
  cmd->add_option("--scheme", f.slot("scheme"), "hybrid | exact");
  cmd->add_option("--hierarchy", f.slot("hierarchy"), "linear | geometric");
  cmd->add_option("--stop", f.slot("stop"), "ASGQ stopping rule: relative-sum | absolute-max");
  cmd->add_option("--max-work", f.slot("max_work"), "ASGQ evaluation budget per level");
  cmd->add_option("--threads", f.slot("threads"), "worker threads (0 = all cores)");
  cmd->add_option("--steps-list", f.slot("steps_list"), "comma-separated N list for studies");
  cmd->add_option("--methods", f.slot("methods"), "comma-separated methods for compare");
  cmd->add_option("--target", f.slot("target"), "target total relative error for compare");
  cmd->add_option("--bias-samples", f.slot("bias_samples"), "MC draws per grid for the bias step");
  cmd->add_option("--name", f.slot("name"), "run name used in output file names");
  for (const char* p : {"hurst", "eta", "rho", "xi0", "spot", "strike", "maturity"}) {
    cmd->add_option(std::string("--") + p, f.slot(p), std::string("model parameter ") + p);
  }
}

std::vector<RunConfig> resolve_runs(const Flags& f, const Settings& command_defaults) {
  std::vector<Settings> runs = f.config ? load_config(*f.config) : std::vector<Settings>{Settings{}};
  std::vector<RunConfig> out;
  for (auto& s : runs) {
    for (const auto& [k, v] : command_defaults) s.emplace(k, v);
    for (const auto& [k, v] : f.values) {
      if (v) s[k] = *v;
    }
    s.erase("command");
    s.erase("out");
    out.push_back(RunConfig::from_settings(s));
  }
  return out;
}

std::string describe(const RunRecord& r) {
  std::ostringstream o;
  o << to_string(r.method) << " set " << r.set_id << " N=" << r.steps << " rich=" << r.richardson_depth
    << "  value " << detail::fmt(r.result.value) << "  err " << detail::fmt(r.result.stat_error);
  if (r.relative_error) o << "  rel.err " << detail::fmt(*r.relative_error);
  o << "  time " << detail::fmt(r.result.wall_seconds) << "s";
  if (!r.note.empty()) o << "  [" << r.note << "]";
  return o.str();
}

int cmd_price(const Flags& f) {
  int code = kOk;
  for (const RunConfig& c : resolve_runs(f, {})) {
    const RunRecord r = run_price(c);
    const fs::path dir(f.out);
    emit_records({r}, dir / (c.name + "_price.csv"), dir / (c.name + "_price_timing.csv"));
    std::cout << c.name << ": " << describe(r) << "\n";
    if (!r.result.converged) code = kBudget;
  }
  return code;
}

int cmd_weak_error(const Flags& f) {
  for (const RunConfig& c : resolve_runs(f, {{"samples", "1000000"}})) {
    const WeakErrorTable t = run_weak_error(c.params, c.set_id, c.reference_price(), c.reference_stat_error(),
                                            c.scheme, c.steps_list, c.samples, c.seed, c.richardson);
    const fs::path dir(f.out);
    write_text(dir / (c.name + "_weak_error.csv"), weak_error_csv(t));
    emit_plot_data(dir / (c.name + "_weak_error.dat"),
                   "bias vs N, set " + std::to_string(c.set_id) + ", Richardson depth " +
                       std::to_string(c.richardson),
                   weak_error_plot(t));
    std::cout << c.name << ": set " << c.set_id << " " << to_string(c.scheme) << " depth " << c.richardson << "\n";
    for (const auto& row : t.rows) {
      std::cout << "  N=" << row.steps << "  bias " << detail::fmt(row.bias) << " +- "
                << detail::fmt(row.ci_half_width) << (row.resolved ? "" : "  (not resolved at this M)") << "\n";
    }
    std::cout << "  slope vs dt: " << detail::fmt(t.slope_fit) << "\n";
  }
  return kOk;
}

int cmd_compare(const Flags& f) {
  int code = kOk;
  for (const RunConfig& c : resolve_runs(f, {})) {
    const CompareResult res = run_compare(c);
    const fs::path dir(f.out);
    emit_records(res.records, dir / (c.name + "_compare.csv"), dir / (c.name + "_compare_timing.csv"));
    std::string bias_csv = "set_id,scheme,richardson,N,value,bias,ci_half_width\n";
    for (const auto& b : res.bias_rows) {
      bias_csv += std::to_string(b.set_id) + "," + to_string(b.scheme) + "," + std::to_string(b.richardson_depth) +
                  "," + std::to_string(b.steps) + "," + detail::fmt(b.value) + "," + detail::fmt(b.bias) + "," +
                  detail::fmt(b.ci_half_width) + "\n";
    }
    write_text(dir / (c.name + "_bias.csv"), bias_csv);
    std::vector<PlotPoint> pts;
    for (const auto& r : res.records) {
      if (!r.relative_error) continue;
      const double rel_stat = r.result.stat_error / *r.reference;
      pts.push_back({r.result.wall_seconds, *r.relative_error, std::max(0.0, *r.relative_error - rel_stat),
                     *r.relative_error + rel_stat});
    }
    if (!pts.empty()) emit_plot_data(dir / (c.name + "_error_vs_time.dat"), "relative error vs seconds", pts);
    std::cout << c.name << ": set " << c.set_id << ", target " << detail::fmt(c.target) << "\n";
    for (const auto& r : res.records) std::cout << "  " << describe(r) << "\n";
    for (const auto& [m, ratio] : res.time_ratio_to_mc) {
      std::cout << "  time " << to_string(m) << "/mc = " << detail::fmt(ratio) << "\n";
    }
    if (!res.unreachable.empty()) code = kBudget;
  }
  return code;
}

int cmd_reference(const Flags& f) {
  const fs::path dir(f.out);
  std::string csv;
  if (!f.recompute_reference) {
    csv = "set_id,hurst,eta,rho,xi0,strike,reference,reference_stat_error\n";
    for (const auto& ps : parameter_sets()) {
      csv += std::to_string(ps.id) + "," + detail::fmt(ps.params.hurst) + "," + detail::fmt(ps.params.eta) + "," +
             detail::fmt(ps.params.rho) + "," + detail::fmt(ps.params.xi0) + "," + detail::fmt(ps.params.strike) +
             "," + detail::fmt(ps.reference_price) + "," + detail::fmt(ps.reference_stat_error) + "\n";
    }
    std::cout << csv;
    write_text(dir / "reference.csv", csv);
    return kOk;
  }
  bool set_given = false;
  for (const auto& [k, v] : f.values) set_given = set_given || (k == "set" && v);
  std::vector<RunConfig> runs;
  if (set_given || f.config) {
    runs = resolve_runs(f, {{"steps", "128"}, {"samples", "1000000"}, {"bridge", "off"}});
  } else {
    for (int id = 1; id <= 4; ++id) {
      Flags g = f;
      g.values.emplace_back("set", std::to_string(id));
      for (auto& c : resolve_runs(g, {{"steps", "128"}, {"samples", "1000000"}, {"bridge", "off"}})) runs.push_back(c);
    }
  }
  csv = "set_id,steps,samples,reference,reference_stat_error,recomputed,recomputed_stat_error,combined_se,z_score\n";
  for (const RunConfig& c : runs) {
    if (c.threads) worker_threads() = static_cast<unsigned>(c.threads);
    const ReferenceCheck r = recompute_reference(c.set_id, c.steps, c.samples, c.seed);
    csv += std::to_string(r.set_id) + "," + std::to_string(c.steps) + "," + std::to_string(c.samples) + "," +
           detail::fmt(r.reference) + "," + detail::fmt(r.reference_stat_error) + "," + detail::fmt(r.recomputed) +
           "," + detail::fmt(r.recomputed_stat_error) + "," + detail::fmt(r.combined_standard_error) + "," +
           detail::fmt(r.z_score) + "\n";
  }
  std::cout << csv;
  write_text(dir / "reference_recomputed.csv", csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough Bergomi call pricing: MC, randomised lattice QMC and adaptive sparse grids"};
  app.require_subcommand(1);
  Flags price_flags, weak_flags, compare_flags, reference_flags;
  auto* price = app.add_subcommand("price", "price one configuration");
  add_run_flags(price, price_flags);
  auto* weak = app.add_subcommand("weak-error", "bias against the reference for a list of N");
  add_run_flags(weak, weak_flags);
  auto* compare = app.add_subcommand("compare", "MC / QMC / ASGQ at a target relative error");
  add_run_flags(compare, compare_flags);
  auto* reference = app.add_subcommand("reference", "tabulated reference prices");
  add_run_flags(reference, reference_flags);
  reference->add_flag("--recompute-reference", reference_flags.recompute_reference,
                      "re-estimate the references by MC (defaults N=128, M=1e6)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    if (price->parsed()) return cmd_price(price_flags);
    if (weak->parsed()) return cmd_weak_error(weak_flags);
    if (compare->parsed()) return cmd_compare(compare_flags);
    if (reference->parsed()) return cmd_reference(reference_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const BudgetExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kBudget;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
