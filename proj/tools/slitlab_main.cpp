#include "slitlab/cli.hpp"

#include <CLI11.hpp>

namespace {

using namespace slitlab;
using namespace slitlab::cli;

constexpr int exit_config = 2;
constexpr int exit_assert = 1;
constexpr int exit_runtime = 3;

void report_config_error(const std::string& cmd, const std::string& file, const ConfigError& e) {
  std::cerr << "slitlab " << cmd << ": ";
  if (e.line() > 0) std::cerr << file << ":" << e.line() << ": ";
  std::cerr << "config error: " << e.message() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slitlab: experiments on slit domains and thin obstacle problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "slitlab 1.0");

  struct Flags {
    std::string config;
    std::string h;
    std::string seed;
    std::string out = "out";
  };
  const auto all = experiments();
  std::vector<Flags> flags(all.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto* sub = app.add_subcommand(all[i].name, all[i].summary);
    sub->set_help_flag("--help", "print this help and exit");  // -h would clash with --h
    sub->add_option("--config", flags[i].config, "key = value file; its entries override flags");
    sub->add_option("--h", flags[i].h, "grid spacing, e.g. 1/128");
    sub->add_option("--seed", flags[i].seed, "random seed");
    sub->add_option("--out", flags[i].out, "output directory (created if missing)");
    std::string keys;
    for (const auto& [k, spec] : all[i].schema) keys += "  " + k + " (default " + spec.fallback + ")\n";
    std::string metrics;
    for (const auto& m : all[i].metrics) metrics += " " + m;
    sub->footer("Config keys:\n" + keys + "Assertions: assert_min.<metric> or assert_max.<metric> with metric in:" + metrics);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& ex = all[i];
    const auto& f = flags[i];
    std::map<std::string, Entry> from_flags, from_file;
    if (!f.h.empty()) from_flags["h"] = {f.h, 0};
    if (!f.seed.empty()) from_flags["seed"] = {f.seed, 0};
    std::unique_ptr<Config> cfg;
    try {
      if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError(0, "--config", "cannot open " + f.config);
        from_file = parse_config_text(in);
      }
      cfg = std::make_unique<Config>(ex.schema, from_flags, from_file, ex.metrics);
    } catch (const ConfigError& e) {
      report_config_error(ex.name, f.config, e);
      return exit_config;
    }
    Outcome outcome;
    try {
      outcome = ex.run(*cfg);
    } catch (const ConfigError& e) {
      report_config_error(ex.name, f.config, e);
      return exit_config;
    } catch (const std::exception& e) {
      std::cerr << "slitlab " << ex.name << ": " << e.what() << "\n";
      return exit_runtime;
    }
    const auto asserts = check_assertions(*cfg, outcome);
    try {
      write_outputs(f.out, ex.name, *cfg, outcome, asserts);
    } catch (const std::exception& e) {
      std::cerr << "slitlab " << ex.name << ": " << e.what() << "\n";
      return exit_runtime;
    }
    for (const auto& [k, v] : outcome.metrics) std::cout << k << " = " << format_number(v) << "\n";
    bool ok = true;
    for (const auto& a : asserts) {
      std::cout << (a.pass ? "PASS " : "FAIL ") << a.key << " (value " << format_number(a.value) << ", bound "
                << format_number(a.bound) << ")\n";
      ok = ok && a.pass;
    }
    return ok ? 0 : exit_assert;
  }
  return exit_config;
}
