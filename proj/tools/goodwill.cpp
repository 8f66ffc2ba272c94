// goodwill <subcommand> --config FILE [--seed N] [--paths N] [--dt X] --out FILE
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "goodwill/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  std::string out;
  // feedback-check
  std::optional<double> a0, a1;
  std::optional<std::string> variant;
};

goodwill::json merged_config(const Options& o) {
  goodwill::json user = o.config.empty() ? goodwill::json::object() : goodwill::read_json_file(o.config);
  goodwill::json merged = goodwill::merge_config(goodwill::load_defaults(), user);
  if (o.seed) merged["simulation"]["seed"] = *o.seed;
  if (o.paths) merged["simulation"]["n_paths"] = *o.paths;
  if (o.dt) merged["simulation"]["dt"] = *o.dt;
  return merged;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw goodwill::config_error("cannot write output file '" + path + "'");
  return os;
}

int run(const std::string& cmd, const Options& o) {
  using namespace goodwill;
  const json merged = merged_config(o);
  if (cmd == "feedback-check") {
    const json& fc = merged.at("feedback_check");
    const double a0 = o.a0.value_or(fc.at("a0").get<double>());
    const double a1 = o.a1.value_or(fc.at("a1").get<double>());
    const RootVariant v = parse_root_variant(o.variant.value_or(fc.at("variant").get<std::string>()));
    const json res = run_feedback_check(a0, a1, v);
    std::cout << res.dump() << '\n';
    if (!o.out.empty()) open_out(o.out) << res.dump(2) << '\n';
    return 0;
  }
  const Scenario sc = make_scenario(merged);
  if (o.out.empty()) throw config_error("--out is required");
  if (cmd == "evaluate") {
    const json res = run_evaluate(sc);
    open_out(o.out) << res.dump(2) << '\n';
    std::cout << res.dump() << '\n';
    return 0;
  }
  std::ofstream os = open_out(o.out);
  if (cmd == "fig1") run_fig1(sc, os);
  else if (cmd == "fig2a") run_fig2(sc, true, os);
  else if (cmd == "fig2b") run_fig2(sc, false, os);
  else if (cmd == "sensitivity") run_sensitivity(sc, os);
  else if (cmd == "costate") run_costate(sc, os);
  else if (cmd == "approx") run_approx(sc, os);
  else throw config_error("unknown subcommand " + cmd);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal advertising with delays: costates, policies and Monte Carlo experiments"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fig1", "optimal controls in the four churn settings"},
      {"fig2a", "memoryless performance gap along the goodwill-churn amplitude"},
      {"fig2b", "memoryless performance gap along the advertising-churn amplitude"},
      {"sensitivity", "dV/dr against finite differences over an r grid"},
      {"costate", "costate w0, c and the optimal and memoryless controls"},
      {"evaluate", "Monte Carlo value of a policy (JSON)"},
      {"approx", "convergence of the regularized objective"},
      {"feedback-check", "parameter condition for the state-delay model (JSON on stdout)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "JSON scenario merged onto the shipped defaults")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--paths", o.paths, "Monte Carlo paths");
    sub->add_option("--dt", o.dt, "time step (must divide T and r)");
    if (name == "feedback-check") {
      sub->add_option("--out", o.out, "also write the JSON here");
      sub->add_option("--a0", o.a0, "a0");
      sub->add_option("--a1", o.a1, "weight of the point delay");
      sub->add_option("--variant", o.variant, "cot or coth")->check(CLI::IsMember({"cot", "coth"}));
    } else {
      sub->add_option("--out", o.out, "output file")->required();
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, o);
  } catch (const goodwill::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {  // config_error, dimension_error
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
