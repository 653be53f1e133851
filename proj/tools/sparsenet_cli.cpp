#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "sparsenet/checkpoint.hpp"
#include "sparsenet/config.hpp"
#include "sparsenet/errors.hpp"
#include "sparsenet/harness.hpp"
#include "sparsenet/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sparsenet;

namespace {

// Config file plus per-key overrides shared by the subcommands that run models.
struct ConfigArgs {
  std::string config_path;
  Settings overrides;
  std::vector<std::pair<std::string, std::string>> raw;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_path, "INI config file");
    raw.reserve(config_keys().size());
    for (const auto& k : config_keys()) {
      auto& slot = raw.emplace_back(std::string(k.key), std::string());
      app.add_option("--" + slot.first, slot.second, std::string(k.help))->group("Config overrides");
    }
  }

  Settings settings() const {
    Settings s = config_path.empty() ? Settings{} : read_ini(config_path);
    Settings cli;
    for (const auto& [key, value] : raw) {
      if (!value.empty()) cli[key] = value;
    }
    merge_settings(s, cli);
    return s;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void log_epoch(const EpochRecord& r) {
  const auto& m = r.metrics;
  std::fprintf(stderr, "epoch %3d  loss %.4f  train %.4f  test %.4f  weights %zu  h %zu/%zu\n", m.epoch,
               m.train_loss, m.train_accuracy, m.test_accuracy, m.weight_count, m.hidden_neurons[0],
               m.hidden_neurons[1]);
}

void print_summary(const ExperimentResult& r, const fs::path& dir) {
  std::printf("%s on %s: max test accuracy %.4f (epoch %d), weights %zu, neurons %zu, compression %zux -> %s\n",
              std::string(method_name(r.method)).c_str(), r.dataset.c_str(), r.max_test_accuracy, r.max_test_epoch,
              r.final_parameters.weights, r.final_neurons, r.compression_rate, dir.string().c_str());
}

int cmd_train(const ConfigArgs& args, bool quiet) {
  const ExperimentConfig cfg = config_from_settings(args.settings());
  const ExperimentResult r = run_experiment(cfg, quiet ? EpochCallback{} : EpochCallback{log_epoch});
  export_metrics(r, cfg, cfg.output);
  save_checkpoint({r.model, std::string(method_name(r.method)), static_cast<int>(r.epochs.size())},
                  cfg.output / "model.ckpt");
  print_summary(r, cfg.output);
  return 0;
}

int cmd_grid(const ConfigArgs& args, const std::vector<std::string>& vary) {
  const Settings base = args.settings();
  // Parse "key=v1,v2" axes and check the keys up front.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& spec : vary) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("--vary expects key=v1,v2,...: '" + spec + "'");
    const std::string key = spec.substr(0, eq);
    if (std::ranges::none_of(config_keys(), [&](const KeyInfo& k) { return k.key == key; })) {
      throw ConfigError("unknown key '" + key + "' in --vary");
    }
    auto values = split_list(spec.substr(eq + 1), ',');
    if (values.empty()) throw ConfigError("no values for '" + key + "' in --vary");
    axes.emplace_back(key, std::move(values));
  }
  const ExperimentConfig root = config_from_settings(base);

  // Validate every combination before running any of them.
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  std::vector<std::size_t> pos(axes.size(), 0);
  for (;;) {
    Settings s = base;
    std::string tag;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      s[axes[a].first] = axes[a].second[pos[a]];
      tag += (tag.empty() ? "" : "_") + axes[a].first + "-" + axes[a].second[pos[a]];
    }
    if (tag.empty()) tag = "run";
    std::ranges::replace_if(tag, [](char c) { return c == '/' || c == ':' || c == ' '; }, '-');
    s["output"] = (root.output / tag).string();
    s["name"] = root.name + "/" + tag;
    runs.emplace_back(tag, config_from_settings(s));
    std::size_t a = 0;
    while (a < axes.size() && ++pos[a] == axes[a].second.size()) pos[a++] = 0;
    if (a == axes.size()) break;
  }

  std::string table = "run,method,dataset,max_test_acc,weights,neurons,compression\n";
  for (const auto& [tag, cfg] : runs) {
    std::fprintf(stderr, "[%s]\n", tag.c_str());
    const ExperimentResult r = run_experiment(cfg);
    export_metrics(r, cfg, cfg.output);
    print_summary(r, cfg.output);
    char row[256];
    std::snprintf(row, sizeof(row), ",%s,%s,%.6f,%zu,%zu,%zu\n", std::string(method_name(r.method)).c_str(),
                  r.dataset.c_str(), r.max_test_accuracy, r.final_parameters.weights, r.final_neurons,
                  r.compression_rate);
    table += tag + row;
  }
  fs::create_directories(root.output);
  write_file(root.output / "grid.csv", table);
  return 0;
}

int cmd_ablate(const ConfigArgs& args, const std::string& layer_name, const std::string& fractions_text,
               const std::string& mode_name, const std::string& checkpoint) {
  const ExperimentConfig cfg = config_from_settings(args.settings());
  HiddenLayer layer;
  if (layer_name == "h1") {
    layer = HiddenLayer::kFirst;
  } else if (layer_name == "h2") {
    layer = HiddenLayer::kSecond;
  } else {
    throw ConfigError("--layer must be h1 or h2");
  }
  DegreeMode mode;
  if (mode_name == "in_out") {
    mode = DegreeMode::kInOut;
  } else if (mode_name == "out") {
    mode = DegreeMode::kOutOnly;
  } else {
    throw ConfigError("--degree-mode must be in_out or out");
  }
  std::vector<double> fractions;
  for (const auto& f : split_list(fractions_text, ',')) {
    try {
      std::size_t used = 0;
      fractions.push_back(std::stod(f, &used));
      if (used != f.size()) throw std::invalid_argument(f);
    } catch (const std::exception&) {
      throw ConfigError("bad fraction '" + f + "'");
    }
  }
  if (fractions.empty()) throw ConfigError("--fractions is empty");

  const Dataset data = load_dataset(cfg);
  const PreparedData prepared = prepare_data(cfg, data);
  Mlp model = checkpoint.empty() ? run_experiment(cfg, data, log_epoch).model : load_checkpoint(checkpoint).model;
  if (model.dims().n_features != prepared.test.n_features || model.dims().n_classes != prepared.test.n_classes) {
    throw DataError("checkpoint shape does not match the dataset");
  }
  const auto points = ablate_least_connected(model, layer, fractions, prepared.test, mode);
  fs::create_directories(cfg.output);
  const std::string csv = ablation_csv(points);
  write_file(cfg.output / "ablation.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_report(const std::vector<std::string>& paths) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    if (fs::is_regular_file(p)) {
      files.emplace_back(p);
    } else if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() == "summary.json") files.push_back(e.path());
      }
    } else {
      throw DataError("no such file or directory: " + p);
    }
  }
  std::ranges::sort(files);
  if (files.empty()) throw DataError("no summary.json found");
  std::printf("%-28s %-10s %-14s %10s %10s %8s %8s %11s\n", "run", "method", "dataset", "weights", "dense",
              "compr", "neurons", "max_acc(%)");
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      std::printf("%-28s %-10s %-14s %10zu %10zu %7zux %8zu %11.2f\n", j.at("name").get<std::string>().c_str(),
                  j.at("method").get<std::string>().c_str(), j.at("dataset").get<std::string>().c_str(),
                  j.at("weights").get<std::size_t>(), j.at("dense_reference_weights").get<std::size_t>(),
                  j.at("compression_rate").get<std::size_t>(), j.at("neurons").get<std::size_t>(),
                  100.0 * j.at("max_test_accuracy").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  return 0;
}

int cmd_synth(const std::string& name, const std::string& out, std::uint64_t seed) {
  const auto spec = standin_spec(name);
  if (!spec) throw ConfigError("unknown stand-in '" + name + "'");
  write_csv(make_classification(*spec, seed), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse MLP training with weight rewiring and neuron pruning"};
  app.require_subcommand(1);

  bool quiet = false;
  ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "train one configuration and export metrics");
  train_args.attach(*train);
  train->add_flag("-q,--quiet", quiet, "no per-epoch log");

  ConfigArgs grid_args;
  std::vector<std::string> vary;
  auto* grid = app.add_subcommand("grid", "run the cartesian product of --vary axes");
  grid_args.attach(*grid);
  grid->add_option("--vary", vary, "key=v1,v2,... (repeatable)");

  ConfigArgs ablate_args;
  std::string layer = "h1";
  std::string fractions = "0,0.01,0.02,0.04,0.06,0.08,0.1";
  std::string degree_mode = "in_out";
  std::string checkpoint;
  auto* ablate = app.add_subcommand("ablate", "remove least-connected neurons and measure test accuracy");
  ablate_args.attach(*ablate);
  ablate->add_option("--layer", layer, "h1 or h2")->capture_default_str();
  ablate->add_option("--fractions", fractions, "comma separated fractions")->capture_default_str();
  ablate->add_option("--degree-mode", degree_mode, "in_out or out")->capture_default_str();
  ablate->add_option("--checkpoint", checkpoint, "trained model; trains from the config when omitted");

  std::vector<std::string> report_paths;
  auto* report = app.add_subcommand("report", "tabulate summary.json files");
  report->add_option("paths", report_paths, "run directories or summary files")->required();

  std::string synth_name;
  std::string synth_out;
  std::uint64_t synth_seed = 42;
  auto* synth = app.add_subcommand("synth", "write a stand-in dataset as CSV");
  synth->add_option("name", synth_name, "madelon, gisette, yale or lung_discrete")->required();
  synth->add_option("out", synth_out, "output CSV path")->required();
  synth->add_option("--seed", synth_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  try {
    if (*train) return cmd_train(train_args, quiet);
    if (*grid) return cmd_grid(grid_args, vary);
    if (*ablate) return cmd_ablate(ablate_args, layer, fractions, degree_mode, checkpoint);
    if (*report) return cmd_report(report_paths);
    if (*synth) return cmd_synth(synth_name, synth_out, synth_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return static_cast<int>(ExitCode::kDataError);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::kRuntimeError);
  }
  return 0;
}
