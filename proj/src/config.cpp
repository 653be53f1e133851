#include "sparsenet/config.hpp"

#include <algorithm>
#include <array>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sparsenet/errors.hpp"

namespace sparsenet {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames{{
    {Method::kSet, "SET"},
    {Method::kNpset, "NPSET"},
    {Method::kNpsetL1, "NPSET_L1"},
    {Method::kNpsetL2, "NPSET_L2"},
    {Method::kDirectSet, "DIRECT_SET"},
    {Method::kDirectFc, "DIRECT_FC"},
    {Method::kDense, "DENSE"},
}};

const KeyInfo* find_key(std::string_view key) {
  const auto& keys = config_keys();
  const auto it = std::ranges::find(keys, key, &KeyInfo::key);
  return it == keys.end() ? nullptr : &*it;
}

template <typename T>
T parse_number(const Settings& s, const std::string& key, T fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  const std::string& text = it->second;
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  }
  return value;
}

std::string get(const Settings& s, const std::string& key, std::string fallback) {
  const auto it = s.find(key);
  return it == s.end() ? fallback : it->second;
}

template <typename T>
std::string str(T v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "?";
}

Method parse_method(std::string_view name) {
  const std::string wanted = lower(name);
  for (const auto& [method, text] : kMethodNames) {
    if (lower(text) == wanted) return method;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_sparse(Method m) { return m != Method::kDirectFc && m != Method::kDense; }

bool prunes_neurons(Method m) { return m == Method::kNpset || m == Method::kNpsetL1 || m == Method::kNpsetL2; }

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  init.validate();
  train.validate();
  evolution.validate();
  pruning.validate();
  if ((method == Method::kDirectSet || method == Method::kDirectFc) && !pruning.prune_first &&
      !pruning.prune_second) {
    throw ConfigError("direct methods need at least one pruning target layer to resolve their sizes");
  }
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys{
      {"experiment", "name", "run name"},
      {"experiment", "method", "SET, NPSET, NPSET_L1, NPSET_L2, DIRECT_SET, DIRECT_FC or DENSE"},
      {"experiment", "seed", "master random seed"},
      {"experiment", "output", "output directory"},
      {"data", "dataset", "CSV path or standin:<name>"},
      {"data", "label", "label column name, or #<index> for a position"},
      {"data", "train_fraction", "fraction of samples used for training"},
      {"model", "h1", "first hidden layer width (0 = dataset default)"},
      {"model", "h2", "second hidden layer width (0 = dataset default)"},
      {"init", "epsilon", "Erdos-Renyi density parameter"},
      {"init", "weight_scale", "uniform init half-width (0 = sqrt(6/(fan_in+fan_out)))"},
      {"train", "lr", "learning rate"},
      {"train", "momentum", "SGD momentum"},
      {"train", "weight_decay", "L2 weight decay"},
      {"train", "batch_size", "mini-batch size"},
      {"train", "epochs", "number of epochs"},
      {"evolution", "zeta", "fraction of connections rewired per epoch"},
      {"pruning", "alpha", "fraction of hidden neurons pruned per pruning epoch"},
      {"pruning", "beta", "first pruning epoch (0-indexed)"},
      {"pruning", "gamma", "pruning continues through epoch beta + gamma"},
      {"pruning", "target_layers", "hidden layers pruned: both, h1 or h2"},
      {"pruning", "degree_mode", "neuron degree: in_out or out"},
  };
  return keys;
}

Settings parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' must appear inside a [section]");
    for (const auto& [key, value] : body) {
      const KeyInfo* info = find_key(key);
      if (info == nullptr) throw ConfigError("unknown config key '" + key + "'");
      if (info->section != section) {
        throw ConfigError("key '" + key + "' belongs in section [" + std::string(info->section) + "]");
      }
      out[key] = value.get_value<std::string>();
    }
  }
  return out;
}

Settings read_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str());
}

void merge_settings(Settings& base, const Settings& overrides) {
  for (const auto& [k, v] : overrides) {
    if (find_key(k) == nullptr) throw ConfigError("unknown config key '" + k + "'");
    base[k] = v;
  }
}

ExperimentConfig config_from_settings(const Settings& s) {
  for (const auto& [k, v] : s) {
    if (find_key(k) == nullptr) throw ConfigError("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  c.name = get(s, "name", c.name);
  c.method = parse_method(get(s, "method", "SET"));
  c.seed = parse_number<std::uint64_t>(s, "seed", c.seed);
  c.output = get(s, "output", c.output.string());
  c.dataset = get(s, "dataset", "");
  const std::string label = get(s, "label", "label");
  if (label.size() > 1 && label.front() == '#') {
    c.label = static_cast<std::size_t>(parse_number<std::size_t>({{"label", label.substr(1)}}, "label", 0));
  } else {
    c.label = label;
  }
  c.train_fraction = parse_number<double>(s, "train_fraction", c.train_fraction);
  c.h1 = parse_number<std::size_t>(s, "h1", c.h1);
  c.h2 = parse_number<std::size_t>(s, "h2", c.h2);
  c.init.epsilon = parse_number<double>(s, "epsilon", c.init.epsilon);
  const double scale = parse_number<double>(s, "weight_scale", 0.0);
  if (scale < 0.0) throw ConfigError("weight_scale must be non-negative");
  if (scale > 0.0) c.init.weight_scale = scale;
  c.train.sgd.lr = parse_number<double>(s, "lr", c.train.sgd.lr);
  c.train.sgd.momentum = parse_number<double>(s, "momentum", c.train.sgd.momentum);
  c.train.sgd.weight_decay = parse_number<double>(s, "weight_decay", c.train.sgd.weight_decay);
  c.train.batch_size = parse_number<std::size_t>(s, "batch_size", c.train.batch_size);
  c.train.epochs = parse_number<std::size_t>(s, "epochs", c.train.epochs);
  c.evolution.zeta = parse_number<double>(s, "zeta", c.evolution.zeta);
  c.pruning.alpha = parse_number<double>(s, "alpha", c.pruning.alpha);
  c.pruning.beta = parse_number<int>(s, "beta", c.pruning.beta);
  c.pruning.gamma = parse_number<int>(s, "gamma", c.pruning.gamma);
  const std::string targets = lower(get(s, "target_layers", "both"));
  if (targets == "both") {
    c.pruning.prune_first = c.pruning.prune_second = true;
  } else if (targets == "h1") {
    c.pruning.prune_first = true;
    c.pruning.prune_second = false;
  } else if (targets == "h2") {
    c.pruning.prune_first = false;
    c.pruning.prune_second = true;
  } else {
    throw ConfigError("target_layers must be both, h1 or h2");
  }
  const std::string mode = lower(get(s, "degree_mode", "in_out"));
  if (mode == "in_out") {
    c.pruning.degree_mode = DegreeMode::kInOut;
  } else if (mode == "out") {
    c.pruning.degree_mode = DegreeMode::kOutOnly;
  } else {
    throw ConfigError("degree_mode must be in_out or out");
  }
  c.validate();
  return c;
}

Settings settings_from_config(const ExperimentConfig& c) {
  Settings s;
  s["name"] = c.name;
  s["method"] = std::string(method_name(c.method));
  s["seed"] = str(c.seed);
  s["output"] = c.output.string();
  s["dataset"] = c.dataset;
  if (const auto* name = std::get_if<std::string>(&c.label)) {
    s["label"] = *name;
  } else {
    s["label"] = "#" + str(std::get<std::size_t>(c.label));
  }
  s["train_fraction"] = str(c.train_fraction);
  s["h1"] = str(c.h1);
  s["h2"] = str(c.h2);
  s["epsilon"] = str(c.init.epsilon);
  s["weight_scale"] = str(c.init.weight_scale.value_or(0.0));
  s["lr"] = str(c.train.sgd.lr);
  s["momentum"] = str(c.train.sgd.momentum);
  s["weight_decay"] = str(c.train.sgd.weight_decay);
  s["batch_size"] = str(c.train.batch_size);
  s["epochs"] = str(c.train.epochs);
  s["zeta"] = str(c.evolution.zeta);
  s["alpha"] = str(c.pruning.alpha);
  s["beta"] = str(c.pruning.beta);
  s["gamma"] = str(c.pruning.gamma);
  s["target_layers"] = c.pruning.prune_first && c.pruning.prune_second ? "both" : (c.pruning.prune_first ? "h1" : "h2");
  s["degree_mode"] = c.pruning.degree_mode == DegreeMode::kInOut ? "in_out" : "out";
  return s;
}

std::string to_ini(const ExperimentConfig& cfg) {
  const Settings s = settings_from_config(cfg);
  std::ostringstream out;
  std::string_view section;
  for (const KeyInfo& info : config_keys()) {
    if (info.section != section) {
      if (!section.empty()) out << '\n';
      section = info.section;
      out << '[' << section << "]\n";
    }
    out << info.key << " = " << s.at(std::string(info.key)) << '\n';
  }
  return out.str();
}

std::size_t default_hidden_size(std::string_view dataset_name) {
  static const std::map<std::string, std::size_t> table{
      {"leukemia", 7000}, {"pcmac", 3000},        {"lung_discrete", 300}, {"lung-discrete", 300},
      {"gisette", 5000},  {"lung", 3000},         {"cll_sub_111", 11000}, {"cll-sub-111", 11000},
      {"carcinom", 9000}, {"orlraws10p", 10000},  {"tox_171", 5000},      {"tox-171", 5000},
      {"prostate_ge", 5000}, {"prostate-ge", 5000}, {"arcene", 10000},  {"madelon", 1000},
      {"yale", 1000},     {"glioma", 4000},       {"relathe", 4000},
  };
  const auto it = table.find(lower(dataset_name));
  return it == table.end() ? 1000 : it->second;
}

}  // namespace sparsenet
