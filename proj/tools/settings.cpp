#include "settings.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace semba::cli {
namespace {

using model::ConfigError;

struct Key {
  const char* section;
  const char* key;
  const char* flag;  // empty: INI only
  const char* help;
  bool training;     // irrelevant to stats
};

constexpr Key kKeys[] = {
    {"data", "dataset", "--dataset", "event CSV (src,dst,weight,time; .gz accepted)", false},
    {"data", "signed_binary", "--signed-binary", "map weights to +-1 when parsing", false},
    {"train", "task", "--task", "existence | sign | signed-existence | signed-weight", true},
    {"train", "batch_size", "--batch-size", "events per temporal batch", true},
    {"train", "lr", "--lr", "Adam learning rate", true},
    {"train", "epochs", "--epochs", "maximum epochs", true},
    {"train", "patience", "--patience", "early-stopping patience in epochs", true},
    {"train", "seed", "--seed", "seed for initialization and negative sampling", true},
    {"train", "train_fraction", "", "", true},
    {"train", "validation_fraction", "", "", true},
    {"train", "test_fraction", "", "", true},
    {"model", "ablation", "--ablation", "none | ba | emb | mem (or '+'-joined)", true},
    {"model", "memory_dim", "--memory-dim", "memory width per polarity", true},
    {"model", "embedding_dim", "--embedding-dim", "embedding width", true},
    {"model", "heads", "--heads", "attention heads", true},
    {"model", "feature_dim", "", "", true},
    {"model", "message_dim", "", "", true},
    {"model", "split_message_nets", "", "", true},
    {"model", "shared_memory_cell", "", "", true},
    {"model", "signed_edge_input", "", "", true},
    {"model", "history_cap", "", "", true},
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("setting '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("setting '" + key + "': expected true or false, got '" + text + "'");
}

// Shortest text that reads back to the same double.
std::string format(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void apply(RunSettings& s, const std::string& key, const std::string& v) {
  auto& t = s.train;
  auto& e = t.encoder;
  if (key == "dataset") s.dataset = v;
  else if (key == "signed_binary") s.signed_binary = parse_bool(key, v);
  else if (key == "task") t.task = model::parse_task(v);
  else if (key == "batch_size") t.batch_size = parse_number<std::size_t>(key, v);
  else if (key == "lr") t.learning_rate = parse_number<double>(key, v);
  else if (key == "epochs") t.max_epochs = parse_number<int>(key, v);
  else if (key == "patience") t.patience = parse_number<int>(key, v);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "train_fraction") t.split.train = parse_number<double>(key, v);
  else if (key == "validation_fraction") t.split.validation = parse_number<double>(key, v);
  else if (key == "test_fraction") t.split.test = parse_number<double>(key, v);
  else if (key == "ablation") e.ablation = model::AblationConfig::from_name(v);
  else if (key == "memory_dim") e.memory_dim = parse_number<Eigen::Index>(key, v);
  else if (key == "embedding_dim") e.embedding_dim = parse_number<Eigen::Index>(key, v);
  else if (key == "heads") e.heads = parse_number<int>(key, v);
  else if (key == "feature_dim") e.feature_dim = parse_number<Eigen::Index>(key, v);
  else if (key == "message_dim") e.message_dim = parse_number<Eigen::Index>(key, v);
  else if (key == "split_message_nets") e.split_message_nets = parse_bool(key, v);
  else if (key == "shared_memory_cell") e.shared_memory_cell = parse_bool(key, v);
  else if (key == "signed_edge_input") e.signed_edge_input = parse_bool(key, v);
  else if (key == "history_cap") e.history_cap = parse_number<std::size_t>(key, v);
  else throw ConfigError("unknown setting '" + key + "'");
}

const Key* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : kKeys)
    if (k.key == key && (section.empty() || section == "default" || k.section == section)) return &k;
  return nullptr;
}

}  // namespace

SettingFlags::SettingFlags(CLI::App& sub, bool with_training) {
  sub.add_option("--config", config_path_, "INI file with [data], [train] and [model] sections")->check(CLI::ExistingFile);
  for (const auto& k : kKeys) {
    if (!with_training && k.training) continue;
    flags_.push_back(Flag{k.section, k.key, "", nullptr});
  }
  for (auto& f : flags_) {
    const Key* k = find_key(f.section, f.key);
    if (*k->flag == '\0') continue;
    if (f.key == "signed_binary")
      f.option = sub.add_flag(std::string(k->flag) + "{true}", f.raw, k->help);
    else
      f.option = sub.add_option(k->flag, f.raw, k->help);
  }
}

RunSettings SettingFlags::resolve(const std::vector<std::filesystem::path>& ini_files, const std::string& command) const {
  RunSettings s;
  if (command == "stats") s.train.task = model::TaskKind::sign;
  CLI::ConfigINI reader;
  for (const auto& path : ini_files) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    for (const auto& item : reader.from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      const std::string section = item.parents.empty() ? "" : item.parents.front();
      const Key* k = find_key(section, item.name);
      if (!k) throw ConfigError("unknown setting '" + (section.empty() ? "" : section + ".") + item.name + "' in " + path.string());
      if (item.inputs.size() > 1) throw ConfigError("setting '" + item.name + "' takes one value");
      apply(s, item.name, item.inputs.empty() ? std::string() : item.inputs.front());
    }
  }
  for (const auto& f : flags_)
    if (f.option && f.option->count() > 0) apply(s, f.key, f.raw);
  return s;
}

std::map<std::string, std::string> settings_map(const RunSettings& s) {
  const auto& t = s.train;
  const auto& e = t.encoder;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"data.dataset", s.dataset},
      {"data.signed_binary", b(s.signed_binary)},
      {"train.task", model::task_name(t.task)},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.lr", format(t.learning_rate)},
      {"train.epochs", std::to_string(t.max_epochs)},
      {"train.patience", std::to_string(t.patience)},
      {"train.seed", std::to_string(t.seed)},
      {"train.train_fraction", format(t.split.train)},
      {"train.validation_fraction", format(t.split.validation)},
      {"train.test_fraction", format(t.split.test)},
      {"model.ablation", e.ablation.name()},
      {"model.memory_dim", std::to_string(e.memory_dim)},
      {"model.embedding_dim", std::to_string(e.embedding_dim)},
      {"model.heads", std::to_string(e.heads)},
      {"model.feature_dim", std::to_string(e.feature_dim)},
      {"model.message_dim", std::to_string(e.message_dim)},
      {"model.split_message_nets", b(e.split_message_nets)},
      {"model.shared_memory_cell", b(e.shared_memory_cell)},
      {"model.signed_edge_input", b(e.signed_edge_input)},
      {"model.history_cap", std::to_string(e.history_cap)},
  };
}

std::string to_ini(const RunSettings& s) {
  const auto values = settings_map(s);
  std::ostringstream out;
  for (const char* section : {"data", "train", "model"}) {
    out << '[' << section << "]\n";
    for (const auto& k : kKeys)
      if (std::string(k.section) == section) out << k.key << " = " << values.at(std::string(section) + "." + k.key) << '\n';
    out << '\n';
  }
  return out.str();
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("SEMBA_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

}  // namespace semba::cli
