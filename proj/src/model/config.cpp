#include "semba/model/config.hpp"

#include <sstream>

namespace semba::model {

AblationConfig AblationConfig::from_name(const std::string& name) {
  AblationConfig c;
  if (name.empty() || name == "none" || name == "full") return c;
  std::stringstream in(name);
  std::string part;
  while (std::getline(in, part, '+')) {
    if (part == "ba")
      c.balanced_aggregation = false;
    else if (part == "emb")
      c.use_embedding_layer = false;
    else if (part == "mem")
      c.use_memory = false;
    else
      throw ConfigError("unknown ablation '" + part + "' (expected none, ba, emb or mem)");
  }
  return c;
}

std::string AblationConfig::name() const {
  std::string out;
  auto add = [&out](const char* part) {
    if (!out.empty()) out += '+';
    out += part;
  };
  if (!balanced_aggregation) add("ba");
  if (!use_embedding_layer) add("emb");
  if (!use_memory) add("mem");
  return out.empty() ? "none" : out;
}

void EncoderConfig::validate() const {
  if (memory_dim <= 0 || embedding_dim <= 0 || heads <= 0 || feature_dim < 0 || message_dim < 0)
    throw ConfigError("encoder dims must be positive");
  if (embedding_dim % heads != 0) throw ConfigError("embedding dim must be divisible by the head count");
  if (!ablation.use_memory && !ablation.use_embedding_layer)
    throw ConfigError("-mem and -emb together leave no embedding");
  if (node_dim() == 0) throw ConfigError("-mem needs a positive feature dim");
}

int EncoderConfig::slot_count() const {
  if (!ablation.use_memory) return 0;
  return ablation.balanced_aggregation ? 2 : 1;
}

Eigen::Index EncoderConfig::slot_width() const { return ablation.balanced_aggregation ? memory_dim : 2 * memory_dim; }

std::string EncoderConfig::embedding_source() const {
  if (!ablation.use_embedding_layer) return "concatenated memories";
  return ablation.use_memory ? "attention over memories" : "attention over node features";
}

}  // namespace semba::model
