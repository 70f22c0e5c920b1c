#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semba::model {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AblationConfig {
  bool balanced_aggregation = true;  // false: -BA
  bool use_embedding_layer = true;   // false: -emb
  bool use_memory = true;            // false: -mem

  // "none", "ba", "emb", "mem", or a '+'-joined combination such as "ba+emb".
  static AblationConfig from_name(const std::string& name);
  std::string name() const;
  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

struct EncoderConfig {
  Eigen::Index memory_dim = 32;     // per polarity; the joint memory is twice this
  Eigen::Index message_dim = 0;     // 0: same as the memory slot width
  Eigen::Index embedding_dim = 64;
  int heads = 8;
  Eigen::Index feature_dim = 8;     // zero features unless set_features() is called
  bool split_message_nets = false;  // separate nets for the source and destination roles
  bool shared_memory_cell = false;  // one recurrent cell for both polarities
  std::size_t history_cap = 0;      // 0: attend over the full history
  // Feed the signed weight instead of |e| into message and attention inputs.
  // Off, the sign reaches a node only through routing, and -BA is sign-blind.
  bool signed_edge_input = false;
  AblationConfig ablation;

  void validate() const;

  // Memory slots per node: 2 (plus, minus), 1 under -BA, 0 under -mem.
  int slot_count() const;
  // Width of one slot's hidden state; -BA keeps one slot of the joint width.
  Eigen::Index slot_width() const;
  Eigen::Index joint_memory_dim() const { return slot_count() * slot_width(); }
  Eigen::Index effective_message_dim() const { return message_dim > 0 ? message_dim : slot_width(); }
  // Row width of h_x = memory (+) features.
  Eigen::Index node_dim() const { return joint_memory_dim() + feature_dim; }
  Eigen::Index output_dim() const { return ablation.use_embedding_layer ? embedding_dim : joint_memory_dim(); }
  std::string embedding_source() const;
};

}  // namespace semba::model
