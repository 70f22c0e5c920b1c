#pragma once

#include "semba/model/encoder.hpp"
#include "semba/model/heads.hpp"

#include <cstdint>

namespace semba::model {

// Parameters, encoder and decoder of one experiment arm. Parameter
// registration order is fixed (encoder, then decoder), so equal configs give
// equal layouts and checkpoints are interchangeable.
struct Model {
  Model(const EncoderConfig& config, TaskKind task, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ParameterSet params;
  Encoder encoder;
  PairDecoder decoder;
  TaskKind task;
};

}  // namespace semba::model
