#include "semba/model/model.hpp"

namespace semba::model {

Model::Model(const EncoderConfig& config, TaskKind task_kind, std::uint64_t seed)
    : params(),
      encoder(params, config),
      decoder(params, "decoder", config.output_dim(), task_kind),
      task(task_kind) {
  params.initialize_uniform(seed);
}

}  // namespace semba::model
