#pragma once

#include <string>

#include "zevi/data.hpp"
#include "zevi/trainer.hpp"

namespace zevi {

// Key-value config files: one `key = value` per line, '#' comments, blank
// lines ignored. Unknown keys are rejected. Keys mirror the field names:
//   train:    alpha, learning_rate, batch_size, epochs, mu_init, seed
//   generate: dim, speakers, utts_per_speaker, attr_offset, speaker_spread,
//             residual_noise, warp, seed
TrainConfig read_train_config(const std::string& path);
SynthConfig read_synth_config(const std::string& path);

}  // namespace zevi
