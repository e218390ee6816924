#pragma once

// Conversions between in-memory models and the checkpoint container.

#include "ahl/convpipe.hpp"
#include "ahl/dataio.hpp"
#include "ahl/hebb.hpp"
#include "ahl/spkm.hpp"
#include "ahl/svm.hpp"

#include <map>
#include <string>

namespace ahl::io {

// Config fields as "key=value" text, doubles at 17 significant digits.
std::map<std::string, std::string> config_fields(const hebb::LearnerConfig& config);
hebb::LearnerConfig config_from_fields(const std::map<std::string, std::string>& fields);

// kind "ahl-learner": sections w, b, r, e, c; meta is the config echo plus samples_seen.
Checkpoint learner_checkpoint(const hebb::LearnerState& state, const hebb::LearnerConfig& config);
hebb::LearnerState learner_from_checkpoint(const Checkpoint& ckpt, hebb::LearnerConfig* config = nullptr);

// kind "spkm": sections w and, when given, b.
Checkpoint spkm_checkpoint(const spkm::SpkmModel& model, const Vector* bias = nullptr);
spkm::SpkmModel spkm_from_checkpoint(const Checkpoint& ckpt, Vector* bias = nullptr);

Checkpoint svm_checkpoint(const svm::SvmModel& model);
svm::SvmModel svm_from_checkpoint(const Checkpoint& ckpt);

Checkpoint stack_checkpoint(const conv::FeatureStack& stack);
conv::FeatureStack stack_from_checkpoint(const Checkpoint& ckpt);

// One neuron per line: "b r e w_0 … w_{d-1} c_0 … c_{k-1}", space separated,
// 17 significant digits, after a "# k d samples_seen" line. Parsing it back is exact.
std::string learner_text(const hebb::LearnerState& state);
hebb::LearnerState learner_from_text(const std::string& text);

}  // namespace ahl::io
