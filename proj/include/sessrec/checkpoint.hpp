#pragma once

#include <string>

#include "sessrec/model.hpp"

namespace sessrec {

// Binary model file: a magic tag, a JSON header describing the config and
// the tensor manifest, then the raw parameter values in manifest order.
// Loading a file saved on the same platform reproduces every value bitwise.
void save_checkpoint(Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace sessrec
