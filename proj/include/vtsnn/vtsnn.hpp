#pragma once

#include "vtsnn/annotate.hpp"
#include "vtsnn/config.hpp"
#include "vtsnn/data.hpp"
#include "vtsnn/error.hpp"
#include "vtsnn/eval.hpp"
#include "vtsnn/event.hpp"
#include "vtsnn/event_io.hpp"
#include "vtsnn/loss.hpp"
#include "vtsnn/matrix.hpp"
#include "vtsnn/models.hpp"
#include "vtsnn/network.hpp"
#include "vtsnn/predict.hpp"
#include "vtsnn/srm.hpp"
#include "vtsnn/training.hpp"

namespace vtsnn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vtsnn
