#pragma once

// Umbrella header for the library (everything except the HTTP server and CLI).

#include "fairgate/adam.hpp"
#include "fairgate/attempt_log.hpp"
#include "fairgate/classifier.hpp"
#include "fairgate/config.hpp"
#include "fairgate/corpus.hpp"
#include "fairgate/evalbench.hpp"
#include "fairgate/features.hpp"
#include "fairgate/gru.hpp"
#include "fairgate/logistic.hpp"
#include "fairgate/math.hpp"
#include "fairgate/model_io.hpp"
#include "fairgate/service.hpp"
#include "fairgate/trainer.hpp"
