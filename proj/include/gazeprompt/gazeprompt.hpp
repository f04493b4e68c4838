#pragma once

#include "gazeprompt/errors.hpp"
#include "gazeprompt/gaze_io.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/metrics.hpp"
#include "gazeprompt/prompt.hpp"
#include "gazeprompt/codemap.hpp"
#include "gazeprompt/synth.hpp"
#include "gazeprompt/llm_client.hpp"
#include "gazeprompt/http_backend.hpp"
#include "gazeprompt/json_codec.hpp"
#include "gazeprompt/session.hpp"
#include "gazeprompt/config.hpp"
#include "gazeprompt/service.hpp"
