#pragma once

#include "deflatecrb/bounds.hpp"
#include "deflatecrb/common.hpp"
#include "deflatecrb/config.hpp"
#include "deflatecrb/dims.hpp"
#include "deflatecrb/estimators.hpp"
#include "deflatecrb/harness.hpp"
#include "deflatecrb/model.hpp"
#include "deflatecrb/rmt.hpp"
