#pragma once

#include "fqc/commands.hpp"
#include "fqc/common.hpp"
#include "fqc/config.hpp"
#include "fqc/dataio.hpp"
#include "fqc/error.hpp"
#include "fqc/fqs.hpp"
#include "fqc/freda.hpp"
#include "fqc/freda_batch.hpp"
#include "fqc/harness.hpp"
#include "fqc/image_io.hpp"
#include "fqc/lr_schedule.hpp"
#include "fqc/pacing.hpp"
#include "fqc/session.hpp"
#include "fqc/spectrum.hpp"
