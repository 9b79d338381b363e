#pragma once

#include "aeaug/augment.hpp"
#include "aeaug/autoencoder.hpp"
#include "aeaug/data.hpp"
#include "aeaug/experiment.hpp"
#include "aeaug/metrics.hpp"
#include "aeaug/occ.hpp"
