#pragma once

#include "perfml/anomaly.hpp"
#include "perfml/dataset.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"
#include "perfml/kmeans.hpp"
#include "perfml/metrics.hpp"
#include "perfml/model.hpp"
#include "perfml/modeling.hpp"
#include "perfml/recommend.hpp"
#include "perfml/schema.hpp"
#include "perfml/synthgen.hpp"
