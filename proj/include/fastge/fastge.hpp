#pragma once

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/operators.hpp"
#include "fastge/merge.hpp"
#include "fastge/eigensolver.hpp"
#include "fastge/embedding.hpp"
#include "fastge/metrics.hpp"
#include "fastge/partition.hpp"
#include "fastge/generators.hpp"
#include "fastge/io.hpp"
#include "fastge/pipeline.hpp"
