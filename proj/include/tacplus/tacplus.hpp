#ifndef TACPLUS_TACPLUS_HPP
#define TACPLUS_TACPLUS_HPP

#include "tacplus/amr_model.hpp"
#include "tacplus/codec.hpp"
#include "tacplus/common.hpp"
#include "tacplus/datagen.hpp"
#include "tacplus/metrics.hpp"
#include "tacplus/partition.hpp"
#include "tacplus/pipeline.hpp"

#endif  // TACPLUS_TACPLUS_HPP
