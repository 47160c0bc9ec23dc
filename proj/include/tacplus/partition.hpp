#ifndef TACPLUS_PARTITION_HPP
#define TACPLUS_PARTITION_HPP

#include "tacplus/partition/akdtree.hpp"
#include "tacplus/partition/gsp.hpp"
#include "tacplus/partition/opst.hpp"
#include "tacplus/partition/plan.hpp"

#endif  // TACPLUS_PARTITION_HPP
