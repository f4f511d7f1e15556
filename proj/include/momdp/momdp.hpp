#pragma once

#include "momdp/errors.hpp"
#include "momdp/model.hpp"
#include "momdp/support.hpp"
#include "momdp/exact.hpp"
#include "momdp/oracle.hpp"
#include "momdp/point_based.hpp"
#include "momdp/policy.hpp"
#include "momdp/gridworld.hpp"
#include "momdp/simulator.hpp"
#include "momdp/io.hpp"
