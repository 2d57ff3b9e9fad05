#pragma once

// Shared instance builders for the test suites.

#include "wardrop/instance.hpp"

namespace wardrop::testing {

// Two-link peak/offpeak population: demand sin(pi theta) before 0.7 and 0.3
// after, preference for the peak link weighted by theta.
inline NonatomicInstance section4_instance(bool with_utility = true) {
  UtilityDescriptor utility;
  if (with_utility) {
    utility.kind = UtilitySpec::Kind::QuadPref;
    utility.weight = ParamFn::linear(0.0, 1.0);
    utility.preferred = {ParamFn::constant(0.0), ParamFn::demand_reference(1.0)};
  }

  Segment low;
  low.lo = 0.0;
  low.hi = 0.7;
  BoxSegmentSets low_sets;
  low_sets.demand = ParamFn::sine(1.0, 1.0);
  low.sets = low_sets;
  low.utility = utility;

  Segment high;
  high.lo = 0.7;
  high.hi = 1.0;
  BoxSegmentSets high_sets;
  high_sets.demand = ParamFn::constant(0.3);
  high.sets = high_sets;
  high.utility = utility;

  return NonatomicInstance(
      {CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)}, {low, high});
}

// Single segment with constant demand and optional constant-weight preference.
inline NonatomicInstance constant_instance(double demand, double weight = 0.0) {
  Segment seg;
  seg.lo = 0.0;
  seg.hi = 1.0;
  BoxSegmentSets sets;
  sets.demand = ParamFn::constant(demand);
  seg.sets = sets;
  if (weight > 0.0) {
    seg.utility.kind = UtilitySpec::Kind::QuadPref;
    seg.utility.weight = ParamFn::constant(weight);
    seg.utility.preferred = {ParamFn::constant(0.0), ParamFn::demand_reference(1.0)};
  }
  return NonatomicInstance(
      {CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)}, {seg});
}

}  // namespace wardrop::testing
