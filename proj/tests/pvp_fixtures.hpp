#pragma once

#include "pptlab/pvp.hpp"

namespace pptlab::testing {

inline TaskInstance spc_instance() { return {{{"s1", "the cat sat"}, {"s2", "it purred"}}, 2}; }
inline TaskInstance ssc_instance() { return {{{"s", "fine movie"}}, 1}; }
inline TaskInstance mcc_instance() {
  return {{{"sq", "Where did the cat go"},
           {"s1", "It went home"},
           {"s2", "Dogs bark loudly"},
           {"s3", "Rain fell all day"},
           {"s4", "The sun was out"},
           {"s5", "A bird sang"},
           {"s6", "Tea was served"}},
          0};
}

}  // namespace pptlab::testing
