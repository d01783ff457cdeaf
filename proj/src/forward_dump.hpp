#pragma once

/// Reference-run dump for inspection: the reference field (CSV + binary),
/// the clean observation table and a handful of state snapshots.

#include "scenario.hpp"

#include <cstdint>
#include <string>

namespace ekb {

void dump_forward(const ScenarioSpec& spec, std::uint64_t truth_seed,
                  const std::string& out_dir);

} // namespace ekb
