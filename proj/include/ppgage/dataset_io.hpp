#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppgage/synthetic_ppg.hpp"

namespace ppgage {

// One JSON object per line:
//   {"id":<u64>,"visit":<0|1>,"age":<years>,"offset":<years>,
//    "waveform":[...],"event_time":<years>,"event":<0|1>,"covariates":{name:value,...}}
// Reals are written with 9 significant digits.

void write_record(std::ostream& out, const PpgRecord& record);
PpgRecord parse_record(const std::string& line);

void write_dataset(const std::filesystem::path& path, std::span<const PpgRecord> records);
std::vector<PpgRecord> read_dataset(const std::filesystem::path& path);

}  // namespace ppgage
