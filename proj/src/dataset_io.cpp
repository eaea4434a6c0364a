#include "ppgage/dataset_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <ostream>

#include "ppgage/error.hpp"

namespace ppgage {

void write_record(std::ostream& out, const PpgRecord& r) {
  fmt::memory_buffer buf;
  auto it = std::back_inserter(buf);
  fmt::format_to(it, R"({{"id":{},"visit":{},"age":{:.9g},"offset":{:.9g},"waveform":[)", r.subject_id, r.visit_index,
                 r.calendar_age, r.latent_vascular_offset);
  for (std::size_t i = 0; i < r.waveform.size(); ++i) fmt::format_to(it, "{}{:.9g}", i ? "," : "", r.waveform[i]);
  fmt::format_to(it, R"(],"event_time":{:.9g},"event":{},"covariates":{{)", r.event_time, r.event_flag);
  bool first = true;
  for (const auto& [name, value] : r.covariates) {
    fmt::format_to(it, R"({}"{}":{:.9g})", first ? "" : ",", name, value);
    first = false;
  }
  fmt::format_to(it, "}}}}\n");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

PpgRecord parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed dataset line: ") + e.what());
  }
  try {
    PpgRecord r;
    r.subject_id = j.at("id").get<std::uint64_t>();
    r.visit_index = j.at("visit").get<int>();
    r.calendar_age = j.at("age").get<double>();
    r.latent_vascular_offset = j.value("offset", 0.0);
    r.waveform = j.at("waveform").get<std::vector<double>>();
    r.event_time = j.at("event_time").get<double>();
    r.event_flag = j.at("event").get<int>();
    for (const auto& [name, value] : j.at("covariates").items()) r.covariates[name] = value.get<double>();
    require(r.visit_index == 0 || r.visit_index == 1, "visit must be 0 or 1");
    require(r.event_flag == 0 || r.event_flag == 1, "event must be 0 or 1");
    require(r.event_time > 0.0, "event_time must be positive");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("dataset record is missing or mistyped a field: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& path, std::span<const PpgRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  for (const PpgRecord& r : records) write_record(out, r);
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::vector<PpgRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_artifact, "cannot open dataset " + path.string());
  std::vector<PpgRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return records;
}

}  // namespace ppgage
