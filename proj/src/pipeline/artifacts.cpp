#include "ppgage/pipeline/artifacts.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ppgage/error.hpp"

namespace ppgage::pipeline {

namespace fs = std::filesystem;

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  row(std::move(header));
  rows_ = 0;
}

void CsvWriter::row(std::vector<std::string> cells) {
  require(cells.size() == columns_, "csv row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  ++rows_;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidInput(fmt::format("csv column '{}' not found", name));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_artifact, "missing artifact " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": empty csv");
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw InvalidInput(fmt::format("{}:{}: expected {} cells, got {}", path.string(), lineno, t.header.size(),
                                     cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_text(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_artifact, "missing artifact " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::train: return "train";
    case Role::selection: return "selection";
    case Role::holdout: return "holdout";
    case Role::serial: return "serial";
  }
  return "?";
}

Role parse_role(std::string_view text) {
  if (text == "train") return Role::train;
  if (text == "selection") return Role::selection;
  if (text == "holdout") return Role::holdout;
  if (text == "serial") return Role::serial;
  throw InvalidInput(fmt::format("unknown role '{}'", text));
}

RunManifest RunManifest::load_or_empty(const fs::path& dir) {
  RunManifest m;
  const fs::path path = dir / artifact::manifest;
  if (!fs::exists(path)) return m;
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::vector<std::string>>>();
    m.wall_seconds = j.at("wall_seconds").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": corrupt manifest: " + e.what());
  }
  return m;
}

void RunManifest::save(const fs::path& dir) const {
  const nlohmann::json j{{"tool_version", tool_version},
                         {"config_hash", config_hash},
                         {"artifacts", artifacts},
                         {"wall_seconds", wall_seconds}};
  write_text(dir / artifact::manifest, j.dump(2) + "\n");
}

}  // namespace ppgage::pipeline
