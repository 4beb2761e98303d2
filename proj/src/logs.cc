// Copyright 2026 The humsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "humsim/logs.h"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/world.h"

namespace humsim {
namespace {

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string FormatDouble(double value) {
  if (value == 0.0) return "0";  // folds -0
  return fmt::format("{}", value);
}

std::string FormatKeyValues(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += fmt::format("{}={}\n", k, v);
  return out;
}

KeyValues ParseKeyValues(std::string_view text) {
  KeyValues kv;
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError(fmt::format("line {}: expected key=value", line_no));
    }
    kv.emplace_back(std::string(line.substr(0, eq)),
                    std::string(line.substr(eq + 1)));
  }
  return kv;
}

void WriteKeyValues(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out = OpenForWrite(path);
  out << FormatKeyValues(kv);
}

KeyValues ReadKeyValues(const std::filesystem::path& path) {
  try {
    return ParseKeyValues(ReadTextFile(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

const std::string& Lookup(const KeyValues& kv, std::string_view key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  throw ParseError(fmt::format("missing key '{}'", key));
}

int CsvTable::Column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw ParseError(fmt::format("missing column '{}'", name));
}

double CsvTable::Number(size_t row, int column) const {
  const std::string& cell = rows.at(row).at(static_cast<size_t>(column));
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    if (cell == "inf") return INFINITY;
    throw ParseError(fmt::format("row {}: '{}' is not a number", row + 1, cell));
  }
  return value;
}

CsvTable ParseCsv(std::string_view text) {
  CsvTable table;
  size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      table.header = SplitCsvLine(line);
      first = false;
      continue;
    }
    auto cells = SplitCsvLine(line);
    if (cells.size() != table.header.size()) {
      throw ParseError(fmt::format("CSV row {} has {} cells, header has {}",
                                   table.rows.size() + 1, cells.size(),
                                   table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (first) throw ParseError("CSV has no header");
  return table;
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  try {
    return ParseCsv(ReadTextFile(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

RunRecorder::RunRecorder(const std::filesystem::path& dir, const World& world) {
  std::filesystem::create_directories(dir);
  trajectory_ = OpenForWrite(dir / "trajectory.csv");
  std::string header = "sim_time";
  const RobotModel& model = world.model();
  for (int j : model.actuated_joints()) header += "," + model.joints()[j].name;
  for (int j : model.actuated_joints()) {
    header += ",qd_" + model.joints()[j].name;
  }
  for (const ObjectState& o : world.objects()) {
    for (const char* f : {"x", "y", "z", "qw", "qx", "qy", "qz"}) {
      header += fmt::format(",{}_{}", o.spec.name, f);
    }
  }
  trajectory_ << header << '\n';
  with_skin_ = world.config().flags.skin;
  if (with_skin_) {
    skin_ = OpenForWrite(dir / "skin.csv");
    skin_ << "sim_time,part,taxel_id,activation,x,y,z,nx,ny,nz\n";
  }
}

void RunRecorder::Record(const World& world) {
  const std::string t = FormatDouble(world.sim_time());
  std::string row = t;
  for (Eigen::Index i = 0; i < world.q().size(); ++i) {
    row += ',' + FormatDouble(world.q()[i]);
  }
  for (Eigen::Index i = 0; i < world.q_dot().size(); ++i) {
    row += ',' + FormatDouble(world.q_dot()[i]);
  }
  for (const ObjectState& o : world.objects()) {
    const Vec3& p = o.pose.position;
    const Quat& q = o.pose.orientation;
    row += fmt::format(",{},{},{},{},{},{},{}", FormatDouble(p.x()),
                       FormatDouble(p.y()), FormatDouble(p.z()),
                       FormatDouble(q.w()), FormatDouble(q.x()),
                       FormatDouble(q.y()), FormatDouble(q.z()));
  }
  trajectory_ << row << '\n';
  if (!with_skin_) return;
  for (const auto& [part, taxels] : world.skin().parts) {
    for (const auto& [id, r] : taxels) {
      skin_ << fmt::format(
          "{},{},{},{},{},{},{},{},{},{}\n", t, part, id, r.activation,
          FormatDouble(r.position.x()), FormatDouble(r.position.y()),
          FormatDouble(r.position.z()), FormatDouble(r.normal.x()),
          FormatDouble(r.normal.y()), FormatDouble(r.normal.z()));
    }
  }
}

void RunRecorder::Flush() {
  trajectory_.flush();
  if (with_skin_) skin_.flush();
}

SeriesWriter::SeriesWriter(const std::filesystem::path& path,
                           const std::vector<std::string>& columns)
    : out_(OpenForWrite(path)), columns_(columns.size()) {
  std::string header;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) header += ',';
    header += columns[i];
  }
  out_ << header << '\n';
}

void SeriesWriter::Row(const std::vector<double>& values) {
  if (values.size() != columns_) {
    throw PreconditionError("series row has the wrong number of values");
  }
  std::string row;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += FormatDouble(values[i]);
  }
  out_ << row << '\n';
}

}  // namespace humsim
