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

// Run logs. A log directory holds:
//   manifest.txt    key=value run metadata (exercise, seed, ...)
//   scene.yaml      the scene config the run started from
//   trajectory.csv  sim_time, q..., qd_..., per-object x y z qw qx qy qz
//   skin.csv        sim_time, part, taxel_id, activation, x, y, z, nx, ny, nz
// plus exercise-specific series written by the exercise runners.
// Numbers use the shortest text that round-trips, so logs are byte-stable.

#ifndef HUMSIM_LOGS_H_
#define HUMSIM_LOGS_H_

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace humsim {

class World;
struct StepReport;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string FormatKeyValues(const KeyValues& kv);
KeyValues ParseKeyValues(std::string_view text);
void WriteKeyValues(const std::filesystem::path& path, const KeyValues& kv);
KeyValues ReadKeyValues(const std::filesystem::path& path);
// Value for a key; throws ParseError when missing.
const std::string& Lookup(const KeyValues& kv, std::string_view key);

std::string FormatDouble(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int Column(std::string_view name) const;  // throws ParseError
  double Number(size_t row, int column) const;
};

CsvTable ParseCsv(std::string_view text);
CsvTable ReadCsv(const std::filesystem::path& path);

// Appends one trajectory row and the activated taxels per step.
class RunRecorder {
 public:
  RunRecorder(const std::filesystem::path& dir, const World& world);

  void Record(const World& world);
  void Flush();

 private:
  std::ofstream trajectory_;
  std::ofstream skin_;
  bool with_skin_ = false;
};

// Writes a header-only CSV helper for exercise series: "name1,name2\n".
class SeriesWriter {
 public:
  SeriesWriter(const std::filesystem::path& path,
               const std::vector<std::string>& columns);
  void Row(const std::vector<double>& values);
  void Flush() { out_.flush(); }

 private:
  std::ofstream out_;
  size_t columns_ = 0;
};

}  // namespace humsim

#endif  // HUMSIM_LOGS_H_
