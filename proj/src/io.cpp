// Copyright 2026 The qmupl Authors
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

#include "qmupl/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qmupl/error.hpp"

namespace qmupl {

namespace {

using nlohmann::json;

void read_number(const json& j, const std::string& where, double& dst,
                 std::vector<std::string>& problems) {
  if (!j.is_number()) {
    problems.push_back(where + ": expected a number");
    return;
  }
  dst = j.get<double>();
}

}  // namespace

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::Config, "configuration must be a JSON object");

  std::vector<std::string> problems;
  Config cfg;
  if (auto it = root.find("preset"); it != root.end()) {
    if (*it == "reference") {
      cfg.physical = PhysicalParams::reference();
    } else if (*it == "desk") {
      cfg.physical = PhysicalParams::desk();
    } else {
      problems.push_back("preset: expected \"reference\" or \"desk\"");
    }
  }
  for (const auto& [key, value] : root.items()) {
    if (key == "preset") continue;
    if (key == "physical") {
      if (!value.is_object()) {
        problems.push_back("physical: expected an object");
        continue;
      }
      for (const auto& [name, v] : value.items()) {
        bool known = false;
        for (auto f : kPhysicalFieldNames) known = known || f == name;
        if (!known) {
          problems.push_back("physical." + name + ": unknown field");
          continue;
        }
        read_number(v, "physical." + name, field(cfg.physical, name), problems);
      }
    } else if (key == "thresholds") {
      if (!value.is_object()) {
        problems.push_back("thresholds: expected an object");
        continue;
      }
      for (const auto& [name, v] : value.items()) {
        double* dst = name == "a"            ? &cfg.thresholds.a
                      : name == "b"          ? &cfg.thresholds.b
                      : name == "multiplier" ? &cfg.thresholds.multiplier
                                             : nullptr;
        if (dst == nullptr) {
          problems.push_back("thresholds." + name + ": unknown field");
          continue;
        }
        read_number(v, "thresholds." + name, *dst, problems);
      }
    } else {
      problems.push_back(key + ": unknown section");
    }
  }
  // Domain checks run even after structural problems so one pass reports everything.
  try {
    cfg.physical.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    cfg.thresholds.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorCode::Config, msg);
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const Config& cfg) {
  nlohmann::ordered_json j;
  for (auto name : kPhysicalFieldNames) {
    j["physical"][std::string(name)] = field(cfg.physical, name);
  }
  j["thresholds"]["a"] = cfg.thresholds.a;
  j["thresholds"]["b"] = cfg.thresholds.b;
  j["thresholds"]["multiplier"] = cfg.thresholds.multiplier;
  return j.dump(2);
}

std::vector<Column> trajectory_columns(bool kinematics, bool dimensionless) {
  std::vector<Column> cols = {{"t", "s"},          {"xbar", "m"},        {"kbar", "1/m"},
                              {"gamma", "1"},      {"theta", "rad"},     {"re_alpha", "1/m^2"},
                              {"im_alpha", "1/m^2"}};
  if (kinematics) {
    cols.insert(cols.end(), {{"Gamma", "1"},
                             {"Xtilde", "m"},
                             {"Ktilde", "1/m"},
                             {"x_plus", "m"},
                             {"x_minus", "m"}});
  }
  if (dimensionless) {
    for (auto& c : cols) {
      if (c.unit != "1" && c.unit != "rad") c.unit = "reduced";
    }
  }
  return cols;
}

DelimitedWriter::DelimitedWriter(const std::string& path, std::vector<Column> columns)
    : path_(path), width_(columns.size()) {
  file_ = std::fopen(path.c_str(), "w");
  if (file_ == nullptr) fail(ErrorCode::Io, "cannot open output file " + path);
  std::string header;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) header += ',';
    header += columns[i].name + '[' + columns[i].unit + ']';
  }
  header += '\n';
  if (std::fputs(header.c_str(), file_) < 0) fail(ErrorCode::Io, "write failed for " + path);
}

DelimitedWriter::~DelimitedWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void DelimitedWriter::comment(const std::string& text) {
  if (std::fprintf(file_, "# %s\n", text.c_str()) < 0) {
    fail(ErrorCode::Io, "write failed for " + path_);
  }
}

void DelimitedWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) fail(ErrorCode::Io, "row width does not match header in " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::fprintf(file_, i == 0 ? "%.17g" : ",%.17g", values[i]) < 0) {
      fail(ErrorCode::Io, "write failed for " + path_);
    }
  }
  if (std::fputc('\n', file_) == EOF) fail(ErrorCode::Io, "write failed for " + path_);
}

void DelimitedWriter::mark_partial(const std::string& reason) {
  if (file_ != nullptr) std::fprintf(file_, "# PARTIAL OUTPUT: %s\n", reason.c_str());
}

void DelimitedWriter::close() {
  if (file_ == nullptr) return;
  const bool bad = std::ferror(file_) != 0;
  const bool closed = std::fclose(file_) == 0;
  file_ = nullptr;
  if (bad || !closed) fail(ErrorCode::Io, "write failed for " + path_);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open output file " + path);
  out << text;
  out.close();
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

}  // namespace qmupl
