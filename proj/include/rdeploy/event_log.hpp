// Copyright 2026 The rdeploy Authors
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

#ifndef RDEPLOY_EVENT_LOG_HPP_
#define RDEPLOY_EVENT_LOG_HPP_

#include <fstream>
#include <string>
#include <vector>

#include "rdeploy/json_io.hpp"

namespace rdeploy {

/// Append-only run log. Every record is one JSON object {t, seq, kind, ...};
/// seq is the record's position in the log.
class EventLog {
 public:
  const Json& append(SimTime t, const std::string& kind, const Json& fields = Json::object()) {
    Json rec;
    rec["t"] = t;
    rec["seq"] = records_.size();
    rec["kind"] = kind;
    for (const auto& [k, v] : fields.items()) rec[k] = v;
    records_.push_back(std::move(rec));
    return records_.back();
  }

  const std::vector<Json>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::vector<Json> of_kind(const std::string& kind) const {
    std::vector<Json> out;
    for (const auto& r : records_) {
      if (r["kind"] == kind) out.push_back(r);
    }
    return out;
  }

  std::size_t count(const std::string& kind) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += r["kind"] == kind;
    return n;
  }

  /// JSON-lines rendering, one record per line.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.dump();
      out += '\n';
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << to_jsonl();
  }

 private:
  std::vector<Json> records_;
};

}  // namespace rdeploy

#endif  // RDEPLOY_EVENT_LOG_HPP_
