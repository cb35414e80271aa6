#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdet/error.hpp"

namespace advdet {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  }
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kMissingFile, "cannot write " + path);
  }
  return out;
}

inline nlohmann::json parse_json_line(const std::string& line,
                                      const std::string& path,
                                      std::size_t line_no) {
  nlohmann::json value = nlohmann::json::parse(line, nullptr, false);
  if (value.is_discarded() || !value.is_object()) {
    throw Error(ErrorCode::kSchema, path + ":" + std::to_string(line_no) +
                                        ": malformed JSONL record");
  }
  return value;
}

// Reads every line of a JSONL file as an object. Lines whose only key is
// "meta" carry run provenance and are skipped when `skip_meta` is set.
inline std::vector<nlohmann::json> read_jsonl(const std::string& path,
                                              bool skip_meta = true) {
  std::ifstream in = open_input(path);
  std::vector<nlohmann::json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    nlohmann::json value = parse_json_line(line, path, line_no);
    if (skip_meta && value.size() == 1 && value.contains("meta")) continue;
    records.push_back(std::move(value));
  }
  return records;
}

}  // namespace advdet
