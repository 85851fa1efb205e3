#pragma once

#include <string>

#include "hobson/digest.hpp"

namespace hobson {

template <typename T>
std::string write_jsonl(const std::filesystem::path& path,
                        const std::vector<T>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += nlohmann::json(row).dump();
    content += '\n';
  }
  return write_file(path, content);
}

}  // namespace hobson
