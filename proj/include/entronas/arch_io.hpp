// Copyright 2026 The entronas Authors.
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

#pragma once

// Architecture files.
//
//   {
//     "format_version": 1,
//     "blocks": [
//       {"block": "Conv", "kernel": 3, "in": 3, "out": 64, "stride": 2,
//        "bottleneck": 0, "layers": 1},
//       {"block": "MobileBlock", ..., "expansion": 6},
//       ...
//     ]
//   }
//
// Each block entry carries the table columns block/kernel/in/out/stride/
// bottleneck/layers; "expansion" is required for MobileBlock and forbidden
// otherwise. The export flavour adds a derived "level" (C1..C5) per block,
// which parse() accepts and ignores.

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "entronas/arch.hpp"

namespace entronas {

inline constexpr int kArchFormatVersion = 1;

/// Malformed architecture document. `location()` is a byte offset for syntax
/// errors or a JSON pointer (e.g. "/blocks/2/kernel") for schema errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string location, const std::string& what)
      : std::runtime_error(location.empty() ? what : location + ": " + what),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json block_to_json(const BlockSpec& b) {
  ordered_json j;
  j["block"] = std::string(to_string(b.type));
  j["kernel"] = b.kernel;
  j["in"] = b.in_channels;
  j["out"] = b.out_channels;
  j["stride"] = b.stride;
  j["bottleneck"] = b.bottleneck_channels;
  j["layers"] = b.num_layers;
  if (b.type == BlockType::MobileBlock) {
    j["expansion"] = b.expansion;
  }
  return j;
}

inline int require_int(const nlohmann::json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(path, std::string("missing field \"") + key + "\"");
  }
  if (!it->is_number_integer()) {
    throw ParseError(path + "/" + key, "expected integer");
  }
  const auto value = it->get<std::int64_t>();
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    throw ParseError(path + "/" + key, "integer out of range");
  }
  return static_cast<int>(value);
}

inline BlockSpec block_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ParseError(path, "block entry must be an object");
  }
  static constexpr std::string_view kKnown[] = {"block",  "kernel",     "in",     "out",
                                                "stride", "bottleneck", "layers", "expansion",
                                                "level"};
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto key : kKnown) {
      known = known || key == item.key();
    }
    if (!known) {
      throw ParseError(path + "/" + item.key(), "unknown field");
    }
  }
  auto type_it = j.find("block");
  if (type_it == j.end()) {
    throw ParseError(path, "missing field \"block\"");
  }
  if (!type_it->is_string()) {
    throw ParseError(path + "/block", "expected string");
  }
  auto type = block_type_from_string(type_it->get<std::string>());
  if (!type) {
    throw ParseError(path + "/block", "unknown block type \"" + type_it->get<std::string>() + "\"");
  }
  BlockSpec b;
  b.type = *type;
  b.kernel = require_int(j, "kernel", path);
  b.in_channels = require_int(j, "in", path);
  b.out_channels = require_int(j, "out", path);
  b.stride = require_int(j, "stride", path);
  b.bottleneck_channels = require_int(j, "bottleneck", path);
  b.num_layers = require_int(j, "layers", path);
  if (b.type == BlockType::MobileBlock) {
    b.expansion = require_int(j, "expansion", path);
  } else if (j.contains("expansion")) {
    throw ParseError(path + "/expansion", "only allowed on MobileBlock");
  }
  return b;
}

}  // namespace detail

/// Canonical text form. parse(serialize(a)) == a for every architecture.
inline std::string serialize(const ArchitectureSpec& arch) {
  detail::ordered_json doc;
  doc["format_version"] = kArchFormatVersion;
  doc["blocks"] = detail::ordered_json::array();
  for (const auto& block : arch.blocks) {
    doc["blocks"].push_back(detail::block_to_json(block));
  }
  return doc.dump(2) + "\n";
}

/// Export flavour consumed by downstream model builders: canonical form plus
/// the derived stage level of every block.
inline std::string export_json(const ArchitectureSpec& arch) {
  detail::ordered_json doc;
  doc["format_version"] = kArchFormatVersion;
  doc["blocks"] = detail::ordered_json::array();
  const auto stages = stage_of_blocks(arch);
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    auto entry = detail::block_to_json(arch.blocks[i]);
    entry["level"] = "C" + std::to_string(stages[i]);
    doc["blocks"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

inline ArchitectureSpec parse(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "syntax error: " + std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw ParseError("/", "document must be an object");
  }
  auto version = doc.find("format_version");
  if (version == doc.end()) {
    throw ParseError("/", "missing field \"format_version\"");
  }
  if (!version->is_number_integer() || version->get<int>() != kArchFormatVersion) {
    throw ParseError("/format_version",
                     "unsupported format version (expected " + std::to_string(kArchFormatVersion) + ")");
  }
  auto blocks = doc.find("blocks");
  if (blocks == doc.end()) {
    throw ParseError("/", "missing field \"blocks\"");
  }
  if (!blocks->is_array()) {
    throw ParseError("/blocks", "expected array");
  }
  ArchitectureSpec arch;
  arch.blocks.reserve(blocks->size());
  for (std::size_t i = 0; i < blocks->size(); ++i) {
    arch.blocks.push_back(detail::block_from_json((*blocks)[i], "/blocks/" + std::to_string(i)));
  }
  return arch;
}

/// Unreadable or unwritable file.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ArchitectureSpec load_architecture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FileError("cannot open architecture file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

inline void save_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FileError("cannot write " + path.string());
  }
  out << text;
}

}  // namespace entronas
