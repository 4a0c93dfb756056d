#include "telsm/options.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace telsm {

namespace {

std::string Trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

Status ParseInt(const std::string& s, int* out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    return Status::InvalidArgument("not an integer: " + s);
  }
  return Status::OK();
}

Status ParseBool(const std::string& s, bool* out) {
  if (s == "true" || s == "1" || s == "yes") {
    *out = true;
  } else if (s == "false" || s == "0" || s == "no") {
    *out = false;
  } else {
    return Status::InvalidArgument("not a boolean: " + s);
  }
  return Status::OK();
}

}  // namespace

Status ParseByteSize(const std::string& s, uint64_t* out) {
  if (s.empty()) return Status::InvalidArgument("empty size");
  uint64_t mult = 1;
  std::string digits = s;
  char last = s.back();
  if (last == 'K' || last == 'k') {
    mult = 1ull << 10;
  } else if (last == 'M' || last == 'm') {
    mult = 1ull << 20;
  } else if (last == 'G' || last == 'g') {
    mult = 1ull << 30;
  }
  if (mult != 1) digits.pop_back();
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size()) {
    return Status::InvalidArgument("not a size: " + s);
  }
  *out = v * mult;
  return Status::OK();
}

Status EngineConfig::Validate() const {
  if (size_factor < 2) return Status::InvalidArgument("size_factor must be >= 2");
  if (level0_file_num_compaction_trigger < 2) {
    return Status::InvalidArgument("level0_file_num_compaction_trigger must be >= 2");
  }
  if (block_size < 512) return Status::InvalidArgument("block_size must be >= 512");
  if (write_buffer_size < (4ull << 10)) {
    return Status::InvalidArgument("write_buffer_size must be >= 4 KiB");
  }
  if (max_levels < 2 || max_levels > 64) {
    return Status::InvalidArgument("max_levels must be in [2, 64]");
  }
  if (bloom_bits_per_key < 0) return Status::InvalidArgument("bloom_bits_per_key < 0");
  if (background_compaction_workers < 1) {
    return Status::InvalidArgument("background_compaction_workers must be >= 1");
  }
  if (max_write_buffer_number < 2) {
    return Status::InvalidArgument("max_write_buffer_number must be >= 2");
  }
  if (level0_stop_writes_trigger < level0_file_num_compaction_trigger) {
    return Status::InvalidArgument("level0_stop_writes_trigger below compaction trigger");
  }
  return Status::OK();
}

Status EngineConfig::ApplyKeyValues(std::map<std::string, std::string>* kv) {
  auto take = [&](const char* key, auto&& apply) -> Status {
    auto it = kv->find(key);
    if (it == kv->end()) return Status::OK();
    Status s = apply(it->second);
    if (!s.ok()) return Status::InvalidArgument(std::string(key) + ": " + s.message());
    kv->erase(it);
    return Status::OK();
  };
  auto size = [](uint64_t* dst) {
    return [dst](const std::string& v) { return ParseByteSize(v, dst); };
  };
  auto integer = [](int* dst) {
    return [dst](const std::string& v) { return ParseInt(v, dst); };
  };
  auto boolean = [](bool* dst) {
    return [dst](const std::string& v) { return ParseBool(v, dst); };
  };

  TELSM_RETURN_NOT_OK(take("data_dir", [&](const std::string& v) {
    data_dir = v;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("write_buffer_size", size(&write_buffer_size)));
  TELSM_RETURN_NOT_OK(take("max_write_buffer_number", integer(&max_write_buffer_number)));
  TELSM_RETURN_NOT_OK(take("max_bytes_for_level_multiplier", integer(&size_factor)));
  TELSM_RETURN_NOT_OK(take("size_factor", integer(&size_factor)));
  TELSM_RETURN_NOT_OK(take("level0_file_num_compaction_trigger",
                           integer(&level0_file_num_compaction_trigger)));
  TELSM_RETURN_NOT_OK(
      take("level0_slowdown_writes_trigger", integer(&level0_slowdown_writes_trigger)));
  TELSM_RETURN_NOT_OK(take("level0_stop_writes_trigger", integer(&level0_stop_writes_trigger)));
  TELSM_RETURN_NOT_OK(take("num_levels", integer(&max_levels)));
  TELSM_RETURN_NOT_OK(take("max_bytes_for_level_base", size(&max_bytes_for_level_base)));
  TELSM_RETURN_NOT_OK(take("target_file_size_base", size(&target_file_size_base)));
  TELSM_RETURN_NOT_OK(take("block_size", [&](const std::string& v) {
    uint64_t b;
    TELSM_RETURN_NOT_OK(ParseByteSize(v, &b));
    block_size = static_cast<uint32_t>(b);
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("bloom_bits_per_key", integer(&bloom_bits_per_key)));
  TELSM_RETURN_NOT_OK(take("block_cache_size", size(&block_cache_bytes)));
  TELSM_RETURN_NOT_OK(take("max_background_compactions", integer(&background_compaction_workers)));
  TELSM_RETURN_NOT_OK(take("max_subcompactions", integer(&max_subcompactions)));
  TELSM_RETURN_NOT_OK(take("sync_files", boolean(&sync_files)));
  TELSM_RETURN_NOT_OK(take("sync_wal", boolean(&sync_wal)));
  TELSM_RETURN_NOT_OK(take("use_direct_reads", boolean(&use_direct_reads)));
  TELSM_RETURN_NOT_OK(take("create_if_missing", boolean(&create_if_missing)));
  return Validate();
}

Status ParseConfigText(const std::string& text, std::map<std::string, std::string>* kv) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = Trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      return Status::InvalidArgument("config line " + std::to_string(lineno) +
                                     ": expected key = value");
    }
    std::string key = Trim(std::string_view(t).substr(0, eq));
    std::string value = Trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      return Status::InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    }
    auto [it, inserted] = kv->emplace(key, value);
    if (!inserted) it->second += "," + value;
  }
  return Status::OK();
}

Status ReadConfigFile(const std::string& path, std::map<std::string, std::string>* kv) {
  std::ifstream f(path);
  if (!f) return Status::IOError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ParseConfigText(ss.str(), kv);
}

}  // namespace telsm
