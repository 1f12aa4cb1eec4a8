#include "proselab/prompt_library.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "fs_util.hpp"
#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"

namespace proselab {

namespace detail {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::storage, "cannot write " + tmp.string() + ": " +
                                        std::strerror(errno));
  }
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      ::unlink(tmp.c_str());
      throw Error(ErrorCode::storage, "write failed for " + tmp.string() + ": " +
                                          std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::storage, "rename failed for " + path.string() + ": " +
                                        std::strerror(err));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::storage, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool contains_folded(std::string_view haystack, std::string_view folded_needle) {
  return lower_ascii(haystack).find(folded_needle) != std::string::npos;
}

}  // namespace

// Exclusive flock on <root>/.lock for the lifetime of the object.
class PromptLibrary::FileLock {
 public:
  explicit FileLock(const std::filesystem::path& root) {
    const auto path = root / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(ErrorCode::storage, "cannot open lock file " + path.string());
    }
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        throw Error(ErrorCode::storage, "cannot lock " + path.string());
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::optional<SortKey> parse_sort_key(std::string_view text) {
  if (text == "name") return SortKey::name;
  if (text == "recency") return SortKey::recency;
  if (text == "run_count") return SortKey::run_count;
  return std::nullopt;
}

PromptLibrary::PromptLibrary(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "prompts", ec);
  if (ec) {
    throw Error(ErrorCode::storage,
                "cannot create library at " + root_.string() + ": " + ec.message());
  }
  load();
}

std::filesystem::path PromptLibrary::prompt_path(const std::string& id) const {
  return root_ / "prompts" / (id + ".json");
}

void PromptLibrary::write_prompt(const PromptRecord& record) const {
  detail::write_file_atomic(prompt_path(record.id), dump_json(record, 2) + "\n");
}

void PromptLibrary::write_slots() const {
  Json slots = Json::array();
  for (const auto& slot : state_.favorite_slots) {
    slots.push_back(slot ? Json(*slot) : Json(nullptr));
  }
  detail::write_file_atomic(root_ / "slots.json",
                            dump_json(Json{{"slots", slots}}, 2) + "\n");
}

void PromptLibrary::load() {
  LibraryState fresh;
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "prompts")) {
    const auto& path = entry.path();
    if (!entry.is_regular_file() || path.extension() != ".json") continue;
    const auto what = "prompt file " + path.filename().string();
    auto record = json_as<PromptRecord>(parse_json_text(detail::read_file(path), what), what);
    if (record.id != path.stem().string()) {
      throw Error(ErrorCode::storage, what + " has mismatched id '" + record.id + "'");
    }
    fresh.prompts.emplace(record.id, std::move(record));
  }
  const auto slots_path = root_ / "slots.json";
  if (std::filesystem::exists(slots_path)) {
    const auto j = parse_json_text(detail::read_file(slots_path), "slots.json");
    const auto& slots = j.at("slots");
    for (std::size_t i = 0; i < kFavoriteSlotCount && i < slots.size(); ++i) {
      if (slots[i].is_string()) {
        auto id = slots[i].get<std::string>();
        if (fresh.prompts.contains(id)) fresh.favorite_slots[i] = std::move(id);
      }
    }
  }
  state_ = std::move(fresh);
}

void PromptLibrary::reload() {
  std::unique_lock lock(mutex_);
  load();
}

std::string PromptLibrary::add_prompt(PromptRecord record) {
  if (auto v = validate_prompt(record, false); !v.ok()) {
    throw ValidationError(std::move(v.violations));
  }
  record.id = derive_prompt_id(record);
  const auto now = now_utc();
  record.created_at = now;
  record.updated_at = now;

  std::unique_lock lock(mutex_);
  FileLock file_lock(root_);
  if (state_.prompts.contains(record.id) ||
      std::filesystem::exists(prompt_path(record.id))) {
    throw Error(ErrorCode::duplicate,
                "a prompt with identical content already exists (" + record.id + ")");
  }
  write_prompt(record);
  const auto id = record.id;
  state_.prompts.emplace(id, std::move(record));
  return id;
}

PromptRecord PromptLibrary::update_prompt(const std::string& id,
                                          const PromptPatch& patch) {
  std::unique_lock lock(mutex_);
  FileLock file_lock(root_);
  auto it = state_.prompts.find(id);
  if (it == state_.prompts.end()) {
    throw Error(ErrorCode::not_found, "prompt not found: " + id);
  }
  PromptRecord updated = it->second;
  // Another process may have bumped the counter since we loaded.
  if (std::filesystem::exists(prompt_path(id))) {
    const auto on_disk = json_as<PromptRecord>(
        parse_json_text(detail::read_file(prompt_path(id)), "prompt file"), "prompt file");
    updated.run_count = std::max(updated.run_count, on_disk.run_count);
  }
  if (patch.title) updated.title = *patch.title;
  if (patch.icon) updated.icon = *patch.icon;
  if (patch.template_text) updated.template_text = *patch.template_text;
  if (patch.temperature) updated.temperature = *patch.temperature;
  if (patch.parsing_rule) updated.parsing_rule = *patch.parsing_rule;
  if (patch.insertion_mode) updated.insertion_mode = *patch.insertion_mode;
  if (patch.description) updated.description = *patch.description;
  if (patch.tags) updated.tags = *patch.tags;
  if (patch.recommended_models) updated.recommended_models = *patch.recommended_models;
  if (auto v = validate_prompt(updated, false); !v.ok()) {
    throw ValidationError(std::move(v.violations));
  }
  updated.updated_at = std::max(now_utc(), it->second.updated_at);
  write_prompt(updated);
  it->second = updated;
  return updated;
}

void PromptLibrary::delete_prompt(const std::string& id) {
  std::unique_lock lock(mutex_);
  FileLock file_lock(root_);
  if (!state_.prompts.contains(id)) {
    throw Error(ErrorCode::not_found, "prompt not found: " + id);
  }
  bool slots_changed = false;
  for (auto& slot : state_.favorite_slots) {
    if (slot == id) {
      slot.reset();
      slots_changed = true;
    }
  }
  if (slots_changed) write_slots();
  std::error_code ec;
  std::filesystem::remove(prompt_path(id), ec);
  if (ec) throw Error(ErrorCode::storage, "cannot delete prompt file: " + ec.message());
  state_.prompts.erase(id);
}

std::optional<PromptRecord> PromptLibrary::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  if (auto it = state_.prompts.find(id); it != state_.prompts.end()) return it->second;
  return std::nullopt;
}

PromptRecord PromptLibrary::get(const std::string& id) const {
  if (auto r = find(id)) return *r;
  throw Error(ErrorCode::not_found, "prompt not found: " + id);
}

bool PromptLibrary::contains(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return state_.prompts.contains(id);
}

std::vector<PromptRecord> PromptLibrary::search_prompts(std::string_view query) const {
  const auto needle = lower_ascii(query);
  std::shared_lock lock(mutex_);
  std::vector<PromptRecord> out;
  for (const auto& [id, record] : state_.prompts) {
    if (needle.empty() || contains_folded(record.title, needle) ||
        (record.description && contains_folded(*record.description, needle)) ||
        contains_folded(record.template_text, needle)) {
      out.push_back(record);
    }
  }
  return out;
}

std::vector<PromptRecord> PromptLibrary::sort_prompts(SortKey key) const {
  std::vector<PromptRecord> out;
  {
    std::shared_lock lock(mutex_);
    out.reserve(state_.prompts.size());
    for (const auto& [id, record] : state_.prompts) out.push_back(record);
  }
  // `out` is already id-ascending (std::map order); stable sort keeps that
  // as the tie-break.
  switch (key) {
    case SortKey::name:
      std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return lower_ascii(a.title) < lower_ascii(b.title);
      });
      break;
    case SortKey::recency:
      std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.updated_at > b.updated_at;
      });
      break;
    case SortKey::run_count:
      std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.run_count > b.run_count;
      });
      break;
  }
  return out;
}

FavoriteSlots PromptLibrary::set_favorite_slot(std::size_t slot, const std::string& id) {
  if (slot >= kFavoriteSlotCount) {
    throw Error(ErrorCode::invalid_slot,
                "slot must be 0.." + std::to_string(kFavoriteSlotCount - 1));
  }
  std::unique_lock lock(mutex_);
  FileLock file_lock(root_);
  if (!state_.prompts.contains(id)) {
    throw Error(ErrorCode::not_found, "prompt not found: " + id);
  }
  for (auto& s : state_.favorite_slots) {
    if (s == id) s.reset();
  }
  state_.favorite_slots[slot] = id;
  write_slots();
  return state_.favorite_slots;
}

FavoriteSlots PromptLibrary::clear_favorite_slot(std::size_t slot) {
  if (slot >= kFavoriteSlotCount) {
    throw Error(ErrorCode::invalid_slot,
                "slot must be 0.." + std::to_string(kFavoriteSlotCount - 1));
  }
  std::unique_lock lock(mutex_);
  FileLock file_lock(root_);
  state_.favorite_slots[slot].reset();
  write_slots();
  return state_.favorite_slots;
}

FavoriteSlots PromptLibrary::favorite_slots() const {
  std::shared_lock lock(mutex_);
  return state_.favorite_slots;
}

std::int64_t PromptLibrary::record_run(const std::string& id) {
  PromptRecord snapshot;
  RunListener listener;
  {
    std::unique_lock lock(mutex_);
    FileLock file_lock(root_);
    auto it = state_.prompts.find(id);
    if (it == state_.prompts.end()) {
      throw Error(ErrorCode::not_found, "prompt not found: " + id);
    }
    auto& record = it->second;
    const auto path = prompt_path(id);
    if (std::filesystem::exists(path)) {
      const auto on_disk = json_as<PromptRecord>(
          parse_json_text(detail::read_file(path), "prompt file"), "prompt file");
      record.run_count = std::max(record.run_count, on_disk.run_count);
    }
    ++record.run_count;
    write_prompt(record);
    snapshot = record;
    listener = run_listener_;
  }
  if (listener) listener(snapshot);
  return snapshot.run_count;
}

void PromptLibrary::set_run_listener(RunListener listener) {
  std::unique_lock lock(mutex_);
  run_listener_ = std::move(listener);
}

std::optional<std::string> PromptLibrary::resolve_ref(std::string_view ref) const {
  std::shared_lock lock(mutex_);
  if (ref.starts_with("slot:")) {
    const auto digits = ref.substr(5);
    if (digits.size() != 1 || digits[0] < '0' ||
        digits[0] >= static_cast<char>('0' + kFavoriteSlotCount)) {
      return std::nullopt;
    }
    return state_.favorite_slots[static_cast<std::size_t>(digits[0] - '0')];
  }
  if (ref.empty()) return std::nullopt;
  const std::string key(ref);
  if (state_.prompts.contains(key)) return key;
  std::optional<std::string> match;
  for (auto it = state_.prompts.lower_bound(key);
       it != state_.prompts.end() && it->first.starts_with(key); ++it) {
    if (match) return std::nullopt;  // ambiguous
    match = it->first;
  }
  return match;
}

LibraryState PromptLibrary::state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

}  // namespace proselab
