#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "proselab/core_model.hpp"

namespace proselab {

inline constexpr std::size_t kFavoriteSlotCount = 3;

using FavoriteSlots = std::array<std::optional<std::string>, kFavoriteSlotCount>;

struct LibraryState {
  std::map<std::string, PromptRecord> prompts;
  FavoriteSlots favorite_slots;

  bool operator==(const LibraryState&) const = default;
};

enum class SortKey { name, recency, run_count };

std::optional<SortKey> parse_sort_key(std::string_view text);

// Fields left empty are unchanged. Nullable fields use a nested optional:
// an engaged outer optional holding nullopt clears the field.
struct PromptPatch {
  std::optional<std::string> title;
  std::optional<std::string> icon;
  std::optional<std::string> template_text;
  std::optional<std::optional<double>> temperature;
  std::optional<std::optional<ParsingRule>> parsing_rule;
  std::optional<InsertionMode> insertion_mode;
  std::optional<std::optional<std::string>> description;
  std::optional<std::vector<std::string>> tags;
  std::optional<std::vector<std::string>> recommended_models;
};

// Directory-backed prompt store:
//   <root>/prompts/<id>.json   one PromptRecord per file
//   <root>/slots.json          {"slots": [id|null, id|null, id|null]}
//   <root>/.lock               advisory lock for cross-process writers
// Writes go to a temp file that is renamed into place.
class PromptLibrary {
 public:
  // Called after every successful record_run with the updated record.
  using RunListener = std::function<void(const PromptRecord&)>;

  explicit PromptLibrary(std::filesystem::path root);

  PromptLibrary(const PromptLibrary&) = delete;
  PromptLibrary& operator=(const PromptLibrary&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }

  // Stores under derive_prompt_id(record). Throws ValidationError or
  // Error(duplicate).
  std::string add_prompt(PromptRecord record);

  // The library id stays fixed even when content changes. Throws
  // Error(not_found) or ValidationError.
  PromptRecord update_prompt(const std::string& id, const PromptPatch& patch);

  // Clears any favorite slot that referenced the prompt.
  void delete_prompt(const std::string& id);

  std::optional<PromptRecord> find(const std::string& id) const;
  PromptRecord get(const std::string& id) const;
  bool contains(const std::string& id) const;

  // Case-insensitive substring match over title, description and template.
  std::vector<PromptRecord> search_prompts(std::string_view query) const;
  std::vector<PromptRecord> sort_prompts(SortKey key) const;

  // A prompt lives in at most one slot; moving it clears the old slot.
  FavoriteSlots set_favorite_slot(std::size_t slot, const std::string& id);
  FavoriteSlots clear_favorite_slot(std::size_t slot);
  FavoriteSlots favorite_slots() const;

  std::int64_t record_run(const std::string& id);
  void set_run_listener(RunListener listener);

  // Resolves "slot:N", a full id, or a unique id prefix.
  std::optional<std::string> resolve_ref(std::string_view ref) const;

  LibraryState state() const;

  // Re-reads everything from disk.
  void reload();

 private:
  class FileLock;

  std::filesystem::path prompt_path(const std::string& id) const;
  void write_prompt(const PromptRecord& record) const;
  void write_slots() const;
  void load();

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  LibraryState state_;
  RunListener run_listener_;
};

}  // namespace proselab
