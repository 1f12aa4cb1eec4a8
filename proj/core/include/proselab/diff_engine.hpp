#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proselab/core_model.hpp"

namespace proselab {

enum class SegmentKind { equal, insert, remove };

std::string_view to_string(SegmentKind kind) noexcept;  // "equal" | "insert" | "delete"
std::optional<SegmentKind> parse_segment_kind(std::string_view text);

struct DiffSegment {
  SegmentKind kind = SegmentKind::equal;
  std::string text;

  bool operator==(const DiffSegment&) const = default;
};

enum class ChangeKind { insertion, deletion, replacement };

std::string_view to_string(ChangeKind kind) noexcept;
std::optional<ChangeKind> parse_change_kind(std::string_view text);

// Offsets count Unicode scalar values, not bytes.
struct ChangeSpan {
  std::size_t index = 0;
  ChangeKind kind = ChangeKind::replacement;
  std::string original_text;
  std::string revised_text;
  std::size_t original_offset = 0;
  std::size_t revised_offset = 0;

  bool operator==(const ChangeSpan&) const = default;
};

enum class Decision { accept, reject };

std::string_view to_string(Decision d) noexcept;
std::optional<Decision> parse_decision(std::string_view text);

using DecisionSet = std::map<std::size_t, Decision>;

DecisionSet uniform_decisions(std::span<const ChangeSpan> spans, Decision d);

// Minimal character-level edit script (Myers). Within every run of changes
// the deletions come before the insertions, and adjacent segments of the
// same kind are merged, so the output is canonical.
std::vector<DiffSegment> compute_diff(std::string_view original,
                                      std::string_view revised);

// Number of inserted plus deleted scalar values.
std::size_t edit_cost(std::span<const DiffSegment> segments);

std::vector<ChangeSpan> coalesce_spans(std::span<const DiffSegment> segments);

// Throws Error(missing_decision) if a span has no decision, and
// Error(invalid_span) if the spans do not describe `original`.
std::string apply_decisions(std::string_view original,
                            std::span<const ChangeSpan> spans,
                            const DecisionSet& decisions);

std::vector<ChangeSpan> diff_for_insertion_mode(std::string_view input,
                                                std::string_view parsed_output,
                                                InsertionMode mode);

}  // namespace proselab
