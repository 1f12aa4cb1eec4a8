#include "proselab/diff_engine.hpp"

#include <algorithm>

#include "proselab/errors.hpp"
#include "proselab/utf8.hpp"

namespace proselab {
namespace {

using Text = std::u32string_view;

struct Op {
  SegmentKind kind;
  std::u32string text;
};

class MyersDiff {
 public:
  std::vector<Op> run(Text a, Text b) {
    ops_.clear();
    diff(a, b);
    return std::move(ops_);
  }

 private:
  void emit(SegmentKind kind, Text text) {
    if (text.empty()) return;
    ops_.push_back({kind, std::u32string(text)});
  }

  void diff(Text a, Text b) {
    std::size_t prefix = 0;
    while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
      ++prefix;
    }
    std::size_t suffix = 0;
    while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
           a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
      ++suffix;
    }
    emit(SegmentKind::equal, a.substr(0, prefix));
    compute(a.substr(prefix, a.size() - prefix - suffix),
            b.substr(prefix, b.size() - prefix - suffix));
    emit(SegmentKind::equal, a.substr(a.size() - suffix));
  }

  void compute(Text a, Text b) {
    if (a.empty()) {
      emit(SegmentKind::insert, b);
      return;
    }
    if (b.empty()) {
      emit(SegmentKind::remove, a);
      return;
    }
    // A shorter side embedded in the longer one is already optimal.
    const bool a_longer = a.size() > b.size();
    const Text longer = a_longer ? a : b;
    const Text shorter = a_longer ? b : a;
    if (const auto at = longer.find(shorter); at != Text::npos) {
      const SegmentKind edge = a_longer ? SegmentKind::remove : SegmentKind::insert;
      emit(edge, longer.substr(0, at));
      emit(SegmentKind::equal, shorter);
      emit(edge, longer.substr(at + shorter.size()));
      return;
    }
    if (shorter.size() == 1) {
      emit(SegmentKind::remove, a);
      emit(SegmentKind::insert, b);
      return;
    }
    bisect(a, b);
  }

  // Finds the middle snake of an optimal path and recurses on both halves.
  void bisect(Text a, Text b) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    const auto m = static_cast<std::ptrdiff_t>(b.size());
    const std::ptrdiff_t max_d = (n + m + 1) / 2;
    const std::ptrdiff_t offset = max_d;
    const std::ptrdiff_t width = 2 * max_d + 2;
    std::vector<std::ptrdiff_t> forward(width, -1);
    std::vector<std::ptrdiff_t> backward(width, -1);
    forward[offset + 1] = 0;
    backward[offset + 1] = 0;
    const std::ptrdiff_t delta = n - m;
    const bool odd = (delta % 2) != 0;
    std::ptrdiff_t k1_start = 0, k1_end = 0, k2_start = 0, k2_end = 0;

    for (std::ptrdiff_t d = 0; d < max_d; ++d) {
      for (std::ptrdiff_t k1 = -d + k1_start; k1 <= d - k1_end; k1 += 2) {
        const std::ptrdiff_t i = offset + k1;
        std::ptrdiff_t x1 = (k1 == -d || (k1 != d && forward[i - 1] < forward[i + 1]))
                                ? forward[i + 1]
                                : forward[i - 1] + 1;
        std::ptrdiff_t y1 = x1 - k1;
        while (x1 < n && y1 < m && a[x1] == b[y1]) {
          ++x1;
          ++y1;
        }
        forward[i] = x1;
        if (x1 > n) {
          k1_end += 2;
        } else if (y1 > m) {
          k1_start += 2;
        } else if (odd) {
          const std::ptrdiff_t j = offset + delta - k1;
          if (j >= 0 && j < width && backward[j] != -1 && x1 >= n - backward[j]) {
            split(a, b, x1, y1);
            return;
          }
        }
      }
      for (std::ptrdiff_t k2 = -d + k2_start; k2 <= d - k2_end; k2 += 2) {
        const std::ptrdiff_t i = offset + k2;
        std::ptrdiff_t x2 = (k2 == -d || (k2 != d && backward[i - 1] < backward[i + 1]))
                                ? backward[i + 1]
                                : backward[i - 1] + 1;
        std::ptrdiff_t y2 = x2 - k2;
        while (x2 < n && y2 < m && a[n - x2 - 1] == b[m - y2 - 1]) {
          ++x2;
          ++y2;
        }
        backward[i] = x2;
        if (x2 > n) {
          k2_end += 2;
        } else if (y2 > m) {
          k2_start += 2;
        } else if (!odd) {
          const std::ptrdiff_t j = offset + delta - k2;
          if (j >= 0 && j < width && forward[j] != -1) {
            const std::ptrdiff_t x1 = forward[j];
            const std::ptrdiff_t y1 = offset + x1 - j;
            if (x1 >= n - x2) {
              split(a, b, x1, y1);
              return;
            }
          }
        }
      }
    }
    // No common subsequence at all.
    emit(SegmentKind::remove, a);
    emit(SegmentKind::insert, b);
  }

  void split(Text a, Text b, std::ptrdiff_t x, std::ptrdiff_t y) {
    const auto xs = static_cast<std::size_t>(x);
    const auto ys = static_cast<std::size_t>(y);
    diff(a.substr(0, xs), b.substr(0, ys));
    diff(a.substr(xs), b.substr(ys));
  }

  std::vector<Op> ops_;
};

// Merges neighbours and orders each change run as <deletes><inserts>.
std::vector<DiffSegment> canonicalize(std::vector<Op>& ops) {
  std::vector<DiffSegment> out;
  std::u32string removed;
  std::u32string inserted;
  const auto flush_changes = [&] {
    if (!removed.empty()) out.push_back({SegmentKind::remove, utf8::encode(removed)});
    if (!inserted.empty()) out.push_back({SegmentKind::insert, utf8::encode(inserted)});
    removed.clear();
    inserted.clear();
  };
  std::u32string equal;
  for (auto& op : ops) {
    if (op.kind == SegmentKind::equal) {
      flush_changes();
      equal += op.text;
      continue;
    }
    if (!equal.empty()) {
      out.push_back({SegmentKind::equal, utf8::encode(equal)});
      equal.clear();
    }
    (op.kind == SegmentKind::remove ? removed : inserted) += op.text;
  }
  flush_changes();
  if (!equal.empty()) out.push_back({SegmentKind::equal, utf8::encode(equal)});
  return out;
}

}  // namespace

std::string_view to_string(SegmentKind kind) noexcept {
  switch (kind) {
    case SegmentKind::equal: return "equal";
    case SegmentKind::insert: return "insert";
    case SegmentKind::remove: return "delete";
  }
  return "equal";
}

std::optional<SegmentKind> parse_segment_kind(std::string_view text) {
  if (text == "equal") return SegmentKind::equal;
  if (text == "insert") return SegmentKind::insert;
  if (text == "delete") return SegmentKind::remove;
  return std::nullopt;
}

std::string_view to_string(ChangeKind kind) noexcept {
  switch (kind) {
    case ChangeKind::insertion: return "insertion";
    case ChangeKind::deletion: return "deletion";
    case ChangeKind::replacement: return "replacement";
  }
  return "replacement";
}

std::optional<ChangeKind> parse_change_kind(std::string_view text) {
  if (text == "insertion") return ChangeKind::insertion;
  if (text == "deletion") return ChangeKind::deletion;
  if (text == "replacement") return ChangeKind::replacement;
  return std::nullopt;
}

std::string_view to_string(Decision d) noexcept {
  return d == Decision::accept ? "accept" : "reject";
}

std::optional<Decision> parse_decision(std::string_view text) {
  if (text == "accept") return Decision::accept;
  if (text == "reject") return Decision::reject;
  return std::nullopt;
}

DecisionSet uniform_decisions(std::span<const ChangeSpan> spans, Decision d) {
  DecisionSet out;
  for (const auto& span : spans) out.emplace(span.index, d);
  return out;
}

std::vector<DiffSegment> compute_diff(std::string_view original,
                                      std::string_view revised) {
  const auto a = utf8::decode(original);
  const auto b = utf8::decode(revised);
  auto ops = MyersDiff{}.run(a, b);
  return canonicalize(ops);
}

std::size_t edit_cost(std::span<const DiffSegment> segments) {
  std::size_t cost = 0;
  for (const auto& s : segments) {
    if (s.kind != SegmentKind::equal) cost += utf8::length(s.text);
  }
  return cost;
}

std::vector<ChangeSpan> coalesce_spans(std::span<const DiffSegment> segments) {
  std::vector<ChangeSpan> spans;
  std::size_t original_pos = 0;
  std::size_t revised_pos = 0;
  std::optional<ChangeSpan> open;

  const auto close = [&] {
    if (!open) return;
    const bool has_original = !open->original_text.empty();
    const bool has_revised = !open->revised_text.empty();
    open->kind = has_original && has_revised ? ChangeKind::replacement
                 : has_original               ? ChangeKind::deletion
                                              : ChangeKind::insertion;
    open->index = spans.size();
    spans.push_back(std::move(*open));
    open.reset();
  };

  for (const auto& seg : segments) {
    const std::size_t len = utf8::length(seg.text);
    if (seg.kind == SegmentKind::equal) {
      close();
      original_pos += len;
      revised_pos += len;
      continue;
    }
    if (!open) {
      open.emplace();
      open->original_offset = original_pos;
      open->revised_offset = revised_pos;
    }
    if (seg.kind == SegmentKind::remove) {
      open->original_text += seg.text;
      original_pos += len;
    } else {
      open->revised_text += seg.text;
      revised_pos += len;
    }
  }
  close();
  return spans;
}

std::string apply_decisions(std::string_view original,
                            std::span<const ChangeSpan> spans,
                            const DecisionSet& decisions) {
  for (const auto& span : spans) {
    if (!decisions.contains(span.index)) {
      throw Error(ErrorCode::missing_decision,
                  "no decision for span " + std::to_string(span.index));
    }
  }

  const auto source = utf8::decode(original);
  std::u32string out;
  out.reserve(source.size());
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    const auto removed = utf8::decode(span.original_text);
    if (span.original_offset < cursor ||
        span.original_offset + removed.size() > source.size() ||
        source.compare(span.original_offset, removed.size(), removed) != 0) {
      throw Error(ErrorCode::invalid_span,
                  "span " + std::to_string(span.index) +
                      " does not match the original text");
    }
    out.append(source, cursor, span.original_offset - cursor);
    if (decisions.at(span.index) == Decision::accept) {
      out += utf8::decode(span.revised_text);
    } else {
      out += removed;
    }
    cursor = span.original_offset + removed.size();
  }
  out.append(source, cursor, std::u32string::npos);
  return utf8::encode(out);
}

std::vector<ChangeSpan> diff_for_insertion_mode(std::string_view input,
                                                std::string_view parsed_output,
                                                InsertionMode mode) {
  if (mode == InsertionMode::replace) {
    const auto segments = compute_diff(input, parsed_output);
    return coalesce_spans(segments);
  }
  ChangeSpan span;
  span.index = 0;
  span.kind = ChangeKind::insertion;
  span.revised_text = "\n" + std::string(parsed_output);
  span.original_offset = utf8::length(input);
  span.revised_offset = span.original_offset;
  return {span};
}

}  // namespace proselab
