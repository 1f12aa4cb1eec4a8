#include "app/commands.hpp"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "app/config.hpp"
#include "app/context.hpp"
#include "app/local_api.hpp"
#include "proselab/errors.hpp"
#include "proselab/hub_client.hpp"
#include "proselab/json_io.hpp"
#include "proselab/run_pipeline.hpp"
#include "proselab/utf8.hpp"

namespace proselab::app {
namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::validation:
    case ErrorCode::not_found:
    case ErrorCode::duplicate:
    case ErrorCode::invalid_slot:
    case ErrorCode::missing_decision:
    case ErrorCode::invalid_span:
    case ErrorCode::invalid_cursor:
    case ErrorCode::empty_input:
    case ErrorCode::config:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

void report_error(std::ostream& err, ErrorCode code, std::string_view message,
                  const std::vector<std::string>* violations = nullptr) {
  Json body = error_json(code, message);
  if (violations) body["violations"] = *violations;
  err << dump_json(Json{{"error", body}}) << "\n";
}

std::string read_stream(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot read file '" + path + "'");
  return read_stream(in);
}

std::string resolve_or_throw(const PromptLibrary& library, const std::string& ref) {
  if (auto id = library.resolve_ref(ref)) return *id;
  throw Error(ErrorCode::not_found, "prompt not found");
}

// Input text with `[-deleted-]` and `{+inserted+}` markers.
std::string marked_text(const RunResult& result) {
  const auto source = utf8::decode(result.input);
  std::string out;
  std::size_t cursor = 0;
  for (const auto& span : result.spans) {
    out += utf8::encode(std::u32string_view(source).substr(cursor, span.original_offset - cursor));
    if (!span.original_text.empty()) out += "[-" + span.original_text + "-]";
    if (!span.revised_text.empty()) out += "{+" + span.revised_text + "+}";
    cursor = span.original_offset + utf8::length(span.original_text);
  }
  if (cursor < source.size()) out += utf8::encode(std::u32string_view(source).substr(cursor));
  return out;
}

std::string describe_span(const ChangeSpan& span) {
  std::string out = "#" + std::to_string(span.index) + " " + std::string(to_string(span.kind)) + ": ";
  if (!span.original_text.empty()) out += "[-" + span.original_text + "-]";
  if (!span.revised_text.empty()) out += "{+" + span.revised_text + "+}";
  return out;
}

std::string pad(std::string s, std::size_t width) {
  const auto len = utf8::length(s);
  if (len < width) s.append(width - len, ' ');
  return s;
}

void print_prompt_table(std::ostream& out, const std::vector<PromptRecord>& prompts) {
  for (const auto& p : prompts) {
    out << p.id.substr(0, 8) << "  " << std::setw(6) << p.run_count << "  "
        << pad(p.icon, 2) << " " << p.title << "\n";
  }
}

struct CommonOptions {
  std::string root;
};

struct RunOptions {
  std::string ref;
  std::string input_path;
  std::string model;
  bool accept_all = false;
  bool json = false;
};

struct PromptFields {
  std::string file;
  std::optional<std::string> title;
  std::optional<std::string> icon;
  std::optional<std::string> template_text;
  std::optional<std::string> description;
  std::optional<double> temperature;
  std::optional<std::string> mode;
  std::optional<std::string> pattern;
  std::optional<std::string> replacement;
  std::vector<std::string> tags;
  std::vector<std::string> models;
  bool clear_rule = false;
};

void add_prompt_field_options(CLI::App* cmd, PromptFields& f) {
  cmd->add_option("--file", f.file, "JSON document with prompt fields");
  cmd->add_option("--title", f.title, "Prompt title");
  cmd->add_option("--icon", f.icon, "Emoji or short glyph");
  cmd->add_option("--template", f.template_text, "Template text; {{text}} marks the input");
  cmd->add_option("--description", f.description, "Description shown on the hub");
  cmd->add_option("--temperature", f.temperature, "Sampling temperature 0..2");
  cmd->add_option("--mode", f.mode, "Insertion mode: replace or append");
  cmd->add_option("--pattern", f.pattern, "Output parsing regex");
  cmd->add_option("--replacement", f.replacement, "Replacement template ($1..$9)");
  cmd->add_option("--tag", f.tags, "Tag (repeatable)");
  cmd->add_option("--recommended-model", f.models, "Recommended model id (repeatable)");
}

InsertionMode mode_or_throw(const std::string& text) {
  if (auto m = parse_insertion_mode(text)) return *m;
  throw Error(ErrorCode::invalid_argument, "mode must be 'replace' or 'append'");
}

PromptRecord record_from_fields(const PromptFields& f) {
  PromptRecord r;
  if (!f.file.empty()) {
    r = json_as<PromptRecord>(parse_json_text(read_text_file(f.file), f.file), f.file);
  } else if (!f.title || !f.template_text) {
    throw Error(ErrorCode::invalid_argument, "add needs --file or both --title and --template");
  }
  if (f.title) r.title = *f.title;
  if (f.icon) r.icon = *f.icon;
  if (f.template_text) r.template_text = *f.template_text;
  if (f.description) r.description = *f.description;
  if (f.temperature) r.temperature = *f.temperature;
  if (f.mode) r.insertion_mode = mode_or_throw(*f.mode);
  if (f.pattern) r.parsing_rule = ParsingRule{*f.pattern, f.replacement.value_or("$1")};
  if (!f.tags.empty()) r.tags = normalize_tags(f.tags);
  if (!f.models.empty()) r.recommended_models = f.models;
  r.id.clear();
  r.run_count = 0;
  return r;
}

PromptPatch patch_from_fields(const PromptFields& f) {
  PromptPatch p;
  if (!f.file.empty()) p = prompt_patch_from_json(parse_json_text(read_text_file(f.file), f.file));
  if (f.title) p.title = *f.title;
  if (f.icon) p.icon = *f.icon;
  if (f.template_text) p.template_text = *f.template_text;
  if (f.description) p.description = *f.description;
  if (f.temperature) p.temperature = *f.temperature;
  if (f.mode) p.insertion_mode = mode_or_throw(*f.mode);
  if (f.clear_rule) p.parsing_rule = std::optional<ParsingRule>{};
  if (f.pattern) p.parsing_rule = ParsingRule{*f.pattern, f.replacement.value_or("$1")};
  if (!f.tags.empty()) p.tags = normalize_tags(f.tags);
  if (!f.models.empty()) p.recommended_models = f.models;
  return p;
}

AppContext make_context(const CommonOptions& common) {
  const auto root = resolve_library_root(
      common.root.empty() ? std::nullopt : std::optional<std::string>(common.root));
  return AppContext(load_config(root));
}

int cmd_run(const CommonOptions& common, const RunOptions& opts, CliIo& io) {
  AppContext ctx = make_context(common);
  const auto id = resolve_or_throw(ctx.library, opts.ref);
  const auto record = ctx.library.get(id);
  const bool from_stdin = opts.input_path.empty() || opts.input_path == "-";
  const auto input = from_stdin ? read_stream(io.in) : read_text_file(opts.input_path);

  ctx.enable_run_reporting();
  RunPipeline pipeline(ctx.gateway, &ctx.library);
  const auto result = pipeline.run_prompt(record, input, ctx.config.model(opts.model));

  int status = kExitOk;
  if (opts.json) {
    Json doc = result;
    if (opts.accept_all) doc["final_text"] = accepted_text(result);
    io.out << dump_json(doc, 2) << "\n";
  } else if (opts.accept_all || result.spans.empty()) {
    io.out << accepted_text(result);
  } else if (io.stdin_is_tty && !from_stdin) {
    DecisionSet decisions;
    for (const auto& span : result.spans) {
      while (true) {
        io.err << describe_span(span) << "\n  accept? [y/n] " << std::flush;
        std::string answer;
        if (!std::getline(io.in, answer)) answer = "n";
        if (answer == "y" || answer == "Y") {
          decisions[span.index] = Decision::accept;
        } else if (answer == "n" || answer == "N") {
          decisions[span.index] = Decision::reject;
        } else {
          continue;
        }
        break;
      }
    }
    io.out << apply_decisions(result.input, result.spans, decisions);
  } else {
    io.out << marked_text(result) << "\n";
    io.err << result.spans.size()
           << " change(s) need decisions; rerun with --accept-all or from a terminal\n";
    status = kExitNeedsDecisions;
  }
  io.out.flush();
  if (ctx.reporter) ctx.reporter->flush(std::chrono::seconds(3));
  return status;
}

std::string hub_url_or_throw(const AppContext& ctx, const std::string& override_url) {
  if (!override_url.empty()) return override_url;
  if (ctx.hub_url) return *ctx.hub_url;
  throw Error(ErrorCode::config, "no hub configured (use --hub-url or PROSELAB_HUB_URL)");
}

// Blocks SIGINT/SIGTERM for every thread created afterwards and runs the
// stop callback when one arrives. Construct before starting any threads.
class SignalStopper {
 public:
  SignalStopper() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, &previous_);
    waiter_ = std::thread([this] {
      int sig = 0;
      sigwait(&set_, &sig);
      std::lock_guard lock(mutex_);
      if (!done_) spdlog::info("signal {} received, shutting down", sig);
      signalled_ = true;
      if (stop_) stop_();
    });
  }
  ~SignalStopper() {
    {
      std::lock_guard lock(mutex_);
      done_ = true;
      stop_ = nullptr;
    }
    if (!signalled_) ::kill(::getpid(), SIGTERM);
    if (waiter_.joinable()) waiter_.join();
    pthread_sigmask(SIG_SETMASK, &previous_, nullptr);
  }

  void on_signal(std::function<void()> fn) {
    std::lock_guard lock(mutex_);
    stop_ = std::move(fn);
    if (signalled_ && stop_) stop_();
  }

 private:
  sigset_t set_{};
  sigset_t previous_{};
  std::mutex mutex_;
  std::function<void()> stop_;
  bool done_ = false;
  std::atomic<bool> signalled_{false};
  std::thread waiter_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, CliIo io) {
  CLI::App app{"proselab: run, share and discover LLM prompt templates"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--root", common.root, "Library directory (default $PROSELAB_HOME or ~/.proselab)");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // run
  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a prompt on input text");
  run->add_option("prompt", run_opts.ref, "Prompt id, id prefix, or slot:0..2")->required();
  run->add_option("-i,--input", run_opts.input_path, "Input file (default stdin)");
  run->add_option("-m,--model", run_opts.model, "Model id from config");
  run->add_flag("--accept-all", run_opts.accept_all, "Accept every change and print the result");
  run->add_flag("--json", run_opts.json, "Print the run result as JSON");

  // library
  auto* library = app.add_subcommand("library", "Manage the local prompt library");
  library->require_subcommand(1);
  PromptFields add_fields;
  auto* lib_add = library->add_subcommand("add", "Add a prompt");
  add_prompt_field_options(lib_add, add_fields);

  PromptFields edit_fields;
  std::string edit_ref;
  auto* lib_edit = library->add_subcommand("edit", "Edit a prompt");
  lib_edit->add_option("prompt", edit_ref, "Prompt reference")->required();
  add_prompt_field_options(lib_edit, edit_fields);
  lib_edit->add_flag("--clear-rule", edit_fields.clear_rule, "Remove the parsing rule");

  std::string list_sort = "name";
  bool list_slots = false;
  bool list_json = false;
  auto* lib_list = library->add_subcommand("list", "List prompts");
  lib_list->add_option("--sort", list_sort, "name | recency | run_count");
  lib_list->add_flag("--slots", list_slots, "Show favorite slots");
  lib_list->add_flag("--json", list_json, "JSON output");

  std::string search_query;
  bool search_json = false;
  auto* lib_search = library->add_subcommand("search", "Search prompts");
  lib_search->add_option("query", search_query, "Case-insensitive text");
  lib_search->add_flag("--json", search_json, "JSON output");

  long favorite_slot = -1;
  std::string favorite_ref;
  bool favorite_clear = false;
  auto* lib_favorite = library->add_subcommand("favorite", "Put a prompt into a toolbar slot");
  lib_favorite->add_option("slot", favorite_slot, "Slot 0..2")->required();
  lib_favorite->add_option("prompt", favorite_ref, "Prompt reference");
  lib_favorite->add_flag("--clear", favorite_clear, "Empty the slot");

  std::string delete_ref;
  auto* lib_delete = library->add_subcommand("delete", "Delete a prompt");
  lib_delete->add_option("prompt", delete_ref, "Prompt reference")->required();

  std::string show_ref;
  auto* lib_show = library->add_subcommand("show", "Print a prompt as JSON");
  lib_show->add_option("prompt", show_ref, "Prompt reference")->required();

  // hub
  std::string hub_url;
  auto* hub = app.add_subcommand("hub", "Community hub");
  hub->require_subcommand(1);
  hub->add_option("--hub-url", hub_url, "Hub base URL");

  std::string share_ref;
  auto* hub_share = hub->add_subcommand("share", "Share a library prompt");
  hub_share->add_option("prompt", share_ref, "Prompt reference")->required();

  std::string pull_ref;
  auto* hub_pull = hub->add_subcommand("pull", "Copy a hub prompt into the library");
  hub_pull->add_option("prompt", pull_ref, "Hub id or link containing ?prompt=<id>")->required();

  std::string browse_tag;
  std::string browse_sort = "new";
  std::size_t browse_limit = 20;
  std::string browse_cursor;
  bool browse_json = false;
  auto* hub_browse = hub->add_subcommand("browse", "List hub prompts");
  hub_browse->add_option("--tag", browse_tag, "Only prompts with this tag");
  hub_browse->add_option("--sort", browse_sort, "new | popular");
  hub_browse->add_option("--limit", browse_limit, "Page size (max 100)");
  hub_browse->add_option("--cursor", browse_cursor, "Resume token from a previous page");
  hub_browse->add_flag("--json", browse_json, "JSON output");

  std::string report_id;
  std::string report_reason;
  auto* hub_report = hub->add_subcommand("report", "Report a harmful prompt");
  hub_report->add_option("prompt", report_id, "Hub id or link")->required();
  hub_report->add_option("--reason", report_reason, "Why it should be moderated");

  std::size_t tags_limit = 10;
  auto* hub_tags = hub->add_subcommand("tags", "Most used tags");
  hub_tags->add_option("--limit", tags_limit, "How many (max 50)");

  int hub_serve_port = 8080;
  std::string hub_serve_host = "127.0.0.1";
  std::string hub_serve_db;
  int hub_serve_rate = 60;
  auto* hub_serve = hub->add_subcommand("serve", "Run a standalone hub service");
  hub_serve->add_option("--port", hub_serve_port, "Listen port");
  hub_serve->add_option("--host", hub_serve_host, "Listen address");
  hub_serve->add_option("--db", hub_serve_db, "SQLite file (default <root>/hub.sqlite3)");
  hub_serve->add_option("--rate-limit", hub_serve_rate, "Requests per client per minute, 0 = off");

  // models
  auto* models = app.add_subcommand("models", "List configured models");

  // serve
  LocalApiOptions serve_opts;
  serve_opts.port = -1;
  std::string serve_hub_url;
  std::string serve_ui_dir;
  auto* serve = app.add_subcommand("serve", "Serve the local API and editor UI");
  serve->add_option("--port", serve_opts.port, "Listen port (default 7870)");
  serve->add_option("--host", serve_opts.host, "Listen address");
  serve->add_option("--hub-url", serve_hub_url, "Hub base URL to proxy");
  serve->add_flag("--with-hub", serve_opts.with_hub, "Also serve the hub API on this port");
  serve->add_option("--hub-db", serve_opts.hub_db, "SQLite file for the embedded hub");
  serve->add_option("--hub-rate-limit", serve_opts.hub_rate_limit_per_minute,
                    "Embedded hub requests per client per minute, 0 = off");
  serve->add_option("--ui-dir", serve_ui_dir, "Built editor assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      io.out << app.help();
      return kExitOk;
    }
    report_error(io.err, ErrorCode::invalid_argument, e.what());
    return kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (run->parsed()) return cmd_run(common, run_opts, io);

    if (models->parsed()) {
      AppContext ctx = make_context(common);
      for (const auto& m : list_models(ctx.config.models)) {
        io.out << m.model_id << "  " << to_string(m.endpoint_kind)
               << (m.model_id == ctx.config.default_model ? "  (default)" : "") << "\n";
      }
      return kExitOk;
    }

    if (library->parsed()) {
      AppContext ctx = make_context(common);
      auto& lib = ctx.library;
      if (lib_add->parsed()) {
        io.out << lib.add_prompt(record_from_fields(add_fields)) << "\n";
      } else if (lib_edit->parsed()) {
        const auto id = resolve_or_throw(lib, edit_ref);
        const auto updated = lib.update_prompt(id, patch_from_fields(edit_fields));
        io.out << updated.id << "\n";
      } else if (lib_list->parsed()) {
        if (list_slots) {
          const auto slots = lib.favorite_slots();
          if (list_json) {
            Json j = Json::array();
            for (const auto& s : slots) j.push_back(s ? Json(*s) : Json(nullptr));
            io.out << dump_json(Json{{"slots", j}}, 2) << "\n";
          } else {
            for (std::size_t i = 0; i < slots.size(); ++i) {
              io.out << "slot " << i << ": ";
              if (slots[i]) {
                io.out << *slots[i] << "  " << lib.get(*slots[i]).title;
              } else {
                io.out << "(empty)";
              }
              io.out << "\n";
            }
          }
          return kExitOk;
        }
        const auto key = parse_sort_key(list_sort);
        if (!key) throw Error(ErrorCode::invalid_argument, "sort must be name, recency or run_count");
        const auto prompts = lib.sort_prompts(*key);
        if (list_json) {
          io.out << dump_json(Json(prompts), 2) << "\n";
        } else {
          print_prompt_table(io.out, prompts);
        }
      } else if (lib_search->parsed()) {
        const auto prompts = lib.search_prompts(search_query);
        if (search_json) {
          io.out << dump_json(Json(prompts), 2) << "\n";
        } else {
          print_prompt_table(io.out, prompts);
        }
      } else if (lib_favorite->parsed()) {
        if (favorite_slot < 0 || favorite_slot >= static_cast<long>(kFavoriteSlotCount)) {
          throw Error(ErrorCode::invalid_slot, "slot must be 0..2");
        }
        const auto slot = static_cast<std::size_t>(favorite_slot);
        if (favorite_clear) {
          lib.clear_favorite_slot(slot);
        } else {
          if (favorite_ref.empty()) throw Error(ErrorCode::invalid_argument, "prompt reference required");
          lib.set_favorite_slot(slot, resolve_or_throw(lib, favorite_ref));
        }
      } else if (lib_delete->parsed()) {
        lib.delete_prompt(resolve_or_throw(lib, delete_ref));
      } else if (lib_show->parsed()) {
        io.out << dump_json(Json(lib.get(resolve_or_throw(lib, show_ref))), 2) << "\n";
      }
      return kExitOk;
    }

    if (hub->parsed()) {
      std::optional<SignalStopper> stopper;
      if (hub_serve->parsed()) stopper.emplace();
      AppContext ctx = make_context(common);
      if (hub_serve->parsed()) {
        const auto db = hub_serve_db.empty() ? (ctx.config.library_root / "hub.sqlite3").string()
                                             : hub_serve_db;
        auto service = std::make_shared<HubService>(
            std::shared_ptr<HubStore>(open_sqlite_hub_store(db)));
        HubHttpOptions options;
        options.rate_limit_per_minute = hub_serve_rate;
        HubHttpServer server(service, options);
        std::mutex m;
        std::condition_variable cv;
        bool stop = false;
        stopper->on_signal([&] {
          std::lock_guard lock(m);
          stop = true;
          cv.notify_all();
        });
        server.start(hub_serve_host, hub_serve_port);
        io.out << "hub listening on " << server.base_url() << std::endl;
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return stop; });
        server.stop();
        return kExitOk;
      }

      HubSession session;
      session.base_url = hub_url_or_throw(ctx, hub_url);
      HubClient client(session);
      if (hub_share->parsed()) {
        const auto record = ctx.library.get(resolve_or_throw(ctx.library, share_ref));
        if (auto v = validate_prompt(record, true); !v.ok()) {
          throw ValidationError(std::move(v.violations));
        }
        io.out << client.share(record) << "\n";
      } else if (hub_pull->parsed()) {
        const auto id = extract_prompt_id(pull_ref);
        if (!id) throw Error(ErrorCode::invalid_argument, "no prompt id in '" + pull_ref + "'");
        const auto record = pull_to_library(session, *id, ctx.library);
        io.out << record.id << "\n";
      } else if (hub_browse->parsed()) {
        ListQuery query;
        if (!browse_tag.empty()) query.tag = browse_tag;
        const auto sort = parse_hub_sort(browse_sort);
        if (!sort) throw Error(ErrorCode::invalid_argument, "sort must be 'new' or 'popular'");
        query.sort = *sort;
        query.limit = browse_limit;
        if (!browse_cursor.empty()) query.cursor = browse_cursor;
        const auto page = client.list(query);
        if (browse_json) {
          io.out << dump_json(Json{{"entries", page.entries},
                                   {"next_cursor", page.next_cursor ? Json(*page.next_cursor)
                                                                    : Json(nullptr)}},
                              2)
                 << "\n";
        } else {
          for (const auto& e : page.entries) {
            io.out << e.id << "  " << std::setw(6) << e.run_count << "  " << e.title << "  [";
            for (std::size_t i = 0; i < e.tags.size(); ++i) io.out << (i ? ", " : "") << e.tags[i];
            io.out << "]\n";
          }
          if (page.next_cursor) io.out << "next: " << *page.next_cursor << "\n";
        }
      } else if (hub_report->parsed()) {
        const auto id = extract_prompt_id(report_id);
        if (!id) throw Error(ErrorCode::invalid_argument, "no prompt id in '" + report_id + "'");
        io.out << "reported (" << client.report(*id, report_reason) << " report(s))\n";
      } else if (hub_tags->parsed()) {
        for (const auto& t : client.top_tags(tags_limit)) {
          io.out << t.tag << "  " << t.count << "\n";
        }
      }
      return kExitOk;
    }

    if (serve->parsed()) {
      SignalStopper stopper;
      AppContext ctx = make_context(common);
      if (!serve_hub_url.empty()) ctx.hub_url = serve_hub_url;
      if (serve_opts.port < 0) serve_opts.port = ctx.config.local_api_port;
      if (!serve_ui_dir.empty()) serve_opts.ui_dir = serve_ui_dir;
      LocalApiServer server(ctx, serve_opts);
      server.bind();
      ctx.enable_run_reporting();
      stopper.on_signal([&server] { server.stop(); });
      io.out << "listening on " << server.base_url() << std::endl;
      server.serve();
      stopper.on_signal(nullptr);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    report_error(io.err, e.code(), e.what(), &e.violations());
    return exit_code_for(e.code());
  } catch (const Error& e) {
    report_error(io.err, e.code(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(io.err, ErrorCode::storage, e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace proselab::app
