#include <sqlite3.h>

#include <mutex>

#include "proselab/errors.hpp"
#include "proselab/hub_service.hpp"
#include "proselab/json_io.hpp"

namespace proselab {
namespace {

[[noreturn]] void fail(sqlite3* db, std::string_view what) {
  throw Error(ErrorCode::storage,
              std::string(what) + ": " + (db ? sqlite3_errmsg(db) : "unknown error"));
}

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_,
                           nullptr) != SQLITE_OK) {
      fail(db, "prepare failed");
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(const char* name, std::string_view value) {
    sqlite3_bind_text(stmt_, index(name), value.data(), static_cast<int>(value.size()),
                      SQLITE_TRANSIENT);
    return *this;
  }
  Statement& bind(const char* name, std::int64_t value) {
    sqlite3_bind_int64(stmt_, index(name), value);
    return *this;
  }

  // True while rows are available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step failed");
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  int index(const char* name) {
    const int i = sqlite3_bind_parameter_index(stmt_, name);
    if (i == 0) throw Error(ErrorCode::storage, std::string("unknown parameter ") + name);
    return i;
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec("COMMIT");
    done_ = true;
  }

 private:
  void exec(const char* sql) {
    if (sqlite3_exec(db_, sql, nullptr, nullptr, nullptr) != SQLITE_OK) fail(db_, sql);
  }
  sqlite3* db_;
  bool done_ = false;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS entries (
  id TEXT PRIMARY KEY,
  doc TEXT NOT NULL,
  run_count INTEGER NOT NULL DEFAULT 0,
  shared_at INTEGER NOT NULL,
  report_count INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS entry_tags (
  id TEXT NOT NULL,
  tag TEXT NOT NULL,
  PRIMARY KEY (id, tag)
);
CREATE INDEX IF NOT EXISTS entry_tags_by_tag ON entry_tags(tag);
CREATE INDEX IF NOT EXISTS entries_by_runs ON entries(run_count DESC, id);
CREATE INDEX IF NOT EXISTS entries_by_time ON entries(shared_at DESC, id);
CREATE TABLE IF NOT EXISTS reports (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  id TEXT NOT NULL,
  reason TEXT NOT NULL,
  reported_at INTEGER NOT NULL
);
)sql";

class SqliteHubStore : public HubStore {
 public:
  explicit SqliteHubStore(const std::string& path) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
      const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw Error(ErrorCode::storage, "cannot open hub store " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec(kSchema);
  }

  ~SqliteHubStore() override { sqlite3_close(db_); }

  bool insert_if_absent(const HubEntry& entry) override {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
      Statement exists(db_, "SELECT 1 FROM entries WHERE id = :id");
      exists.bind(":id", entry.id);
      if (exists.step()) return false;
    }
    HubEntry doc = entry;
    doc.run_count = 0;
    doc.report_count = 0;
    Statement insert(db_,
                     "INSERT INTO entries (id, doc, run_count, shared_at, report_count) "
                     "VALUES (:id, :doc, :runs, :at, :reports)");
    insert.bind(":id", entry.id)
        .bind(":doc", dump_json(doc))
        .bind(":runs", entry.run_count)
        .bind(":at", static_cast<std::int64_t>(entry.shared_at.time_since_epoch().count()))
        .bind(":reports", entry.report_count);
    insert.step();
    for (const auto& tag : entry.tags) {
      Statement t(db_, "INSERT OR IGNORE INTO entry_tags (id, tag) VALUES (:id, :tag)");
      t.bind(":id", entry.id).bind(":tag", tag);
      t.step();
    }
    tx.commit();
    return true;
  }

  std::optional<HubEntry> get(const std::string& id) override {
    std::lock_guard lock(mutex_);
    Statement q(db_, "SELECT doc, run_count, shared_at, report_count FROM entries "
                     "WHERE id = :id");
    q.bind(":id", id);
    if (!q.step()) return std::nullopt;
    return row_to_entry(q, 0);
  }

  std::optional<std::int64_t> increment_runs(const std::string& id) override {
    std::lock_guard lock(mutex_);
    Statement q(db_, "UPDATE entries SET run_count = run_count + 1 WHERE id = :id "
                     "RETURNING run_count");
    q.bind(":id", id);
    if (!q.step()) return std::nullopt;
    const auto count = q.integer(0);
    while (q.step()) {
    }
    return count;
  }

  std::optional<std::int64_t> add_report(const std::string& id, const std::string& reason,
                                         Timestamp at) override {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    std::int64_t count = 0;
    {
      Statement q(db_, "UPDATE entries SET report_count = report_count + 1 "
                       "WHERE id = :id RETURNING report_count");
      q.bind(":id", id);
      if (!q.step()) return std::nullopt;
      count = q.integer(0);
      while (q.step()) {
      }
    }
    Statement r(db_, "INSERT INTO reports (id, reason, reported_at) "
                     "VALUES (:id, :reason, :at)");
    r.bind(":id", id).bind(":reason", reason).bind(
        ":at", static_cast<std::int64_t>(at.time_since_epoch().count()));
    r.step();
    tx.commit();
    return count;
  }

  std::vector<HubEntry> list(const std::optional<std::string>& tag, HubSort sort,
                             const std::optional<ListPosition>& after,
                             std::size_t limit, std::int64_t hide_threshold) override {
    const std::string key = sort == HubSort::popular ? "run_count" : "shared_at";
    std::string sql =
        "SELECT doc, run_count, shared_at, report_count FROM entries "
        "WHERE report_count < :threshold";
    if (tag) sql += " AND id IN (SELECT id FROM entry_tags WHERE tag = :tag)";
    if (after) {
      sql += " AND (" + key + " < :key OR (" + key + " = :key AND id > :after_id))";
    }
    sql += " ORDER BY " + key + " DESC, id ASC LIMIT :limit";

    std::lock_guard lock(mutex_);
    Statement q(db_, sql);
    q.bind(":threshold", hide_threshold).bind(":limit", static_cast<std::int64_t>(limit));
    if (tag) q.bind(":tag", *tag);
    if (after) q.bind(":key", after->key).bind(":after_id", after->id);
    std::vector<HubEntry> out;
    while (q.step()) out.push_back(row_to_entry(q, 0));
    return out;
  }

  std::vector<TagCount> top_tags(std::size_t limit, std::int64_t hide_threshold) override {
    std::lock_guard lock(mutex_);
    Statement q(db_,
                "SELECT t.tag, COUNT(*) AS n FROM entry_tags t "
                "JOIN entries e ON e.id = t.id WHERE e.report_count < :threshold "
                "GROUP BY t.tag ORDER BY n DESC, t.tag ASC LIMIT :limit");
    q.bind(":threshold", hide_threshold).bind(":limit", static_cast<std::int64_t>(limit));
    std::vector<TagCount> out;
    while (q.step()) out.push_back({q.text(0), q.integer(1)});
    return out;
  }

 private:
  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      const std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw Error(ErrorCode::storage, "hub store setup failed: " + msg);
    }
  }

  static HubEntry row_to_entry(const Statement& q, int first) {
    auto entry = json_as<HubEntry>(parse_json_text(q.text(first), "hub entry"), "hub entry");
    entry.run_count = q.integer(first + 1);
    entry.shared_at = Timestamp{std::chrono::milliseconds{q.integer(first + 2)}};
    entry.report_count = q.integer(first + 3);
    return entry;
  }

  std::mutex mutex_;
  sqlite3* db_ = nullptr;
};

}  // namespace

std::unique_ptr<HubStore> open_sqlite_hub_store(const std::string& path) {
  return std::make_unique<SqliteHubStore>(path);
}

}  // namespace proselab
