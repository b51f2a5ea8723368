#include "storyecho/store.hpp"

#include <openssl/rand.h>
#include <sqlite3.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace storyecho {

namespace fs = std::filesystem;

Timestamp SystemClock::now()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS counters(
  name TEXT PRIMARY KEY, value INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS avatars(
  id TEXT PRIMARY KEY, family_id TEXT NOT NULL, body TEXT NOT NULL,
  created_at INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS frameworks(
  id TEXT PRIMARY KEY, child_id TEXT NOT NULL REFERENCES avatars(id),
  story_mode TEXT NOT NULL, recurring_phrase TEXT NOT NULL, body TEXT NOT NULL,
  created_at INTEGER NOT NULL, ord INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS episodes(
  id TEXT PRIMARY KEY, child_id TEXT NOT NULL REFERENCES avatars(id),
  framework_id TEXT NOT NULL REFERENCES frameworks(id), kind TEXT NOT NULL,
  body TEXT NOT NULL, created_at INTEGER NOT NULL,
  approved_at INTEGER, approved_ord INTEGER);
CREATE TABLE IF NOT EXISTS page_images(
  episode_id TEXT NOT NULL REFERENCES episodes(id), page_id TEXT NOT NULL,
  asset_id TEXT NOT NULL, PRIMARY KEY(episode_id, page_id));
CREATE TABLE IF NOT EXISTS sessions(
  id TEXT PRIMARY KEY, child_id TEXT NOT NULL REFERENCES avatars(id),
  body TEXT NOT NULL, ord INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS records(
  id TEXT PRIMARY KEY, session_id TEXT NOT NULL REFERENCES sessions(id),
  body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS feedback(
  id TEXT PRIMARY KEY, child_id TEXT NOT NULL REFERENCES avatars(id),
  session_id TEXT NOT NULL REFERENCES sessions(id), body TEXT NOT NULL,
  ord INTEGER NOT NULL, delivered_at INTEGER, delivered_ord INTEGER);
CREATE TABLE IF NOT EXISTS transitions(
  session_id TEXT NOT NULL REFERENCES sessions(id), seq INTEGER NOT NULL,
  body TEXT NOT NULL, PRIMARY KEY(session_id, seq));
CREATE TABLE IF NOT EXISTS interactions(
  id TEXT PRIMARY KEY, session_id TEXT NOT NULL REFERENCES sessions(id),
  ord INTEGER NOT NULL, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS transcripts(
  asset_id TEXT PRIMARY KEY, text TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS assets(
  id TEXT PRIMARY KEY, media_type TEXT NOT NULL, size INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS tokens(
  hash TEXT PRIMARY KEY, family_id TEXT NOT NULL, created_at INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS idempotency(
  family_id TEXT NOT NULL, key TEXT NOT NULL, status INTEGER NOT NULL,
  body TEXT NOT NULL, PRIMARY KEY(family_id, key));
CREATE TRIGGER IF NOT EXISTS transitions_no_update BEFORE UPDATE ON transitions
  BEGIN SELECT RAISE(ABORT, 'event log is append-only'); END;
CREATE TRIGGER IF NOT EXISTS transitions_no_delete BEFORE DELETE ON transitions
  BEGIN SELECT RAISE(ABORT, 'event log is append-only'); END;
CREATE TRIGGER IF NOT EXISTS interactions_no_update BEFORE UPDATE ON interactions
  BEGIN SELECT RAISE(ABORT, 'event log is append-only'); END;
CREATE TRIGGER IF NOT EXISTS interactions_no_delete BEFORE DELETE ON interactions
  BEGIN SELECT RAISE(ABORT, 'event log is append-only'); END;
)sql";

const std::set<std::string> kTables{
    "avatars",  "frameworks",   "episodes",    "page_images", "sessions", "records",
    "feedback", "transitions",  "interactions", "transcripts", "assets",   "tokens",
    "idempotency",
};

[[noreturn]] void sqlite_fail(sqlite3* db, int rc, const std::string& what)
{
    const std::string msg = what + ": " + (db ? sqlite3_errmsg(db) : sqlite3_errstr(rc));
    if (rc == SQLITE_CONSTRAINT_FOREIGNKEY) {
        fail(Errc::ReferentialViolation, msg);
    }
    fail(Errc::StorageError, msg);
}

std::string format_id(const std::string& prefix, std::int64_t n)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld", static_cast<long long>(n));
    return prefix + "-" + buf;
}

template <class T>
T parse_body(const std::string& body)
{
    return canonical_parse<T>(body);
}

} // namespace

class Store::Statement {
public:
    Statement(const Store& store, const char* sql) : db_(store.db_)
    {
        const int rc = sqlite3_prepare_v2(db_, sql, -1, &stmt_, nullptr);
        if (rc != SQLITE_OK) {
            sqlite_fail(db_, rc, "prepare");
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }

    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, const std::string& v)
    {
        sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    Statement& bind(int i, const char* v) { return bind(i, std::string(v)); }
    Statement& bind(int i, std::int64_t v)
    {
        sqlite3_bind_int64(stmt_, i, v);
        return *this;
    }
    Statement& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
    Statement& bind(int i, const std::optional<std::int64_t>& v)
    {
        if (v) {
            return bind(i, *v);
        }
        sqlite3_bind_null(stmt_, i);
        return *this;
    }

    template <class... A>
    Statement& args(const A&... a)
    {
        int i = 0;
        (bind(++i, a), ...);
        return *this;
    }

    bool step()
    {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) {
            return true;
        }
        if (rc == SQLITE_DONE) {
            return false;
        }
        sqlite_fail(db_, sqlite3_extended_errcode(db_), "step");
    }
    void run()
    {
        while (step()) {
        }
    }

    std::string text(int col) const
    {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::optional<std::int64_t> nullable_integer(int col) const
    {
        if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) {
            return std::nullopt;
        }
        return integer(col);
    }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

template <class F>
auto Store::transaction(F&& f)
{
    std::lock_guard lock(mutex_);
    if (tx_depth_ > 0) {
        return f();
    }
    exec("BEGIN IMMEDIATE");
    ++tx_depth_;
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            --tx_depth_;
            exec("COMMIT");
        } else {
            auto result = f();
            --tx_depth_;
            exec("COMMIT");
            return result;
        }
    } catch (...) {
        if (tx_depth_ > 0) {
            --tx_depth_;
        }
        sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
}

Store::Store(const fs::path& db_path, std::optional<fs::path> asset_dir,
             std::shared_ptr<Clock> clock)
    : db_path_(db_path),
      asset_dir_(asset_dir ? *asset_dir : fs::path(db_path.string() + ".assets")),
      clock_(std::move(clock))
{
    std::error_code ec;
    if (db_path_.has_parent_path()) {
        fs::create_directories(db_path_.parent_path(), ec);
    }
    fs::create_directories(asset_dir_, ec);
    if (ec) {
        fail(Errc::StorageError, "cannot create asset directory " + asset_dir_.string());
    }
    const int rc = sqlite3_open_v2(db_path_.c_str(), &db_,
                                   SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE |
                                       SQLITE_OPEN_FULLMUTEX,
                                   nullptr);
    if (rc != SQLITE_OK) {
        const std::string msg = db_ ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
        sqlite3_close(db_);
        db_ = nullptr;
        fail(Errc::StorageError, "cannot open " + db_path_.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec("PRAGMA foreign_keys=ON");
    exec(kSchema);
}

Store::~Store()
{
    sqlite3_close(db_);
}

void Store::exec(const char* sql) const
{
    char* err = nullptr;
    const int rc = sqlite3_exec(db_, sql, nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        fail(Errc::StorageError, msg);
    }
}

std::string Store::next_id(const std::string& prefix)
{
    return transaction([&] {
        Statement(*this, "INSERT INTO counters(name, value) VALUES(?, 1) "
                         "ON CONFLICT(name) DO UPDATE SET value = value + 1")
            .args(prefix)
            .run();
        Statement q(*this, "SELECT value FROM counters WHERE name = ?");
        q.args(prefix).step();
        return format_id(prefix, q.integer(0));
    });
}

std::string Store::new_id_or(std::string current, const std::string& prefix)
{
    if (current.empty()) {
        return next_id(prefix);
    }
    bump_counter(prefix, current);
    return current;
}

std::int64_t Store::next_ord()
{
    const auto id = next_id("ord");
    return std::stoll(id.substr(4));
}

void Store::bump_counter(const std::string& prefix, const std::string& id)
{
    if (id.rfind(prefix + "-", 0) != 0) {
        return;
    }
    std::int64_t n = 0;
    try {
        n = std::stoll(id.substr(prefix.size() + 1));
    } catch (const std::exception&) {
        return;
    }
    Statement(*this, "INSERT INTO counters(name, value) VALUES(?, ?) "
                     "ON CONFLICT(name) DO UPDATE SET value = max(value, excluded.value)")
        .args(prefix, n)
        .run();
}

bool Store::needs_insert(const std::string& table, const std::string& id,
                         const std::string& body) const
{
    const auto existing = body_of(table, id);
    if (!existing) {
        return true;
    }
    if (*existing != body) {
        fail(Errc::StorageError, table + " row " + id + " already exists with different content");
    }
    return false;
}

std::optional<std::string> Store::body_of(const std::string& table, const std::string& id) const
{
    std::lock_guard lock(mutex_);
    const std::string sql = "SELECT body FROM " + table + " WHERE id = ?";
    Statement q(*this, sql.c_str());
    if (q.args(id).step()) {
        return q.text(0);
    }
    return std::nullopt;
}

std::string Store::require_body(const std::string& table, const std::string& id,
                                Errc missing) const
{
    auto body = body_of(table, id);
    if (!body) {
        fail(missing, table + " has no id " + id);
    }
    return *body;
}

// -- avatars ----------------------------------------------------------------

std::string Store::put(ChildAvatar avatar, const std::string& family_id)
{
    check_invariants(avatar);
    if (family_id.empty()) {
        fail(Errc::PreconditionFailed, "family_id must be non-empty");
    }
    return transaction([&] {
        avatar.avatar_id = new_id_or(avatar.avatar_id, "child");
        const auto body = dump_canonical(encode(avatar));
        if (needs_insert("avatars", avatar.avatar_id, body)) {
            Statement(*this, "INSERT INTO avatars(id, family_id, body, created_at) "
                             "VALUES(?, ?, ?, ?)")
                .args(avatar.avatar_id, family_id, body, now())
                .run();
        } else if (family_of(avatar.avatar_id) != family_id) {
            fail(Errc::StorageError, "avatar " + avatar.avatar_id + " belongs to another family");
        }
        return avatar.avatar_id;
    });
}

ChildAvatar Store::get_avatar(const std::string& child_id) const
{
    return parse_body<ChildAvatar>(require_body("avatars", child_id, Errc::ChildNotFound));
}

bool Store::has_child(const std::string& child_id) const
{
    return body_of("avatars", child_id).has_value();
}

std::string Store::family_of(const std::string& child_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT family_id FROM avatars WHERE id = ?");
    if (!q.args(child_id).step()) {
        fail(Errc::ChildNotFound, "child " + child_id);
    }
    return q.text(0);
}

std::vector<ChildAvatar> Store::avatars(const std::string& family_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT body FROM avatars WHERE family_id = ? ORDER BY rowid");
    q.args(family_id);
    std::vector<ChildAvatar> out;
    while (q.step()) {
        out.push_back(parse_body<ChildAvatar>(q.text(0)));
    }
    return out;
}

// -- frameworks -------------------------------------------------------------

std::string Store::put(StoryFramework framework, const std::string& child_id)
{
    check_invariants(framework);
    return transaction([&] {
        if (!has_child(child_id)) {
            fail(Errc::ReferentialViolation, "framework references missing child " + child_id);
        }
        const auto family = family_of(child_id);
        const auto mode = std::string(enum_name(framework.story_mode));
        Statement clash(*this, "SELECT f.id FROM frameworks f JOIN avatars a ON f.child_id = a.id "
                               "WHERE a.family_id = ? AND f.recurring_phrase = ? "
                               "AND f.story_mode <> ?");
        if (clash.args(family, framework.recurring_elements.recurring_phrase, mode).step()) {
            fail(Errc::InvariantViolation,
                 "recurring_phrase already used by framework " + clash.text(0) +
                     " in another story mode");
        }
        framework.framework_id = new_id_or(framework.framework_id, "fw");
        const auto body = dump_canonical(encode(framework));
        if (needs_insert("frameworks", framework.framework_id, body)) {
            Statement(*this, "INSERT INTO frameworks(id, child_id, story_mode, recurring_phrase, "
                             "body, created_at, ord) VALUES(?, ?, ?, ?, ?, ?, ?)")
                .args(framework.framework_id, child_id, mode,
                      framework.recurring_elements.recurring_phrase, body, now(), next_ord())
                .run();
        }
        return framework.framework_id;
    });
}

StoryFramework Store::get_framework(const std::string& framework_id) const
{
    return parse_body<StoryFramework>(require_body("frameworks", framework_id, Errc::NotFound));
}

std::string Store::framework_owner(const std::string& framework_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT child_id FROM frameworks WHERE id = ?");
    if (!q.args(framework_id).step()) {
        fail(Errc::NotFound, "framework " + framework_id);
    }
    return q.text(0);
}

std::optional<std::string> Store::latest_framework_id(const std::string& child_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT id FROM frameworks WHERE child_id = ? ORDER BY ord DESC LIMIT 1");
    if (q.args(child_id).step()) {
        return q.text(0);
    }
    return std::nullopt;
}

std::vector<StoryFramework> Store::frameworks(const std::string& child_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT body FROM frameworks WHERE child_id = ? ORDER BY ord");
    q.args(child_id);
    std::vector<StoryFramework> out;
    while (q.step()) {
        out.push_back(parse_body<StoryFramework>(q.text(0)));
    }
    return out;
}

// -- episodes ---------------------------------------------------------------

std::string Store::put(Episode episode, const std::string& child_id)
{
    check_invariants(episode);
    return transaction([&] {
        if (!has_child(child_id)) {
            fail(Errc::ReferentialViolation, "episode references missing child " + child_id);
        }
        if (!body_of("frameworks", episode.framework_id)) {
            fail(Errc::ReferentialViolation,
                 "episode references missing framework '" + episode.framework_id + "'");
        }
        episode.episode_id = new_id_or(episode.episode_id, "ep");
        const auto body = dump_canonical(encode(episode));
        if (needs_insert("episodes", episode.episode_id, body)) {
            Statement(*this, "INSERT INTO episodes(id, child_id, framework_id, kind, body, "
                             "created_at) VALUES(?, ?, ?, ?, ?, ?)")
                .args(episode.episode_id, child_id, episode.framework_id,
                      std::string(enum_name(episode.kind)), body, now())
                .run();
        }
        return episode.episode_id;
    });
}

Episode Store::get_episode(const std::string& episode_id) const
{
    return parse_body<Episode>(require_body("episodes", episode_id, Errc::NotFound));
}

void Store::approve_episode(const std::string& episode_id)
{
    transaction([&] {
        require_body("episodes", episode_id, Errc::NotFound);
        if (is_approved(episode_id)) {
            return;
        }
        Statement(*this, "UPDATE episodes SET approved_at = ?, approved_ord = ? WHERE id = ?")
            .args(now(), next_ord(), episode_id)
            .run();
    });
}

bool Store::is_approved(const std::string& episode_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT approved_at IS NOT NULL FROM episodes WHERE id = ?");
    return q.args(episode_id).step() && q.integer(0) != 0;
}

std::vector<Episode> Store::latest_episodes(const std::string& child_id, int limit) const
{
    std::lock_guard lock(mutex_);
    if (!has_child(child_id)) {
        fail(Errc::ChildNotFound, "child " + child_id);
    }
    std::vector<Episode> out;
    if (limit <= 0) {
        return out;
    }
    Statement q(*this, "SELECT body FROM episodes WHERE child_id = ? AND kind = 'main' "
                       "AND approved_at IS NOT NULL "
                       "ORDER BY approved_at DESC, approved_ord DESC LIMIT ?");
    q.args(child_id, limit);
    while (q.step()) {
        out.push_back(parse_body<Episode>(q.text(0)));
    }
    std::reverse(out.begin(), out.end());
    return out;
}

void Store::put_page_image(const std::string& episode_id, const PageImage& image)
{
    transaction([&] {
        require_body("episodes", episode_id, Errc::ReferentialViolation);
        Statement(*this, "INSERT INTO page_images(episode_id, page_id, asset_id) VALUES(?, ?, ?) "
                         "ON CONFLICT(episode_id, page_id) DO UPDATE SET asset_id = excluded.asset_id")
            .args(episode_id, image.page_id, image.asset_id)
            .run();
    });
}

std::vector<PageImage> Store::page_images(const std::string& episode_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT page_id, asset_id FROM page_images WHERE episode_id = ? "
                       "ORDER BY page_id");
    q.args(episode_id);
    std::vector<PageImage> out;
    while (q.step()) {
        out.push_back({q.text(0), q.text(1)});
    }
    return out;
}

// -- sessions ---------------------------------------------------------------

void Store::check_session_refs(const TfoSession& s) const
{
    if (!has_child(s.child_id)) {
        fail(Errc::ReferentialViolation, "session references missing child " + s.child_id);
    }
    auto check = [&](const char* table, const std::optional<std::string>& id) {
        if (id && !body_of(table, *id)) {
            fail(Errc::ReferentialViolation,
                 "session references missing " + std::string(table) + " row " + *id);
        }
    };
    check("frameworks", s.framework_id);
    check("episodes", s.main_episode_id);
    check("episodes", s.ending_episode_id);
    check("records", s.record_id);
}

std::string Store::create_session(TfoSession session)
{
    if (session.state != SessionState::FoodSelected) {
        fail(Errc::PreconditionFailed, "new sessions start in FoodSelected");
    }
    check_invariants(session);
    return transaction([&] {
        check_session_refs(session);
        session.session_id = new_id_or(session.session_id, "sess");
        if (session.created_at == 0) {
            session.created_at = session.updated_at = now();
        }
        const auto body = dump_canonical(encode(session));
        if (needs_insert("sessions", session.session_id, body)) {
            Statement(*this, "INSERT INTO sessions(id, child_id, body, ord) VALUES(?, ?, ?, ?)")
                .args(session.session_id, session.child_id, body, next_ord())
                .run();
        }
        return session.session_id;
    });
}

TfoSession Store::get_session(const std::string& session_id) const
{
    return parse_body<TfoSession>(require_body("sessions", session_id, Errc::NotFound));
}

std::vector<TfoSession> Store::sessions(const std::string& child_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT body FROM sessions WHERE child_id = ? ORDER BY ord");
    q.args(child_id);
    std::vector<TfoSession> out;
    while (q.step()) {
        out.push_back(parse_body<TfoSession>(q.text(0)));
    }
    return out;
}

std::optional<TfoSession> Store::active_session(const std::string& child_id) const
{
    for (auto& s : sessions(child_id)) {
        if (!is_terminal(s)) {
            return s;
        }
    }
    return std::nullopt;
}

TransitionRecord Store::commit_transition(const TfoSession& updated, SessionEvent event,
                                          SessionState from, std::optional<std::string> ref)
{
    check_invariants(updated);
    return transaction([&] {
        require_body("sessions", updated.session_id, Errc::NotFound);
        check_session_refs(updated);
        Statement seq_q(*this, "SELECT COALESCE(MAX(seq), 0) + 1 FROM transitions "
                               "WHERE session_id = ?");
        seq_q.args(updated.session_id).step();
        TransitionRecord rec{updated.session_id, seq_q.integer(0), event, from,
                             updated.state,      std::move(ref),   updated.updated_at};
        check_invariants(rec);
        Statement(*this, "UPDATE sessions SET body = ? WHERE id = ?")
            .args(dump_canonical(encode(updated)), updated.session_id)
            .run();
        Statement(*this, "INSERT INTO transitions(session_id, seq, body) VALUES(?, ?, ?)")
            .args(rec.session_id, rec.seq, dump_canonical(encode(rec)))
            .run();
        return rec;
    });
}

void Store::update_session(const TfoSession& session)
{
    check_invariants(session);
    transaction([&] {
        const auto stored = get_session(session.session_id);
        if (stored.state != session.state) {
            fail(Errc::PreconditionFailed, "state changes go through commit_transition");
        }
        check_session_refs(session);
        Statement(*this, "UPDATE sessions SET body = ? WHERE id = ?")
            .args(dump_canonical(encode(session)), session.session_id)
            .run();
    });
}

std::vector<TransitionRecord> Store::transitions(const std::string& session_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT body FROM transitions WHERE session_id = ? ORDER BY seq");
    q.args(session_id);
    std::vector<TransitionRecord> out;
    while (q.step()) {
        out.push_back(parse_body<TransitionRecord>(q.text(0)));
    }
    return out;
}

// -- records ----------------------------------------------------------------

std::string Store::put(PostMealRecord record, const std::string& session_id)
{
    check_invariants(record);
    return transaction([&] {
        if (!body_of("sessions", session_id)) {
            fail(Errc::ReferentialViolation, "record references missing session " + session_id);
        }
        record.record_id = new_id_or(record.record_id, "rec");
        if (record.timestamp == 0) {
            record.timestamp = now();
        }
        const auto body = dump_canonical(encode(record));
        if (needs_insert("records", record.record_id, body)) {
            Statement(*this, "INSERT INTO records(id, session_id, body) VALUES(?, ?, ?)")
                .args(record.record_id, session_id, body)
                .run();
        }
        return record.record_id;
    });
}

PostMealRecord Store::get_record(const std::string& record_id) const
{
    return parse_body<PostMealRecord>(require_body("records", record_id, Errc::NotFound));
}

// -- feedback ---------------------------------------------------------------

std::string Store::put(const FeedbackMessage& message, const std::string& session_id)
{
    check_invariants(message);
    return transaction([&] {
        const auto session = get_session(session_id);
        if (!message.record_id.empty() && !body_of("records", message.record_id)) {
            fail(Errc::ReferentialViolation,
                 "feedback references missing record " + message.record_id);
        }
        const auto id = next_id("fb");
        Statement(*this, "INSERT INTO feedback(id, child_id, session_id, body, ord) "
                         "VALUES(?, ?, ?, ?, ?)")
            .args(id, session.child_id, session_id, dump_canonical(encode(message)), next_ord())
            .run();
        return id;
    });
}

namespace {
constexpr const char* kFeedbackColumns =
    "SELECT id, child_id, session_id, body, delivered_at FROM feedback ";
}

StoredFeedback Store::get_feedback(const std::string& feedback_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, (std::string(kFeedbackColumns) + "WHERE id = ?").c_str());
    if (!q.args(feedback_id).step()) {
        fail(Errc::NotFound, "feedback " + feedback_id);
    }
    return {q.text(0), q.text(1), q.text(2), parse_body<FeedbackMessage>(q.text(3)),
            q.nullable_integer(4)};
}

std::optional<StoredFeedback> Store::feedback_for_session(const std::string& session_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this,
                (std::string(kFeedbackColumns) + "WHERE session_id = ? ORDER BY ord DESC LIMIT 1")
                    .c_str());
    if (!q.args(session_id).step()) {
        return std::nullopt;
    }
    return StoredFeedback{q.text(0), q.text(1), q.text(2), parse_body<FeedbackMessage>(q.text(3)),
                          q.nullable_integer(4)};
}

void Store::mark_delivered(const std::string& feedback_id, Timestamp at)
{
    transaction([&] {
        get_feedback(feedback_id);
        Statement(*this, "UPDATE feedback SET delivered_at = ?, delivered_ord = ? "
                         "WHERE id = ? AND delivered_at IS NULL")
            .args(at, next_ord(), feedback_id)
            .run();
    });
}

std::vector<std::string> Store::recent_feedback_phrases(const std::string& child_id,
                                                        int limit) const
{
    std::lock_guard lock(mutex_);
    if (!has_child(child_id)) {
        fail(Errc::ChildNotFound, "child " + child_id);
    }
    std::vector<std::string> out;
    if (limit <= 0) {
        return out;
    }
    Statement q(*this, "SELECT body FROM feedback WHERE child_id = ? AND delivered_at IS NOT NULL "
                       "ORDER BY delivered_at DESC, delivered_ord DESC LIMIT ?");
    q.args(child_id, limit);
    while (q.step()) {
        out.push_back(parse_body<FeedbackMessage>(q.text(0)).text_cn);
    }
    return out;
}

// -- interactions -----------------------------------------------------------

std::string Store::append_interaction(InteractionEvent event)
{
    return transaction([&] {
        if (!body_of("sessions", event.session_id)) {
            fail(Errc::ReferentialViolation,
                 "interaction references missing session " + event.session_id);
        }
        event.event_id = new_id_or(event.event_id, "evt");
        if (event.timestamp == 0) {
            event.timestamp = now();
        }
        check_invariants(event);
        const auto body = dump_canonical(encode(event));
        if (needs_insert("interactions", event.event_id, body)) {
            Statement(*this, "INSERT INTO interactions(id, session_id, ord, body) "
                             "VALUES(?, ?, ?, ?)")
                .args(event.event_id, event.session_id, next_ord(), body)
                .run();
        }
        return event.event_id;
    });
}

std::vector<InteractionEvent> Store::interactions(const std::string& session_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT body FROM interactions WHERE session_id = ? ORDER BY ord");
    q.args(session_id);
    std::vector<InteractionEvent> out;
    while (q.step()) {
        out.push_back(parse_body<InteractionEvent>(q.text(0)));
    }
    return out;
}

void Store::put_transcript(const std::string& asset_id, const std::string& text)
{
    transaction([&] {
        Statement(*this, "INSERT INTO transcripts(asset_id, text) VALUES(?, ?) "
                         "ON CONFLICT(asset_id) DO UPDATE SET text = excluded.text")
            .args(asset_id, text)
            .run();
    });
}

std::optional<std::string> Store::transcript(const std::string& asset_id) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT text FROM transcripts WHERE asset_id = ?");
    if (q.args(asset_id).step()) {
        return q.text(0);
    }
    return std::nullopt;
}

// -- assets -----------------------------------------------------------------

void Store::write_blob(const std::string& asset_id, const std::string& bytes) const
{
    const auto final_path = asset_dir_ / asset_id;
    if (fs::exists(final_path) && fs::file_size(final_path) == bytes.size()) {
        return;
    }
    const auto tmp = asset_dir_ / (asset_id + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            fail(Errc::StorageError, "cannot write asset " + asset_id);
        }
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) {
        fail(Errc::StorageError, "cannot store asset " + asset_id + ": " + ec.message());
    }
}

std::string Store::put_asset(const Blob& blob)
{
    const auto id = sha256_hex(blob.bytes);
    transaction([&] {
        Statement q(*this, "SELECT 1 FROM assets WHERE id = ?");
        if (q.args(id).step()) {
            return;
        }
        write_blob(id, blob.bytes);
        Statement(*this, "INSERT INTO assets(id, media_type, size) VALUES(?, ?, ?)")
            .args(id, blob.media_type, static_cast<std::int64_t>(blob.bytes.size()))
            .run();
    });
    return id;
}

std::optional<Blob> Store::get_asset(const std::string& asset_id) const
{
    std::string media_type;
    {
        std::lock_guard lock(mutex_);
        Statement q(*this, "SELECT media_type FROM assets WHERE id = ?");
        if (!q.args(asset_id).step()) {
            return std::nullopt;
        }
        media_type = q.text(0);
    }
    std::ifstream in(asset_dir_ / asset_id, std::ios::binary);
    if (!in) {
        fail(Errc::StorageError, "asset blob missing on disk: " + asset_id);
    }
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return Blob{bytes.str(), media_type};
}

bool Store::delete_asset(const std::string& asset_id)
{
    const bool existed = transaction([&] {
        Statement q(*this, "SELECT 1 FROM assets WHERE id = ?");
        if (!q.args(asset_id).step()) {
            return false;
        }
        Statement(*this, "DELETE FROM assets WHERE id = ?").args(asset_id).run();
        Statement(*this, "DELETE FROM transcripts WHERE asset_id = ?").args(asset_id).run();
        return true;
    });
    if (existed) {
        std::error_code ec;
        fs::remove(asset_dir_ / asset_id, ec);
    }
    return existed;
}

std::size_t Store::asset_count() const
{
    return count("assets");
}

// -- API support ------------------------------------------------------------

std::string Store::issue_token(const std::string& family_id)
{
    if (family_id.empty()) {
        fail(Errc::PreconditionFailed, "family_id must be non-empty");
    }
    unsigned char raw[24];
    if (RAND_bytes(raw, sizeof raw) != 1) {
        fail(Errc::StorageError, "no randomness available for token");
    }
    std::string token;
    static constexpr char kHex[] = "0123456789abcdef";
    for (unsigned char c : raw) {
        token.push_back(kHex[c >> 4]);
        token.push_back(kHex[c & 15]);
    }
    transaction([&] {
        Statement(*this, "INSERT INTO tokens(hash, family_id, created_at) VALUES(?, ?, ?)")
            .args(sha256_hex(token), family_id, now())
            .run();
    });
    return token;
}

std::optional<std::string> Store::family_for_token(const std::string& token) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT family_id FROM tokens WHERE hash = ?");
    if (q.args(sha256_hex(token)).step()) {
        return q.text(0);
    }
    return std::nullopt;
}

std::optional<Store::StoredResponse> Store::idempotent_response(const std::string& family_id,
                                                                const std::string& key) const
{
    std::lock_guard lock(mutex_);
    Statement q(*this, "SELECT status, body FROM idempotency WHERE family_id = ? AND key = ?");
    if (q.args(family_id, key).step()) {
        return StoredResponse{static_cast<int>(q.integer(0)), q.text(1)};
    }
    return std::nullopt;
}

void Store::save_idempotent_response(const std::string& family_id, const std::string& key,
                                     const StoredResponse& response)
{
    transaction([&] {
        Statement(*this, "INSERT OR IGNORE INTO idempotency(family_id, key, status, body) "
                         "VALUES(?, ?, ?, ?)")
            .args(family_id, key, response.status, response.body)
            .run();
    });
}

std::size_t Store::count(const std::string& table) const
{
    if (!kTables.count(table)) {
        fail(Errc::PreconditionFailed, "unknown table " + table);
    }
    std::lock_guard lock(mutex_);
    Statement q(*this, ("SELECT COUNT(*) FROM " + table).c_str());
    q.step();
    return static_cast<std::size_t>(q.integer(0));
}

// -- export / import --------------------------------------------------------

Json Store::export_child(const std::string& child_id) const
{
    std::lock_guard lock(mutex_);
    const auto avatar = get_avatar(child_id);
    std::set<std::string> asset_ids;
    if (avatar.base_reference_image) {
        asset_ids.insert(*avatar.base_reference_image);
    }

    Json archive{{"format", "storyecho-archive"},
                 {"version", 1},
                 {"child_id", child_id},
                 {"family_id", family_of(child_id)},
                 {"avatar", encode(avatar)}};

    Json frameworks = Json::array();
    for (const auto& fw : this->frameworks(child_id)) {
        frameworks.push_back(encode(fw));
    }
    archive["frameworks"] = frameworks;

    Json episodes = Json::array();
    {
        Statement q(*this, "SELECT id, body, approved_at FROM episodes WHERE child_id = ? "
                           "ORDER BY rowid");
        q.args(child_id);
        while (q.step()) {
            Json images = Json::array();
            for (const auto& img : page_images(q.text(0))) {
                images.push_back({{"page_id", img.page_id}, {"asset_id", img.asset_id}});
                asset_ids.insert(img.asset_id);
            }
            const auto approved = q.nullable_integer(2);
            episodes.push_back({{"episode", parse_json(q.text(1))},
                                {"approved_at", approved ? Json(*approved) : Json()},
                                {"page_images", images}});
        }
    }
    archive["episodes"] = episodes;

    Json sessions = Json::array();
    Json records = Json::array();
    Json transitions = Json::array();
    Json interactions = Json::array();
    Json transcripts = Json::array();
    Json feedback = Json::array();
    for (const auto& s : this->sessions(child_id)) {
        sessions.push_back(encode(s));
        Statement rq(*this, "SELECT body FROM records WHERE session_id = ? ORDER BY rowid");
        rq.args(s.session_id);
        while (rq.step()) {
            records.push_back({{"session_id", s.session_id}, {"record", parse_json(rq.text(0))}});
        }
        for (const auto& t : this->transitions(s.session_id)) {
            transitions.push_back(encode(t));
        }
        for (const auto& e : this->interactions(s.session_id)) {
            interactions.push_back(encode(e));
            if (e.payload.audio_asset) {
                asset_ids.insert(*e.payload.audio_asset);
                if (auto text = transcript(*e.payload.audio_asset)) {
                    transcripts.push_back(
                        {{"asset_id", *e.payload.audio_asset}, {"text", *text}});
                }
            }
        }
        Statement fq(*this, (std::string(kFeedbackColumns) +
                             "WHERE session_id = ? ORDER BY ord")
                                .c_str());
        fq.args(s.session_id);
        while (fq.step()) {
            const auto delivered = fq.nullable_integer(4);
            feedback.push_back({{"feedback_id", fq.text(0)},
                                {"session_id", fq.text(2)},
                                {"message", parse_json(fq.text(3))},
                                {"delivered_at", delivered ? Json(*delivered) : Json()}});
        }
    }
    archive["sessions"] = sessions;
    archive["records"] = records;
    archive["transitions"] = transitions;
    archive["interactions"] = interactions;
    archive["transcripts"] = transcripts;
    archive["feedback"] = feedback;

    Json assets = Json::array();
    for (const auto& id : asset_ids) {
        if (auto blob = get_asset(id)) {
            assets.push_back({{"asset_id", id},
                              {"media_type", blob->media_type},
                              {"data_base64", base64_encode(blob->bytes)}});
        }
    }
    archive["assets"] = assets;
    return archive;
}

void Store::import_archive(const Json& archive)
{
    try {
        if (archive.at("format") != "storyecho-archive" || archive.at("version") != 1) {
            fail(Errc::ParseError, "not a storyecho archive (format/version)");
        }
        transaction([&] {
            for (const auto& a : archive.at("assets")) {
                const Blob blob{base64_decode(a.at("data_base64").get<std::string>()),
                                a.at("media_type").get<std::string>()};
                if (put_asset(blob) != a.at("asset_id").get<std::string>()) {
                    fail(Errc::StorageError, "asset content does not match its id");
                }
            }
            const auto child_id = archive.at("child_id").get<std::string>();
            auto avatar = decode<ChildAvatar>(archive.at("avatar"));
            put(avatar, archive.at("family_id").get<std::string>());
            bump_counter("child", child_id);

            for (const auto& f : archive.at("frameworks")) {
                auto fw = decode<StoryFramework>(f);
                put(fw, child_id);
                bump_counter("fw", fw.framework_id);
            }
            for (const auto& e : archive.at("episodes")) {
                auto ep = decode<Episode>(e.at("episode"));
                put(ep, child_id);
                bump_counter("ep", ep.episode_id);
                if (!e.at("approved_at").is_null() && !is_approved(ep.episode_id)) {
                    Statement(*this, "UPDATE episodes SET approved_at = ?, approved_ord = ? "
                                     "WHERE id = ?")
                        .args(e.at("approved_at").get<std::int64_t>(), next_ord(), ep.episode_id)
                        .run();
                }
                for (const auto& img : e.at("page_images")) {
                    put_page_image(ep.episode_id, {img.at("page_id").get<std::string>(),
                                                   img.at("asset_id").get<std::string>()});
                }
            }
            // Sessions go in before the rows that reference them; their own
            // references are checked once everything is inserted.
            std::vector<TfoSession> sessions;
            for (const auto& s : archive.at("sessions")) {
                auto session = decode<TfoSession>(s);
                check_invariants(session);
                const auto body = dump_canonical(encode(session));
                if (needs_insert("sessions", session.session_id, body)) {
                    Statement(*this, "INSERT INTO sessions(id, child_id, body, ord) "
                                     "VALUES(?, ?, ?, ?)")
                        .args(session.session_id, session.child_id, body, next_ord())
                        .run();
                }
                bump_counter("sess", session.session_id);
                sessions.push_back(std::move(session));
            }
            for (const auto& r : archive.at("records")) {
                auto record = decode<PostMealRecord>(r.at("record"));
                put(record, r.at("session_id").get<std::string>());
                bump_counter("rec", record.record_id);
            }
            for (const auto& s : sessions) {
                check_session_refs(s);
            }
            for (const auto& t : archive.at("transitions")) {
                const auto rec = decode<TransitionRecord>(t);
                check_invariants(rec);
                const auto body = dump_canonical(encode(rec));
                Statement q(*this, "SELECT body FROM transitions WHERE session_id = ? AND seq = ?");
                if (q.args(rec.session_id, rec.seq).step()) {
                    if (q.text(0) != body) {
                        fail(Errc::StorageError, "conflicting transition in archive");
                    }
                    continue;
                }
                Statement(*this, "INSERT INTO transitions(session_id, seq, body) VALUES(?, ?, ?)")
                    .args(rec.session_id, rec.seq, body)
                    .run();
            }
            for (const auto& i : archive.at("interactions")) {
                auto event = decode<InteractionEvent>(i);
                append_interaction(event);
                bump_counter("evt", event.event_id);
            }
            for (const auto& t : archive.at("transcripts")) {
                put_transcript(t.at("asset_id").get<std::string>(),
                               t.at("text").get<std::string>());
            }
            for (const auto& f : archive.at("feedback")) {
                const auto id = f.at("feedback_id").get<std::string>();
                const auto session_id = f.at("session_id").get<std::string>();
                const auto message = decode<FeedbackMessage>(f.at("message"));
                const auto body = dump_canonical(encode(message));
                if (needs_insert("feedback", id, body)) {
                    check_invariants(message);
                    Statement(*this, "INSERT INTO feedback(id, child_id, session_id, body, ord) "
                                     "VALUES(?, ?, ?, ?, ?)")
                        .args(id, child_id, session_id, body, next_ord())
                        .run();
                    if (!f.at("delivered_at").is_null()) {
                        mark_delivered(id, f.at("delivered_at").get<std::int64_t>());
                    }
                }
                bump_counter("fb", id);
            }
        });
    } catch (const Json::exception& e) {
        fail(Errc::ParseError, std::string("malformed archive: ") + e.what());
    }
}

} // namespace storyecho
