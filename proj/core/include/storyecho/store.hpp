#pragma once

#include "storyecho/assets.hpp"
#include "storyecho/serialize.hpp"
#include "storyecho/session.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

namespace storyecho {

class Clock {
public:
    virtual ~Clock() = default;
    // Milliseconds since the Unix epoch.
    virtual Timestamp now() = 0;
};

class SystemClock : public Clock {
public:
    Timestamp now() override;
};

// Returns start, start + step, start + 2*step, ... Used for reproducible runs.
class ManualClock : public Clock {
public:
    explicit ManualClock(Timestamp start = 1'700'000'000'000, Timestamp step = 1000)
        : next_(start), step_(step)
    {
    }
    Timestamp now() override { return next_.fetch_add(step_); }

private:
    std::atomic<Timestamp> next_;
    Timestamp step_;
};

struct StoredFeedback {
    std::string feedback_id;
    std::string child_id;
    std::string session_id;
    FeedbackMessage message;
    std::optional<Timestamp> delivered_at;

    bool operator==(const StoredFeedback&) const = default;
};

struct PageImage {
    std::string page_id;
    std::string asset_id;

    bool operator==(const PageImage&) const = default;
};

// Single-file SQLite store plus a content-addressed blob directory. All
// writes go through one serialized connection; every public call is safe
// from any thread. Ids are assigned from per-kind counters (child-0001,
// fw-0001, ...).
class Store : public AssetStore {
public:
    // asset_dir defaults to "<db_path>.assets".
    explicit Store(const std::filesystem::path& db_path,
                   std::optional<std::filesystem::path> asset_dir = std::nullopt,
                   std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());
    ~Store() override;

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    Timestamp now() { return clock_->now(); }
    const std::filesystem::path& path() const { return db_path_; }

    // -- avatars ------------------------------------------------------------
    // Assigns avatar_id when empty. Same id with identical content is a no-op;
    // same id with different content is a StorageError.
    std::string put(ChildAvatar avatar, const std::string& family_id);
    ChildAvatar get_avatar(const std::string& child_id) const; // ChildNotFound
    bool has_child(const std::string& child_id) const;
    std::string family_of(const std::string& child_id) const; // ChildNotFound
    std::vector<ChildAvatar> avatars(const std::string& family_id) const;

    // -- frameworks ---------------------------------------------------------
    // InvariantViolation when recurring_phrase repeats across different story
    // modes within the family.
    std::string put(StoryFramework framework, const std::string& child_id);
    StoryFramework get_framework(const std::string& framework_id) const;
    std::string framework_owner(const std::string& framework_id) const;
    std::optional<std::string> latest_framework_id(const std::string& child_id) const;
    std::vector<StoryFramework> frameworks(const std::string& child_id) const;

    // -- episodes -----------------------------------------------------------
    // ReferentialViolation when framework_id does not resolve.
    std::string put(Episode episode, const std::string& child_id);
    Episode get_episode(const std::string& episode_id) const;
    void approve_episode(const std::string& episode_id);
    bool is_approved(const std::string& episode_id) const;
    // Approved main episodes, newest `limit`, returned oldest first.
    std::vector<Episode> latest_episodes(const std::string& child_id, int limit) const;
    void put_page_image(const std::string& episode_id, const PageImage& image);
    std::vector<PageImage> page_images(const std::string& episode_id) const;

    // -- sessions -----------------------------------------------------------
    // Inserts a new session in FoodSelected; assigns session_id when empty.
    std::string create_session(TfoSession session);
    TfoSession get_session(const std::string& session_id) const;
    std::vector<TfoSession> sessions(const std::string& child_id) const;
    std::optional<TfoSession> active_session(const std::string& child_id) const;
    // Saves `updated` and appends the transition that produced it in one
    // transaction.
    TransitionRecord commit_transition(const TfoSession& updated, SessionEvent event,
                                       SessionState from, std::optional<std::string> ref);
    // Field updates that are not state transitions (closed, task flag).
    void update_session(const TfoSession& session);
    std::vector<TransitionRecord> transitions(const std::string& session_id) const;

    // -- post-meal records --------------------------------------------------
    std::string put(PostMealRecord record, const std::string& session_id);
    PostMealRecord get_record(const std::string& record_id) const;

    // -- feedback -----------------------------------------------------------
    std::string put(const FeedbackMessage& message, const std::string& session_id);
    StoredFeedback get_feedback(const std::string& feedback_id) const;
    std::optional<StoredFeedback> feedback_for_session(const std::string& session_id) const;
    void mark_delivered(const std::string& feedback_id, Timestamp at);
    // Texts of the last `limit` delivered messages, newest first.
    std::vector<std::string> recent_feedback_phrases(const std::string& child_id,
                                                     int limit) const;

    // -- interaction events -------------------------------------------------
    std::string append_interaction(InteractionEvent event);
    std::vector<InteractionEvent> interactions(const std::string& session_id) const;
    void put_transcript(const std::string& asset_id, const std::string& text);
    std::optional<std::string> transcript(const std::string& asset_id) const;

    // -- assets -------------------------------------------------------------
    std::string put_asset(const Blob& blob) override;
    std::optional<Blob> get_asset(const std::string& asset_id) const override;
    bool delete_asset(const std::string& asset_id);
    std::size_t asset_count() const;

    // -- API support --------------------------------------------------------
    // Returns the plain token; only its hash is stored.
    std::string issue_token(const std::string& family_id);
    std::optional<std::string> family_for_token(const std::string& token) const;
    struct StoredResponse {
        int status = 200;
        std::string body;
    };
    std::optional<StoredResponse> idempotent_response(const std::string& family_id,
                                                      const std::string& key) const;
    void save_idempotent_response(const std::string& family_id, const std::string& key,
                                  const StoredResponse& response);

    // -- export / import ----------------------------------------------------
    // Everything recorded for one child, including referenced asset blobs.
    Json export_child(const std::string& child_id) const;
    // Rows already present with identical content are skipped; conflicting
    // rows raise StorageError and nothing is written.
    void import_archive(const Json& archive);

    // Row count of one table, for inspection.
    std::size_t count(const std::string& table) const;

private:
    class Statement;
    friend class Statement;

    void exec(const char* sql) const;
    std::string next_id(const std::string& prefix);
    std::string new_id_or(std::string current, const std::string& prefix);
    // True when no row with `id` exists; false when an identical row exists;
    // StorageError when the existing row differs.
    bool needs_insert(const std::string& table, const std::string& id,
                      const std::string& body) const;
    void bump_counter(const std::string& prefix, const std::string& id);
    std::int64_t next_ord();
    void check_session_refs(const TfoSession& session) const;
    std::optional<std::string> body_of(const std::string& table, const std::string& id) const;
    std::string require_body(const std::string& table, const std::string& id, Errc missing) const;
    void write_blob(const std::string& asset_id, const std::string& bytes) const;

    template <class F>
    auto transaction(F&& f);

    std::filesystem::path db_path_;
    std::filesystem::path asset_dir_;
    std::shared_ptr<Clock> clock_;
    mutable std::recursive_mutex mutex_;
    sqlite3* db_ = nullptr;
    int tx_depth_ = 0;
};

} // namespace storyecho
