#include "storyecho/api.hpp"

#include <httplib.h>

#include <thread>

namespace storyecho {

int http_status_for(Errc code)
{
    switch (code) {
    case Errc::ParseError:
    case Errc::SchemaViolation:
    case Errc::InvariantViolation:
    case Errc::RangeError:
    case Errc::PreconditionFailed:
    case Errc::FoodMismatch:
    case Errc::UnknownEventKey:
    case Errc::ReferentialViolation:
        return 422;
    case Errc::ChildNotFound:
    case Errc::NotFound:
        return 404;
    case Errc::IllegalTransition:
    case Errc::SessionAlreadyActive:
    case Errc::DuplicateChoice:
        return 409;
    case Errc::ProviderError:
    case Errc::GenerationFailed:
        return 502;
    case Errc::Unauthorized:
        return 401;
    case Errc::StorageError:
    case Errc::ConfigError:
    case Errc::BindError:
        return 500;
    }
    return 500;
}

ApiError to_api_error(const Error& error)
{
    return {http_status_for(error.code()), std::string(to_string(error.code())), error.detail()};
}

Json encode(const ApiError& error)
{
    return {{"code", error.code}, {"detail", error.detail}, {"http_status", error.http_status}};
}

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = kJson;
};

Reply json_reply(int status, const Json& body)
{
    return {status, dump_canonical(body)};
}

Json body_json(const httplib::Request& req)
{
    if (req.body.empty()) {
        return Json::object();
    }
    return parse_json(req.body);
}

std::string required_string(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
        fail(Errc::SchemaViolation, std::string("request needs string field '") + key + "'");
    }
    return j.at(key).get<std::string>();
}

std::string bearer_token(const httplib::Request& req)
{
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
        fail(Errc::Unauthorized, "missing bearer token");
    }
    return header.substr(prefix.size());
}

} // namespace

struct ApiService::Impl {
    using Handler =
        std::function<Reply(const httplib::Request&, const std::string& family)>;

    Impl(InterventionLoop& l, std::size_t parallelism, std::string m)
        : loop(l), store(l.store()), jobs(parallelism), mode(std::move(m))
    {
        server.set_payload_max_length(64u << 20);
        routes();
    }

    InterventionLoop& loop;
    Store& store;
    JobExecutor jobs;
    std::string mode;
    httplib::Server server;
    std::thread thread;
    std::mutex idempotency_mutex;
    std::mutex job_owner_mutex;
    std::map<std::string, std::string> job_owner;

    // -- ownership checks: another family's ids look like missing ids ------

    void own_child(const std::string& family, const std::string& child_id)
    {
        if (!store.has_child(child_id) || store.family_of(child_id) != family) {
            fail(Errc::ChildNotFound, "child " + child_id);
        }
    }

    TfoSession own_session(const std::string& family, const std::string& session_id)
    {
        TfoSession s;
        try {
            s = store.get_session(session_id);
        } catch (const Error&) {
            fail(Errc::NotFound, "session " + session_id);
        }
        if (store.family_of(s.child_id) != family) {
            fail(Errc::NotFound, "session " + session_id);
        }
        return s;
    }

    std::string submit(const std::string& family, Stage stage, const std::string& key,
                       JobExecutor::Work work)
    {
        const auto id = jobs.submit(stage, key, std::move(work));
        std::lock_guard lock(job_owner_mutex);
        job_owner[id] = family;
        return id;
    }

    // -- dispatch -----------------------------------------------------------

    void handle(const httplib::Request& req, httplib::Response& res, const Handler& handler,
                bool authenticated)
    {
        Reply reply;
        try {
            std::string family;
            if (authenticated) {
                auto f = store.family_for_token(bearer_token(req));
                if (!f) {
                    fail(Errc::Unauthorized, "unknown token");
                }
                family = *f;
            }
            const auto key = req.get_header_value("Idempotency-Key");
            if (req.method == "POST" && !key.empty() && authenticated) {
                std::lock_guard lock(idempotency_mutex);
                if (auto stored = store.idempotent_response(family, key)) {
                    reply = {stored->status, stored->body};
                } else {
                    reply = run(handler, req, family);
                    if (reply.status < 500) {
                        store.save_idempotent_response(family, key, {reply.status, reply.body});
                    }
                }
            } else {
                reply = run(handler, req, family);
            }
        } catch (const Error& e) {
            reply = json_reply(http_status_for(e.code()), encode(to_api_error(e)));
        }
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    }

    static Reply run(const Handler& handler, const httplib::Request& req,
                     const std::string& family)
    {
        try {
            return handler(req, family);
        } catch (const Error& e) {
            return json_reply(http_status_for(e.code()), encode(to_api_error(e)));
        } catch (const Json::exception& e) {
            return json_reply(422, encode(ApiError{422, "SchemaViolation", e.what()}));
        }
    }

    void get(const std::string& pattern, Handler h, bool auth = true)
    {
        server.Get(pattern, [this, h, auth](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, h, auth);
        });
    }
    void post(const std::string& pattern, Handler h)
    {
        server.Post(pattern, [this, h](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, h, true);
        });
    }

    void routes();
};

void ApiService::Impl::routes()
{
    using Req = httplib::Request;

    get(
        "/health",
        [this](const Req&, const std::string&) {
            return json_reply(200, {{"status", "ok"}, {"mode", mode}});
        },
        false);

    post("/avatars", [this](const Req& req, const std::string& family) {
        auto avatar = canonical_parse<ChildAvatar>(req.body);
        if (!avatar.avatar_id.empty() && store.has_child(avatar.avatar_id) &&
            store.family_of(avatar.avatar_id) != family) {
            fail(Errc::ChildNotFound, "child " + avatar.avatar_id);
        }
        avatar.avatar_id = loop.create_avatar(avatar, family);
        return json_reply(201, encode(avatar));
    });

    get(R"(/avatars/([^/]+))", [this](const Req& req, const std::string& family) {
        const auto id = req.matches[1].str();
        own_child(family, id);
        return json_reply(200, encode(store.get_avatar(id)));
    });

    post("/frameworks", [this](const Req& req, const std::string& family) {
        const auto body = body_json(req);
        const auto child_id = required_string(body, "child_id");
        own_child(family, child_id);
        const auto mode_name = required_string(body, "mode");
        const auto mode = enum_from_name<StoryMode>(mode_name);
        if (!mode) {
            fail(Errc::SchemaViolation, "unknown story mode " + mode_name);
        }
        const auto theme = body.value("theme", std::string());
        const auto id = submit(family, Stage::Framework, "child:" + child_id,
                               [this, child_id, theme, m = *mode](GenerationJob& job) {
                                   loop.create_framework(child_id, theme, m, &job);
                               });
        return json_reply(202, {{"job_id", id}});
    });

    get(R"(/frameworks/([^/]+))", [this](const Req& req, const std::string& family) {
        const auto id = req.matches[1].str();
        std::string owner;
        try {
            owner = store.framework_owner(id);
        } catch (const Error&) {
            fail(Errc::NotFound, "framework " + id);
        }
        own_child(family, owner);
        return json_reply(200, encode(store.get_framework(id)));
    });

    post("/sessions", [this](const Req& req, const std::string& family) {
        const auto body = body_json(req);
        const auto child_id = required_string(body, "child_id");
        own_child(family, child_id);
        std::optional<std::string> framework_id;
        if (body.contains("framework_id") && !body.at("framework_id").is_null()) {
            framework_id = required_string(body, "framework_id");
        }
        const auto food = body.contains("food") ? required_string(body, "food") : std::string();
        return json_reply(201, encode(loop.create_session(child_id, food, framework_id)));
    });

    get(R"(/sessions/([^/]+))", [this](const Req& req, const std::string& family) {
        return json_reply(200, encode(own_session(family, req.matches[1].str())));
    });

    post(R"(/sessions/([^/]+)/generate)", [this](const Req& req, const std::string& family) {
        const auto id = own_session(family, req.matches[1].str()).session_id;
        const auto body = body_json(req);
        EpisodeOverrides overrides;
        overrides.food_override_must_follow = body.value("food_override_must_follow", false);
        if (body.contains("temporary_props")) {
            overrides.temporary_props =
                body.at("temporary_props").get<std::vector<std::string>>();
        }
        loop.start_generation(id);
        const auto job = submit(family, Stage::Episode, id, [this, id, overrides](GenerationJob& j) {
            loop.generate_story(id, overrides, &j);
        });
        return json_reply(202, {{"job_id", job}});
    });

    get(R"(/jobs/([^/]+))", [this](const Req& req, const std::string& family) {
        const auto id = req.matches[1].str();
        {
            std::lock_guard lock(job_owner_mutex);
            auto it = job_owner.find(id);
            if (it == job_owner.end() || it->second != family) {
                fail(Errc::NotFound, "job " + id);
            }
        }
        return json_reply(200, encode(*jobs.get(id)));
    });

    get(R"(/sessions/([^/]+)/episode)", [this](const Req& req, const std::string& family) {
        const auto s = own_session(family, req.matches[1].str());
        if (!s.main_episode_id) {
            fail(Errc::NotFound, "session " + s.session_id + " has no episode yet");
        }
        return json_reply(200, encode(store.get_episode(*s.main_episode_id)));
    });

    // Same report as the CLI validate command: 200 when ok, 422 otherwise.
    post("/episodes/validate", [this](const Req& req, const std::string&) {
        const auto episode = parse_episode_document(req.body);
        const auto report = validate_episode(episode, loop.config().constraints);
        return json_reply(report.ok() ? 200 : 422, encode(report));
    });

    get(R"(/episodes/([^/]+)/images)", [this](const Req& req, const std::string& family) {
        const auto id = req.matches[1].str();
        const auto episode = store.get_episode(id);
        own_child(family, store.framework_owner(episode.framework_id));
        Json out = Json::array();
        for (const auto& img : store.page_images(id)) {
            out.push_back({{"page_id", img.page_id}, {"asset_id", img.asset_id}});
        }
        return json_reply(200, out);
    });

    post(R"(/sessions/([^/]+)/review)", [this](const Req& req, const std::string& family) {
        const auto id = own_session(family, req.matches[1].str()).session_id;
        const auto name = required_string(body_json(req), "decision");
        const auto decision = enum_from_name<ReviewDecision>(name);
        if (!decision) {
            fail(Errc::SchemaViolation, "decision must be approve or regenerate");
        }
        return json_reply(200, encode(loop.review(id, *decision)));
    });

    post(R"(/sessions/([^/]+)/reading-finished)",
         [this](const Req& req, const std::string& family) {
             const auto id = own_session(family, req.matches[1].str()).session_id;
             return json_reply(200, encode(loop.finish_reading(id)));
         });

    post(R"(/sessions/([^/]+)/events)", [this](const Req& req, const std::string& family) {
        const auto id = own_session(family, req.matches[1].str()).session_id;
        auto event = decode<InteractionEvent>(body_json(req));
        if (!event.session_id.empty() && event.session_id != id) {
            fail(Errc::PreconditionFailed, "event session_id does not match the URL");
        }
        const auto event_id = loop.record_interaction(id, event);
        for (const auto& e : store.interactions(id)) {
            if (e.event_id == event_id) {
                return json_reply(201, encode(e));
            }
        }
        fail(Errc::StorageError, "stored event not found");
    });

    post(R"(/sessions/([^/]+)/post-meal)", [this](const Req& req, const std::string& family) {
        const auto id = own_session(family, req.matches[1].str()).session_id;
        auto record = canonical_parse<PostMealRecord>(req.body);
        const auto session = loop.submit_post_meal(id, record);
        const auto feedback_job = submit(family, Stage::Feedback, id, [this, id](GenerationJob& j) {
            loop.deliver_feedback(id, &j);
        });
        const auto ending_job = submit(family, Stage::Ending, id, [this, id](GenerationJob& j) {
            loop.generate_ending(id, &j);
        });
        return json_reply(202, {{"session", encode(session)},
                                {"feedback_job_id", feedback_job},
                                {"ending_job_id", ending_job}});
    });

    get(R"(/sessions/([^/]+)/feedback)", [this](const Req& req, const std::string& family) {
        const auto s = own_session(family, req.matches[1].str());
        const auto fb = store.feedback_for_session(s.session_id);
        if (!fb || !fb->delivered_at) {
            fail(Errc::NotFound, "no feedback delivered for " + s.session_id);
        }
        return json_reply(200, {{"feedback_id", fb->feedback_id},
                                {"message", encode(fb->message)},
                                {"avatar_state", enum_name(loop.avatar_state(s.session_id))}});
    });

    get(R"(/sessions/([^/]+)/ending)", [this](const Req& req, const std::string& family) {
        const auto s = own_session(family, req.matches[1].str());
        if (!s.ending_episode_id) {
            fail(Errc::NotFound, "session " + s.session_id + " has no ending yet");
        }
        return json_reply(200, encode(store.get_episode(*s.ending_episode_id)));
    });

    post(R"(/sessions/([^/]+)/revisit)", [this](const Req& req, const std::string& family) {
        const auto id = own_session(family, req.matches[1].str()).session_id;
        return json_reply(200, encode(loop.revisit(id)));
    });

    get(R"(/children/([^/]+)/library)", [this](const Req& req, const std::string& family) {
        const auto child_id = req.matches[1].str();
        own_child(family, child_id);
        Json sessions = Json::array();
        Json episodes = Json::array();
        for (const auto& s : store.sessions(child_id)) {
            sessions.push_back(encode(s));
            if (s.main_episode_id && store.is_approved(*s.main_episode_id)) {
                episodes.push_back(encode(store.get_episode(*s.main_episode_id)));
            }
            if (s.ending_episode_id) {
                episodes.push_back(encode(store.get_episode(*s.ending_episode_id)));
            }
        }
        return json_reply(200, {{"child", encode(store.get_avatar(child_id))},
                                {"sessions", sessions},
                                {"episodes", episodes}});
    });

    get(R"(/assets/([0-9a-f]{64}))", [this](const Req& req, const std::string&) {
        const auto blob = store.get_asset(req.matches[1].str());
        if (!blob) {
            fail(Errc::NotFound, "asset " + req.matches[1].str());
        }
        return Reply{200, blob->bytes, blob->media_type};
    });

    post("/assets", [this](const Req& req, const std::string&) {
        if (req.body.empty()) {
            fail(Errc::PreconditionFailed, "asset body is empty");
        }
        auto type = req.get_header_value("Content-Type");
        if (type.empty()) {
            type = "application/octet-stream";
        }
        return json_reply(201, {{"asset_id", store.put_asset({req.body, type})}});
    });

    // Avatar reference portraits and other one-off illustrations.
    post("/images", [this](const Req& req, const std::string&) {
        const auto body = body_json(req);
        const auto prompt = required_string(body, "prompt");
        std::optional<std::string> reference;
        if (body.contains("reference_asset") && !body.at("reference_asset").is_null()) {
            reference = required_string(body, "reference_asset");
        }
        return json_reply(201,
                          {{"asset_id", loop.pipeline().provider().generate_image(prompt, reference)}});
    });

    post("/speech", [this](const Req& req, const std::string&) {
        const auto text = required_string(body_json(req), "text");
        return json_reply(201, {{"asset_id", loop.pipeline().provider().synthesize_speech(text)}});
    });
}

ApiService::ApiService(InterventionLoop& loop, std::size_t job_parallelism,
                       std::string provider_mode)
    : impl_(std::make_unique<Impl>(loop, job_parallelism, std::move(provider_mode)))
{
}

ApiService::~ApiService()
{
    stop();
}

int ApiService::bind(const std::string& host, int port)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) {
        fail(Errc::BindError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void ApiService::listen()
{
    impl_->server.listen_after_bind();
}

int ApiService::start(const std::string& host, int port)
{
    const int bound = bind(host, port);
    impl_->thread = std::thread([this] { listen(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiService::stop()
{
    if (!impl_) {
        return;
    }
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
    impl_->jobs.wait_idle();
}

JobExecutor& ApiService::jobs()
{
    return impl_->jobs;
}

} // namespace storyecho
